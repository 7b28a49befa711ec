//! Exact arithmetic in `Q(zeta_N)`, stored in the power basis modulo `Phi_N`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};

struct CycloCtx {
    phi: usize,
    // x^k mod Phi_N for 0 <= k < N
    red: Vec<Vec<i64>>,
}

fn cyclotomic_poly(n: u64) -> Vec<i64> {
    // Phi_n = (x^n - 1) / prod_{d | n, d < n} Phi_d
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n.is_multiple_of(d) {
            num = poly_div_exact(&num, &cyclotomic_poly(d));
        }
    }
    num
}

fn poly_div_exact(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = *b.last().unwrap();
    let mut q = vec![0i64; a.len() - db];
    for i in (0..q.len()).rev() {
        let c = r[i + db] / lead;
        q[i] = c;
        for (j, &bj) in b.iter().enumerate() {
            r[i + j] -= c * bj;
        }
    }
    debug_assert!(r.iter().all(|&c| c == 0));
    q
}

fn ctx(n: u64) -> Arc<CycloCtx> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<CycloCtx>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| {
            let phi_poly = cyclotomic_poly(n);
            let phi = phi_poly.len() - 1;
            let mut red = Vec::with_capacity(n as usize);
            let mut cur = vec![0i64; phi];
            if phi > 0 {
                cur[0] = 1;
            }
            for _ in 0..n {
                red.push(cur.clone());
                // multiply by x and reduce
                let top = cur[phi - 1];
                for i in (1..phi).rev() {
                    cur[i] = cur[i - 1];
                }
                cur[0] = 0;
                if top != 0 {
                    for i in 0..phi {
                        cur[i] -= top * phi_poly[i];
                    }
                }
            }
            Arc::new(CycloCtx { phi, red })
        })
        .clone()
}

/// An element of `Q(zeta_N)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CycloNum {
    n: u64,
    coeffs: Vec<BigRational>,
}

impl fmt::Debug for CycloNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cyclo[{}](", self.n)?;
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}*z^{i}")?;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

impl CycloNum {
    pub fn zero(n: u64) -> CycloNum {
        let c = ctx(n);
        CycloNum { n, coeffs: vec![BigRational::zero(); c.phi] }
    }

    pub fn one(n: u64) -> CycloNum {
        Self::from_int(n, 1)
    }

    pub fn from_int(n: u64, v: i64) -> CycloNum {
        Self::from_rational(n, BigRational::from_integer(BigInt::from(v)))
    }

    pub fn from_rational(n: u64, v: BigRational) -> CycloNum {
        let mut z = Self::zero(n);
        z.coeffs[0] = v;
        z
    }

    /// `zeta_N^k`.
    pub fn zeta_pow(n: u64, k: i64) -> CycloNum {
        let c = ctx(n);
        let k = k.rem_euclid(n as i64) as usize;
        CycloNum { n, coeffs: c.red[k].iter().map(|&v| BigRational::from_integer(v.into())).collect() }
    }

    pub fn order(&self) -> u64 {
        self.n
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn check(&self, o: &CycloNum) {
        assert_eq!(self.n, o.n, "cyclotomic orders differ; lift first");
    }

    pub fn add(&self, o: &CycloNum) -> CycloNum {
        self.check(o);
        CycloNum { n: self.n, coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &CycloNum) -> CycloNum {
        self.check(o);
        CycloNum { n: self.n, coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect() }
    }

    pub fn neg(&self) -> CycloNum {
        CycloNum { n: self.n, coeffs: self.coeffs.iter().map(|a| -a).collect() }
    }

    pub fn scale(&self, s: &BigRational) -> CycloNum {
        CycloNum { n: self.n, coeffs: self.coeffs.iter().map(|a| a * s).collect() }
    }

    pub fn mul(&self, o: &CycloNum) -> CycloNum {
        self.check(o);
        let c = ctx(self.n);
        let mut dense = vec![BigRational::zero(); self.n as usize];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let k = (i + j) % self.n as usize;
                dense[k] += a * b;
            }
        }
        reduce_dense(self.n, &c, &dense)
    }

    /// Complex conjugation `zeta -> zeta^{-1}`.
    pub fn conj(&self) -> CycloNum {
        let c = ctx(self.n);
        let n = self.n as usize;
        let mut dense = vec![BigRational::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            dense[(n - i) % n] += a;
        }
        reduce_dense(self.n, &c, &dense)
    }

    /// The image under `Q(zeta_N) -> Q(zeta_M)` for `N | M`.
    pub fn lift(&self, m: u64) -> Result<CycloNum> {
        if !m.is_multiple_of(self.n) {
            return Err(Error::Validation(format!("cannot lift Q(zeta_{}) into Q(zeta_{m})", self.n)));
        }
        let c = ctx(m);
        let f = (m / self.n) as usize;
        let mut dense = vec![BigRational::zero(); m as usize];
        for (i, a) in self.coeffs.iter().enumerate() {
            dense[i * f] += a;
        }
        Ok(reduce_dense(m, &c, &dense))
    }

    /// The rational value if this lies in `Q`.
    pub fn to_rational(&self) -> Option<BigRational> {
        if self.coeffs.iter().skip(1).all(|c| c.is_zero()) {
            Some(self.coeffs.first().cloned().unwrap_or_else(BigRational::zero))
        } else {
            None
        }
    }

    pub fn to_integer(&self) -> Option<i64> {
        let r = self.to_rational()?;
        if r.is_integer() {
            r.to_integer().to_i64()
        } else {
            None
        }
    }

    /// `{"N": int, "coeffs": [[num, den], ...]}`.
    pub fn to_json(&self) -> Value {
        let big = |b: &BigInt| b.to_i64().map(Value::from).unwrap_or_else(|| Value::from(b.to_string()));
        json!({
            "N": self.n,
            "coeffs": self.coeffs.iter().map(|c| json!([big(c.numer()), big(c.denom())])).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<CycloNum> {
        let n = v["N"].as_u64().ok_or_else(|| Error::Validation("CycloNum: missing N".into()))?;
        let arr = v["coeffs"].as_array().ok_or_else(|| Error::Validation("CycloNum: missing coeffs".into()))?;
        let big = |x: &Value| -> Result<BigInt> {
            match x {
                Value::Number(k) => k.as_i64().map(BigInt::from).ok_or_else(|| Error::Validation("bad integer".into())),
                Value::String(s) => s.parse().map_err(|_| Error::Validation("bad integer".into())),
                _ => Err(Error::Validation("bad integer".into())),
            }
        };
        let mut z = CycloNum::zero(n);
        if arr.len() != z.coeffs.len() {
            return Err(Error::Validation("CycloNum: wrong coefficient count".into()));
        }
        for (i, c) in arr.iter().enumerate() {
            let den = big(&c[1])?;
            if den.is_zero() {
                return Err(Error::Validation("CycloNum: zero denominator".into()));
            }
            z.coeffs[i] = BigRational::new(big(&c[0])?, den);
        }
        Ok(z)
    }

    /// Approximate complex value.
    pub fn to_complex(&self) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let v = c.to_f64().unwrap_or(0.0);
            let ang = 2.0 * std::f64::consts::PI * i as f64 / self.n as f64;
            re += v * ang.cos();
            im += v * ang.sin();
        }
        (re, im)
    }
}

fn reduce_dense(n: u64, c: &CycloCtx, dense: &[BigRational]) -> CycloNum {
    let mut out = vec![BigRational::zero(); c.phi];
    for (k, a) in dense.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        for (i, &r) in c.red[k].iter().enumerate() {
            if r != 0 {
                out[i] += a * BigRational::from_integer(r.into());
            }
        }
    }
    CycloNum { n, coeffs: out }
}

/// Integer combinations `sum_k c_k zeta_N^k`, accumulated before reduction.
#[derive(Clone, Debug)]
pub struct CycloAcc {
    n: u64,
    counts: Vec<i128>,
}

impl CycloAcc {
    pub fn new(n: u64) -> CycloAcc {
        CycloAcc { n, counts: vec![0; n as usize] }
    }

    pub fn order(&self) -> u64 {
        self.n
    }

    /// Adds `mult * zeta_N^k`.
    pub fn add_root(&mut self, k: i64, mult: i128) {
        let k = k.rem_euclid(self.n as i64) as usize;
        self.counts[k] += mult;
    }

    pub fn merge(&mut self, o: &CycloAcc) {
        assert_eq!(self.n, o.n);
        for (a, b) in self.counts.iter_mut().zip(&o.counts) {
            *a += b;
        }
    }

    pub fn to_num(&self) -> CycloNum {
        let c = ctx(self.n);
        let mut out = vec![0i128; c.phi];
        for (k, &a) in self.counts.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (i, &r) in c.red[k].iter().enumerate() {
                out[i] += a * r as i128;
            }
        }
        CycloNum {
            n: self.n,
            coeffs: out.into_iter().map(|v| BigRational::from_integer(BigInt::from(v))).collect(),
        }
    }
}

/// `(1/|G|) sum_classes |C| f(C) conj(g(C))`.
pub fn inner_product(f: &[CycloNum], g: &[CycloNum], sizes: &[u64], order: u64) -> CycloNum {
    assert_eq!(f.len(), g.len());
    assert_eq!(f.len(), sizes.len());
    let n = f.first().map(|x| x.n).unwrap_or(1);
    let mut acc = CycloNum::zero(n);
    for ((a, b), &s) in f.iter().zip(g).zip(sizes) {
        let term = a.mul(&b.conj());
        acc = acc.add(&term.scale(&BigRational::from_integer(BigInt::from(s))));
    }
    acc.scale(&BigRational::new(BigInt::one(), BigInt::from(order)))
}

/// `lcm(a, b)` for positive integers.
pub fn lcm(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_polys() {
        assert_eq!(cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn roots_of_unity_sum_to_zero() {
        for n in [2u64, 3, 4, 6, 8, 12, 24] {
            let mut acc = CycloAcc::new(n);
            for k in 0..n as i64 {
                acc.add_root(k, 1);
            }
            assert!(acc.to_num().is_zero());
        }
    }

    #[test]
    fn field_identities() {
        let n = 24;
        for a in 0..n as i64 {
            let z = CycloNum::zeta_pow(n, a);
            assert_eq!(z.mul(&z.conj()), CycloNum::one(n));
            for b in 0..n as i64 {
                assert_eq!(z.mul(&CycloNum::zeta_pow(n, b)), CycloNum::zeta_pow(n, a + b));
            }
            assert_eq!(z.lift(48).unwrap(), CycloNum::zeta_pow(48, 2 * a));
        }
        // 2 cos(2 pi / 6) = 1
        let s = CycloNum::zeta_pow(6, 1).add(&CycloNum::zeta_pow(6, -1));
        assert_eq!(s.to_integer(), Some(1));
    }

    #[test]
    fn json_roundtrip() {
        let z = CycloNum::zeta_pow(12, 5).scale(&BigRational::new(3.into(), 7.into()));
        let v = z.to_json();
        assert_eq!(CycloNum::from_json(&v).unwrap(), z);
        assert_eq!(v["N"], 12);
    }

    #[test]
    fn complex_value() {
        let (re, im) = CycloNum::zeta_pow(4, 1).to_complex();
        assert!(re.abs() < 1e-12 && (im - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inner_product_of_cyclic_characters() {
        let n = 6;
        let chars: Vec<Vec<CycloNum>> =
            (0..6).map(|j| (0..6).map(|k| CycloNum::zeta_pow(n, j * k)).collect()).collect();
        let sizes = vec![1u64; 6];
        for a in 0..6 {
            for b in 0..6 {
                let ip = inner_product(&chars[a], &chars[b], &sizes, 6);
                assert_eq!(ip.to_integer(), Some((a == b) as i64));
            }
        }
    }
}
