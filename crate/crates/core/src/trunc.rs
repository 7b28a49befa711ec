//! Truncated power series `F_{q^d}[t]/t^r` and Laurent series of finite
//! absolute precision.

use crate::error::{Error, Result};
use crate::fftower::{Field, FieldElem, FieldTower};

/// An element of `F_{q^d}[t]/t^r`; `coeffs.len() == r`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TruncElem {
    pub coeffs: Vec<FieldElem>,
}

impl TruncElem {
    pub fn zero(f: &Field, r: usize) -> TruncElem {
        TruncElem { coeffs: vec![f.zero(); r] }
    }

    pub fn one(f: &Field, r: usize) -> TruncElem {
        Self::constant(f, f.one(), r)
    }

    pub fn constant(f: &Field, c: FieldElem, r: usize) -> TruncElem {
        let mut z = Self::zero(f, r);
        if r > 0 {
            z.coeffs[0] = c;
        }
        z
    }

    /// `t^k` at precision `r`.
    pub fn t_pow(f: &Field, k: usize, r: usize) -> TruncElem {
        let mut z = Self::zero(f, r);
        if k < r {
            z.coeffs[k] = f.one();
        }
        z
    }

    pub fn from_coeffs(coeffs: Vec<FieldElem>) -> TruncElem {
        TruncElem { coeffs }
    }

    pub fn prec(&self) -> usize {
        self.coeffs.len()
    }

    pub fn level(&self) -> u32 {
        self.coeffs.first().map_or(1, |c| c.level())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_unit(&self) -> bool {
        self.coeffs.first().is_some_and(|c| !c.is_zero())
    }

    /// `v_t`; equals the precision for zero.
    pub fn valuation(&self) -> usize {
        self.coeffs.iter().position(|c| !c.is_zero()).unwrap_or(self.prec())
    }

    /// Reduction modulo `t^r` (`r <= prec`).
    pub fn truncate(&self, r: usize) -> TruncElem {
        TruncElem { coeffs: self.coeffs[..r.min(self.prec())].to_vec() }
    }

    /// Zero-padded lift to precision `r`.
    pub fn lift(&self, f: &Field, r: usize) -> TruncElem {
        let mut c = self.coeffs.clone();
        c.resize(r, f.zero());
        c.truncate(r);
        TruncElem { coeffs: c }
    }

    pub fn add(&self, f: &Field, o: &TruncElem) -> TruncElem {
        let r = self.prec().min(o.prec());
        TruncElem { coeffs: (0..r).map(|i| f.add(self.coeffs[i], o.coeffs[i])).collect() }
    }

    pub fn sub(&self, f: &Field, o: &TruncElem) -> TruncElem {
        let r = self.prec().min(o.prec());
        TruncElem { coeffs: (0..r).map(|i| f.sub(self.coeffs[i], o.coeffs[i])).collect() }
    }

    pub fn neg(&self, f: &Field) -> TruncElem {
        TruncElem { coeffs: self.coeffs.iter().map(|&c| f.neg(c)).collect() }
    }

    pub fn scale(&self, f: &Field, c: FieldElem) -> TruncElem {
        TruncElem { coeffs: self.coeffs.iter().map(|&x| f.mul(x, c)).collect() }
    }

    pub fn mul(&self, f: &Field, o: &TruncElem) -> TruncElem {
        let r = self.prec().min(o.prec());
        let mut out = vec![f.zero(); r];
        for i in 0..r {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..(r - i) {
                out[i + j] = f.add(out[i + j], f.mul(self.coeffs[i], o.coeffs[j]));
            }
        }
        TruncElem { coeffs: out }
    }

    /// Multiplies by `t^k`, keeping the precision.
    pub fn shift_up(&self, f: &Field, k: usize) -> TruncElem {
        let r = self.prec();
        let mut out = vec![f.zero(); r];
        if k < r {
            out[k..].copy_from_slice(&self.coeffs[..r - k]);
        }
        TruncElem { coeffs: out }
    }

    /// Divides by `t^k`; the precision drops by `k`. Fails unless `v_t >= k`.
    pub fn shift_down(&self, k: usize) -> Result<TruncElem> {
        if self.valuation() < k.min(self.prec()) {
            return Err(Error::Precision(format!("not divisible by t^{k}")));
        }
        Ok(TruncElem { coeffs: self.coeffs[k.min(self.prec())..].to_vec() })
    }

    /// Inverse of a unit at the same precision.
    pub fn inv(&self, f: &Field) -> Result<TruncElem> {
        if !self.is_unit() {
            return Err(Error::NonUnit("truncated series with zero constant term".into()));
        }
        let r = self.prec();
        let c0 = f.inv(self.coeffs[0])?;
        let mut out = vec![f.zero(); r];
        out[0] = c0;
        for n in 1..r {
            let mut s = f.zero();
            for i in 1..=n {
                s = f.add(s, f.mul(self.coeffs[i], out[n - i]));
            }
            out[n] = f.neg(f.mul(s, c0));
        }
        Ok(TruncElem { coeffs: out })
    }

    pub fn div(&self, f: &Field, o: &TruncElem) -> Result<TruncElem> {
        Ok(self.mul(f, &o.inv(f)?))
    }

    /// Coefficientwise `x -> x^(q^j)`.
    pub fn sigma(&self, f: &Field, j: i64) -> TruncElem {
        TruncElem { coeffs: self.coeffs.iter().map(|&c| f.frobenius(c, j)).collect() }
    }

    pub fn embed(&self, tower: &FieldTower, to: u32) -> Result<TruncElem> {
        Ok(TruncElem {
            coeffs: self.coeffs.iter().map(|&c| tower.embed(c, to)).collect::<Result<_>>()?,
        })
    }
}

pub fn trunc_inv(f: &Field, u: &TruncElem) -> Result<TruncElem> {
    u.inv(f)
}

pub fn trunc_sigma(f: &Field, x: &TruncElem, j: i64) -> TruncElem {
    x.sigma(f, j)
}

/// `x * sigma(x)` for a unit of `F_{q^2}[t]/t^r`, returned over `F_q`.
pub fn norm_e_over_f(tower: &FieldTower, x: &TruncElem) -> Result<TruncElem> {
    if x.level() != 2 {
        return Err(Error::Validation("norm expects coefficients in F_{q^2}".into()));
    }
    let f2 = tower.level(2)?;
    if !x.is_unit() {
        return Err(Error::NonUnit("norm of a non-unit".into()));
    }
    let n = x.mul(f2, &x.sigma(f2, 1));
    let coeffs = n
        .coeffs
        .iter()
        .map(|&c| {
            tower
                .restrict(c, 1)?
                .ok_or_else(|| Error::Inconsistent("norm left F_q".into()))
        })
        .collect::<Result<_>>()?;
    Ok(TruncElem { coeffs })
}

/// `t^start * (c_0 + c_1 t + ...)` known modulo `t^(start + coeffs.len())`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Laurent {
    pub start: i32,
    pub coeffs: Vec<FieldElem>,
}

impl Laurent {
    pub fn from_trunc(x: &TruncElem, shift: i32) -> Laurent {
        Laurent { start: shift, coeffs: x.coeffs.clone() }
    }

    /// Absolute precision: the value is known modulo `t^abs_prec`.
    pub fn abs_prec(&self) -> i32 {
        self.start + self.coeffs.len() as i32
    }

    pub fn zero(f: &Field, abs_prec: i32) -> Laurent {
        Laurent { start: abs_prec, coeffs: Vec::new() }.pad(f, abs_prec)
    }

    fn pad(mut self, f: &Field, abs_prec: i32) -> Laurent {
        let want = (abs_prec - self.start).max(0) as usize;
        self.coeffs.resize(want, f.zero());
        self
    }

    /// Coefficient of `t^k` (zero below `start`).
    pub fn coeff(&self, f: &Field, k: i32) -> Result<FieldElem> {
        if k >= self.abs_prec() {
            return Err(Error::Precision(format!("coefficient t^{k} beyond precision {}", self.abs_prec())));
        }
        if k < self.start {
            return Ok(f.zero());
        }
        Ok(self.coeffs[(k - self.start) as usize])
    }

    /// Lowest exponent with a nonzero coefficient, if any is known.
    pub fn valuation(&self) -> Option<i32> {
        self.coeffs.iter().position(|c| !c.is_zero()).map(|i| self.start + i as i32)
    }

    pub fn add(&self, f: &Field, o: &Laurent) -> Laurent {
        let start = self.start.min(o.start);
        let prec = self.abs_prec().min(o.abs_prec());
        let coeffs = (start..prec)
            .map(|k| f.add(self.coeff(f, k).unwrap(), o.coeff(f, k).unwrap()))
            .collect();
        Laurent { start, coeffs }
    }

    pub fn neg(&self, f: &Field) -> Laurent {
        Laurent { start: self.start, coeffs: self.coeffs.iter().map(|&c| f.neg(c)).collect() }
    }

    pub fn sub(&self, f: &Field, o: &Laurent) -> Laurent {
        self.add(f, &o.neg(f))
    }

    pub fn mul(&self, f: &Field, o: &Laurent) -> Laurent {
        let va = self.valuation().unwrap_or(self.abs_prec());
        let vb = o.valuation().unwrap_or(o.abs_prec());
        let start = va + vb;
        let prec = (va + o.abs_prec()).min(vb + self.abs_prec());
        let n = (prec - start).max(0) as usize;
        let mut out = vec![f.zero(); n];
        for i in 0..n {
            for j in 0..=i {
                let a = self.coeff(f, va + j as i32);
                let b = o.coeff(f, vb + (i - j) as i32);
                if let (Ok(a), Ok(b)) = (a, b) {
                    out[i] = f.add(out[i], f.mul(a, b));
                }
            }
        }
        Laurent { start, coeffs: out }
    }

    /// Inverse; the leading coefficient must be known and nonzero.
    pub fn inv(&self, f: &Field) -> Result<Laurent> {
        let v = self
            .valuation()
            .ok_or_else(|| Error::NonUnit("Laurent series with no known nonzero coefficient".into()))?;
        let unit = TruncElem { coeffs: self.coeffs[(v - self.start) as usize..].to_vec() };
        let inv = unit.inv(f)?;
        Ok(Laurent { start: -v, coeffs: inv.coeffs })
    }

    pub fn sigma(&self, f: &Field, j: i64) -> Laurent {
        Laurent { start: self.start, coeffs: self.coeffs.iter().map(|&c| f.frobenius(c, j)).collect() }
    }

    pub fn shift(&self, k: i32) -> Laurent {
        Laurent { start: self.start + k, coeffs: self.coeffs.clone() }
    }

    /// Coefficients of `t^0 .. t^(r-1)` as a truncated series; requires no
    /// nonzero negative-degree terms and enough precision.
    pub fn to_trunc(&self, f: &Field, r: usize) -> Result<TruncElem> {
        for k in self.start..0.min(self.abs_prec()) {
            if !self.coeff(f, k)?.is_zero() {
                return Err(Error::Validation("series has a pole".into()));
            }
        }
        let coeffs = (0..r as i32).map(|k| self.coeff(f, k)).collect::<Result<_>>()?;
        Ok(TruncElem { coeffs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fftower::make_tower;
    use proptest::prelude::*;

    #[test]
    fn inverse_of_one_plus_t() {
        let tw = make_tower(2, 1, &[1, 2]).unwrap();
        let f = tw.field(1);
        let x = TruncElem::from_coeffs(vec![f.one(), f.one(), f.zero()]);
        let y = trunc_inv(f, &x).unwrap();
        assert_eq!(y.coeffs, vec![f.one(), f.one(), f.one()]);
        assert_eq!(trunc_inv(f, &TruncElem::one(f, 3)).unwrap(), TruncElem::one(f, 3));
        let nu = TruncElem::from_coeffs(vec![f.zero(), f.one(), f.one()]);
        assert!(trunc_inv(f, &nu).is_err());
    }

    #[test]
    fn sigma_coefficientwise() {
        let tw = make_tower(2, 1, &[1, 2]).unwrap();
        let f = tw.field(2);
        let w = f.monomial(1);
        let x = TruncElem::from_coeffs(vec![w, w]);
        let w2 = f.mul(w, w);
        assert_eq!(trunc_sigma(f, &x, 1).coeffs, vec![w2, w2]);
        assert_eq!(trunc_sigma(f, &x, 2), x);
    }

    #[test]
    fn norm_of_omega() {
        let tw = make_tower(2, 1, &[1, 2]).unwrap();
        let f = tw.field(2);
        let x = TruncElem::from_coeffs(vec![f.monomial(1)]);
        let n = norm_e_over_f(&tw, &x).unwrap();
        assert_eq!(n.coeffs, vec![tw.field(1).one()]);
    }

    #[test]
    fn norm_is_surjective_on_units() {
        // q = 2, m = 1: U_E/U_E^2 -> U_F/U_F^2
        let tw = make_tower(2, 1, &[1, 2]).unwrap();
        let f2 = tw.field(2);
        let mut image = std::collections::BTreeSet::new();
        for a in f2.elements() {
            for b in f2.elements() {
                if a.is_zero() {
                    continue;
                }
                let x = TruncElem::from_coeffs(vec![a, b]);
                let n = norm_e_over_f(&tw, &x).unwrap();
                image.insert(n.coeffs.iter().map(|c| c.encode(2)).collect::<Vec<_>>());
            }
        }
        assert_eq!(image.len(), 2);
    }

    #[test]
    fn laurent_inverse_roundtrip() {
        let tw = make_tower(3, 1, &[1, 2]).unwrap();
        let f = tw.field(2);
        let x = Laurent { start: -2, coeffs: vec![f.monomial(1), f.one(), f.from_prime(2), f.one(), f.zero()] };
        let y = x.inv(f).unwrap();
        let p = x.mul(f, &y);
        assert_eq!(p.valuation(), Some(0));
        assert_eq!(p.to_trunc(f, p.abs_prec() as usize).unwrap().coeffs[0], f.one());
        for k in 1..p.abs_prec() {
            assert!(p.coeff(f, k).unwrap().is_zero());
        }
    }

    fn arb_elem(f: &Field, seed: u64) -> TruncElem {
        let size = f.size();
        let mut s = seed;
        let coeffs = (0..4)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                f.decode((s >> 33) as u128 % size)
            })
            .collect();
        TruncElem { coeffs }
    }

    proptest! {
        #[test]
        fn ring_axioms(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
            let tw = make_tower(3, 1, &[1, 2]).unwrap();
            let f = tw.field(2);
            let (x, y, z) = (arb_elem(f, a), arb_elem(f, b), arb_elem(f, c));
            prop_assert_eq!(x.mul(f, &y), y.mul(f, &x));
            prop_assert_eq!(x.mul(f, &y).mul(f, &z), x.mul(f, &y.mul(f, &z)));
            prop_assert_eq!(x.mul(f, &y.add(f, &z)), x.mul(f, &y).add(f, &x.mul(f, &z)));
            prop_assert_eq!(x.mul(f, &y).truncate(2), x.truncate(2).mul(f, &y.truncate(2)));
            prop_assert_eq!(x.truncate(3).truncate(2), x.truncate(2));
            prop_assert_eq!(x.mul(f, &y).sigma(f, 1), x.sigma(f, 1).mul(f, &y.sigma(f, 1)));
            let (vx, vy) = (x.valuation(), y.valuation());
            if vx + vy < 4 {
                prop_assert_eq!(x.mul(f, &y).valuation(), vx + vy);
            }
        }
    }

    #[test]
    fn norm_is_sigma_invariant_exhaustive() {
        let tw = make_tower(3, 1, &[1, 2]).unwrap();
        let f2 = tw.field(2);
        for a in f2.elements().filter(|a| !a.is_zero()) {
            for b in f2.elements() {
                let x = TruncElem::from_coeffs(vec![a, b]);
                assert!(norm_e_over_f(&tw, &x).is_ok());
            }
        }
    }
}
