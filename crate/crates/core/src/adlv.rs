//! The level-m covering varieties as equation systems: exact point counts over
//! `F_{q^(2s)}`, the determinant fibers, the predicted cohomology and its
//! Lefschetz sum, and the double-coset normal form.
//!
//! Coordinates follow `C = c_0 (1 + sum c_i t^i)`, `S = sigma(a) - a = sum f(a_i) t^i`
//! with `f(x) = x^q - x`. Every system is triangular in the `t`-degree, so points
//! are enumerated level by level and a branch is dropped at the first level
//! whose equation fails.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fftower::{Field, FieldElem};
use crate::trace::{work_field, WorkField};
use crate::trunc::{Laurent, TruncElem};

/// Default cap on the number of coordinate tuples a count may scan.
pub const DEFAULT_COUNT_BOUND: u128 = 1 << 28;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Yvm,
    Yv0m,
    Zm,
    Zm1,
    Superbasic,
    CurveCminus,
    CurveCplus,
}

impl Kind {
    pub const ALL: [Kind; 7] =
        [Kind::Yvm, Kind::Yv0m, Kind::Zm, Kind::Zm1, Kind::Superbasic, Kind::CurveCminus, Kind::CurveCplus];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Yvm => "yvm",
            Kind::Yv0m => "yv0m",
            Kind::Zm => "zm",
            Kind::Zm1 => "zm1",
            Kind::Superbasic => "superbasic",
            Kind::CurveCminus => "curvecminus",
            Kind::CurveCplus => "curvecplus",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Kind> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Validation(format!("unknown variety kind '{s}'")))
    }
}

/// `q = p^e`, level `m` and the (even) parameter `n > m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SystemParams {
    pub p: u32,
    pub e: u32,
    pub m: usize,
    pub n: usize,
}

impl SystemParams {
    /// `n` defaults to the smallest even integer above `m`.
    pub fn new(q: u32, m: usize, n: Option<usize>) -> Result<SystemParams> {
        let (p, e) = prime_power(q)?;
        let n = n.unwrap_or(if m.is_multiple_of(2) { m + 2 } else { m + 1 });
        if !n.is_multiple_of(2) || n <= m {
            return Err(Error::Validation(format!("need n even and n > m, got n={n}, m={m}")));
        }
        Ok(SystemParams { p, e, m, n })
    }

    pub fn q(&self) -> u64 {
        (self.p as u64).pow(self.e)
    }
}

/// Splits `q` as `p^e`.
pub fn prime_power(q: u32) -> Result<(u32, u32)> {
    if q < 2 {
        return Err(Error::Validation(format!("q = {q} is not a prime power")));
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d)).unwrap();
    let (mut r, mut e) = (q, 0);
    while r % p == 0 {
        r /= p;
        e += 1;
    }
    if r != 1 {
        return Err(Error::Validation(format!("q = {q} is not a prime power")));
    }
    Ok((p, e))
}

/// One coefficientwise equation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub level: usize,
    pub text: String,
}

/// An enumerable variety over `F_{q^(2s)}`.
pub trait VarietySystem: Send + Sync {
    fn kind(&self) -> Kind;
    fn params(&self) -> SystemParams;
    /// Scanned coordinates with their domains, in scan order.
    fn coordinates(&self) -> Vec<String>;
    fn equations(&self) -> Vec<Equation>;
    /// Number of scanned coordinates.
    fn scanned_dim(&self) -> u32;
    /// Dimension of the affine factor on which no equation depends.
    fn free_dim(&self) -> u32 {
        0
    }
    /// Points of the scanned part over the given field.
    fn count_scanned(&self, w: &WorkField) -> Result<u128>;

    /// Stable identifier used by the count cache.
    fn id(&self) -> String {
        let p = self.params();
        format!("{}:q={},m={},n={}", self.kind(), p.q(), p.m, p.n)
    }
}

/// Creates systems of one kind.
pub trait SystemProvider: Send + Sync {
    fn name(&self) -> &'static str;
    fn create(&self, params: SystemParams) -> Result<Box<dyn VarietySystem>>;
}

struct KindProvider(Kind);

impl SystemProvider for KindProvider {
    fn name(&self) -> &'static str {
        self.0.name()
    }

    fn create(&self, params: SystemParams) -> Result<Box<dyn VarietySystem>> {
        build_system(self.0, params)
    }
}

/// Variety systems by name.
pub struct SystemRegistry {
    providers: HashMap<String, Box<dyn SystemProvider>>,
}

impl Default for SystemRegistry {
    fn default() -> Self {
        let mut reg = SystemRegistry { providers: HashMap::new() };
        for k in Kind::ALL {
            reg.register(Box::new(KindProvider(k)));
        }
        reg
    }
}

impl SystemRegistry {
    pub fn empty() -> SystemRegistry {
        SystemRegistry { providers: HashMap::new() }
    }

    pub fn register(&mut self, provider: Box<dyn SystemProvider>) {
        self.providers.insert(provider.name().to_string(), provider);
    }

    pub fn get(&self, name: &str, params: SystemParams) -> Option<Result<Box<dyn VarietySystem>>> {
        self.providers.get(name).map(|p| p.create(params))
    }

    pub fn names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.providers.keys().cloned().collect();
        v.sort();
        v
    }
}

pub fn build_system(kind: Kind, params: SystemParams) -> Result<Box<dyn VarietySystem>> {
    let m = params.m;
    match kind {
        Kind::Superbasic | Kind::Zm1 if m == 0 => {
            Err(Error::Validation(format!("{kind} needs m >= 1")))
        }
        Kind::Yvm => Ok(Box::new(Yvm(params))),
        Kind::Yv0m => Ok(Box::new(Yv0m(params))),
        Kind::Zm => Ok(Box::new(Zm(params))),
        Kind::Zm1 => Ok(Box::new(Zm1(params))),
        Kind::Superbasic => Ok(Box::new(Superbasic(params))),
        Kind::CurveCminus => Ok(Box::new(Curve(params, -1))),
        Kind::CurveCplus => Ok(Box::new(Curve(params, 1))),
    }
}

/// Exact number of `F_{q^(2s)}`-points, refusing scans larger than `bound`.
pub fn count_points(sys: &dyn VarietySystem, s: u32, bound: u128) -> Result<u128> {
    if s == 0 {
        return Err(Error::Validation("s must be positive".into()));
    }
    let p = sys.params();
    let big_q = (p.q() as u128).checked_pow(2 * s).ok_or_else(|| Error::Validation("field too large".into()))?;
    let space = big_q.checked_pow(sys.scanned_dim()).unwrap_or(u128::MAX);
    if space > bound {
        return Err(Error::BoundExceeded { what: format!("point scan for {}", sys.id()), size: space, bound });
    }
    let w = work_field(p.p, p.e, 2 * s)?;
    Ok(sys.count_scanned(&w)? * big_q.pow(sys.free_dim()))
}

/// Lookup tables over one field.
struct Tables<'a> {
    f: &'a Field,
    elems: Vec<FieldElem>,
    /// Solutions of `x^q + x = r`, keyed by `r`.
    as_plus: HashMap<FieldElem, Vec<FieldElem>>,
    /// Solutions of `x^(q+1) = r`, keyed by `r`.
    norm: HashMap<FieldElem, Vec<FieldElem>>,
}

impl<'a> Tables<'a> {
    fn new(f: &'a Field) -> Tables<'a> {
        let elems: Vec<FieldElem> = f.elements().collect();
        let mut as_plus: HashMap<FieldElem, Vec<FieldElem>> = HashMap::new();
        let mut norm: HashMap<FieldElem, Vec<FieldElem>> = HashMap::new();
        let q = f.q();
        for &x in &elems {
            let xq = f.frobenius(x, 1);
            as_plus.entry(f.add(xq, x)).or_default().push(x);
            norm.entry(f.pow(x, q + 1)).or_default().push(x);
        }
        Tables { f, elems, as_plus, norm }
    }

    fn as_plus(&self, r: FieldElem) -> &[FieldElem] {
        self.as_plus.get(&r).map_or(&[], |v| v.as_slice())
    }

    fn norm(&self, r: FieldElem) -> &[FieldElem] {
        self.norm.get(&r).map_or(&[], |v| v.as_slice())
    }

    fn fx(&self, x: FieldElem) -> FieldElem {
        self.f.sub(self.f.frobenius(x, 1), x)
    }

    fn in_base(&self, x: FieldElem) -> bool {
        self.f.frobenius(x, 1) == x
    }
}

fn sigma(f: &Field, x: FieldElem, j: i64) -> FieldElem {
    f.frobenius(x, j)
}

/// Full level-m covering in coordinates `(a_0..a_m, C)`, `C` a unit:
/// `sigma^2(C) S = C sigma(S)`, `a_0 not in F_q`.
struct Yvm(SystemParams);

impl Yvm {
    /// Visits `(a_0..a_m, C_0..C_m)` for every point, with `a_0` restricted to `a0s`.
    fn scan(&self, t: &Tables, a0s: &[FieldElem], visit: &mut dyn FnMut(&[FieldElem], &[FieldElem])) {
        let f = t.f;
        let m = self.0.m;
        fn rec(
            f: &Field,
            t: &Tables,
            m: usize,
            a: &mut Vec<FieldElem>,
            c: &mut Vec<FieldElem>,
            visit: &mut dyn FnMut(&[FieldElem], &[FieldElem]),
        ) {
            let i = a.len();
            if i == m + 1 {
                visit(a, c);
                return;
            }
            for &ai in &t.elems {
                a.push(ai);
                let s: Vec<FieldElem> = a.iter().map(|&x| t.fx(x)).collect();
                // part of level i not involving C_i
                let mut rest = f.zero();
                for j in 0..i {
                    let term = f.sub(f.mul(sigma(f, c[j], 2), s[i - j]), f.mul(c[j], sigma(f, s[i - j], 1)));
                    rest = f.add(rest, term);
                }
                for &ci in &t.elems {
                    if i == 0 && ci.is_zero() {
                        continue;
                    }
                    let own = f.sub(f.mul(sigma(f, ci, 2), s[0]), f.mul(ci, sigma(f, s[0], 1)));
                    if f.add(own, rest).is_zero() {
                        c.push(ci);
                        rec(f, t, m, a, c, visit);
                        c.pop();
                    }
                }
                a.pop();
            }
        }
        for &a0 in a0s {
            let mut a = vec![a0];
            let s0 = t.fx(a0);
            for &c0 in &t.elems {
                if c0.is_zero() {
                    continue;
                }
                if f.mul(sigma(f, c0, 2), s0) == f.mul(c0, sigma(f, s0, 1)) {
                    let mut c = vec![c0];
                    rec(f, t, m, &mut a, &mut c, visit);
                }
            }
        }
    }
}

impl VarietySystem for Yvm {
    fn kind(&self) -> Kind {
        Kind::Yvm
    }
    fn params(&self) -> SystemParams {
        self.0
    }
    fn coordinates(&self) -> Vec<String> {
        let m = self.0.m;
        let mut v = vec!["a0 not in F_q".to_string(), "C0 != 0".to_string()];
        for i in 1..=m {
            v.push(format!("a{i}"));
            v.push(format!("C{i}"));
        }
        v
    }
    fn equations(&self) -> Vec<Equation> {
        (0..=self.0.m)
            .map(|i| {
                let terms: Vec<String> = (0..=i)
                    .map(|j| format!("C{j}^(q^2)*f(a{k}) - C{j}*f(a{k})^q", k = i - j))
                    .collect();
                Equation { level: i, text: format!("{} = 0", terms.join(" + ")) }
            })
            .collect()
    }
    fn scanned_dim(&self) -> u32 {
        2 * (self.0.m as u32 + 1)
    }
    fn free_dim(&self) -> u32 {
        self.0.n as u32 - 1
    }
    fn count_scanned(&self, w: &WorkField) -> Result<u128> {
        let t = Tables::new(w.field());
        let a0s: Vec<FieldElem> = t.elems.iter().copied().filter(|&x| !t.in_base(x)).collect();
        Ok(a0s
            .par_iter()
            .map(|&a0| {
                let mut n = 0u128;
                self.scan(&t, &[a0], &mut |_, _| n += 1);
                n
            })
            .sum())
    }
}

/// Determinant-one component in coordinates `(a_0..a_m, c_0..c_m)`:
/// `c_0^(q+1) = f(a_0)` and `c_i^q + c_i = f(a_i)/f(a_0) - sum_{j=1}^{i-1} c_j^q c_(i-j)`.
struct Yv0m(SystemParams);

impl Yv0m {
    fn count_from(&self, t: &Tables, a0: FieldElem) -> u128 {
        let f = t.f;
        let fa0 = t.fx(a0);
        let inv = f.inv(fa0).expect("a0 outside F_q");
        fn rec(t: &Tables, m: usize, inv: FieldElem, c: &mut Vec<FieldElem>) -> u128 {
            let i = c.len();
            if i == m + 1 {
                return 1;
            }
            let f = t.f;
            let mut conv = f.zero();
            for j in 1..i {
                conv = f.add(conv, f.mul(sigma(f, c[j], 1), c[i - j]));
            }
            let mut n = 0;
            for &ai in &t.elems {
                let rhs = f.sub(f.mul(t.fx(ai), inv), conv);
                for &ci in t.as_plus(rhs) {
                    c.push(ci);
                    n += rec(t, m, inv, c);
                    c.pop();
                }
            }
            n
        }
        let mut total = 0;
        for &c0 in t.norm(fa0) {
            let mut c = vec![c0];
            total += rec(t, self.0.m, inv, &mut c);
        }
        total
    }
}

impl VarietySystem for Yv0m {
    fn kind(&self) -> Kind {
        Kind::Yv0m
    }
    fn params(&self) -> SystemParams {
        self.0
    }
    fn coordinates(&self) -> Vec<String> {
        let mut v = vec!["a0 not in F_q".to_string(), "c0".to_string()];
        for i in 1..=self.0.m {
            v.push(format!("a{i}"));
            v.push(format!("c{i}"));
        }
        v
    }
    fn equations(&self) -> Vec<Equation> {
        let mut v = vec![Equation { level: 0, text: "c0^(q+1) = f(a0)".into() }];
        for i in 1..=self.0.m {
            let mut rhs = format!("f(a{i})/f(a0)");
            for j in 1..i {
                rhs.push_str(&format!(" - c{j}^q*c{}", i - j));
            }
            v.push(Equation { level: i, text: format!("c{i}^q + c{i} = {rhs}") });
        }
        v
    }
    fn scanned_dim(&self) -> u32 {
        2 * (self.0.m as u32 + 1)
    }
    fn free_dim(&self) -> u32 {
        self.0.n as u32 - 1
    }
    fn count_scanned(&self, w: &WorkField) -> Result<u128> {
        let t = Tables::new(w.field());
        let a0s: Vec<FieldElem> = t.elems.iter().copied().filter(|&x| !t.in_base(x)).collect();
        Ok(a0s.par_iter().map(|&a0| self.count_from(&t, a0)).sum())
    }
}

/// `a'_i^q + a'_i = sum_{j=1}^{i-1} c_j^q c_(i-j)` in `(c_1..c_m, a'_1..a'_m)`.
struct Zm1(SystemParams);

fn zm1_rec(t: &Tables, m: usize, c: &mut Vec<FieldElem>) -> u128 {
    let i = c.len() + 1;
    if i == m + 1 {
        return 1;
    }
    let f = t.f;
    let mut conv = f.zero();
    for j in 1..i {
        conv = f.add(conv, f.mul(sigma(f, c[j - 1], 1), c[i - j - 1]));
    }
    let branches = t.as_plus(conv).len() as u128;
    if branches == 0 {
        return 0;
    }
    let mut n = 0;
    for &ci in &t.elems {
        c.push(ci);
        n += zm1_rec(t, m, c);
        c.pop();
    }
    branches * n
}

impl VarietySystem for Zm1 {
    fn kind(&self) -> Kind {
        Kind::Zm1
    }
    fn params(&self) -> SystemParams {
        self.0
    }
    fn coordinates(&self) -> Vec<String> {
        (1..=self.0.m).flat_map(|i| [format!("c{i}"), format!("a{i}'")]).collect()
    }
    fn equations(&self) -> Vec<Equation> {
        (1..=self.0.m)
            .map(|i| {
                let terms: Vec<String> = (1..i).map(|j| format!("c{j}^q*c{}", i - j)).collect();
                let rhs = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
                Equation { level: i, text: format!("a{i}'^q + a{i}' = {rhs}") }
            })
            .collect()
    }
    fn scanned_dim(&self) -> u32 {
        2 * self.0.m as u32
    }
    fn count_scanned(&self, w: &WorkField) -> Result<u128> {
        let t = Tables::new(w.field());
        if self.0.m == 0 {
            return Ok(1);
        }
        Ok(t.elems
            .par_iter()
            .map(|&c1| {
                let mut c = vec![c1];
                zm1_rec(&t, self.0.m, &mut c)
            })
            .sum::<u128>()
            * t.as_plus(t.f.zero()).len() as u128)
    }
}

/// Right-hand side of the level-`i` equation of `Z^m` in the `alpha` coordinates.
fn zm_rhs(f: &Field, c: &[FieldElem], i: usize) -> FieldElem {
    // c[j] holds c_(j+1)
    let cc = |j: usize| c[j - 1];
    let mut r = f.zero();
    for j in 1..=(i - 1) / 2 {
        let d = f.sub(cc(j), sigma(f, cc(j), 2));
        r = f.add(r, f.mul(d, sigma(f, cc(i - j), 1)));
    }
    if i.is_multiple_of(2) {
        let h = cc(i / 2);
        r = f.add(r, f.mul(h, sigma(f, h, 1)));
    }
    r
}

/// Counts `(c_1.., alpha_first..)` solving the `alpha` equations for levels `first..=m`.
fn zm_tail(t: &Tables, m: usize, first: usize, c: &mut Vec<FieldElem>) -> u128 {
    let i = c.len() + 1;
    if i > m {
        return 1;
    }
    let mut n = 0;
    for &ci in &t.elems {
        c.push(ci);
        let factor = if i >= first { t.as_plus(zm_rhs(t.f, c, i)).len() as u128 } else { 1 };
        if factor > 0 {
            n += factor * zm_tail(t, m, first, c);
        }
        c.pop();
    }
    n
}

/// `Z^m` in `(a_0, c_0, alpha_1.., c_1..)`: `a_0 in F_{q^2} \ F_q`, `c_0^(q+1) = a_0^q - a_0`,
/// and the `alpha` equations.
struct Zm(SystemParams);

impl VarietySystem for Zm {
    fn kind(&self) -> Kind {
        Kind::Zm
    }
    fn params(&self) -> SystemParams {
        self.0
    }
    fn coordinates(&self) -> Vec<String> {
        let mut v = vec!["a0 in F_q^2 \\ F_q".to_string(), "c0".to_string()];
        for i in 1..=self.0.m {
            v.push(format!("c{i}"));
            v.push(format!("alpha{i}"));
        }
        v
    }
    fn equations(&self) -> Vec<Equation> {
        let mut v = vec![
            Equation { level: 0, text: "a0^(q^2) = a0".into() },
            Equation { level: 0, text: "c0^(q+1) = a0^q - a0".into() },
        ];
        for i in 1..=self.0.m {
            let mut terms: Vec<String> =
                (1..=(i - 1) / 2).map(|j| format!("(c{j} - c{j}^(q^2))*c{}^q", i - j)).collect();
            if i % 2 == 0 {
                terms.push(format!("delta{i}*c{}^(q+1)", i / 2));
            }
            let rhs = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
            v.push(Equation { level: i, text: format!("alpha{i}^q + alpha{i} = {rhs}") });
        }
        v
    }
    fn scanned_dim(&self) -> u32 {
        2 * (self.0.m as u32 + 1)
    }
    fn count_scanned(&self, w: &WorkField) -> Result<u128> {
        let t = Tables::new(w.field());
        let nm = n_minus_in(&t);
        let mut c = Vec::new();
        Ok(nm * zm_tail(&t, self.0.m, 1, &mut c))
    }
}

/// Rational points of `N_-`: `a_0 in F_{q^2} \ F_q`, `c_0^(q+1) = a_0^q - a_0`.
fn n_minus_in(t: &Tables) -> u128 {
    let f = t.f;
    t.elems
        .iter()
        .filter(|&&a| !t.in_base(a) && sigma(f, a, 2) == a)
        .map(|&a| t.norm(t.fx(a)).len() as u128)
        .sum()
}

/// `C sigma(u) = u sigma^2(C)` with `u = 1 - t a sigma(a)`, `a` mod `t^m`, `C` a unit mod `t^(m+1)`.
struct Superbasic(SystemParams);

impl Superbasic {
    fn rec(&self, t: &Tables, a: &mut Vec<FieldElem>, c: &mut Vec<FieldElem>) -> u128 {
        let f = t.f;
        let m = self.0.m;
        let k = c.len();
        if k == m + 1 {
            return 1;
        }
        let mut n = 0;
        for &ak in &t.elems {
            a.push(ak);
            // u_j = -sum_{i=0}^{j-1} a_i a_(j-1-i)^q
            let u = |j: usize| -> FieldElem {
                let mut s = f.zero();
                for i in 0..j {
                    s = f.add(s, f.mul(a[i], sigma(f, a[j - 1 - i], 1)));
                }
                f.neg(s)
            };
            let mut rest = f.zero();
            for j in 0..k {
                let uj = u(k - j);
                rest = f.add(rest, f.sub(f.mul(c[j], sigma(f, uj, 1)), f.mul(uj, sigma(f, c[j], 2))));
            }
            for &ck in &t.elems {
                if f.add(f.sub(ck, sigma(f, ck, 2)), rest).is_zero() {
                    c.push(ck);
                    n += self.rec(t, a, c);
                    c.pop();
                }
            }
            a.pop();
        }
        n
    }
}

impl VarietySystem for Superbasic {
    fn kind(&self) -> Kind {
        Kind::Superbasic
    }
    fn params(&self) -> SystemParams {
        self.0
    }
    fn coordinates(&self) -> Vec<String> {
        let mut v = vec!["C0 != 0".to_string()];
        for i in 1..=self.0.m {
            v.push(format!("a{}", i - 1));
            v.push(format!("C{i}"));
        }
        v
    }
    fn equations(&self) -> Vec<Equation> {
        (0..=self.0.m)
            .map(|k| Equation {
                level: k,
                text: if k == 0 {
                    "C0 = C0^(q^2)".into()
                } else {
                    format!("sum_{{j<={k}}} C_j*u_({k}-j)^q - u_({k}-j)*C_j^(q^2) = 0, u = 1 - t*a*a^q")
                },
            })
            .collect()
    }
    fn scanned_dim(&self) -> u32 {
        2 * self.0.m as u32 + 1
    }
    fn count_scanned(&self, w: &WorkField) -> Result<u128> {
        let t = Tables::new(w.field());
        let f = t.f;
        let c0s: Vec<FieldElem> =
            t.elems.iter().copied().filter(|&x| !x.is_zero() && sigma(f, x, 2) == x).collect();
        Ok(c0s
            .par_iter()
            .map(|&c0| self.rec(&t, &mut Vec::new(), &mut vec![c0]))
            .sum())
    }
}

/// `x^q + sign x = y^(q+1)` (affine).
struct Curve(SystemParams, i32);

impl VarietySystem for Curve {
    fn kind(&self) -> Kind {
        if self.1 < 0 {
            Kind::CurveCminus
        } else {
            Kind::CurveCplus
        }
    }
    fn params(&self) -> SystemParams {
        self.0
    }
    fn coordinates(&self) -> Vec<String> {
        vec!["x".into(), "y".into()]
    }
    fn equations(&self) -> Vec<Equation> {
        let op = if self.1 < 0 { "-" } else { "+" };
        vec![Equation { level: 0, text: format!("x^q {op} x = y^(q+1)") }]
    }
    fn scanned_dim(&self) -> u32 {
        2
    }
    fn count_scanned(&self, w: &WorkField) -> Result<u128> {
        let t = Tables::new(w.field());
        Ok(curve_count(&t, self.1, false))
    }
}

fn curve_count(t: &Tables, sign: i32, skip_base_x: bool) -> u128 {
    let f = t.f;
    t.elems
        .iter()
        .filter(|&&x| !(skip_base_x && t.in_base(x)))
        .map(|&x| {
            let xq = sigma(f, x, 1);
            let lhs = if sign < 0 { f.sub(xq, x) } else { f.add(xq, x) };
            t.norm(lhs).len() as u128
        })
        .sum()
}

/// Points of `x^q - x = y^(q+1)` with `x` outside `F_q`, over `F_{q^(2s)}`.
pub fn open_curve_count(p: u32, e: u32, s: u32) -> Result<u128> {
    let w = work_field(p, e, 2 * s)?;
    Ok(curve_count(&Tables::new(w.field()), -1, true))
}

/// `|N_-|` over `F_{q^(2s)}`, or over an algebraic closure when `s` is `None`
/// (all points are defined over `F_{q^4}`).
pub fn n_minus(p: u32, e: u32, s: Option<u32>) -> Result<u128> {
    let w = work_field(p, e, 2 * s.unwrap_or(2))?;
    Ok(n_minus_in(&Tables::new(w.field())))
}

/// `Z_0^m`: levels `2..=m` of the `alpha` equations in `(c_1..c_m, alpha_2..alpha_m)`.
pub fn z0m_count(p: u32, e: u32, m: usize, s: u32) -> Result<u128> {
    let w = work_field(p, e, 2 * s)?;
    let t = Tables::new(w.field());
    Ok(zm_tail(&t, m, 2, &mut Vec::new()))
}

/// `#Z^m` against `|N_-| |k_-| #Z_0^m`, all over `F_{q^(2s)}`.
pub fn zm_product_check(p: u32, e: u32, m: usize, s: u32, bound: u128) -> Result<(u128, u128)> {
    let sys = build_system(Kind::Zm, SystemParams { p, e, m, n: m + 2 - m % 2 })?;
    let lhs = count_points(sys.as_ref(), s, bound)?;
    let w = work_field(p, e, 2 * s)?;
    let t = Tables::new(w.field());
    let k_minus = t.as_plus(t.f.zero()).len() as u128;
    let rhs = n_minus_in(&t) * k_minus * z0m_count(p, e, m, s)?;
    Ok((lhs, rhs))
}

/// For every point of level `m - 1` and every `a_m`, the number of `c_m`
/// over `F_{q^(2s)}`; returns the distinct fiber sizes seen.
pub fn yv0m_fiber_sizes(p: u32, e: u32, m: usize, s: u32) -> Result<Vec<usize>> {
    if m == 0 {
        return Err(Error::Validation("fibers need m >= 1".into()));
    }
    let w = work_field(p, e, 2 * s)?;
    let t = Tables::new(w.field());
    let f = t.f;
    let mut sizes = std::collections::BTreeSet::new();
    // points of level m-1 given as (a0, c_0..c_(m-1))
    let mut stack: Vec<(FieldElem, Vec<FieldElem>)> = Vec::new();
    for &a0 in t.elems.iter().filter(|&&x| !t.in_base(x)) {
        for &c0 in t.norm(t.fx(a0)) {
            stack.push((a0, vec![c0]));
        }
    }
    while let Some((a0, c)) = stack.pop() {
        let i = c.len();
        let inv = f.inv(t.fx(a0))?;
        let mut conv = f.zero();
        for j in 1..i {
            conv = f.add(conv, f.mul(sigma(f, c[j], 1), c[i - j]));
        }
        for &ai in &t.elems {
            let rhs = f.sub(f.mul(t.fx(ai), inv), conv);
            let sols = t.as_plus(rhs);
            if i == m {
                sizes.insert(sols.len());
            } else {
                for &ci in sols {
                    let mut c2 = c.clone();
                    c2.push(ci);
                    stack.push((a0, c2));
                }
            }
        }
    }
    Ok(sizes.into_iter().collect())
}

/// Counts of `det = C sigma(C) S^{-1}` over the points of `Y_v^m` (scanned part).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetFibers {
    /// Fiber sizes keyed by the `F_q` coefficient indices of the determinant.
    pub fibers: BTreeMap<Vec<u8>, u128>,
    /// Whether every determinant had `F_q` coefficients.
    pub image_rational: bool,
    pub equal_fibers: bool,
    /// Fiber over `1`.
    pub over_one: u128,
}

pub fn det_fiber_analysis(params: SystemParams, s: u32, bound: u128) -> Result<DetFibers> {
    let sys = Yvm(params);
    let big_q = (params.q() as u128).pow(2 * s);
    let space = big_q.checked_pow(sys.scanned_dim()).unwrap_or(u128::MAX);
    if space > bound {
        return Err(Error::BoundExceeded { what: "det fiber scan".into(), size: space, bound });
    }
    let w = work_field(params.p, params.e, 2 * s)?;
    let f = w.field();
    let t = Tables::new(f);
    let base: HashMap<FieldElem, u8> =
        (0..params.q() as u8).map(|c| (w.base_elem(c), c)).collect();
    let a0s: Vec<FieldElem> = t.elems.iter().copied().filter(|&x| !t.in_base(x)).collect();
    let mut fibers = BTreeMap::new();
    let mut rational = true;
    let r = params.m + 1;
    sys.scan(&t, &a0s, &mut |a, c| {
        let cc = TruncElem::from_coeffs(c.to_vec());
        let ss = TruncElem::from_coeffs(a.iter().map(|&x| t.fx(x)).collect());
        let det = cc.mul(f, &cc.sigma(f, 1)).mul(f, &ss.inv(f).expect("S is a unit"));
        let key: Option<Vec<u8>> = det.truncate(r).coeffs.iter().map(|x| base.get(x).copied()).collect();
        match key {
            Some(k) => *fibers.entry(k).or_insert(0u128) += 1,
            None => rational = false,
        }
    });
    let sizes: Vec<u128> = fibers.values().copied().collect();
    let equal = sizes.windows(2).all(|w| w[0] == w[1]);
    let mut one = vec![0u8; r];
    one[0] = 1;
    let over_one = fibers.get(&one).copied().unwrap_or(0);
    Ok(DetFibers { fibers, image_rational: rational, equal_fibers: equal, over_one })
}

/// Compactly supported cohomology dimensions of the determinant-one component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CohTable {
    pub q: u64,
    pub m: usize,
    pub n: usize,
    pub d0: i64,
    pub n_minus: u128,
    pub dims: BTreeMap<i64, u128>,
}

impl CohTable {
    pub fn dim(&self, i: i64) -> u128 {
        self.dims.get(&i).copied().unwrap_or(0)
    }
}

pub fn coh_table(params: SystemParams) -> Result<CohTable> {
    let q = params.q();
    let nm = n_minus(params.p, params.e, None)?;
    let d0 = 2 * (params.n as i64 - 1) + 2 * params.m as i64 + 1;
    let mut dims = BTreeMap::new();
    dims.insert(d0 + 1, 1);
    dims.insert(d0, (q * (q - 1)) as u128);
    for j in 1..=params.m as i64 {
        dims.insert(d0 - j, nm * (q as u128).pow(2 * (j as u32 - 1)) * (q as u128 - 1));
    }
    Ok(CohTable { q, m: params.m, n: params.n, d0, n_minus: nm, dims })
}

/// Predicted and counted points, with a maximality verdict where one applies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LefschetzVerdict {
    pub predicted: i128,
    pub counted: u128,
    pub equal: bool,
    pub maximal: Option<bool>,
}

/// Assembles the Frobenius-trace sum and compares it with the point count.
///
/// For the determinant-one component the curve block enters through
/// `curve_count`, the number of points of `x^q - x = y^(q+1)` with `x` outside
/// `F_q` over the same field; for `Zm1` no curve data is needed.
pub fn lefschetz_check(
    sys: &dyn VarietySystem,
    s: u32,
    curve_count: Option<u128>,
    bound: u128,
) -> Result<LefschetzVerdict> {
    let counted = count_points(sys, s, bound)?;
    lefschetz_verdict(sys, s, curve_count, counted)
}

/// [`lefschetz_check`] against an already known point count.
pub fn lefschetz_verdict(
    sys: &dyn VarietySystem,
    s: u32,
    curve_count: Option<u128>,
    counted: u128,
) -> Result<LefschetzVerdict> {
    let p = sys.params();
    let q = p.q() as i128;
    let big_q = q.pow(2 * s);
    let m = p.m as u32;
    match sys.kind() {
        Kind::Yv0m => {
            let curve = curve_count.ok_or_else(|| Error::Validation("curve counts are required".into()))?;
            let tr_v = big_q - curve as i128;
            let fix = n_minus(p.p, p.e, Some(s))? as i128;
            let mut y = big_q.pow(m + 1) - big_q.pow(m) * tr_v;
            for j in 1..=m {
                let deg = 2 * m + 1 - j;
                let sign = if deg.is_multiple_of(2) { 1 } else { -1 };
                let eig = (-q).pow(deg).pow(s);
                let dim = q.pow(2 * (j - 1)) * (q - 1);
                y += sign * fix * dim * eig;
            }
            let predicted = y * big_q.pow(p.n as u32 - 1);
            Ok(LefschetzVerdict { predicted, counted, equal: predicted == counted as i128, maximal: None })
        }
        Kind::Zm1 => {
            let mut predicted = 0i128;
            let mut upper = 0i128;
            for j in 1..=m {
                let deg = 2 * m + 1 - j;
                let dim = if j == 1 { q } else { q.pow(2 * (j - 1)) * (q - 1) };
                let sign = if deg.is_multiple_of(2) { 1 } else { -1 };
                predicted += sign * dim * (-q).pow(deg).pow(s);
                upper += dim * q.pow(deg * s);
            }
            let maximal = if s == 1 { Some(counted as i128 == upper) } else { None };
            Ok(LefschetzVerdict { predicted, counted, equal: predicted == counted as i128, maximal })
        }
        k => Err(Error::Validation(format!("no cohomology prediction for {k}"))),
    }
}

/// A 2x2 matrix over `k-bar((t))`, row-major.
pub type LMat = [Laurent; 4];

pub fn lmat_mul(f: &Field, a: &LMat, b: &LMat) -> LMat {
    [
        a[0].mul(f, &b[0]).add(f, &a[1].mul(f, &b[2])),
        a[0].mul(f, &b[1]).add(f, &a[1].mul(f, &b[3])),
        a[2].mul(f, &b[0]).add(f, &a[3].mul(f, &b[2])),
        a[2].mul(f, &b[1]).add(f, &a[3].mul(f, &b[3])),
    ]
}

pub fn lmat_det(f: &Field, a: &LMat) -> Laurent {
    a[0].mul(f, &a[3]).sub(f, &a[1].mul(f, &a[2]))
}

pub fn lmat_inv(f: &Field, a: &LMat) -> Result<LMat> {
    let di = lmat_det(f, a).inv(f)?;
    Ok([a[3].mul(f, &di), a[1].neg(f).mul(f, &di), a[2].neg(f).mul(f, &di), a[0].mul(f, &di)])
}

pub fn lmat_sigma(f: &Field, a: &LMat, j: i64) -> LMat {
    [a[0].sigma(f, j), a[1].sigma(f, j), a[2].sigma(f, j), a[3].sigma(f, j)]
}

fn monomial(f: &Field, c: FieldElem, k: i32, prec: i32) -> Laurent {
    if k >= prec {
        return Laurent::zero(f, prec);
    }
    let mut coeffs = vec![f.zero(); (prec - k) as usize];
    coeffs[0] = c;
    Laurent { start: k, coeffs }
}

fn series(x: &TruncElem, shift: i32, prec: i32, f: &Field) -> Laurent {
    let mut c = x.coeffs.clone();
    let want = (prec - shift).max(0) as usize;
    c.resize(want.max(c.len()), f.zero());
    c.truncate(want);
    Laurent { start: shift, coeffs: c }
}

/// `(C, D, E, B)` with `C, D` units mod `t^(m+1)` and `E, B` mod `t^m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalForm {
    pub c: TruncElem,
    pub d: TruncElem,
    pub e: TruncElem,
    pub b: TruncElem,
}

/// `[[1,0],[tE,1]] w diag(C,D) [[1,0],[tB,1]]` with `w = [[0, t^-n], [-t^n, 0]]`.
pub fn phi_w(f: &Field, nf: &NormalForm, n: usize, prec: i32) -> LMat {
    let n = n as i32;
    let z = Laurent::zero(f, prec);
    let one = monomial(f, f.one(), 0, prec);
    let u = [one.clone(), z.clone(), series(&nf.e, 1, prec, f), one.clone()];
    let w = [z.clone(), monomial(f, f.one(), -n, prec), monomial(f, f.neg(f.one()), n, prec), z.clone()];
    let diag = [series(&nf.c, 0, prec, f), z.clone(), z.clone(), series(&nf.d, 0, prec, f)];
    let l = [one.clone(), z, series(&nf.b, 1, prec, f), one];
    lmat_mul(f, &lmat_mul(f, &lmat_mul(f, &u, &w), &diag), &l)
}

/// Coordinates of the `(I^m, I^m)` double coset of `x` in `I w I`.
pub fn invm_normal_form(f: &Field, x: &LMat, n: usize, m: usize) -> Result<NormalForm> {
    let n = n as i32;
    let need = m as i32 + 1 - n;
    let bad = |what: &str| Error::Validation(format!("element is not in the double coset: {what}"));
    for (k, e) in x.iter().enumerate() {
        if e.abs_prec() < need + 1 {
            return Err(Error::Precision(format!("entry {k} known only modulo t^{}", e.abs_prec())));
        }
    }
    let d = x[1].shift(n).to_trunc(f, m + 1).map_err(|_| bad("upper right entry"))?;
    if !d.is_unit() {
        return Err(bad("upper right entry has the wrong valuation"));
    }
    let tx12_inv = x[1].shift(1).inv(f)?;
    let b = x[0].mul(f, &tx12_inv).to_trunc(f, m).map_err(|_| bad("upper left entry"))?;
    let e = x[3].mul(f, &tx12_inv).to_trunc(f, m).map_err(|_| bad("lower right entry"))?;
    let det = lmat_det(f, x).to_trunc(f, m + 1).map_err(|_| bad("determinant"))?;
    if !det.is_unit() {
        return Err(bad("determinant is not a unit"));
    }
    let c = det.mul(f, &d.inv(f)?);
    Ok(NormalForm { c, d, e, b })
}

/// A point `x = [[t^k, t^-k a], [0, t^-k]] diag(C,D) [[1,A],[0,1]] [[1,0],[tB,1]]` of `C_v^m`, `n = 2k`.
#[derive(Clone, Debug)]
pub struct CvPoint {
    pub a: TruncElem,
    pub c: TruncElem,
    pub d: TruncElem,
    pub big_a: TruncElem,
    pub b: TruncElem,
}

pub fn cv_matrix(f: &Field, pt: &CvPoint, n: usize, prec: i32) -> LMat {
    let k = (n / 2) as i32;
    let z = Laurent::zero(f, prec);
    let one = monomial(f, f.one(), 0, prec);
    let v = [monomial(f, f.one(), k, prec), series(&pt.a, -k, prec, f), z.clone(), monomial(f, f.one(), -k, prec)];
    let diag = [series(&pt.c, 0, prec, f), z.clone(), z.clone(), series(&pt.d, 0, prec, f)];
    let ua = [one.clone(), series(&pt.big_a, 0, prec, f), z.clone(), one.clone()];
    let lb = [one.clone(), z.clone(), series(&pt.b, 1, prec, f), one];
    lmat_mul(f, &lmat_mul(f, &lmat_mul(f, &v, &diag), &ua), &lb)
}

/// Random point with `a_0` outside `F_q`, coordinates in `F_{q^2}`.
pub fn random_cv_point(w: &WorkField, n: usize, m: usize, rng: &mut impl Rng) -> Result<CvPoint> {
    let f = w.field();
    let sub = w.tower.subfield_elements(2, w.degree)?;
    let pick = |rng: &mut dyn rand::RngCore, unit: bool| loop {
        let x = sub[rng.gen_range(0..sub.len())];
        if !unit || !x.is_zero() {
            return x;
        }
    };
    let a0 = loop {
        let x = pick(rng, false);
        if f.frobenius(x, 1) != x {
            break x;
        }
    };
    let series_of = |rng: &mut dyn rand::RngCore, len: usize, unit: bool| {
        TruncElem::from_coeffs((0..len).map(|i| pick(rng, unit && i == 0)).collect())
    };
    let mut a = series_of(rng, n, false);
    a.coeffs[0] = a0;
    Ok(CvPoint {
        a,
        c: series_of(rng, m + 1, true),
        d: series_of(rng, m + 1, true),
        big_a: series_of(rng, m + 1, false),
        b: series_of(rng, m.max(1), false).truncate(m),
    })
}

/// Normal form of `x^-1 sigma(x)` and the predicted
/// `(sigma(C) D^-1 S^-1, sigma(D) C^-1 S, -B, sigma(B))`.
pub fn key_computation(f: &Field, pt: &CvPoint, n: usize, m: usize) -> Result<(NormalForm, NormalForm)> {
    let prec = (3 * n + 2 * m + 6) as i32;
    let x = cv_matrix(f, pt, n, prec);
    let y = lmat_mul(f, &lmat_inv(f, &x)?, &lmat_sigma(f, &x, 1));
    let got = invm_normal_form(f, &y, n, m)?;
    let r = m + 1;
    let s = pt.a.sigma(f, 1).sub(f, &pt.a).truncate(r);
    let (c, d) = (pt.c.truncate(r), pt.d.truncate(r));
    let want = NormalForm {
        c: c.sigma(f, 1).mul(f, &d.inv(f)?).mul(f, &s.inv(f)?),
        d: d.sigma(f, 1).mul(f, &c.inv(f)?).mul(f, &s),
        e: pt.b.neg(f),
        b: pt.b.sigma(f, 1),
    };
    Ok((got, want))
}

/// Splitting degree (over `F_q`) that always contains a solution of the
/// diagonal equation for inputs over `F_{q^2}` at level `m`.
pub fn lang_degree(p: u32, e: u32, m: usize) -> u32 {
    let q = (p as u128).pow(e);
    let need = (q * q - 1) * (q * q - 1);
    let d = (1..).find(|&d: &u32| ((q.pow(d) - 1) % need) == 0).unwrap();
    d * p.pow(m as u32)
}

/// Outcome of `sigma`-conjugating `phi_w(C,D,E,B)` to `phi_w(1,1,0,0)`.
#[derive(Clone, Debug)]
pub enum SigmaConjugation {
    /// `B != -sigma(E)`: the variety is empty.
    Empty,
    /// `i^-1 w' sigma(i) = w_m` in the double-coset space.
    Conjugator(LMat),
}

/// Finds `i in I` with `i^-1 phi_w(nf) sigma(i) = phi_w(1,1,0,0)`, working in the field of `w`.
pub fn sigma_conjugate_to_standard(w: &WorkField, nf: &NormalForm, n: usize, m: usize) -> Result<SigmaConjugation> {
    let f = w.field();
    let lhs = nf.b.clone();
    let rhs = nf.e.sigma(f, 1).neg(f);
    if lhs != rhs {
        return Ok(SigmaConjugation::Empty);
    }
    let r = m + 1;
    // sigma^2(i1) = i1 lambda with lambda = (D sigma(C))^-1
    let lambda = nf.d.mul(f, &nf.c.sigma(f, 1)).inv(f)?;
    let q2 = (f.q() * f.q()) as usize;
    let mut poly = vec![f.zero(); q2];
    poly[0] = f.neg(lambda.coeffs[0]);
    poly[q2 - 1] = f.one();
    let p = f.p();
    let full = lang_degree(f.p(), f.e(), m);
    let staged = w.degree.is_multiple_of(full);
    let d0 = full / p.pow(m as u32);
    let stage = |k: usize| if staged { d0 * p.pow(k as u32) } else { w.degree };
    let i10 = *f
        .roots(&poly)
        .iter()
        .find(|&&x| f.in_subfield(x, stage(0)))
        .ok_or_else(|| Error::Validation(format!("no level-0 solution in degree {}; raise the bound", w.degree)))?;
    let mut i1 = vec![i10];
    let dim = f.abs_degree();
    for k in 1..r {
        // x^(q^2) - lambda_0 x = sum_{j<k} i1_j lambda_(k-j), with x in the subfield of degree stage(k)
        let mut known = f.zero();
        for j in 0..k {
            known = f.add(known, f.mul(i1[j], lambda.coeffs[k - j]));
        }
        let basis = subfield_basis(w, stage(k))?;
        let mut rows = vec![vec![0u32; basis.len()]; dim];
        for (b, &e) in basis.iter().enumerate() {
            let img = f.sub(f.frobenius(e, 2), f.mul(lambda.coeffs[0], e));
            for (row, v) in f.to_vec(img).into_iter().enumerate() {
                rows[row][b] = v;
            }
        }
        let sol = crate::linalg::solve_affine(&mut rows, &f.to_vec(known), p).ok_or_else(|| {
            Error::Validation(format!("no level-{k} solution in degree {}; raise the bound", w.degree))
        })?;
        let mut x = f.zero();
        for (c, &e) in sol.particular.iter().zip(&basis) {
            x = f.add(x, f.scale(*c, e));
        }
        i1.push(x);
    }
    let i1 = TruncElem::from_coeffs(i1);
    let i2 = nf.c.mul(f, &i1.sigma(f, 1));
    let prec = (3 * n + 2 * m + 6) as i32;
    let z = Laurent::zero(f, prec);
    let one = monomial(f, f.one(), 0, prec);
    let u = [one.clone(), z.clone(), series(&nf.e, 1, prec, f), one];
    let d = [series(&i1, 0, prec, f), z.clone(), z, series(&i2, 0, prec, f)];
    Ok(SigmaConjugation::Conjugator(lmat_mul(f, &u, &d)))
}

/// `F_p`-basis of `F_{q^d}` embedded in the field of `w`.
fn subfield_basis(w: &WorkField, d: u32) -> Result<Vec<FieldElem>> {
    let small = w.tower.level(d)?;
    (0..small.abs_degree()).map(|i| w.tower.embed(small.monomial(i), w.degree)).collect()
}

/// Normal form of `i^-1 phi_w(nf) sigma(i)`.
pub fn conjugated_normal_form(w: &WorkField, nf: &NormalForm, i: &LMat, n: usize, m: usize) -> Result<NormalForm> {
    let f = w.field();
    let prec = (3 * n + 2 * m + 6) as i32;
    let x = phi_w(f, nf, n, prec);
    let y = lmat_mul(f, &lmat_mul(f, &lmat_inv(f, i)?, &x), &lmat_sigma(f, i, 1));
    invm_normal_form(f, &y, n, m)
}

/// Random `(C, D, E, B)` over `F_{q^2}` inside `w`, with `B = -sigma(E)` when `valid`.
pub fn random_normal_form(w: &WorkField, m: usize, valid: bool, rng: &mut impl Rng) -> Result<NormalForm> {
    let f = w.field();
    let sub = w.tower.subfield_elements(2, w.degree)?;
    let mut pick = |unit: bool| loop {
        let x = sub[rng.gen_range(0..sub.len())];
        if !unit || !x.is_zero() {
            return x;
        }
    };
    let c = TruncElem::from_coeffs((0..=m).map(|i| pick(i == 0)).collect());
    let d = TruncElem::from_coeffs((0..=m).map(|i| pick(i == 0)).collect());
    let e = TruncElem::from_coeffs((0..m).map(|_| pick(false)).collect());
    let b = if valid {
        e.sigma(f, 1).neg(f)
    } else {
        let mut b = e.sigma(f, 1).neg(f);
        if m == 0 {
            return Err(Error::Validation("B is empty at m = 0".into()));
        }
        b.coeffs[0] = f.add(b.coeffs[0], f.one());
        b
    };
    Ok(NormalForm { c, d, e, b })
}

/// Seeded generator used by the randomized checks.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(q: u32, m: usize, n: usize) -> SystemParams {
        SystemParams::new(q, m, Some(n)).unwrap()
    }

    fn count(kind: Kind, q: u32, m: usize, n: usize, s: u32) -> u128 {
        let sys = build_system(kind, params(q, m, n)).unwrap();
        count_points(sys.as_ref(), s, DEFAULT_COUNT_BOUND).unwrap()
    }

    #[test]
    fn small_counts() {
        assert_eq!(count(Kind::Yv0m, 2, 0, 2, 1), 24);
        assert_eq!(count(Kind::Zm1, 2, 1, 2, 1), 8);
        assert_eq!(count(Kind::Zm1, 3, 1, 2, 1), 27);
        assert_eq!(count(Kind::Zm1, 2, 2, 4, 1), 64);
    }

    #[test]
    fn zm1_bound_refusal() {
        let sys = build_system(Kind::Zm1, params(7, 3, 4)).unwrap();
        assert!(matches!(count_points(sys.as_ref(), 1, DEFAULT_COUNT_BOUND), Err(Error::BoundExceeded { .. })));
    }

    #[test]
    fn param_validation() {
        assert!(SystemParams::new(2, 2, Some(2)).is_err());
        assert!(SystemParams::new(2, 1, Some(3)).is_err());
        assert!(SystemParams::new(6, 1, None).is_err());
        assert_eq!(SystemParams::new(9, 1, None).unwrap().n, 2);
        assert_eq!(SystemParams::new(4, 2, None).unwrap().n, 4);
    }

    #[test]
    fn equation_listing() {
        let z = build_system(Kind::Zm1, params(2, 1, 2)).unwrap();
        assert_eq!(z.equations().len(), 1);
        assert!(z.equations()[0].text.ends_with("= 0"));
        let z = build_system(Kind::Zm, params(2, 2, 4)).unwrap();
        assert!(z.equations().iter().any(|e| e.text.contains("delta2*c1^(q+1)")));
        let y = build_system(Kind::Yv0m, params(3, 0, 2)).unwrap();
        assert_eq!(y.equations()[0].text, "c0^(q+1) = f(a0)");
    }

    #[test]
    fn registry_lookup() {
        let reg = SystemRegistry::default();
        assert_eq!(reg.names().len(), 7);
        let sys = reg.get("zm1", params(2, 1, 2)).unwrap().unwrap();
        assert_eq!(sys.kind(), Kind::Zm1);
        assert!(reg.get("nope", params(2, 1, 2)).is_none());
    }

    #[test]
    fn det_fibers_equal_and_rational() {
        let r = det_fiber_analysis(params(2, 1, 2), 1, DEFAULT_COUNT_BOUND).unwrap();
        assert!(r.image_rational);
        assert!(r.equal_fibers);
        assert_eq!(r.fibers.len(), 2);
        let y0 = build_system(Kind::Yv0m, params(2, 1, 2)).unwrap();
        let w = work_field(2, 1, 2).unwrap();
        assert_eq!(r.over_one, y0.count_scanned(&w).unwrap());
        let r0 = det_fiber_analysis(params(2, 0, 2), 1, DEFAULT_COUNT_BOUND).unwrap();
        assert_eq!(r0.fibers.len(), 1);
    }

    #[test]
    fn coh_table_examples() {
        let t = coh_table(params(2, 1, 2)).unwrap();
        assert_eq!(t.d0, 5);
        assert_eq!((t.dim(6), t.dim(5), t.dim(4), t.dim(3)), (1, 2, 6, 0));
        let t = coh_table(params(3, 1, 2)).unwrap();
        assert_eq!(t.n_minus, 24);
        assert_eq!(t.dim(t.d0 - 1), 48);
    }

    #[test]
    fn as_fibers_have_size_q_geometrically() {
        // over F_{q^(2p)} every right-hand side coming from F_{q^2} points is hit
        for (p, m) in [(2u32, 1usize), (3, 1)] {
            let sizes = yv0m_fiber_sizes(p, 1, m, 1).unwrap();
            assert!(sizes.iter().all(|&s| s == 0 || s == p as usize));
        }
    }

    #[test]
    fn normal_form_roundtrip_and_key_computation() {
        let w = work_field(2, 1, 2).unwrap();
        let f = w.field();
        let mut g = rng(7);
        for m in 0..2usize {
            let n = 2;
            for _ in 0..20 {
                let nf = random_normal_form(&w, m, true, &mut g).unwrap();
                let x = phi_w(f, &nf, n, 20);
                assert_eq!(invm_normal_form(f, &x, n, m).unwrap(), nf);
                let pt = random_cv_point(&w, n, m, &mut g).unwrap();
                let (got, want) = key_computation(f, &pt, n, m).unwrap();
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn sigma_conjugation_reaches_standard() {
        let (p, m, n) = (2u32, 1usize, 2usize);
        let w = work_field(p, 1, lang_degree(p, 1, m)).unwrap();
        let f = w.field();
        let std = NormalForm {
            c: TruncElem::one(f, m + 1),
            d: TruncElem::one(f, m + 1),
            e: TruncElem::zero(f, m),
            b: TruncElem::zero(f, m),
        };
        let mut g = rng(3);
        for _ in 0..5 {
            let nf = random_normal_form(&w, m, true, &mut g).unwrap();
            match sigma_conjugate_to_standard(&w, &nf, n, m).unwrap() {
                SigmaConjugation::Conjugator(i) => {
                    assert_eq!(conjugated_normal_form(&w, &nf, &i, n, m).unwrap(), std)
                }
                SigmaConjugation::Empty => panic!("valid input reported empty"),
            }
            let bad = random_normal_form(&w, m, false, &mut g).unwrap();
            assert!(matches!(sigma_conjugate_to_standard(&w, &bad, n, m).unwrap(), SigmaConjugation::Empty));
        }
    }
}
