//! Finite fields `F_{q^d}` as a compatible tower over `F_p`.
//!
//! Every level is `F_p[x]/(f)` with `f` the lexicographically smallest monic
//! irreducible of degree `e*d`. Embeddings between levels `d' | d` send the
//! generator of level `d'` to a root of its polynomial in level `d`; the roots
//! are chosen greedily so that all embeddings commute.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

/// Largest absolute degree `[F : F_p]` a level may have.
pub const MAX_DEG: usize = 72;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElem {
    level: u16,
    coeffs: [u8; MAX_DEG],
}

impl FieldElem {
    /// Degree over `F_q` of the field this element lives in.
    pub fn level(&self) -> u32 {
        self.level as u32
    }

    pub fn coeffs(&self) -> &[u8] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Base-p integer with coefficient `i` as digit `i`.
    pub fn encode(&self, p: u32) -> u128 {
        let mut n = 0u128;
        for &c in self.coeffs.iter().rev() {
            n = n * p as u128 + c as u128;
        }
        n
    }
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.coeffs.iter().rposition(|&c| c != 0).map_or(1, |i| i + 1);
        write!(f, "F{}{:?}", self.level, &self.coeffs[..last])
    }
}

/// One level `F_{q^d}` of the tower.
#[derive(Clone, Debug)]
pub struct Field {
    p: u32,
    e: u32,
    d: u32,
    deg: usize,
    modulus: Vec<u32>,
    // x^k mod f for k in deg..2*deg-1
    reduce: Vec<[u8; MAX_DEG]>,
    // sigma_pow[j][i] = sigma^j(x^i)
    sigma_pow: Vec<Vec<FieldElem>>,
}

impl Field {
    fn new(p: u32, e: u32, d: u32, modulus: Vec<u32>) -> Field {
        let deg = modulus.len() - 1;
        let mut reduce = Vec::with_capacity(deg);
        let mut cur = [0u8; MAX_DEG];
        // x^deg = -(f_0 + ... + f_{deg-1} x^{deg-1})
        for i in 0..deg {
            cur[i] = ((p - modulus[i] % p) % p) as u8;
        }
        for _ in 0..deg.max(1) {
            reduce.push(cur);
            // multiply by x
            let top = cur[deg - 1] as u32;
            let mut next = [0u8; MAX_DEG];
            for i in (1..deg).rev() {
                next[i] = cur[i - 1];
            }
            for i in 0..deg {
                let add = top * ((p - modulus[i] % p) % p);
                next[i] = ((next[i] as u32 + add) % p) as u8;
            }
            cur = next;
        }
        let mut f = Field { p, e, d, deg, modulus, reduce, sigma_pow: Vec::new() };
        f.build_sigma();
        f
    }

    fn build_sigma(&mut self) {
        let q = (self.p as u128).pow(self.e);
        let basis: Vec<FieldElem> = (0..self.deg).map(|i| self.monomial(i)).collect();
        let sigma1: Vec<FieldElem> = basis.iter().map(|b| self.pow(*b, q)).collect();
        let mut pows = vec![basis.clone()];
        for j in 1..self.d as usize {
            let prev = &pows[j - 1];
            let next: Vec<FieldElem> = prev.iter().map(|x| self.apply_linear(&sigma1, *x)).collect();
            pows.push(next);
        }
        self.sigma_pow = pows;
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    /// Degree over `F_q`.
    pub fn degree(&self) -> u32 {
        self.d
    }

    /// Degree over `F_p`.
    pub fn abs_degree(&self) -> usize {
        self.deg
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn size(&self) -> u128 {
        (self.p as u128).pow(self.deg as u32)
    }

    pub fn q(&self) -> u128 {
        (self.p as u128).pow(self.e)
    }

    pub fn zero(&self) -> FieldElem {
        FieldElem { level: self.d as u16, coeffs: [0; MAX_DEG] }
    }

    pub fn one(&self) -> FieldElem {
        self.from_prime(1)
    }

    pub fn from_prime(&self, c: u32) -> FieldElem {
        let mut z = self.zero();
        z.coeffs[0] = (c % self.p) as u8;
        z
    }

    pub fn monomial(&self, i: usize) -> FieldElem {
        let mut z = self.zero();
        if i < self.deg {
            z.coeffs[i] = 1;
        } else {
            z = self.pow(self.monomial(1), i as u128);
        }
        z
    }

    pub fn from_coeffs(&self, c: &[u32]) -> FieldElem {
        let mut z = self.zero();
        for (i, &v) in c.iter().enumerate().take(self.deg) {
            z.coeffs[i] = (v % self.p) as u8;
        }
        z
    }

    /// Inverse of [`FieldElem::encode`].
    pub fn decode(&self, mut n: u128) -> FieldElem {
        let mut z = self.zero();
        for i in 0..self.deg {
            z.coeffs[i] = (n % self.p as u128) as u8;
            n /= self.p as u128;
        }
        z
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElem> + '_ {
        (0..self.size()).map(move |n| self.decode(n))
    }

    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        let mut z = self.zero();
        for i in 0..self.deg {
            let s = a.coeffs[i] as u32 + b.coeffs[i] as u32;
            z.coeffs[i] = if s >= self.p { (s - self.p) as u8 } else { s as u8 };
        }
        z
    }

    pub fn neg(&self, a: FieldElem) -> FieldElem {
        let mut z = self.zero();
        for i in 0..self.deg {
            let c = a.coeffs[i] as u32;
            z.coeffs[i] = if c == 0 { 0 } else { (self.p - c) as u8 };
        }
        z
    }

    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.add(a, self.neg(b))
    }

    pub fn scale(&self, c: u32, a: FieldElem) -> FieldElem {
        let c = c % self.p;
        let mut z = self.zero();
        for i in 0..self.deg {
            z.coeffs[i] = ((a.coeffs[i] as u32 * c) % self.p) as u8;
        }
        z
    }

    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        debug_assert_eq!(a.level, b.level);
        let n = self.deg;
        let p = self.p;
        let mut acc = [0u32; 2 * MAX_DEG];
        for i in 0..n {
            let ai = a.coeffs[i] as u32;
            if ai == 0 {
                continue;
            }
            for j in 0..n {
                acc[i + j] += ai * b.coeffs[j] as u32;
            }
        }
        let mut out = [0u32; MAX_DEG];
        for i in 0..n {
            out[i] = acc[i] % p;
        }
        for k in n..(2 * n - 1) {
            let c = acc[k] % p;
            if c == 0 {
                continue;
            }
            let r = &self.reduce[k - n];
            for i in 0..n {
                out[i] += c * r[i] as u32;
            }
        }
        let mut z = self.zero();
        for i in 0..n {
            z.coeffs[i] = (out[i] % p) as u8;
        }
        z
    }

    pub fn pow(&self, a: FieldElem, mut n: u128) -> FieldElem {
        let mut base = a;
        let mut r = self.one();
        while n > 0 {
            if n & 1 == 1 {
                r = self.mul(r, base);
            }
            base = self.mul(base, base);
            n >>= 1;
        }
        r
    }

    pub fn inv(&self, a: FieldElem) -> Result<FieldElem> {
        if a.is_zero() {
            return Err(Error::NonUnit("zero has no inverse in a field".into()));
        }
        Ok(self.pow(a, self.size() - 2))
    }

    pub fn div(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem> {
        Ok(self.mul(a, self.inv(b)?))
    }

    fn apply_linear(&self, images: &[FieldElem], x: FieldElem) -> FieldElem {
        let mut acc = [0u32; MAX_DEG];
        for (i, img) in images.iter().enumerate() {
            let c = x.coeffs[i] as u32;
            if c == 0 {
                continue;
            }
            for k in 0..self.deg {
                acc[k] += c * img.coeffs[k] as u32;
            }
        }
        let mut z = self.zero();
        for k in 0..self.deg {
            z.coeffs[k] = (acc[k] % self.p) as u8;
        }
        z
    }

    /// `x^(q^j)`; negative `j` is reduced modulo the order `d` of sigma.
    pub fn frobenius(&self, x: FieldElem, j: i64) -> FieldElem {
        let d = self.d as i64;
        let j = j.rem_euclid(d) as usize;
        if j == 0 {
            return x;
        }
        self.apply_linear(&self.sigma_pow[j], x)
    }

    /// `x^p`, the absolute Frobenius.
    pub fn frob_p(&self, x: FieldElem) -> FieldElem {
        self.pow(x, self.p as u128)
    }

    /// Whether `x` lies in the subfield `F_{q^k}` (k | d).
    pub fn in_subfield(&self, x: FieldElem, k: u32) -> bool {
        self.frobenius(x, k as i64) == x
    }

    /// Trace from this level down to `F_p`, as an element of `F_p`.
    pub fn abs_trace(&self, x: FieldElem) -> u32 {
        let mut acc = self.zero();
        let mut y = x;
        for _ in 0..self.deg {
            acc = self.add(acc, y);
            y = self.frob_p(y);
        }
        acc.coeffs[0] as u32
    }

    /// Coordinates of `x` over `F_p`.
    pub fn to_vec(&self, x: FieldElem) -> Vec<u32> {
        x.coeffs[..self.deg].iter().map(|&c| c as u32).collect()
    }

    /// Polynomial evaluation (coefficients low to high).
    pub fn eval_poly(&self, poly: &[FieldElem], x: FieldElem) -> FieldElem {
        let mut acc = self.zero();
        for c in poly.iter().rev() {
            acc = self.add(self.mul(acc, x), *c);
        }
        acc
    }

    /// All roots of `poly` in this field, sorted by encoding.
    ///
    /// Isolated as `gcd(f, x^|F| - x)` followed by equal-degree splitting.
    pub fn roots(&self, poly: &[FieldElem]) -> Vec<FieldElem> {
        let f = poly_trim(poly.to_vec(), self);
        if f.len() <= 1 {
            return Vec::new();
        }
        let f = self.poly_monic(&f);
        let x = vec![self.zero(), self.one()];
        let xq = self.poly_powmod(&x, self.size(), &f);
        let g = self.poly_gcd(&f, &self.poly_sub(&xq, &x));
        let mut out = Vec::new();
        self.split_linear(g, &mut out);
        out.sort_by_key(|r| r.encode(self.p));
        out
    }

    fn split_linear(&self, g: Vec<FieldElem>, out: &mut Vec<FieldElem>) {
        let deg = g.len() - 1;
        if deg == 0 {
            return;
        }
        if deg == 1 {
            // g = x + c (monic)
            out.push(self.neg(g[0]));
            return;
        }
        let size = self.size();
        // elements with small encodings live in small subfields and rarely split g
        let mut rng = ChaCha8Rng::seed_from_u64(deg as u64);
        loop {
            let delta = self.decode(rng.gen_range(1..size));
            let h = if self.p == 2 {
                // absolute trace of delta * x modulo g
                let mut t = vec![self.zero(), delta];
                let mut acc = t.clone();
                for _ in 1..self.deg {
                    t = self.poly_mulmod(&t, &t, &g);
                    acc = self.poly_add(&acc, &t);
                }
                acc
            } else {
                let base = vec![delta, self.one()];
                let r = self.poly_powmod(&base, (size - 1) / 2, &g);
                self.poly_sub(&r, &[self.one()])
            };
            let h = self.poly_gcd(&g, &h);
            let dh = h.len() - 1;
            if dh > 0 && dh < deg {
                let other = self.poly_divexact(&g, &h);
                self.split_linear(self.poly_monic(&h), out);
                self.split_linear(self.poly_monic(&other), out);
                return;
            }
        }
    }

    pub(crate) fn poly_add(&self, a: &[FieldElem], b: &[FieldElem]) -> Vec<FieldElem> {
        let n = a.len().max(b.len());
        let mut r = Vec::with_capacity(n);
        for i in 0..n {
            let x = a.get(i).copied().unwrap_or(self.zero());
            let y = b.get(i).copied().unwrap_or(self.zero());
            r.push(self.add(x, y));
        }
        poly_trim(r, self)
    }

    pub(crate) fn poly_sub(&self, a: &[FieldElem], b: &[FieldElem]) -> Vec<FieldElem> {
        let nb: Vec<FieldElem> = b.iter().map(|&c| self.neg(c)).collect();
        self.poly_add(a, &nb)
    }

    fn poly_monic(&self, a: &[FieldElem]) -> Vec<FieldElem> {
        let lead = *a.last().expect("nonzero polynomial");
        let inv = self.inv(lead).expect("nonzero leading coefficient");
        a.iter().map(|&c| self.mul(c, inv)).collect()
    }

    fn poly_rem(&self, a: &[FieldElem], m: &[FieldElem]) -> Vec<FieldElem> {
        let mut r = poly_trim(a.to_vec(), self);
        let dm = m.len() - 1;
        let inv = self.inv(*m.last().unwrap()).unwrap();
        while r.len() > dm && !(r.len() == 1 && r[0].is_zero()) {
            let c = self.mul(*r.last().unwrap(), inv);
            let shift = r.len() - 1 - dm;
            for i in 0..=dm {
                r[shift + i] = self.sub(r[shift + i], self.mul(c, m[i]));
            }
            r.pop();
            r = poly_trim(r, self);
            if r.len() <= dm {
                break;
            }
        }
        r
    }

    fn poly_divexact(&self, a: &[FieldElem], m: &[FieldElem]) -> Vec<FieldElem> {
        let mut r = a.to_vec();
        let dm = m.len() - 1;
        let inv = self.inv(*m.last().unwrap()).unwrap();
        let mut q = vec![self.zero(); a.len() - dm];
        while r.len() > dm {
            let c = self.mul(*r.last().unwrap(), inv);
            let shift = r.len() - 1 - dm;
            q[shift] = c;
            for i in 0..=dm {
                r[shift + i] = self.sub(r[shift + i], self.mul(c, m[i]));
            }
            r.pop();
        }
        q
    }

    fn poly_mulmod(&self, a: &[FieldElem], b: &[FieldElem], m: &[FieldElem]) -> Vec<FieldElem> {
        let mut prod = vec![self.zero(); a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = self.add(prod[i + j], self.mul(x, y));
            }
        }
        self.poly_rem(&prod, m)
    }

    fn poly_powmod(&self, base: &[FieldElem], mut n: u128, m: &[FieldElem]) -> Vec<FieldElem> {
        let mut b = self.poly_rem(base, m);
        let mut r = vec![self.one()];
        while n > 0 {
            if n & 1 == 1 {
                r = self.poly_mulmod(&r, &b, m);
            }
            b = self.poly_mulmod(&b, &b, m);
            n >>= 1;
        }
        r
    }

    fn poly_gcd(&self, a: &[FieldElem], b: &[FieldElem]) -> Vec<FieldElem> {
        let mut x = poly_trim(a.to_vec(), self);
        let mut y = poly_trim(b.to_vec(), self);
        while !(y.len() == 1 && y[0].is_zero()) {
            let r = self.poly_rem(&x, &y);
            x = y;
            y = r;
        }
        if x.len() == 1 && x[0].is_zero() {
            return x;
        }
        self.poly_monic(&x)
    }
}

fn poly_trim(mut a: Vec<FieldElem>, f: &Field) -> Vec<FieldElem> {
    while a.len() > 1 && a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    if a.is_empty() {
        a.push(f.zero());
    }
    a
}

/// A tower of fields `F_{q^d}` for a divisor-closed set of degrees.
#[derive(Clone, Debug)]
pub struct FieldTower {
    p: u32,
    e: u32,
    levels: BTreeMap<u32, Field>,
    // (from, to) -> images of the F_p-basis x^i of `from`
    embeddings: HashMap<(u32, u32), Vec<FieldElem>>,
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= n {
        if n.is_multiple_of(k) {
            return false;
        }
        k += 1;
    }
    true
}

fn divisors(n: u32) -> Vec<u32> {
    (1..=n).filter(|k| n.is_multiple_of(*k)).collect()
}

/// Builds the tower for the given degrees over `F_q`, `q = p^e`. The degree
/// set is closed under divisors first.
pub fn make_tower(p: u32, e: u32, degrees: &[u32]) -> Result<FieldTower> {
    if !is_prime(p) || p > 255 {
        return Err(Error::Validation(format!("p = {p} is not a supported prime")));
    }
    if e == 0 {
        return Err(Error::Validation("exponent e must be positive".into()));
    }
    if degrees.is_empty() {
        return Err(Error::Validation("empty degree list".into()));
    }
    let mut all = BTreeSet::new();
    for &d in degrees {
        if d == 0 {
            return Err(Error::Validation("degree 0 requested".into()));
        }
        if (e * d) as usize > MAX_DEG {
            return Err(Error::BoundExceeded {
                what: "field degree".into(),
                size: (e * d) as u128,
                bound: MAX_DEG as u128,
            });
        }
        all.extend(divisors(d));
    }
    let mut tower = FieldTower { p, e, levels: BTreeMap::new(), embeddings: HashMap::new() };
    for d in all {
        tower.add_level(d);
    }
    Ok(tower)
}

impl FieldTower {
    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn q(&self) -> u32 {
        self.p.pow(self.e)
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.levels.keys().copied().collect()
    }

    pub fn level(&self, d: u32) -> Result<&Field> {
        self.levels
            .get(&d)
            .ok_or_else(|| Error::Validation(format!("degree {d} is not a level of the tower")))
    }

    /// Field `F_{q^d}`; panics if the level is missing.
    pub fn field(&self, d: u32) -> &Field {
        self.level(d).expect("tower level")
    }

    fn add_level(&mut self, d: u32) {
        let deg = (self.e * d) as usize;
        let modulus = smallest_irreducible(self.p, deg);
        let field = Field::new(self.p, self.e, d, modulus);
        // fix embeddings from every proper divisor, largest first
        let mut divs: Vec<u32> = divisors(d).into_iter().filter(|&c| c < d).collect();
        divs.reverse();
        for &dp in &divs {
            if self.embeddings.contains_key(&(dp, d)) {
                continue;
            }
            let src = &self.levels[&dp];
            let poly: Vec<FieldElem> =
                src.modulus.iter().map(|&c| field.from_prime(c)).collect();
            let roots = field.roots(&poly);
            let sub_divs: Vec<u32> = divisors(dp).into_iter().filter(|&c| c < dp).collect();
            let mut chosen = None;
            for r in roots {
                let images = basis_images(&field, r, src.deg);
                let ok = sub_divs.iter().all(|&c| match self.embeddings.get(&(c, d)) {
                    Some(fixed) => {
                        let inner = &self.embeddings[&(c, dp)];
                        let composed: Vec<FieldElem> =
                            inner.iter().map(|y| field.apply_linear(&images, *y)).collect();
                        &composed == fixed
                    }
                    None => true,
                });
                if ok {
                    chosen = Some(images);
                    break;
                }
            }
            let images = chosen.expect("compatible embedding exists for divisor-closed towers");
            for &c in &sub_divs {
                if !self.embeddings.contains_key(&(c, d)) {
                    let inner = &self.embeddings[&(c, dp)];
                    let composed: Vec<FieldElem> =
                        inner.iter().map(|y| field.apply_linear(&images, *y)).collect();
                    self.embeddings.insert((c, d), composed);
                }
            }
            self.embeddings.insert((dp, d), images);
        }
        self.levels.insert(d, field);
    }

    /// Embeds `x` into the level `to`; requires `x.level() | to`.
    pub fn embed(&self, x: FieldElem, to: u32) -> Result<FieldElem> {
        let from = x.level();
        if from == to {
            return Ok(x);
        }
        let images = self.embeddings.get(&(from, to)).ok_or_else(|| {
            Error::Validation(format!("no embedding from degree {from} into degree {to}"))
        })?;
        Ok(self.field(to).apply_linear(images, x))
    }

    /// Preimage of `x` in the level `to` (a subfield), if it lies there.
    pub fn restrict(&self, x: FieldElem, to: u32) -> Result<Option<FieldElem>> {
        let from = x.level();
        if from == to {
            return Ok(Some(x));
        }
        let big = self.field(from);
        if !big.in_subfield(x, to) {
            return Ok(None);
        }
        let images = self.embeddings.get(&(to, from)).ok_or_else(|| {
            Error::Validation(format!("no embedding from degree {to} into degree {from}"))
        })?;
        // solve the F_p-linear system sum c_i images_i = x
        let small = self.field(to);
        let rows = big.deg;
        let cols = small.deg;
        let mut mat: Vec<Vec<u32>> = (0..rows)
            .map(|r| (0..cols).map(|c| images[c].coeffs[r] as u32).collect())
            .collect();
        let rhs: Vec<u32> = big.to_vec(x);
        let sol = crate::linalg::solve_affine(&mut mat, &rhs, self.p);
        Ok(sol.map(|s| small.from_coeffs(&s.particular)))
    }

    /// `k_- = {x in F_{q^2} : x^q + x = 0}` for `d = 2`.
    pub fn artin_schreier_trace_zero_set(&self, d: u32) -> Result<Vec<FieldElem>> {
        if d != 2 {
            return Err(Error::Validation("only d = 2 is supported".into()));
        }
        let f = self.level(2)?;
        Ok(f.elements().filter(|&x| f.add(f.frobenius(x, 1), x).is_zero()).collect())
    }

    /// Subfield elements `F_{q^k}` inside level `d`, in encoding order of `F_{q^k}`.
    pub fn subfield_elements(&self, k: u32, d: u32) -> Result<Vec<FieldElem>> {
        let small = self.level(k)?;
        small.elements().map(|x| self.embed(x, d)).collect()
    }
}

fn basis_images(field: &Field, root: FieldElem, n: usize) -> Vec<FieldElem> {
    let mut out = Vec::with_capacity(n);
    let mut cur = field.one();
    for _ in 0..n {
        out.push(cur);
        cur = field.mul(cur, root);
    }
    out
}

/// Lexicographically smallest monic irreducible of degree `n` over `F_p`,
/// ordered by the base-p integer of its non-leading coefficients.
pub fn smallest_irreducible(p: u32, n: usize) -> Vec<u32> {
    if n == 1 {
        return vec![0, 1];
    }
    let total = (p as u128).pow(n as u32);
    for code in 0..total {
        let mut f = Vec::with_capacity(n + 1);
        let mut c = code;
        for _ in 0..n {
            f.push((c % p as u128) as u32);
            c /= p as u128;
        }
        f.push(1);
        if f[0] == 0 {
            continue;
        }
        if crate::fppoly::is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// Lookup tables for a small level (at most 256 elements), indexed by encoding.
#[derive(Clone, Debug)]
pub struct SmallField {
    pub size: usize,
    pub q: usize,
    pub degree: u32,
    pub p: u32,
    elems: Vec<FieldElem>,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
    frob: Vec<u8>,
}

impl SmallField {
    pub fn new(tower: &FieldTower, d: u32) -> Result<SmallField> {
        let f = tower.level(d)?;
        let size = f.size();
        if size > 256 {
            return Err(Error::BoundExceeded { what: "table field size".into(), size, bound: 256 });
        }
        let size = size as usize;
        let elems: Vec<FieldElem> = f.elements().collect();
        let idx = |x: FieldElem| x.encode(f.p) as u8;
        let mut add = vec![0u8; size * size];
        let mut mul = vec![0u8; size * size];
        for i in 0..size {
            for j in 0..size {
                add[i * size + j] = idx(f.add(elems[i], elems[j]));
                mul[i * size + j] = idx(f.mul(elems[i], elems[j]));
            }
        }
        let neg = elems.iter().map(|&x| idx(f.neg(x))).collect();
        let inv = elems
            .iter()
            .map(|&x| if x.is_zero() { 0 } else { idx(f.inv(x).unwrap()) })
            .collect();
        let frob = elems.iter().map(|&x| idx(f.frobenius(x, 1))).collect();
        Ok(SmallField { size, q: tower.q() as usize, degree: d, p: f.p, elems, add, mul, neg, inv, frob })
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        self.add[a as usize * self.size + b as usize]
    }
    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        self.add(a, self.neg[b as usize])
    }
    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.mul[a as usize * self.size + b as usize]
    }
    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        self.neg[a as usize]
    }
    /// Inverse; 0 maps to 0.
    #[inline]
    pub fn inv(&self, a: u8) -> u8 {
        self.inv[a as usize]
    }
    #[inline]
    pub fn frob(&self, a: u8) -> u8 {
        self.frob[a as usize]
    }
    pub fn frob_pow(&self, a: u8, j: u32) -> u8 {
        let mut x = a;
        for _ in 0..(j % self.degree) {
            x = self.frob(x);
        }
        x
    }
    pub fn pow(&self, a: u8, mut n: u64) -> u8 {
        let mut r = 1u8;
        let mut b = a;
        while n > 0 {
            if n & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            n >>= 1;
        }
        r
    }
    pub fn elem(&self, a: u8) -> FieldElem {
        self.elems[a as usize]
    }
    pub fn index(&self, x: FieldElem) -> u8 {
        x.encode(self.p) as u8
    }
    /// Absolute trace to `F_p` of a table element.
    pub fn abs_trace(&self, a: u8) -> u32 {
        let mut acc = 0u8;
        let mut y = a;
        let mut n = 1usize;
        let mut k = 0u32;
        while n < self.size {
            n *= self.p as usize;
            k += 1;
        }
        for _ in 0..k {
            acc = self.add(acc, y);
            y = self.pow(y, self.p as u64);
        }
        acc as u32 % self.p
    }
    /// Whether `a` is fixed by `x -> x^q`.
    pub fn is_base(&self, a: u8) -> bool {
        self.pow(a, self.q as u64) == a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f4_is_x2_x_1() {
        let t = make_tower(2, 1, &[1, 2]).unwrap();
        assert_eq!(t.field(2).modulus(), &[1, 1, 1]);
        let f = t.field(2);
        let w = f.monomial(1);
        assert_eq!(f.frobenius(w, 1), f.add(w, f.one()));
    }

    #[test]
    fn sigma_has_order_d() {
        let t = make_tower(3, 1, &[1, 2, 4]).unwrap();
        let f = t.field(4);
        let x = f.monomial(1);
        let mut y = x;
        for j in 1..=4 {
            y = f.frobenius(y, 1);
            assert_eq!(y == x, j == 4);
        }
        assert_eq!(f.frobenius(x, -1), f.frobenius(x, 3));
    }

    #[test]
    fn embeddings_commute() {
        let t = make_tower(2, 1, &[12]).unwrap();
        for (a, b, c) in [(1, 2, 4), (2, 4, 12), (2, 6, 12), (3, 6, 12), (1, 3, 12)] {
            let fa = t.field(a);
            for x in fa.elements().take(64) {
                let direct = t.embed(x, c).unwrap();
                let via = t.embed(t.embed(x, b).unwrap(), c).unwrap();
                assert_eq!(direct, via, "{a}->{b}->{c}");
            }
        }
    }

    #[test]
    fn incomparable_levels_have_no_embedding() {
        let t = make_tower(2, 1, &[1, 2, 3]).unwrap();
        let x = t.field(2).one();
        assert!(t.embed(x, 3).is_err());
        assert!(t.embed(t.field(1).one(), 3).is_ok());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(make_tower(4, 1, &[1, 2]).is_err());
        assert!(make_tower(2, 1, &[]).is_err());
    }

    #[test]
    fn trace_zero_set_sizes() {
        for q in [2u32, 3] {
            let t = make_tower(q, 1, &[2]).unwrap();
            let k = t.artin_schreier_trace_zero_set(2).unwrap();
            assert_eq!(k.len(), q as usize);
            assert!(k.iter().any(|x| x.is_zero()));
        }
        let t = make_tower(2, 1, &[2]).unwrap();
        let k = t.artin_schreier_trace_zero_set(2).unwrap();
        let f = t.field(2);
        assert_eq!(k, vec![f.zero(), f.one()]);
    }

    #[test]
    fn roots_match_scan() {
        let t = make_tower(3, 1, &[4]).unwrap();
        let f = t.field(4);
        // x^10 + x^9 + 2x + 1 style polynomial with a few roots
        let poly: Vec<FieldElem> = [1u32, 2, 0, 0, 0, 0, 0, 0, 0, 1, 1]
            .iter()
            .map(|&c| f.from_prime(c))
            .collect();
        let scan: Vec<FieldElem> = {
            let mut v: Vec<FieldElem> =
                f.elements().filter(|&x| f.eval_poly(&poly, x).is_zero()).collect();
            v.sort_by_key(|r| r.encode(3));
            v
        };
        assert_eq!(f.roots(&poly), scan);
    }

    #[test]
    fn restrict_inverts_embed() {
        let t = make_tower(3, 1, &[2, 4]).unwrap();
        let f2 = t.field(2);
        for x in f2.elements() {
            let y = t.embed(x, 4).unwrap();
            assert_eq!(t.restrict(y, 2).unwrap(), Some(x));
        }
        let g = t.field(4).monomial(1);
        assert_eq!(t.restrict(g, 2).unwrap(), None);
    }

    #[test]
    fn field_sizes_by_enumeration() {
        let t = make_tower(2, 1, &[1, 2, 4]).unwrap();
        for d in [1u32, 2, 4] {
            let f = t.field(d);
            let set: BTreeSet<u128> = f.elements().map(|x| x.encode(2)).collect();
            assert_eq!(set.len() as u128, 2u128.pow(d));
        }
    }
}
