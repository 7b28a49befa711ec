//! Characters of finite abelian groups, characters of the unramified torus,
//! and additive characters of `F_q((t))`.

use std::collections::HashMap;
use std::hash::Hash;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fftower::SmallField;
use crate::groups::{build_nonsplit_torus, GL2Elem, RElem, TorusData};

/// A character given by exponents on a group's canonical generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbelianChar {
    pub exps: Vec<u64>,
}

/// A finite abelian group presented by an explicit element list.
///
/// The canonical generators come from a greedy Sylow decomposition; every
/// element carries its discrete logarithm.
#[derive(Clone, Debug)]
pub struct AbelianGroup<T> {
    elements: Vec<T>,
    index: HashMap<T, usize>,
    basis: Vec<T>,
    orders: Vec<u64>,
    logs: Vec<Vec<u64>>,
    exponent: u64,
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl<T: Clone + Eq + Hash> AbelianGroup<T> {
    pub fn new(elements: Vec<T>, identity: T, mul: impl Fn(&T, &T) -> T) -> Result<AbelianGroup<T>> {
        let pow = |x: &T, n: u64| -> T {
            let mut r = identity.clone();
            let mut b = x.clone();
            let mut n = n;
            while n > 0 {
                if n & 1 == 1 {
                    r = mul(&r, &b);
                }
                b = mul(&b, &b);
                n >>= 1;
            }
            r
        };
        let index: HashMap<T, usize> = elements.iter().cloned().enumerate().map(|(i, x)| (x, i)).collect();
        if index.len() != elements.len() || !index.contains_key(&identity) {
            return Err(Error::Validation("abelian group: duplicate elements or missing identity".into()));
        }
        let order_of = |x: &T| -> u64 {
            let mut y = x.clone();
            let mut k = 1;
            while y != identity {
                y = mul(&y, x);
                k += 1;
            }
            k
        };
        let ords: Vec<u64> = elements.iter().map(order_of).collect();
        let n = elements.len() as u64;

        let mut basis = Vec::new();
        let mut orders = Vec::new();
        // (element, exponents on the basis built so far)
        let mut full: Vec<(T, Vec<u64>)> = vec![(identity.clone(), vec![])];
        for ell in prime_factors(n) {
            let sylow: Vec<&T> = elements
                .iter()
                .zip(&ords)
                .filter(|(_, &o)| {
                    let mut o = o;
                    while o % ell == 0 {
                        o /= ell;
                    }
                    o == 1
                })
                .map(|(x, _)| x)
                .collect();
            let mut h: Vec<(T, Vec<u64>)> = vec![(identity.clone(), vec![])];
            let mut h_set: HashMap<T, usize> = HashMap::from([(identity.clone(), 0)]);
            let mut local_basis = Vec::new();
            let mut local_orders = Vec::new();
            while h.len() < sylow.len() {
                let quotient_order = |x: &T| -> u64 {
                    let mut y = x.clone();
                    let mut k = 1;
                    while !h_set.contains_key(&y) {
                        y = pow(&y, ell);
                        k *= ell;
                    }
                    k
                };
                let qos: Vec<u64> = sylow.iter().map(|x| quotient_order(x)).collect();
                let best = *qos.iter().max().unwrap();
                let mut chosen = None;
                'outer: for (x, &qo) in sylow.iter().zip(&qos) {
                    if qo != best {
                        continue;
                    }
                    for (hh, _) in &h {
                        let z = mul(x, hh);
                        if pow(&z, best) == identity {
                            chosen = Some(z);
                            break 'outer;
                        }
                    }
                }
                let z = chosen.ok_or_else(|| Error::Inconsistent("abelian decomposition found no complement".into()))?;
                let mut next = Vec::with_capacity(h.len() * best as usize);
                let mut zk = identity.clone();
                for k in 0..best {
                    for (e, ex) in &h {
                        let mut ex2 = ex.clone();
                        ex2.push(k);
                        next.push((mul(&zk, e), ex2));
                    }
                    zk = mul(&zk, &z);
                }
                h = next;
                h_set = h.iter().enumerate().map(|(i, (x, _))| (x.clone(), i)).collect();
                local_basis.push(z);
                local_orders.push(best);
            }
            let mut next = Vec::with_capacity(full.len() * h.len());
            for (a, ea) in &full {
                for (b, eb) in &h {
                    let mut ex = ea.clone();
                    ex.extend_from_slice(eb);
                    next.push((mul(a, b), ex));
                }
            }
            full = next;
            basis.extend(local_basis);
            orders.extend(local_orders);
        }
        let mut logs: Vec<Option<Vec<u64>>> = vec![None; elements.len()];
        for (x, ex) in full {
            let i = *index
                .get(&x)
                .ok_or_else(|| Error::Inconsistent("abelian group: product left the element list".into()))?;
            logs[i] = Some(ex);
        }
        if logs.iter().any(Option::is_none) || orders.iter().product::<u64>() != n {
            return Err(Error::Inconsistent("abelian group: decomposition does not cover the group".into()));
        }
        let logs: Vec<Vec<u64>> = logs.into_iter().map(Option::unwrap).collect();
        let exponent = orders.iter().fold(1, |a, &b| a / gcd(a, b) * b);
        Ok(AbelianGroup { elements, index, basis, orders, logs, exponent })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[T] {
        &self.elements
    }

    pub fn basis(&self) -> &[T] {
        &self.basis
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn index_of(&self, x: &T) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn log(&self, x: &T) -> Option<&[u64]> {
        self.index.get(x).map(|&i| self.logs[i].as_slice())
    }

    pub fn trivial(&self) -> AbelianChar {
        AbelianChar { exps: vec![0; self.orders.len()] }
    }

    /// `chi(x) = zeta_E^k` with `E` the group exponent; returns `k`.
    pub fn eval(&self, chi: &AbelianChar, x: &T) -> u64 {
        let i = self.index[x];
        self.eval_index(chi, i)
    }

    pub fn eval_index(&self, chi: &AbelianChar, i: usize) -> u64 {
        let mut k = 0u64;
        for ((e, l), o) in chi.exps.iter().zip(&self.logs[i]).zip(&self.orders) {
            k = (k + (e * l % o) * (self.exponent / o)) % self.exponent;
        }
        k
    }

    /// All characters, in mixed-radix order (first generator fastest).
    pub fn characters(&self) -> Vec<AbelianChar> {
        let mut out = Vec::with_capacity(self.order());
        let mut cur = vec![0u64; self.orders.len()];
        loop {
            out.push(AbelianChar { exps: cur.clone() });
            let mut i = 0;
            loop {
                if i == cur.len() {
                    return out;
                }
                cur[i] += 1;
                if cur[i] < self.orders[i] {
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }

    pub fn char_mul(&self, a: &AbelianChar, b: &AbelianChar) -> AbelianChar {
        AbelianChar { exps: a.exps.iter().zip(&b.exps).zip(&self.orders).map(|((x, y), o)| (x + y) % o).collect() }
    }

    pub fn char_inv(&self, a: &AbelianChar) -> AbelianChar {
        AbelianChar { exps: a.exps.iter().zip(&self.orders).map(|(x, o)| (o - x % o) % o).collect() }
    }

    pub fn is_trivial(&self, a: &AbelianChar) -> bool {
        a.exps.iter().all(|&e| e == 0)
    }

    /// Order of the character.
    pub fn char_order(&self, a: &AbelianChar) -> u64 {
        a.exps
            .iter()
            .zip(&self.orders)
            .map(|(&e, &o)| o / gcd(e, o))
            .fold(1, |x, y| x / gcd(x, y) * y)
    }

    /// The character with `chi(g_i) = zeta_E^{values(g_i)}`; checks the values are compatible.
    pub fn char_from_generator_values(&self, values: &[u64]) -> Result<AbelianChar> {
        let mut exps = Vec::with_capacity(values.len());
        for ((&v, &o), _) in values.iter().zip(&self.orders).zip(&self.basis) {
            let step = self.exponent / o;
            if v % step != 0 {
                return Err(Error::Validation("generator value incompatible with its order".into()));
            }
            exps.push((v / step) % o);
        }
        Ok(AbelianChar { exps })
    }

    /// The character `x -> f(x)` (exponents mod `E`), if `f` is a homomorphism.
    pub fn char_from_fn(&self, f: impl Fn(&T) -> u64) -> Result<AbelianChar> {
        let values: Vec<u64> = self.basis.iter().map(|g| f(g) % self.exponent).collect();
        let chi = self.char_from_generator_values(&values)?;
        for x in &self.elements {
            if self.eval(&chi, x) != f(x) % self.exponent {
                return Err(Error::Validation("function is not a character".into()));
            }
        }
        Ok(chi)
    }

    /// Whether `a` and `b` agree on every element of `subset`.
    pub fn agree_on(&self, a: &AbelianChar, b: &AbelianChar, subset: &[T]) -> bool {
        subset.iter().all(|x| self.eval(a, x) == self.eval(b, x))
    }
}

/// A character of `E^* = <t> x U_E` at level `m`: exponents on the canonical
/// generators of `U_E / U_E^(m+1)` and `chi(t) = zeta_N^k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSpec {
    pub q: u32,
    pub m: usize,
    pub chi: AbelianChar,
    pub t_val: (u64, u64),
}

impl PairSpec {
    /// `g0:e0,g1:e1,...;t:k/N`.
    pub fn format(&self) -> String {
        let gens: Vec<String> = self.chi.exps.iter().enumerate().map(|(i, e)| format!("{i}:{e}")).collect();
        format!("{};t:{}/{}", gens.join(","), self.t_val.0, self.t_val.1)
    }
}

/// The torus `T_{w,m}` with its character group and the Frobenius action.
#[derive(Clone, Debug)]
pub struct TorusDual {
    pub torus: TorusData,
    pub group: AbelianGroup<RElem>,
    sigma_idx: Vec<usize>,
}

impl TorusDual {
    pub fn new(p: u32, e: u32, m: usize) -> Result<TorusDual> {
        let torus = build_nonsplit_torus(p, e, m)?;
        let els = torus.elements().to_vec();
        let t2 = torus.clone();
        let group = AbelianGroup::new(els.clone(), torus.one(), move |a, b| t2.mul(a, b))?;
        let sigma_idx = els.iter().map(|x| group.index_of(&torus.sigma(x)).unwrap()).collect();
        Ok(TorusDual { torus, group, sigma_idx })
    }

    pub fn q(&self) -> u32 {
        self.torus.km.q
    }

    pub fn m(&self) -> usize {
        self.torus.km.m
    }

    /// `chi^sigma = chi o sigma`.
    pub fn sigma_char(&self, chi: &AbelianChar) -> AbelianChar {
        let vals: Vec<u64> = self
            .group
            .basis()
            .iter()
            .map(|g| self.group.eval_index(chi, self.sigma_idx[self.group.index_of(g).unwrap()]))
            .collect();
        self.group.char_from_generator_values(&vals).expect("sigma permutes characters")
    }

    /// `chi(x)` as an exponent of `zeta_E`, `E` the exponent of `T_{w,m}`.
    pub fn eval(&self, chi: &AbelianChar, x: &RElem) -> u64 {
        self.group.eval(chi, x)
    }

    /// `chi~(x) = chi(c_s^{-1}(x))` for `x in H_m`.
    pub fn eval_tilde(&self, chi: &AbelianChar, x: &GL2Elem) -> Option<u64> {
        self.torus.c_s_inv(x).map(|t| self.group.eval(chi, &t))
    }

    /// Least `l` with `chi` trivial on `T^(l+1)`; 0 for characters trivial on `T^1`.
    pub fn level(&self, chi: &AbelianChar) -> usize {
        let m = self.m();
        let triv = self.group.trivial();
        (0..=m)
            .find(|&l| self.group.agree_on(chi, &triv, &self.torus.t_level(l + 1)))
            .unwrap_or(m)
    }

    pub fn is_admissible(&self, chi: &AbelianChar) -> bool {
        *chi != self.sigma_char(chi)
    }

    /// Admissible on the level-`m` units.
    pub fn is_minimal(&self, chi: &AbelianChar) -> bool {
        let m = self.m();
        let sub = self.torus.t_level(m);
        !self.group.agree_on(chi, &self.sigma_char(chi), &sub)
    }

    /// Whether `chi` restricted to `sub` factors through the norm, tested as
    /// triviality on the norm kernel inside `sub`.
    pub fn factors_through_norm_on(&self, chi: &AbelianChar, sub: &[RElem]) -> bool {
        let one = self.torus.km.ring().one();
        sub.iter()
            .filter(|x| self.torus.norm(x) == one)
            .all(|x| self.group.eval(chi, x) == 0)
    }

    /// Nontrivial on `T_{w,m,0} cap T_{w,m}^m`.
    pub fn is_generic(&self, chi: &AbelianChar) -> bool {
        let one = self.torus.km.ring().one();
        self.torus
            .t_level(self.m())
            .iter()
            .filter(|x| self.torus.norm(x) == one)
            .any(|x| self.group.eval(chi, x) != 0)
    }

    /// Smallest `i` such that `psi` agrees with `chi` or `chi^sigma` on `T^i`.
    pub fn i_of_psi(&self, psi: &AbelianChar, chi: &AbelianChar) -> usize {
        let cs = self.sigma_char(chi);
        let m = self.m();
        (0..=m + 1)
            .find(|&i| {
                let sub = self.torus.t_level(i);
                self.group.agree_on(psi, chi, &sub) || self.group.agree_on(psi, &cs, &sub)
            })
            .unwrap()
    }

    /// One representative per `sigma`-orbit of minimal characters of level `m`.
    pub fn minimal_classes(&self) -> Vec<AbelianChar> {
        let mut out = Vec::new();
        for chi in self.group.characters() {
            if !self.is_minimal(&chi) {
                continue;
            }
            let s = self.sigma_char(&chi);
            if chi <= s {
                out.push(chi);
            }
        }
        out
    }

    /// Parses `g0:e0,g1:e1,...;t:k/N`. Unlisted generators get exponent 0;
    /// a missing `t` part means `chi(t) = 1`.
    pub fn parse_chi(&self, spec: &str) -> Result<PairSpec> {
        let bad = |msg: &str| Error::Validation(format!("chi spec '{spec}': {msg}"));
        let (gens, tpart) = match spec.split_once(';') {
            Some((g, t)) => (g, Some(t)),
            None => (spec, None),
        };
        let mut exps = vec![0u64; self.group.orders().len()];
        for item in gens.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (g, e) = item.split_once(':').ok_or_else(|| bad("expected gI:E"))?;
            let g: usize = g.trim().trim_start_matches('g').parse().map_err(|_| bad("bad generator index"))?;
            let e: i64 = e.trim().parse().map_err(|_| bad("bad exponent"))?;
            let o = *self.group.orders().get(g).ok_or_else(|| bad("generator index out of range"))?;
            exps[g] = e.rem_euclid(o as i64) as u64;
        }
        let t_val = match tpart.map(str::trim).filter(|s| !s.is_empty()) {
            None => (0, 1),
            Some(t) => {
                let v = t.strip_prefix("t:").ok_or_else(|| bad("expected t:k/N"))?;
                let (k, n) = v.split_once('/').ok_or_else(|| bad("expected t:k/N"))?;
                let k: i64 = k.trim().parse().map_err(|_| bad("bad k"))?;
                let n: u64 = n.trim().parse().map_err(|_| bad("bad N"))?;
                if n == 0 {
                    return Err(bad("N must be positive"));
                }
                (k.rem_euclid(n as i64) as u64, n)
            }
        };
        Ok(PairSpec { q: self.q(), m: self.m(), chi: AbelianChar { exps }, t_val })
    }

    pub fn spec_for(&self, chi: &AbelianChar) -> PairSpec {
        PairSpec { q: self.q(), m: self.m(), chi: chi.clone(), t_val: (0, 1) }
    }
}

/// Additive character `x -> zeta_p^{Tr(res-free part of u x)}` of `F_q((t))`,
/// where `u` is a unit; `u = 1` is the standard choice.
#[derive(Clone, Debug)]
pub struct AddChar {
    pub f: SmallField,
    pub u: Vec<u8>,
}

impl AddChar {
    pub fn standard(f: SmallField, len: usize) -> AddChar {
        let mut u = vec![0u8; len.max(1)];
        u[0] = 1;
        AddChar { f, u }
    }

    /// Seed 0 is the standard character; other seeds draw a random unit.
    pub fn from_seed(f: SmallField, len: usize, seed: u64) -> AddChar {
        if seed == 0 {
            return Self::standard(f, len);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = f.size as u8;
        let mut u = vec![0u8; len.max(1)];
        u[0] = rng.gen_range(1..size.max(2));
        for c in u.iter_mut().skip(1) {
            *c = rng.gen_range(0..size);
        }
        AddChar { f, u }
    }

    /// `psi(y)` as an exponent mod `p`, for `y = sum_k coeffs[k] t^(start + k)`.
    pub fn eval(&self, start: i32, coeffs: &[u8]) -> u64 {
        let mut s = 0u8;
        for (k, &c) in coeffs.iter().enumerate() {
            let d = start + k as i32;
            if d > 0 {
                break;
            }
            if let Some(&u) = self.u.get((-d) as usize) {
                s = self.f.add(s, self.f.mul(u, c));
            }
        }
        (self.f.abs_trace(s) % self.f.p) as u64
    }
}

/// `a in t^(-m) M`, stored as `coeffs[j] = ` coefficient matrix of `t^(j - m)`, `j < m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LaurentMat {
    pub m: usize,
    pub coeffs: Vec<[u8; 4]>,
}

/// `psi_a(x) = psi(tr(a (x - 1)))` for `x in K_m^h`, as an exponent mod `p`.
pub fn psi_a(f: &SmallField, psi: &AddChar, a: &LaurentMat, x: &GL2Elem, h: usize) -> Result<u64> {
    let m = a.m;
    if a.coeffs.len() != m {
        return Err(Error::Validation("a must have m coefficient matrices".into()));
    }
    // y[d + m] = coefficient of t^d for d = -m..=0
    let mut y = vec![0u8; m + 1];
    for (j, aj) in a.coeffs.iter().enumerate() {
        for k in h..=m {
            let d = j as i64 - m as i64 + k as i64;
            if d > 0 {
                continue;
            }
            let xk = [
                if k == 0 { f.sub(x.x[0][0], 1) } else { x.x[0][k] },
                x.x[1][k],
                x.x[2][k],
                if k == 0 { f.sub(x.x[3][0], 1) } else { x.x[3][k] },
            ];
            // tr(A X) = a1 x1 + a2 x3 + a3 x2 + a4 x4
            let tr = f.add(
                f.add(f.mul(aj[0], xk[0]), f.mul(aj[1], xk[2])),
                f.add(f.mul(aj[2], xk[1]), f.mul(aj[3], xk[3])),
            );
            let idx = (d + m as i64) as usize;
            y[idx] = f.add(y[idx], tr);
        }
    }
    Ok(psi.eval(-(m as i32), &y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fftower::make_tower;
    use crate::groups::Km;

    fn cyclic(n: u64) -> AbelianGroup<u64> {
        AbelianGroup::new((0..n).collect(), 0, move |a, b| (a + b) % n).unwrap()
    }

    #[test]
    fn cyclic_and_products() {
        let g = cyclic(12);
        assert_eq!(g.orders().iter().product::<u64>(), 12);
        assert_eq!(g.exponent(), 12);
        let elems: Vec<(u64, u64)> = (0..4).flat_map(|a| (0..6).map(move |b| (a, b))).collect();
        let g = AbelianGroup::new(elems, (0, 0), |x, y| ((x.0 + y.0) % 4, (x.1 + y.1) % 6)).unwrap();
        assert_eq!(g.exponent(), 12);
        let mut o = g.orders().to_vec();
        o.sort();
        assert_eq!(o, vec![2, 3, 4]);
    }

    #[test]
    fn dual_orthogonality() {
        let elems: Vec<(u64, u64)> = (0..4).flat_map(|a| (0..2).map(move |b| (a, b))).collect();
        let g = AbelianGroup::new(elems, (0, 0), |x, y| ((x.0 + y.0) % 4, (x.1 + y.1) % 2)).unwrap();
        let chars = g.characters();
        assert_eq!(chars.len(), g.order());
        let e = g.exponent();
        for a in &chars {
            for b in &chars {
                let mut acc = crate::cyclo::CycloAcc::new(e);
                for x in g.elements() {
                    acc.add_root(g.eval(a, x) as i64 - g.eval(b, x) as i64, 1);
                }
                let v = acc.to_num().to_integer().unwrap();
                assert_eq!(v, if a == b { g.order() as i64 } else { 0 });
            }
        }
        for x in g.elements() {
            let mut acc = crate::cyclo::CycloAcc::new(e);
            for a in &chars {
                acc.add_root(g.eval(a, x) as i64, 1);
            }
            let v = acc.to_num().to_integer().unwrap();
            assert_eq!(v, if *x == (0, 0) { 8 } else { 0 });
        }
    }

    #[test]
    fn evaluation_is_a_homomorphism() {
        let td = TorusDual::new(2, 1, 2).unwrap();
        let g = &td.group;
        let e = g.exponent();
        let els = g.elements();
        for chi in g.characters().iter().step_by(5) {
            for a in els.iter().step_by(3) {
                for b in els.iter().step_by(7) {
                    let ab = td.torus.mul(a, b);
                    assert_eq!(g.eval(chi, &ab), (g.eval(chi, a) + g.eval(chi, b)) % e);
                }
            }
        }
    }

    #[test]
    fn torus_group_shapes() {
        for (p, m) in [(2u32, 1usize), (3, 1), (2, 2), (3, 2)] {
            let td = TorusDual::new(p, 1, m).unwrap();
            let q = p as u64;
            assert_eq!(td.group.order() as u64, (q * q - 1) * q.pow(2 * m as u32));
            assert_eq!(td.group.orders().iter().product::<u64>(), td.group.order() as u64);
        }
    }

    #[test]
    fn norm_kernel_at_top_level_has_q_elements() {
        for (p, m) in [(2u32, 1usize), (3, 1), (2, 2), (3, 2)] {
            let td = TorusDual::new(p, 1, m).unwrap();
            let one = td.torus.km.ring().one();
            let n = td.torus.t_level(m).iter().filter(|x| td.torus.norm(x) == one).count();
            assert_eq!(n, p as usize);
        }
    }

    #[test]
    fn norm_factoring_matches_sigma_invariance() {
        for (p, m) in [(2u32, 1usize), (3, 1), (2, 2)] {
            let td = TorusDual::new(p, 1, m).unwrap();
            let all = td.torus.elements().to_vec();
            let top = td.torus.t_level(m);
            for chi in td.group.characters() {
                assert_eq!(td.is_admissible(&chi), !td.factors_through_norm_on(&chi, &all));
                assert_eq!(td.is_minimal(&chi), !td.factors_through_norm_on(&chi, &top));
            }
        }
    }

    #[test]
    fn minimal_iff_generic() {
        for (p, m) in [(2u32, 1usize), (3, 1), (2, 2), (3, 2)] {
            let td = TorusDual::new(p, 1, m).unwrap();
            for chi in td.group.characters() {
                assert_eq!(td.is_minimal(&chi), td.is_generic(&chi));
                if td.is_minimal(&chi) {
                    assert!(td.is_admissible(&chi));
                    assert_eq!(td.level(&chi), m);
                }
                assert_eq!(td.level(&td.sigma_char(&chi)), td.level(&chi));
            }
        }
    }

    #[test]
    fn norm_factored_characters_are_not_admissible() {
        let td = TorusDual::new(3, 1, 1).unwrap();
        let km = &td.torus.km;
        let units: Vec<RElem> = km.ring().units().collect();
        let r = km.ring().clone();
        let base = AbelianGroup::new(units, r.one(), move |a, b| r.mul(a, b)).unwrap();
        for phi in base.characters() {
            let e_t = td.group.exponent();
            let e_b = base.exponent();
            let chi = td
                .group
                .char_from_fn(|x| base.eval(&phi, &td.torus.norm(x)) * (e_t / e_b))
                .unwrap();
            assert!(!td.is_admissible(&chi));
        }
    }

    #[test]
    fn level_and_i_of_psi() {
        let td = TorusDual::new(2, 1, 1).unwrap();
        let g = &td.group;
        assert_eq!(td.level(&g.trivial()), 0);
        let chis = td.minimal_classes();
        assert!(!chis.is_empty());
        for chi in &chis {
            assert_eq!(td.i_of_psi(chi, chi), 0);
            assert_eq!(td.i_of_psi(&td.sigma_char(chi), chi), 0);
            // twist by a character nontrivial on T^m
            for eta in g.characters() {
                let top = td.torus.t_level(1);
                let triv = g.trivial();
                if g.agree_on(&eta, &triv, &top) {
                    continue;
                }
                let psi = g.char_mul(chi, &eta);
                if psi == td.sigma_char(chi) {
                    continue;
                }
                assert!(td.i_of_psi(&psi, chi) >= 1);
            }
        }
    }

    #[test]
    fn chi_spec_roundtrip() {
        let td = TorusDual::new(3, 1, 1).unwrap();
        for chi in td.minimal_classes().iter().take(5) {
            let spec = PairSpec { q: 3, m: 1, chi: chi.clone(), t_val: (1, 4) };
            assert_eq!(td.parse_chi(&spec.format()).unwrap(), spec);
        }
        let s = td.parse_chi("0:1").unwrap();
        assert_eq!(s.t_val, (0, 1));
        assert!(td.parse_chi("9:1").is_err());
        assert!(td.parse_chi("0:1;t:1/0").is_err());
        assert!(td.parse_chi("0=1").is_err());
    }

    #[test]
    fn psi_a_examples() {
        let km = Km::new(3, 1, 1).unwrap();
        let tower = make_tower(3, 1, &[1]).unwrap();
        let f = SmallField::new(&tower, 1).unwrap();
        let psi = AddChar::standard(f.clone(), 2);
        let zero = LaurentMat { m: 1, coeffs: vec![[0; 4]] };
        let id = LaurentMat { m: 1, coeffs: vec![[1, 0, 0, 1]] };
        let k1 = km.congruence_subgroup(1);
        for x in &k1 {
            assert_eq!(psi_a(&f, &psi, &zero, x, 1).unwrap(), 0);
            let expect = (x.x[0][1] as u64 + x.x[3][1] as u64) % 3;
            assert_eq!(psi_a(&f, &psi, &id, x, 1).unwrap(), expect);
        }
        // a -> psi_a is injective on t^{-1}M / M at q = 2
        let km = Km::new(2, 1, 1).unwrap();
        let tower = make_tower(2, 1, &[1]).unwrap();
        let f = SmallField::new(&tower, 1).unwrap();
        let psi = AddChar::standard(f.clone(), 2);
        let k1 = km.congruence_subgroup(1);
        let mut seen = std::collections::HashSet::new();
        for c in 0..16u8 {
            let a = LaurentMat { m: 1, coeffs: vec![[c & 1, (c >> 1) & 1, (c >> 2) & 1, (c >> 3) & 1]] };
            let vals: Vec<u64> = k1.iter().map(|x| psi_a(&f, &psi, &a, x, 1).unwrap()).collect();
            assert!(seen.insert(vals));
        }
    }
}
