//! `GL_2` over `F_q[t]/t^(m+1)`, its standard subgroups and the non-split
//! torus `H_m` with the identification `c_s : T_{w,m} -> H_m`.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::fftower::{make_tower, Field, FieldElem, FieldTower, SmallField};
use crate::trunc::TruncElem;

/// Largest supported precision `m + 1`.
pub const MAX_PREC: usize = 6;

/// Coefficient vector over a table field; unused tail entries are zero.
pub type RElem = [u8; MAX_PREC];

/// `F_{q^d}[t]/t^prec` with table-driven coefficient arithmetic.
#[derive(Clone, Debug)]
pub struct TruncRing {
    pub f: SmallField,
    pub prec: usize,
}

impl TruncRing {
    pub fn new(f: SmallField, prec: usize) -> Result<TruncRing> {
        if prec == 0 || prec > MAX_PREC {
            return Err(Error::Validation(format!("precision {prec} outside 1..={MAX_PREC}")));
        }
        Ok(TruncRing { f, prec })
    }

    pub fn zero(&self) -> RElem {
        [0; MAX_PREC]
    }

    pub fn one(&self) -> RElem {
        self.constant(1)
    }

    pub fn constant(&self, c: u8) -> RElem {
        let mut z = [0; MAX_PREC];
        z[0] = c;
        z
    }

    /// `c * t^k`.
    pub fn monomial(&self, c: u8, k: usize) -> RElem {
        let mut z = [0; MAX_PREC];
        if k < self.prec {
            z[k] = c;
        }
        z
    }

    pub fn add(&self, a: &RElem, b: &RElem) -> RElem {
        let mut z = [0; MAX_PREC];
        for i in 0..self.prec {
            z[i] = self.f.add(a[i], b[i]);
        }
        z
    }

    pub fn sub(&self, a: &RElem, b: &RElem) -> RElem {
        let mut z = [0; MAX_PREC];
        for i in 0..self.prec {
            z[i] = self.f.sub(a[i], b[i]);
        }
        z
    }

    pub fn neg(&self, a: &RElem) -> RElem {
        let mut z = [0; MAX_PREC];
        for i in 0..self.prec {
            z[i] = self.f.neg(a[i]);
        }
        z
    }

    pub fn mul(&self, a: &RElem, b: &RElem) -> RElem {
        let mut z = [0; MAX_PREC];
        for i in 0..self.prec {
            if a[i] == 0 {
                continue;
            }
            for j in 0..(self.prec - i) {
                z[i + j] = self.f.add(z[i + j], self.f.mul(a[i], b[j]));
            }
        }
        z
    }

    pub fn is_unit(&self, a: &RElem) -> bool {
        a[0] != 0
    }

    pub fn inv(&self, a: &RElem) -> Result<RElem> {
        if !self.is_unit(a) {
            return Err(Error::NonUnit("ring element with zero constant term".into()));
        }
        let c0 = self.f.inv(a[0]);
        let mut z = [0; MAX_PREC];
        z[0] = c0;
        for n in 1..self.prec {
            let mut s = 0;
            for i in 1..=n {
                s = self.f.add(s, self.f.mul(a[i], z[n - i]));
            }
            z[n] = self.f.neg(self.f.mul(s, c0));
        }
        Ok(z)
    }

    pub fn valuation(&self, a: &RElem) -> usize {
        (0..self.prec).find(|&i| a[i] != 0).unwrap_or(self.prec)
    }

    pub fn sigma(&self, a: &RElem, j: u32) -> RElem {
        let mut z = [0; MAX_PREC];
        for i in 0..self.prec {
            z[i] = self.f.frob_pow(a[i], j);
        }
        z
    }

    pub fn truncate(&self, a: &RElem, r: usize) -> RElem {
        let mut z = *a;
        for c in z.iter_mut().skip(r) {
            *c = 0;
        }
        z
    }

    pub fn size(&self) -> u64 {
        (self.f.size as u64).pow(self.prec as u32)
    }

    pub fn encode(&self, a: &RElem) -> u64 {
        let mut n = 0u64;
        for i in (0..self.prec).rev() {
            n = n * self.f.size as u64 + a[i] as u64;
        }
        n
    }

    pub fn decode(&self, mut n: u64) -> RElem {
        let mut z = [0; MAX_PREC];
        for c in z.iter_mut().take(self.prec) {
            *c = (n % self.f.size as u64) as u8;
            n /= self.f.size as u64;
        }
        z
    }

    pub fn elements(&self) -> impl Iterator<Item = RElem> + '_ {
        (0..self.size()).map(move |n| self.decode(n))
    }

    pub fn units(&self) -> impl Iterator<Item = RElem> + '_ {
        self.elements().filter(move |a| self.is_unit(a))
    }

    /// Converts to a [`TruncElem`] over the tower field with the same tables.
    pub fn to_trunc(&self, field: &Field, a: &RElem) -> TruncElem {
        TruncElem::from_coeffs((0..self.prec).map(|i| field.decode(a[i] as u128)).collect())
    }
}

/// A 2x2 matrix `[[x1, x2], [x3, x4]]` over a [`TruncRing`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GL2Elem {
    pub x: [RElem; 4],
}

/// Matrix arithmetic over a truncated ring.
#[derive(Clone, Debug)]
pub struct MatRing {
    pub ring: TruncRing,
}

impl MatRing {
    pub fn identity(&self) -> GL2Elem {
        let r = &self.ring;
        GL2Elem { x: [r.one(), r.zero(), r.zero(), r.one()] }
    }

    pub fn from_entries(&self, x1: RElem, x2: RElem, x3: RElem, x4: RElem) -> GL2Elem {
        GL2Elem { x: [x1, x2, x3, x4] }
    }

    pub fn scalar(&self, a: &RElem) -> GL2Elem {
        GL2Elem { x: [*a, self.ring.zero(), self.ring.zero(), *a] }
    }

    pub fn mul(&self, a: &GL2Elem, b: &GL2Elem) -> GL2Elem {
        let r = &self.ring;
        let [a1, a2, a3, a4] = &a.x;
        let [b1, b2, b3, b4] = &b.x;
        GL2Elem {
            x: [
                r.add(&r.mul(a1, b1), &r.mul(a2, b3)),
                r.add(&r.mul(a1, b2), &r.mul(a2, b4)),
                r.add(&r.mul(a3, b1), &r.mul(a4, b3)),
                r.add(&r.mul(a3, b2), &r.mul(a4, b4)),
            ],
        }
    }

    pub fn det(&self, a: &GL2Elem) -> RElem {
        let r = &self.ring;
        r.sub(&r.mul(&a.x[0], &a.x[3]), &r.mul(&a.x[1], &a.x[2]))
    }

    pub fn is_invertible(&self, a: &GL2Elem) -> bool {
        self.ring.is_unit(&self.det(a))
    }

    pub fn inv(&self, a: &GL2Elem) -> Result<GL2Elem> {
        let r = &self.ring;
        let d = r.inv(&self.det(a))?;
        Ok(GL2Elem {
            x: [
                r.mul(&d, &a.x[3]),
                r.mul(&d, &r.neg(&a.x[1])),
                r.mul(&d, &r.neg(&a.x[2])),
                r.mul(&d, &a.x[0]),
            ],
        })
    }

    /// `g x g^{-1}`.
    pub fn conj(&self, g: &GL2Elem, x: &GL2Elem) -> GL2Elem {
        self.mul(&self.mul(g, x), &self.inv(g).expect("invertible conjugator"))
    }

    pub fn sigma(&self, a: &GL2Elem, j: u32) -> GL2Elem {
        let r = &self.ring;
        GL2Elem { x: [r.sigma(&a.x[0], j), r.sigma(&a.x[1], j), r.sigma(&a.x[2], j), r.sigma(&a.x[3], j)] }
    }

    pub fn is_scalar(&self, a: &GL2Elem) -> bool {
        a.x[1] == self.ring.zero() && a.x[2] == self.ring.zero() && a.x[0] == a.x[3]
    }

    pub fn truncate(&self, a: &GL2Elem, r: usize) -> GL2Elem {
        let ring = &self.ring;
        GL2Elem { x: a.x.map(|e| ring.truncate(&e, r)) }
    }

    /// Canonical encoding: base-|F| digits of `x1, x2, x3, x4` (entry `x1` most significant).
    pub fn encode(&self, a: &GL2Elem) -> u64 {
        let n = self.ring.size();
        a.x.iter().fold(0u64, |acc, e| acc * n + self.ring.encode(e))
    }

    pub fn decode(&self, mut c: u64) -> GL2Elem {
        let n = self.ring.size();
        let mut x = [[0u8; MAX_PREC]; 4];
        for i in (0..4).rev() {
            x[i] = self.ring.decode(c % n);
            c /= n;
        }
        GL2Elem { x }
    }

    /// Largest `l` with `a = 1 mod t^l`; `prec` for the identity.
    pub fn level(&self, a: &GL2Elem) -> usize {
        let r = &self.ring;
        let diff = [r.sub(&a.x[0], &r.one()), a.x[1], a.x[2], r.sub(&a.x[3], &r.one())];
        diff.iter().map(|e| r.valuation(e)).min().unwrap()
    }

    /// Smallest `N >= 1` with `a^N` scalar.
    pub fn projective_order(&self, a: &GL2Elem) -> u64 {
        let mut p = *a;
        let mut n = 1;
        while !self.is_scalar(&p) {
            p = self.mul(&p, a);
            n += 1;
        }
        n
    }
}

/// `K_m = GL_2(F_q[t]/t^(m+1))` together with its tower and tables.
#[derive(Clone, Debug)]
pub struct Km {
    pub p: u32,
    pub e: u32,
    pub q: u32,
    pub m: usize,
    pub tower: FieldTower,
    pub mat: MatRing,
}

impl Km {
    pub fn new(p: u32, e: u32, m: usize) -> Result<Km> {
        let tower = make_tower(p, e, &[1, 2])?;
        let f = SmallField::new(&tower, 1)?;
        let q = p.pow(e);
        let ring = TruncRing::new(f, m + 1)?;
        let bits = 4.0 * (m as f64 + 1.0) * (q as f64).log2();
        if bits > 63.0 {
            return Err(Error::BoundExceeded {
                what: "matrix encoding bits".into(),
                size: bits.ceil() as u128,
                bound: 63,
            });
        }
        Ok(Km { p, e, q, m, tower, mat: MatRing { ring } })
    }

    pub fn ring(&self) -> &TruncRing {
        &self.mat.ring
    }

    pub fn order(&self) -> u64 {
        let q = self.q as u64;
        (q * q - 1) * (q * q - q) * q.pow(4 * self.m as u32)
    }

    /// All elements of `K_m`, in encoding order.
    pub fn elements(&self, bound: u64) -> Result<Vec<GL2Elem>> {
        let n = self.order();
        if n > bound {
            return Err(Error::BoundExceeded { what: "|K_m|".into(), size: n as u128, bound: bound as u128 });
        }
        let total = self.mat.ring.size().pow(4);
        Ok((0..total)
            .map(|c| self.mat.decode(c))
            .filter(|g| self.mat.is_invertible(g))
            .collect())
    }

    /// `K_m^i`: elements congruent to 1 modulo `t^i`.
    pub fn congruence_subgroup(&self, i: usize) -> Vec<GL2Elem> {
        let r = self.ring();
        let q = self.q as u64;
        let free = (self.m + 1).saturating_sub(i);
        let size = q.pow(free as u32);
        let shifted = |c: u64| -> RElem {
            let mut z = r.zero();
            let mut c = c;
            for k in i..=self.m {
                z[k] = (c % q) as u8;
                c /= q;
            }
            z
        };
        let mut out = Vec::new();
        for a in 0..size {
            for b in 0..size {
                for c in 0..size {
                    for d in 0..size {
                        let g = GL2Elem {
                            x: [r.add(&r.one(), &shifted(a)), shifted(b), shifted(c), r.add(&r.one(), &shifted(d))],
                        };
                        if self.mat.is_invertible(&g) {
                            out.push(g);
                        }
                    }
                }
            }
        }
        out.sort_by_key(|g| self.mat.encode(g));
        out
    }

    /// `N_m = [[1, u], [0, 1]]`.
    pub fn unipotent(&self, u: &RElem) -> GL2Elem {
        let r = self.ring();
        GL2Elem { x: [r.one(), *u, r.zero(), r.one()] }
    }

    pub fn n_m(&self) -> Vec<GL2Elem> {
        self.ring().elements().map(|u| self.unipotent(&u)).collect()
    }

    /// `N_m^i`.
    pub fn n_m_level(&self, i: usize) -> Vec<GL2Elem> {
        self.ring()
            .elements()
            .filter(|u| self.ring().valuation(u) >= i)
            .map(|u| self.unipotent(&u))
            .collect()
    }

    /// Center: scalar matrices.
    pub fn z_m(&self) -> Vec<GL2Elem> {
        self.ring().units().map(|u| self.mat.scalar(&u)).collect()
    }

    /// A generating set: elementary matrices and diagonal units.
    pub fn generators(&self) -> Vec<GL2Elem> {
        let r = self.ring();
        let mut gens = Vec::new();
        for k in 0..=self.m {
            for c in 1..self.q as u8 {
                let u = r.monomial(c, k);
                gens.push(self.unipotent(&u));
                gens.push(GL2Elem { x: [r.one(), r.zero(), u, r.one()] });
                let d = if k == 0 { r.constant(c) } else { r.add(&r.one(), &u) };
                gens.push(GL2Elem { x: [d, r.zero(), r.zero(), r.one()] });
                gens.push(GL2Elem { x: [r.one(), r.zero(), r.zero(), d] });
            }
        }
        gens.sort_by_key(|g| self.mat.encode(g));
        gens.dedup();
        gens
    }

    pub fn element_level(&self, x: &GL2Elem) -> usize {
        self.mat.level(x)
    }
}

/// Conjugacy classes of the group generated by `gens`, restricted to the
/// orbits of `elements` (which must be a union of classes). Returns
/// `(least representative, class size)` sorted by representative encoding.
pub fn conjugacy_classes(
    mat: &MatRing,
    elements: &[GL2Elem],
    gens: &[GL2Elem],
    bound: usize,
) -> Result<Vec<(GL2Elem, usize)>> {
    if elements.len() > bound {
        return Err(Error::BoundExceeded {
            what: "group size for class computation".into(),
            size: elements.len() as u128,
            bound: bound as u128,
        });
    }
    let gens_inv: Vec<GL2Elem> = gens.iter().map(|g| mat.inv(g)).collect::<Result<_>>()?;
    let mut seen: HashSet<GL2Elem> = HashSet::with_capacity(elements.len());
    let mut out = Vec::new();
    for &x in elements {
        if seen.contains(&x) {
            continue;
        }
        let mut orbit = vec![x];
        seen.insert(x);
        let mut queue = VecDeque::from([x]);
        while let Some(y) = queue.pop_front() {
            for (g, gi) in gens.iter().zip(&gens_inv) {
                let z = mat.mul(&mat.mul(g, &y), gi);
                if seen.insert(z) {
                    orbit.push(z);
                    queue.push_back(z);
                }
            }
        }
        let rep = *orbit.iter().min_by_key(|g| mat.encode(g)).unwrap();
        out.push((rep, orbit.len()));
    }
    out.sort_by_key(|(g, _)| mat.encode(g));
    Ok(out)
}

/// Class representatives with sizes, and the class index of every element.
pub type ClassIndex = (Vec<(GL2Elem, usize)>, HashMap<GL2Elem, usize>);

/// Class lookup: element -> class index.
pub fn class_index(
    mat: &MatRing,
    elements: &[GL2Elem],
    gens: &[GL2Elem],
) -> Result<ClassIndex> {
    let classes = conjugacy_classes(mat, elements, gens, usize::MAX)?;
    let gens_inv: Vec<GL2Elem> = gens.iter().map(|g| mat.inv(g)).collect::<Result<_>>()?;
    let mut idx = HashMap::with_capacity(elements.len());
    for (i, (rep, _)) in classes.iter().enumerate() {
        idx.insert(*rep, i);
        let mut queue = VecDeque::from([*rep]);
        while let Some(y) = queue.pop_front() {
            for (g, gi) in gens.iter().zip(&gens_inv) {
                let z = mat.mul(&mat.mul(g, &y), gi);
                if let std::collections::hash_map::Entry::Vacant(v) = idx.entry(z) {
                    v.insert(i);
                    queue.push_back(z);
                }
            }
        }
    }
    Ok((classes, idx))
}

/// The unramified torus `T_{w,m} = (F_{q^2}[t]/t^(m+1))^*` and its image `H_m`.
#[derive(Clone, Debug)]
pub struct TorusData {
    pub km: Km,
    /// Units of `F_{q^2}[t]/t^(m+1)`.
    pub t_ring: TruncRing,
    /// Parameter of the defining quadratic (`T^2 - D` or `T^2 + T + D`), as an `F_q` index.
    pub d: u8,
    /// `beta` entries over `F_q`, row-major.
    pub beta: [u8; 4],
    /// Root of the defining quadratic in `F_{q^2}`.
    pub omega: u8,
    fq_to_fq2: Vec<u8>,
    fq2_to_fq: Vec<Option<u8>>,
    // z = a + b*omega
    decomp: Vec<(u8, u8)>,
    elements: Vec<RElem>,
    index: HashMap<RElem, usize>,
}

impl TorusData {
    pub fn elements(&self) -> &[RElem] {
        &self.elements
    }

    pub fn index_of(&self, t: &RElem) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn mul(&self, a: &RElem, b: &RElem) -> RElem {
        self.t_ring.mul(a, b)
    }

    pub fn inv(&self, a: &RElem) -> RElem {
        self.t_ring.inv(a).expect("torus element is a unit")
    }

    pub fn sigma(&self, a: &RElem) -> RElem {
        self.t_ring.sigma(a, 1)
    }

    pub fn one(&self) -> RElem {
        self.t_ring.one()
    }

    /// Embeds an `F_q`-ring element.
    pub fn from_base(&self, a: &RElem) -> RElem {
        let mut z = [0; MAX_PREC];
        for i in 0..self.t_ring.prec {
            z[i] = self.fq_to_fq2[a[i] as usize];
        }
        z
    }

    /// Restriction to `F_q` coefficients, if they all lie there.
    pub fn to_base(&self, a: &RElem) -> Option<RElem> {
        let mut z = [0; MAX_PREC];
        for i in 0..self.t_ring.prec {
            z[i] = self.fq2_to_fq[a[i] as usize]?;
        }
        Some(z)
    }

    pub fn fq_to_fq2(&self, c: u8) -> u8 {
        self.fq_to_fq2[c as usize]
    }

    pub fn fq2_to_fq(&self, c: u8) -> Option<u8> {
        self.fq2_to_fq[c as usize]
    }

    /// `det` on `T_{w,m}`, i.e. `tau * sigma(tau)`, as an element of `F_q[t]/t^(m+1)`.
    pub fn norm(&self, a: &RElem) -> RElem {
        self.to_base(&self.mul(a, &self.sigma(a))).expect("norm lands in F_q")
    }

    /// `T_{w,m,0}`.
    pub fn t0(&self) -> Vec<RElem> {
        let one = self.km.ring().one();
        self.elements.iter().filter(|t| self.norm(t) == one).copied().collect()
    }

    /// `T_{w,m}^i`.
    pub fn t_level(&self, i: usize) -> Vec<RElem> {
        self.elements.iter().filter(|t| self.level(t) >= i).copied().collect()
    }

    /// Largest `i` with `tau = 1 mod t^i`.
    pub fn level(&self, a: &RElem) -> usize {
        self.t_ring.valuation(&self.t_ring.sub(a, &self.t_ring.one()))
    }

    /// `c_s(a + b omega) = a I + b beta`.
    pub fn c_s(&self, tau: &RElem) -> GL2Elem {
        let r = self.km.ring();
        let (mut a, mut b) = ([0u8; MAX_PREC], [0u8; MAX_PREC]);
        for i in 0..r.prec {
            let (x, y) = self.decomp[tau[i] as usize];
            a[i] = x;
            b[i] = y;
        }
        let sc = |c: u8| r.constant(c);
        GL2Elem {
            x: [
                r.add(&a, &r.mul(&b, &sc(self.beta[0]))),
                r.mul(&b, &sc(self.beta[1])),
                r.mul(&b, &sc(self.beta[2])),
                r.add(&a, &r.mul(&b, &sc(self.beta[3]))),
            ],
        }
    }

    /// Inverse of `c_s` on `H_m`.
    pub fn c_s_inv(&self, x: &GL2Elem) -> Option<RElem> {
        let r = self.km.ring();
        let f = &r.f;
        // x3 = b * beta21, x1 = a + b * beta11
        let inv21 = f.inv(self.beta[2]);
        let b = r.mul(&x.x[2], &r.constant(inv21));
        let a = r.sub(&x.x[0], &r.mul(&b, &r.constant(self.beta[0])));
        let mut tau = [0u8; MAX_PREC];
        let f2 = &self.t_ring.f;
        for i in 0..r.prec {
            tau[i] = f2.add(self.fq_to_fq2[a[i] as usize], f2.mul(self.fq_to_fq2[b[i] as usize], self.omega));
        }
        if self.c_s(&tau) == *x && self.t_ring.is_unit(&tau) {
            Some(tau)
        } else {
            None
        }
    }

    /// `H_m = c_s(T_{w,m})`, in torus order.
    pub fn h_m(&self) -> Vec<GL2Elem> {
        self.elements.iter().map(|t| self.c_s(t)).collect()
    }

    /// `H_m^i`.
    pub fn h_level(&self, i: usize) -> Vec<GL2Elem> {
        self.t_level(i).iter().map(|t| self.c_s(t)).collect()
    }

    /// The change of basis `s` over `F_{q^2}` whose columns are eigenvectors of `beta`.
    pub fn s_matrix(&self) -> [u8; 4] {
        let f2 = &self.t_ring.f;
        let up = |c: u8| self.fq_to_fq2[c as usize];
        let so = f2.frob(self.omega);
        if self.km.p == 2 {
            // beta (v1, v2) = omega (v1, v2) with v = (D, omega)
            [up(self.d), up(self.d), self.omega, so]
        } else {
            [1, 1, self.omega, so]
        }
    }

    /// `s diag(tau, sigma(tau)) s^{-1}` computed over `F_{q^2}[t]/t^(m+1)`.
    pub fn c_s_by_conjugation(&self, tau: &RElem) -> Result<GL2Elem> {
        let m2 = MatRing { ring: self.t_ring.clone() };
        let s = self.s_matrix();
        let r = &self.t_ring;
        let s = GL2Elem { x: [r.constant(s[0]), r.constant(s[1]), r.constant(s[2]), r.constant(s[3])] };
        let d = GL2Elem { x: [*tau, r.zero(), r.zero(), r.sigma(tau, 1)] };
        let y = m2.mul(&m2.mul(&s, &d), &m2.inv(&s)?);
        let mut out = [[0u8; MAX_PREC]; 4];
        for k in 0..4 {
            out[k] = self
                .to_base(&y.x[k])
                .ok_or_else(|| Error::Inconsistent("c_s left K_m".into()))?;
        }
        Ok(GL2Elem { x: out })
    }

    /// Whether `x in H_m \ {1}` is maximal: no central translate has a larger level.
    pub fn is_maximal(&self, x: &GL2Elem) -> Result<bool> {
        let mat = &self.km.mat;
        if *x == mat.identity() {
            return Err(Error::Validation("the identity has no maximality".into()));
        }
        let l = mat.level(x);
        Ok(self.km.z_m().iter().all(|z| mat.level(&mat.mul(z, x)) <= l))
    }
}

/// Builds `T_{w,m}`, `beta` and `c_s` for `q = p^e`.
pub fn build_nonsplit_torus(p: u32, e: u32, m: usize) -> Result<TorusData> {
    let km = Km::new(p, e, m)?;
    let tower = &km.tower;
    let f1 = SmallField::new(tower, 1)?;
    let f2 = SmallField::new(tower, 2)?;
    let q = f1.size;
    let fq_to_fq2: Vec<u8> = (0..q as u8)
        .map(|c| f2.index(tower.embed(f1.elem(c), 2).unwrap()))
        .collect();
    let mut fq2_to_fq = vec![None; f2.size];
    for (c, &img) in fq_to_fq2.iter().enumerate() {
        fq2_to_fq[img as usize] = Some(c as u8);
    }
    // canonical quadratic
    let (d, beta, poly): (u8, [u8; 4], Box<dyn Fn(u8) -> u8>) = if p == 2 {
        // T^2 + T + D irreducible: no root in F_q
        let d = (1..q as u8)
            .find(|&d| (0..q as u8).all(|x| f1.add(f1.add(f1.mul(x, x), x), d) != 0))
            .ok_or_else(|| Error::Inconsistent("no irreducible T^2+T+D".into()))?;
        let dd = fq_to_fq2[d as usize];
        let f2c = f2.clone();
        (d, [0, d, 1, 1], Box::new(move |x| f2c.add(f2c.add(f2c.mul(x, x), x), dd)))
    } else {
        let d = (1..q as u8)
            .find(|&d| (0..q as u8).all(|x| f1.mul(x, x) != d))
            .ok_or_else(|| Error::Inconsistent("no non-square in F_q".into()))?;
        let dd = fq_to_fq2[d as usize];
        let f2c = f2.clone();
        (d, [0, 1, d, 0], Box::new(move |x| f2c.sub(f2c.mul(x, x), dd)))
    };
    let omega = (0..f2.size as u16)
        .map(|x| x as u8)
        .find(|&x| poly(x) == 0)
        .ok_or_else(|| Error::Inconsistent("quadratic has no root in F_{q^2}".into()))?;
    let mut decomp = vec![(0u8, 0u8); f2.size];
    for a in 0..q as u8 {
        for b in 0..q as u8 {
            let z = f2.add(fq_to_fq2[a as usize], f2.mul(fq_to_fq2[b as usize], omega));
            decomp[z as usize] = (a, b);
        }
    }
    let t_ring = TruncRing::new(f2, m + 1)?;
    let elements: Vec<RElem> = t_ring.units().collect();
    let index = elements.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    Ok(TorusData { km, t_ring, d, beta, omega, fq_to_fq2, fq2_to_fq, decomp, elements, index })
}

/// `p_x(tau)` in `F_{q^2}[t]/t^(m - l + 1)` for `x` of level `l` and `tau` in `T^l`.
///
/// Computed from a lift of `x` and `tau` to precision `m + l + 1`; the
/// `lift` argument supplies the extra coefficients of the four entries and of
/// `tau` (zero when `None`).
pub fn char_poly_map(
    torus: &TorusData,
    x: &GL2Elem,
    tau: &RElem,
    lift: Option<&[Vec<u8>; 5]>,
) -> Result<TruncElem> {
    let km = &torus.km;
    let m = km.m;
    let l = km.mat.level(x);
    if l > m {
        return Err(Error::Validation("p_x needs x != 1".into()));
    }
    if torus.level(tau) < l {
        return Err(Error::Validation("tau must lie in T^l".into()));
    }
    let f2 = torus.km.tower.field(2);
    let prec = m + l + 1;
    let r1 = km.ring();
    let ext = |base: &[u8], extra: Option<&Vec<u8>>, up: bool| -> TruncElem {
        let mut c: Vec<FieldElem> = (0..=m)
            .map(|i| {
                let idx = if up { torus.fq_to_fq2(base[i]) } else { base[i] };
                f2.decode(idx as u128)
            })
            .collect();
        for k in 0..l {
            let v = extra.and_then(|e| e.get(k).copied()).unwrap_or(0);
            let idx = if up { torus.fq_to_fq2(v % r1.f.size as u8) } else { v % torus.t_ring.f.size as u8 };
            c.push(f2.decode(idx as u128));
        }
        TruncElem::from_coeffs(c)
    };
    let xs: Vec<TruncElem> = (0..4).map(|k| ext(&x.x[k], lift.map(|e| &e[k]), true)).collect();
    let lam = ext(tau, lift.map(|e| &e[4]), false);
    let a = lam.sub(f2, &xs[0]);
    let d = lam.sub(f2, &xs[3]);
    let det = a.mul(f2, &d).sub(f2, &xs[1].mul(f2, &xs[2]));
    debug_assert_eq!(det.prec(), prec);
    let out = det.shift_down(2 * l)?;
    Ok(out.truncate(m - l + 1))
}

/// Point `(a, C, A)` of `Y_v^m` with coefficients in a tower field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarietyPoint {
    pub a: TruncElem,
    pub c: TruncElem,
    pub big_a: TruncElem,
}

/// `x.(a, C, A) = ((x1 a + x2)/(x3 a + x4), det(x) C/(x3 a + x4), A)`.
///
/// `x` has `F_q` entries, lifted into `field` through `tower`.
pub fn moebius_act(
    torus: &TorusData,
    field: &Field,
    tower: &FieldTower,
    x: &GL2Elem,
    pt: &VarietyPoint,
) -> Result<VarietyPoint> {
    let km = &torus.km;
    let lvl = field.degree();
    let to_w = |e: &RElem| -> Result<TruncElem> {
        let t = km.ring().to_trunc(tower.field(1), e);
        let t = t.embed(tower, lvl)?;
        Ok(t.truncate(pt.a.prec()))
    };
    let [x1, x2, x3, x4] = [to_w(&x.x[0])?, to_w(&x.x[1])?, to_w(&x.x[2])?, to_w(&x.x[3])?];
    let det = to_w(&km.mat.det(x))?;
    let den = x3.mul(field, &pt.a).add(field, &x4);
    let den_inv = den
        .inv(field)
        .map_err(|_| Error::NonUnit("x3 a + x4 is not a unit".into()))?;
    let a = x1.mul(field, &pt.a).add(field, &x2).mul(field, &den_inv);
    let c = det.mul(field, &pt.c).mul(field, &den_inv);
    Ok(VarietyPoint { a, c, big_a: pt.big_a.clone() })
}
