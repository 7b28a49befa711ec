//! Character values of `xi_chi` on `K_m` via solution counts of the
//! fixed-point system in `a in k-bar[t]/t^(m+1)`.
//!
//! For `g in K_m` and `tau in T_{w,m}` let `b = sigma^2(a)`, `s = sigma(a) - a`
//! and `den = g3 b + g4`. The counted set is
//!
//! ```text
//! det(g) sigma(s) + den tau s = 0,   g1 b + g2 - a den = 0,   a_0 not in F_q,
//! ```
//!
//! and `tr(g) = q^-(m+1) sum_tau chi(tau) #S'(g, tau)`.
//!
//! Every solution has coefficients in `F_{q^(2N)}` where `N` is the order of
//! `g` in `PGL_2`: the second equation says `a = g.sigma^2(a)`, so
//! `a = g^N.sigma^(2N)(a) = sigma^(2N)(a)` because the scalar `g^N` acts
//! trivially. Counting over that field is therefore exact.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::chars::{AbelianChar, TorusDual};
use crate::cyclo::{lcm, CycloAcc, CycloNum};
use crate::error::{Error, Result};
use crate::fftower::{make_tower, Field, FieldElem, FieldTower, SmallField};
use crate::groups::{GL2Elem, RElem};
use crate::linalg::solve_affine;
use crate::trunc::TruncElem;

/// `F_{q^d}` with the data the level solver needs.
#[derive(Debug)]
pub struct WorkField {
    pub tower: FieldTower,
    pub degree: u32,
    basis: Vec<FieldElem>,
    frob1: Vec<FieldElem>,
    frob2: Vec<FieldElem>,
    fq: Vec<FieldElem>,
    fq2: Vec<FieldElem>,
}

impl WorkField {
    pub fn field(&self) -> &Field {
        self.tower.field(self.degree)
    }

    fn build(p: u32, e: u32, degree: u32) -> Result<WorkField> {
        let tower = make_tower(p, e, &[degree, 2])?;
        let f = tower.field(degree);
        let dim = f.abs_degree();
        let basis: Vec<FieldElem> = (0..dim).map(|i| f.monomial(i)).collect();
        let frob1 = basis.iter().map(|&x| f.frobenius(x, 1)).collect();
        let frob2 = basis.iter().map(|&x| f.frobenius(x, 2)).collect();
        let s1 = SmallField::new(&tower, 1)?;
        let s2 = SmallField::new(&tower, 2)?;
        let fq = (0..s1.size).map(|i| tower.embed(s1.elem(i as u8), degree)).collect::<Result<_>>()?;
        let fq2 = (0..s2.size).map(|i| tower.embed(s2.elem(i as u8), degree)).collect::<Result<_>>()?;
        Ok(WorkField { tower, degree, basis, frob1, frob2, fq, fq2 })
    }

    /// `F_q[t]/t^r` element (table indices) as a series over this field.
    pub fn lift_base(&self, a: &RElem, r: usize) -> TruncElem {
        TruncElem::from_coeffs((0..r).map(|i| self.fq[a[i] as usize]).collect())
    }

    /// `F_{q^2}[t]/t^r` element (table indices) as a series over this field.
    pub fn lift_quad(&self, a: &RElem, r: usize) -> TruncElem {
        TruncElem::from_coeffs((0..r).map(|i| self.fq2[a[i] as usize]).collect())
    }

    pub fn base_elem(&self, c: u8) -> FieldElem {
        self.fq[c as usize]
    }
}

/// Shared, lazily built working fields keyed by `(p, e, degree)`.
pub fn work_field(p: u32, e: u32, degree: u32) -> Result<Arc<WorkField>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u32, u32), Arc<WorkField>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(w) = cache.lock().unwrap().get(&(p, e, degree)) {
        return Ok(w.clone());
    }
    let w = Arc::new(WorkField::build(p, e, degree)?);
    Ok(cache.lock().unwrap().entry((p, e, degree)).or_insert(w).clone())
}

/// Which pair of equations is being counted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemKind {
    /// The fixed-point system with `a_0 not in F_q`.
    Sprime,
    /// The polynomial pair `x3 a b - x1 b + x4 a - x2 = 0`,
    /// `x3 a sigma(a) + (tau - x1) sigma(a) - (tau - x4) a - x2 = 0`, no constraint on `a_0`.
    Channels,
}

struct System<'a> {
    w: &'a WorkField,
    kind: SystemKind,
    m: usize,
    g: [TruncElem; 4],
    det: TruncElem,
    tau: TruncElem,
}

impl<'a> System<'a> {
    fn f(&self) -> &Field {
        self.w.field()
    }

    /// Both equations at precision `a.prec()`.
    fn eval(&self, a: &TruncElem) -> [TruncElem; 2] {
        let f = self.f();
        let r = a.prec();
        let g: Vec<TruncElem> = self.g.iter().map(|x| x.truncate(r)).collect();
        let tau = self.tau.truncate(r);
        let sa = a.sigma(f, 1);
        let b = a.sigma(f, 2);
        match self.kind {
            SystemKind::Sprime => {
                let det = self.det.truncate(r);
                let s = sa.sub(f, a);
                let ss = s.sigma(f, 1);
                let den = g[2].mul(f, &b).add(f, &g[3]);
                let e1 = det.mul(f, &ss).add(f, &den.mul(f, &tau).mul(f, &s));
                let e2 = g[0].mul(f, &b).add(f, &g[1]).sub(f, &a.mul(f, &den));
                [e1, e2]
            }
            SystemKind::Channels => {
                let c3 = g[2]
                    .mul(f, a)
                    .mul(f, &b)
                    .sub(f, &g[0].mul(f, &b))
                    .add(f, &g[3].mul(f, a))
                    .sub(f, &g[1]);
                let c4 = g[2]
                    .mul(f, a)
                    .mul(f, &sa)
                    .add(f, &tau.sub(f, &g[0]).mul(f, &sa))
                    .sub(f, &tau.sub(f, &g[3]).mul(f, a))
                    .sub(f, &g[1]);
                [c3, c4]
            }
        }
    }

    /// Coefficients of `X^(q^2), X^q, X` in the level-`i >= 1` coefficient of each equation.
    fn linear(&self, a0: FieldElem) -> [[FieldElem; 3]; 2] {
        let f = self.f();
        let c = |x: &TruncElem| x.coeffs[0];
        let (g1, g2, g3, g4) = (c(&self.g[0]), c(&self.g[1]), c(&self.g[2]), c(&self.g[3]));
        let _ = g2;
        let t0 = c(&self.tau);
        let a1 = f.frobenius(a0, 1);
        let a2 = f.frobenius(a0, 2);
        match self.kind {
            SystemKind::Sprime => {
                let det0 = c(&self.det);
                let s0 = f.sub(a1, a0);
                let den0 = f.add(f.mul(g3, a2), g4);
                let dt = f.mul(den0, t0);
                [
                    [f.add(det0, f.mul(f.mul(g3, t0), s0)), f.sub(dt, det0), f.neg(dt)],
                    [f.sub(g1, f.mul(a0, g3)), f.zero(), f.neg(den0)],
                ]
            }
            SystemKind::Channels => [
                [f.sub(f.mul(g3, a0), g1), f.zero(), f.add(f.mul(g3, a2), g4)],
                [f.zero(), f.add(f.mul(g3, a0), f.sub(t0, g1)), f.add(f.mul(g3, a1), f.sub(g4, t0))],
            ],
        }
    }

    fn level0_poly(&self) -> Vec<FieldElem> {
        // g1 a^(q^2) + g2 - a (g3 a^(q^2) + g4), same zero set for both kinds
        let f = self.f();
        let c = |x: &TruncElem| x.coeffs[0];
        let q2 = (f.q() * f.q()) as usize;
        let mut poly = vec![f.zero(); q2 + 2];
        poly[0] = c(&self.g[1]);
        poly[1] = f.neg(c(&self.g[3]));
        poly[q2] = c(&self.g[0]);
        poly[q2 + 1] = f.neg(c(&self.g[2]));
        poly
    }

    fn a0_allowed(&self, a0: FieldElem) -> bool {
        match self.kind {
            SystemKind::Sprime => self.f().frobenius(a0, 1) != a0,
            SystemKind::Channels => true,
        }
    }

    fn coefficient_zero(&self, a: &TruncElem, i: usize) -> bool {
        let [e1, e2] = self.eval(a);
        e1.coeffs[i].is_zero() && e2.coeffs[i].is_zero()
    }

    /// Solutions above a prefix `a_0..a_{i-1}`, each passed to `visit` when complete.
    fn extend(&self, prefix: &mut Vec<FieldElem>, visit: &mut dyn FnMut(&[FieldElem], u64)) {
        let i = prefix.len();
        if i == self.m + 1 {
            visit(prefix, 1);
            return;
        }
        let f = self.f();
        let p = f.p();
        let dim = f.abs_degree();
        prefix.push(f.zero());
        let a = TruncElem::from_coeffs(prefix.clone());
        let [r1, r2] = self.eval(&a);
        let lin = self.linear(prefix[0]);
        let w = self.w;
        let mut rows = vec![vec![0u32; dim]; 2 * dim];
        for k in 0..dim {
            for (eq, co) in lin.iter().enumerate() {
                let img = f.add(
                    f.add(f.mul(co[0], w.frob2[k]), f.mul(co[1], w.frob1[k])),
                    f.mul(co[2], w.basis[k]),
                );
                for (r, v) in f.to_vec(img).into_iter().enumerate() {
                    rows[eq * dim + r][k] = v;
                }
            }
        }
        let rhs: Vec<u32> = f
            .to_vec(f.neg(r1.coeffs[i]))
            .into_iter()
            .chain(f.to_vec(f.neg(r2.coeffs[i])))
            .collect();
        prefix.pop();
        let Some(sol) = solve_affine(&mut rows, &rhs, p) else { return };
        let kdim = sol.kernel.len();
        if i == self.m {
            visit(prefix, (p as u64).pow(kdim as u32));
            return;
        }
        let total = (p as u64).pow(kdim as u32);
        for code in 0..total {
            let mut v = sol.particular.clone();
            let mut c = code;
            for kv in &sol.kernel {
                let coef = (c % p as u64) as u32;
                c /= p as u64;
                if coef != 0 {
                    for (x, y) in v.iter_mut().zip(kv) {
                        *x = (*x + coef * y) % p;
                    }
                }
            }
            prefix.push(f.from_coeffs(&v));
            self.extend(prefix, visit);
            prefix.pop();
        }
    }
}

/// Count of `S'(g, tau)` (or of the channel system) with the solver state exposed for tests.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveOutcome {
    pub count: u64,
    /// Solutions with `a_0 in F_q` (always 0 for the primed system).
    pub rational_a0: u64,
    pub field_degree: u32,
}

/// Trace engine for fixed `(q, m)`.
pub struct TraceEngine {
    pub dual: TorusDual,
    pub n_cyc: u64,
    roots0: Mutex<HashMap<([u8; 4], u32), Arc<Vec<FieldElem>>>>,
    counts: Mutex<HashMap<(GL2Elem, usize), u64>>,
}

impl TraceEngine {
    pub fn new(p: u32, e: u32, m: usize) -> Result<TraceEngine> {
        let dual = TorusDual::new(p, e, m)?;
        let q = dual.q() as u64;
        let n_cyc = lcm(lcm(dual.group.exponent(), p as u64), q + 1);
        Ok(TraceEngine { dual, n_cyc, roots0: Mutex::new(HashMap::new()), counts: Mutex::new(HashMap::new()) })
    }

    pub fn q(&self) -> u32 {
        self.dual.q()
    }

    pub fn m(&self) -> usize {
        self.dual.m()
    }

    fn pe(&self) -> (u32, u32) {
        (self.dual.torus.km.p, self.dual.torus.km.e)
    }

    /// Degree over `F_q` of the field that contains all solutions for `g`.
    pub fn splitting_degree(&self, g: &GL2Elem) -> u32 {
        2 * self.dual.torus.km.mat.projective_order(g) as u32
    }

    fn system<'a>(&self, w: &'a WorkField, kind: SystemKind, g: &GL2Elem, tau: &RElem) -> System<'a> {
        let r = self.m() + 1;
        let mat = &self.dual.torus.km.mat;
        System {
            w,
            kind,
            m: self.m(),
            g: [0, 1, 2, 3].map(|k| w.lift_base(&g.x[k], r)),
            det: w.lift_base(&mat.det(g), r),
            tau: w.lift_quad(tau, r),
        }
    }

    fn level0_roots(&self, sys: &System, g: &GL2Elem) -> Arc<Vec<FieldElem>> {
        let key = ([g.x[0][0], g.x[1][0], g.x[2][0], g.x[3][0]], sys.w.degree);
        if let Some(r) = self.roots0.lock().unwrap().get(&key) {
            return r.clone();
        }
        let roots = Arc::new(sys.f().roots(&sys.level0_poly()));
        self.roots0.lock().unwrap().insert(key, roots.clone());
        roots
    }

    /// Counts over `F_{q^(2N * widen)}`; `widen > 1` is used to confirm the field claim.
    pub fn solve_in(&self, kind: SystemKind, g: &GL2Elem, tau: &RElem, widen: u32) -> Result<SolveOutcome> {
        let (p, e) = self.pe();
        let deg = self.splitting_degree(g) * widen;
        let w = work_field(p, e, deg)?;
        let sys = self.system(&w, kind, g, tau);
        let roots = self.level0_roots(&sys, g);
        let f = sys.f();
        let mut count = 0u64;
        let mut rational = 0u64;
        for &a0 in roots.iter() {
            if !sys.a0_allowed(a0) {
                continue;
            }
            let a = TruncElem::from_coeffs(vec![a0]);
            if !sys.coefficient_zero(&a, 0) {
                continue;
            }
            let is_rat = f.frobenius(a0, 1) == a0;
            let mut prefix = vec![a0];
            sys.extend(&mut prefix, &mut |_, n| {
                count += n;
                if is_rat {
                    rational += n;
                }
            });
        }
        Ok(SolveOutcome { count, rational_a0: rational, field_degree: deg })
    }

    /// `#S'(g, tau)`, cached by `(g, tau)`.
    pub fn solve_sprime(&self, g: &GL2Elem, tau: &RElem) -> Result<u64> {
        let ti = self
            .dual
            .torus
            .index_of(tau)
            .ok_or_else(|| Error::Validation("tau is not a torus element".into()))?;
        if let Some(&c) = self.counts.lock().unwrap().get(&(*g, ti)) {
            return Ok(c);
        }
        let c = self.solve_in(SystemKind::Sprime, g, tau, 1)?.count;
        self.counts.lock().unwrap().insert((*g, ti), c);
        Ok(c)
    }

    /// Brute-force count: every coefficient scanned over `F_{q^(2N)}`, pruning
    /// prefixes whose equations already fail.
    pub fn naive_oracle_sprime(&self, g: &GL2Elem, tau: &RElem, bound: u128) -> Result<u64> {
        let (p, e) = self.pe();
        let deg = self.splitting_degree(g);
        let w = work_field(p, e, deg)?;
        let f = w.field();
        let space = f.size().checked_pow(self.m() as u32 + 1).unwrap_or(u128::MAX);
        if space > bound {
            return Err(Error::BoundExceeded { what: "naive scan".into(), size: space, bound });
        }
        let sys = self.system(&w, SystemKind::Sprime, g, tau);
        let elems: Vec<FieldElem> = f.elements().collect();
        fn rec(sys: &System, elems: &[FieldElem], prefix: &mut Vec<FieldElem>) -> u64 {
            let i = prefix.len();
            if i == sys.m + 1 {
                return 1;
            }
            let mut n = 0;
            for &v in elems {
                if i == 0 && sys.f().frobenius(v, 1) == v {
                    continue;
                }
                prefix.push(v);
                let a = TruncElem::from_coeffs(prefix.clone());
                if sys.coefficient_zero(&a, i) {
                    n += rec(sys, elems, prefix);
                }
                prefix.pop();
            }
            n
        }
        Ok(rec(&sys, &elems, &mut Vec::new()))
    }

    /// Closed-form `#S'(g, tau)` for unipotent `g` and for maximal `x in H_m`;
    /// `None` for other elements.
    pub fn predicted_sprime(&self, g: &GL2Elem, tau: &RElem) -> Result<Option<u64>> {
        let t = &self.dual.torus;
        let mat = &t.km.mat;
        let r = t.km.ring();
        let (q, m) = (self.q() as u64, self.m() as u32);
        if g.x[0] == r.one() && g.x[2] == r.zero() && g.x[3] == r.one() {
            let l = mat.level(g) as u32;
            if t.level(tau) as u32 != l || t.norm(tau) != r.one() {
                return Ok(Some(0));
            }
            return Ok(Some(if l > m { (q - 1) * q.pow(2 * m + 1) } else { q.pow(m + 1 + l) }));
        }
        if t.c_s_inv(g).is_none() || !t.is_maximal(g)? {
            return Ok(None);
        }
        let l = mat.level(g);
        if t.norm(tau) != mat.det(g) {
            return Ok(Some(0));
        }
        if t.level(tau) < l {
            return Ok(Some(0));
        }
        let qp = crate::groups::char_poly_map(t, g, tau, None)?;
        let v = qp.valuation();
        let l = l as u32;
        let odd = (m - l) % 2 == 1;
        Ok(Some(if v == qp.prec() {
            if odd { q.pow(m + l + 1) } else { q.pow(m + l) }
        } else if v % 2 == 1 {
            0
        } else {
            (q + 1) * q.pow(m + l)
        }))
    }

    /// Torus elements with `det(tau) = det(g)`.
    pub fn compatible_taus(&self, g: &GL2Elem) -> Vec<RElem> {
        let d = self.dual.torus.km.mat.det(g);
        self.dual.torus.elements().iter().filter(|t| self.dual.torus.norm(t) == d).copied().collect()
    }

    /// `(tau, #S'(g, tau))` over the compatible `tau`.
    pub fn counts_for(&self, g: &GL2Elem) -> Result<Vec<(RElem, u64)>> {
        self.compatible_taus(g)
            .into_iter()
            .map(|t| Ok((t, self.solve_sprime(g, &t)?)))
            .collect()
    }

    fn zeta_exp(&self, chi: &AbelianChar, tau: &RElem) -> i64 {
        let g = &self.dual.group;
        (g.eval(chi, tau) * (self.n_cyc / g.exponent())) as i64
    }

    /// `chi~(x)` as a cyclotomic number, for `x in H_m`.
    pub fn chi_tilde(&self, chi: &AbelianChar, x: &GL2Elem) -> Result<CycloNum> {
        let tau = self
            .dual
            .torus
            .c_s_inv(x)
            .ok_or_else(|| Error::Validation("element is not in H_m".into()))?;
        Ok(CycloNum::zeta_pow(self.n_cyc, self.zeta_exp(chi, &tau)))
    }

    /// `tr(g; V_chi)`; refuses characters that are not minimal of level `m`.
    pub fn trace_xi(&self, g: &GL2Elem, chi: &AbelianChar) -> Result<CycloNum> {
        if !self.dual.is_minimal(chi) {
            return Err(Error::Validation("trace formula needs a minimal character".into()));
        }
        let counts = self.counts_for(g)?;
        self.assemble(&counts, chi)
    }

    fn assemble(&self, counts: &[(RElem, u64)], chi: &AbelianChar) -> Result<CycloNum> {
        let mut acc = CycloAcc::new(self.n_cyc);
        for (tau, c) in counts {
            if *c != 0 {
                acc.add_root(self.zeta_exp(chi, tau), *c as i128);
            }
        }
        let num = acc.to_num();
        let qm = BigInt::from(self.q() as u64).pow(self.m() as u32 + 1);
        if num.coeffs().iter().any(|c| !(c.numer() % &qm).is_zero()) {
            return Err(Error::Inconsistent("tau-sum is not divisible by q^(m+1)".into()));
        }
        Ok(num.scale(&BigRational::new(1.into(), qm)))
    }

    /// Values of `xi_chi` on the given class representatives, computed in parallel.
    pub fn trace_many(&self, reps: &[GL2Elem], chi: &AbelianChar) -> Result<Vec<CycloNum>> {
        if !self.dual.is_minimal(chi) {
            return Err(Error::Validation("trace formula needs a minimal character".into()));
        }
        let counts: Vec<Vec<(RElem, u64)>> = reps.par_iter().map(|g| self.counts_for(g)).collect::<Result<_>>()?;
        counts.iter().map(|c| self.assemble(c, chi)).collect()
    }

    /// Maximal elements of `H_m` other than the identity.
    pub fn maximal_elements(&self) -> Result<Vec<GL2Elem>> {
        let t = &self.dual.torus;
        let id = t.km.mat.identity();
        let mut out = Vec::new();
        for x in t.h_m() {
            if x != id && t.is_maximal(&x)? {
                out.push(x);
            }
        }
        Ok(out)
    }

    /// `<psi, xi_chi>_{H_m}` where `xi` holds the values of `xi_chi` on `H_m` in torus order.
    pub fn hm_multiplicity(&self, psi: &AbelianChar, xi: &[CycloNum]) -> Result<i64> {
        let els = self.dual.torus.elements();
        let mut acc = CycloAcc::new(self.n_cyc);
        for (tau, v) in els.iter().zip(xi) {
            let shift = -self.zeta_exp(psi, tau);
            for (i, c) in v.coeffs().iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let c = c
                    .to_integer()
                    .to_i128()
                    .filter(|_| c.is_integer())
                    .ok_or_else(|| Error::Inconsistent("character value is not integral".into()))?;
                acc.add_root(i as i64 + shift, c);
            }
        }
        let v = acc
            .to_num()
            .scale(&BigRational::new(1.into(), BigInt::from(els.len())));
        v.to_integer()
            .ok_or_else(|| Error::Inconsistent(format!("multiplicity is not an integer: {v:?}")))
    }

    /// Values of `xi_chi` on all of `H_m`, in torus order.
    pub fn xi_on_hm(&self, chi: &AbelianChar) -> Result<Vec<CycloNum>> {
        self.trace_many(&self.dual.torus.h_m(), chi)
    }

    /// Characters `psi` of `H_m` with the right central character and the
    /// occurrence pattern that singles out `chi~` up to `sigma`.
    pub fn recover_chi(&self, xi: &[CycloNum]) -> Result<Vec<AbelianChar>> {
        let m = self.m();
        if m == 0 {
            return Err(Error::Validation("recovery needs m > 0".into()));
        }
        let g = &self.dual.group;
        let t = &self.dual.torus;
        let z: Vec<RElem> = t.km.ring().units().map(|u| t.from_base(&u)).collect();
        let mult: Vec<i64> = g.characters().iter().map(|psi| self.hm_multiplicity(psi, xi)).collect::<Result<_>>()?;
        // central character from the value at scalars
        let dim = &xi[t.index_of(&t.one()).unwrap()];
        let chars = g.characters();
        let central_ok = |psi: &AbelianChar| {
            z.iter().all(|zz| {
                let v = &xi[t.index_of(zz).unwrap()];
                *v == dim.mul(&CycloNum::zeta_pow(self.n_cyc, self.zeta_exp(psi, zz)))
            })
        };
        let mut zh1: Vec<RElem> = Vec::new();
        for zz in &z {
            for h in t.t_level(1) {
                zh1.push(t.mul(zz, &h));
            }
        }
        zh1.sort();
        zh1.dedup();
        let mut found = Vec::new();
        for (i, psi) in chars.iter().enumerate() {
            if !central_ok(psi) {
                continue;
            }
            let own = mult[i];
            let want_self = if m % 2 == 1 { 1 } else { 0 };
            if own != want_self {
                continue;
            }
            let others_ok = chars.iter().enumerate().all(|(j, other)| {
                if j == i || !g.agree_on(psi, other, &zh1) {
                    return true;
                }
                mult[j] == 1 - want_self
            });
            if others_ok {
                found.push(psi.clone());
            }
        }
        Ok(found)
    }
}

/// A class function on a finite group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharTable {
    pub group: String,
    pub classes: Vec<(u64, usize)>,
    pub values: Vec<CycloNum>,
    pub provenance: String,
}

impl CharTable {
    pub fn to_json(&self, chi: &str) -> Value {
        json!({
            "group": self.group,
            "classes": self
                .classes
                .iter()
                .zip(&self.values)
                .map(|((rep, size), v)| json!({"rep": rep, "size": size, "value": v.to_json()}))
                .collect::<Vec<_>>(),
            "chi": chi,
        })
    }

    pub fn order(&self) -> u64 {
        self.classes.iter().map(|c| c.1 as u64).sum()
    }

    /// `<self, self>` over the group.
    pub fn norm(&self) -> CycloNum {
        let sizes: Vec<u64> = self.classes.iter().map(|c| c.1 as u64).collect();
        crate::cyclo::inner_product(&self.values, &self.values, &sizes, self.order())
    }
}
