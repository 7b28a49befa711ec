//! The finite type side: the simple stratum attached to a minimal character,
//! the intertwining and congruence criteria checked by brute force, the
//! character `Lambda` of `J_alpha`, and its induction `Theta` to `K_m`.
//!
//! Everything lives in `K_m = GL_2(F_q[t]/t^(m+1))`; the quadratic order is
//! embedded through the torus map `c_s`, so `U_E` and `H_m` coincide.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::chars::{psi_a, AbelianChar, AddChar, LaurentMat, TorusDual};
use crate::cyclo::{lcm, CycloNum};
use crate::error::{Error, Result};
use crate::fingroup::FiniteGroup;
use crate::groups::{build_nonsplit_torus, GL2Elem, Km, RElem, TorusData};
use crate::trace::CharTable;

/// `(M, m, alpha)` with `alpha = t^-m c_s(alpha0)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratum {
    pub m: usize,
    /// `alpha0` over `F_{q^2}`; coefficients from `m - floor(m/2)` on are zero.
    pub alpha0: RElem,
    pub alpha: LaurentMat,
    /// `alpha0 mod t` as a matrix over `F_q`, row-major.
    pub alpha0_mod_t: [u8; 4],
    pub simple: bool,
    /// Number of candidates scanned.
    pub candidates: usize,
    encoding: u64,
}

impl Stratum {
    pub fn to_json(&self) -> Value {
        json!({"m": self.m, "alpha0": self.encoding, "simple": self.simple})
    }
}

/// Exhaustive verdicts with the encodings of any counterexamples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExhaustiveReport {
    pub checked: usize,
    pub counterexamples: Vec<u64>,
}

impl ExhaustiveReport {
    pub fn pass(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// A `psi_a` occurring in a class function on `K_m^m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Occurrence {
    pub a: [u8; 4],
    pub multiplicity: i64,
    pub trivial_on_unipotent: bool,
    pub simple: bool,
}

pub struct BhContext {
    pub dual: TorusDual,
    pub psi: AddChar,
    e_t: u64,
}

fn irreducible_mod_t(f: &crate::fftower::SmallField, a: [u8; 4]) -> bool {
    let tr = f.add(a[0], a[3]);
    let det = f.sub(f.mul(a[0], a[3]), f.mul(a[1], a[2]));
    (0..f.size as u8).all(|x| f.add(f.sub(f.mul(x, x), f.mul(tr, x)), det) != 0)
}

impl BhContext {
    /// `psi_seed = 0` is the standard additive character.
    pub fn new(p: u32, e: u32, m: usize, psi_seed: u64) -> Result<BhContext> {
        if m == 0 {
            return Err(Error::Validation("the type construction needs m >= 1".into()));
        }
        let dual = TorusDual::new(p, e, m)?;
        let psi = AddChar::from_seed(dual.torus.km.ring().f.clone(), m + 1, psi_seed);
        let e_t = dual.group.exponent();
        Ok(BhContext { dual, psi, e_t })
    }

    pub fn torus(&self) -> &TorusData {
        &self.dual.torus
    }

    pub fn km(&self) -> &Km {
        &self.dual.torus.km
    }

    pub fn m(&self) -> usize {
        self.dual.m()
    }

    pub fn q(&self) -> u32 {
        self.dual.q()
    }

    /// Exponent of `T_{w,m}`; character values are powers of `zeta_E`.
    pub fn exponent(&self) -> u64 {
        self.e_t
    }

    fn psi_to_e(&self, v: u64) -> u64 {
        v * (self.e_t / self.km().p as u64)
    }

    /// `tau` with `g = c_s(tau) mod t^k`, if `g mod t^k` lies in the order.
    pub fn order_part(&self, g: &GL2Elem, k: usize) -> Option<RElem> {
        let mat = &self.km().mat;
        self.torus().c_s_inv(&mat.truncate(g, k))
    }

    /// `psi_alpha(x)` for `x in K_m^h`, as an exponent of `zeta_p`.
    pub fn psi_alpha(&self, st: &Stratum, x: &GL2Elem, h: usize) -> u64 {
        psi_a(&self.km().ring().f, &self.psi, &st.alpha, x, h).expect("alpha has m coefficients")
    }

    fn stratum_from(&self, alpha0: RElem, candidates: usize) -> Stratum {
        let m = self.m();
        let c = self.torus().c_s(&alpha0);
        let coeffs = (0..m).map(|j| [c.x[0][j], c.x[1][j], c.x[2][j], c.x[3][j]]).collect();
        let mod_t = [c.x[0][0], c.x[1][0], c.x[2][0], c.x[3][0]];
        Stratum {
            m,
            alpha0,
            alpha: LaurentMat { m, coeffs },
            alpha0_mod_t: mod_t,
            simple: irreducible_mod_t(&self.km().ring().f, mod_t),
            candidates,
            encoding: self.km().mat.encode(&c),
        }
    }

    /// The `alpha` in `p_E^-m / p_E^-floor(m/2)` with `chi(1 + x) = psi_E(alpha x)`
    /// on `p_E^(floor(m/2)+1)`.
    pub fn derive_alpha(&self, chi: &AbelianChar) -> Result<Stratum> {
        let m = self.m();
        if !self.dual.is_minimal(chi) {
            return Err(Error::Validation("the stratum needs a minimal character".into()));
        }
        let h = m / 2 + 1;
        let r = m - m / 2;
        let t = self.torus();
        let f2 = &t.t_ring.f;
        let q2 = f2.size as u64;
        let test: Vec<(RElem, GL2Elem)> = t.t_level(h).into_iter().map(|u| (u, t.c_s(&u))).collect();
        let mut found = Vec::new();
        let mut scanned = 0;
        for code in 0..q2.pow(r as u32) {
            let mut alpha0 = [0u8; crate::groups::MAX_PREC];
            let mut c = code;
            for a in alpha0.iter_mut().take(r) {
                *a = (c % q2) as u8;
                c /= q2;
            }
            if alpha0[0] == 0 {
                continue;
            }
            scanned += 1;
            let st = self.stratum_from(alpha0, 0);
            if test
                .iter()
                .all(|(u, x)| self.dual.eval(chi, u) == self.psi_to_e(self.psi_alpha(&st, x, h)))
            {
                found.push(alpha0);
            }
        }
        match found.as_slice() {
            [a] => {
                let st = self.stratum_from(*a, scanned);
                if !st.simple {
                    return Err(Error::Inconsistent("derived stratum is not simple".into()));
                }
                Ok(st)
            }
            [] => Err(Error::Inconsistent("no alpha matches chi".into())),
            _ => Err(Error::Inconsistent(format!("{} values of alpha match chi", found.len()))),
        }
    }

    /// `beta in M/tM` with `psi_{t^-m beta}` trivial on `U_E^m / U_E^(m+1)`, by scanning.
    pub fn annihilator_y(&self) -> Vec<[u8; 4]> {
        let m = self.m();
        let q = self.q() as u8;
        let t = self.torus();
        let top: Vec<GL2Elem> = t.t_level(m).iter().map(|u| t.c_s(u)).collect();
        let mut out = Vec::new();
        for code in 0..(q as u32).pow(4) {
            let b = [
                (code % q as u32) as u8,
                (code / q as u32 % q as u32) as u8,
                (code / (q as u32).pow(2) % q as u32) as u8,
                (code / (q as u32).pow(3)) as u8,
            ];
            let mut coeffs = vec![[0u8; 4]; m];
            coeffs[0] = b;
            let a = LaurentMat { m, coeffs };
            let f = &self.km().ring().f;
            if top.iter().all(|x| psi_a(f, &self.psi, &a, x, m).unwrap() == 0) {
                out.push(b);
            }
        }
        out.sort();
        out
    }

    /// The explicit two-parameter family for the torus' own quadratic.
    pub fn y_family(&self) -> Vec<[u8; 4]> {
        let f = &self.km().ring().f;
        let d = self.torus().d;
        let q = self.q() as u8;
        let mut out = Vec::new();
        for b1 in 0..q {
            for b2 in 0..q {
                out.push(if self.km().p == 2 {
                    [b1, f.add(b1, f.mul(b2, d)), b2, b1]
                } else {
                    [b1, b2, f.neg(f.mul(b2, d)), f.neg(b1)]
                });
            }
        }
        out.sort();
        out
    }

    /// `g in J_alpha = H_m K_m^floor((m+1)/2)`.
    pub fn in_j_alpha(&self, g: &GL2Elem) -> bool {
        self.order_part(g, self.m().div_ceil(2)).is_some()
    }

    /// Whether `g` normalizes `psi_alpha` on the image of `U_E^(floor(m/2)+1)`.
    pub fn check_intertwine(&self, st: &Stratum, g: &GL2Elem) -> bool {
        let h = self.m() / 2 + 1;
        let mat = &self.km().mat;
        let t = self.torus();
        t.h_level(h)
            .iter()
            .all(|x| self.psi_alpha(st, &mat.conj(g, x), h) == self.psi_alpha(st, x, h))
    }

    /// Intertwining verdict against `J_alpha` membership over all of `K_m`.
    pub fn intertwining_report(&self, st: &Stratum, bound: u64) -> Result<ExhaustiveReport> {
        let km = self.km();
        let els = km.elements(bound)?;
        let h = self.m() / 2 + 1;
        let hs = self.torus().h_level(h);
        let base: Vec<u64> = hs.iter().map(|x| self.psi_alpha(st, x, h)).collect();
        let bad: Vec<u64> = els
            .par_iter()
            .filter(|g| {
                let inter = hs
                    .iter()
                    .zip(&base)
                    .all(|(x, &b)| self.psi_alpha(st, &km.mat.conj(g, x), h) == b);
                inter != self.in_j_alpha(g)
            })
            .map(|g| km.mat.encode(g))
            .collect();
        Ok(ExhaustiveReport { checked: els.len(), counterexamples: bad })
    }

    /// `g^-1 alpha0 g = alpha0 mod t^k M + Y` against `g in U_E + t^k M`, over `GL_2(F_q[t]/t^k)`.
    pub fn check_congruence(&self, st: &Stratum, k: usize) -> Result<ExhaustiveReport> {
        let m = self.m();
        if k == 0 || k > m.div_ceil(2) {
            return Err(Error::Validation(format!("need 1 <= k <= {}", m.div_ceil(2))));
        }
        let small = build_nonsplit_torus(self.km().p, self.km().e, k - 1)?;
        let km = &small.km;
        let mat = &km.mat;
        let y0: std::collections::HashSet<[u8; 4]> = self.annihilator_y().into_iter().collect();
        let mut a0 = st.alpha0;
        for c in a0.iter_mut().skip(k) {
            *c = 0;
        }
        let alpha0 = small.c_s(&a0);
        let els = km.elements(u64::MAX)?;
        let r = km.ring();
        let bad: Vec<u64> = els
            .par_iter()
            .filter(|g| {
                let conj = mat.mul(&mat.mul(&mat.inv(g).unwrap(), &alpha0), g);
                let diff: Vec<RElem> = (0..4).map(|i| r.sub(&conj.x[i], &alpha0.x[i])).collect();
                let congruent = (0..k).all(|j| y0.contains(&[diff[0][j], diff[1][j], diff[2][j], diff[3][j]]));
                congruent != small.c_s_inv(g).is_some()
            })
            .map(|g| mat.encode(g))
            .collect();
        Ok(ExhaustiveReport { checked: els.len(), counterexamples: bad })
    }

    /// The `psi_a` occurring in a class function on `K_m^m`, `a in t^-m M / t^(-m+1) M`.
    pub fn stratum_occurrences(&self, values: &dyn Fn(&GL2Elem) -> CycloNum) -> Result<Vec<Occurrence>> {
        let m = self.m();
        let km = self.km();
        let f = &km.ring().f;
        let top = km.congruence_subgroup(m);
        let vals: Vec<CycloNum> = top.iter().map(values).collect();
        let n = vals.first().map(|v| v.order()).unwrap_or(1);
        let p = km.p as u64;
        let nn = lcm(n, p);
        let vals: Vec<CycloNum> = vals.iter().map(|v| v.lift(nn)).collect::<Result<_>>()?;
        let unip = km.n_m_level(m);
        let q = km.q;
        let mut out = Vec::new();
        for code in 0..q.pow(4) {
            let b = [
                (code % q) as u8,
                (code / q % q) as u8,
                (code / q.pow(2) % q) as u8,
                (code / q.pow(3)) as u8,
            ];
            let mut coeffs = vec![[0u8; 4]; m];
            coeffs[0] = b;
            let a = LaurentMat { m, coeffs };
            let mut acc = CycloNum::zero(nn);
            for (x, v) in top.iter().zip(&vals) {
                let e = psi_a(f, &self.psi, &a, x, m)?;
                acc = acc.add(&v.mul(&CycloNum::zeta_pow(nn, -((e * (nn / p)) as i64))));
            }
            let mult = acc.scale(&BigRational::new(1.into(), BigInt::from(top.len())));
            let mult = mult
                .to_integer()
                .ok_or_else(|| Error::Inconsistent("occurrence multiplicity is not an integer".into()))?;
            if mult != 0 {
                let triv = unip.iter().all(|x| psi_a(f, &self.psi, &a, x, m).unwrap() == 0);
                out.push(Occurrence { a: b, multiplicity: mult, trivial_on_unipotent: triv, simple: irreducible_mod_t(f, b) });
            }
        }
        Ok(out)
    }

    pub fn build_type(&self, chi: &AbelianChar) -> Result<TypeData<'_>> {
        TypeData::new(self, chi)
    }
}

/// Data of the even-level construction.
struct EvenData {
    /// `J^1` coset labels modulo `ker theta`.
    label: HashMap<GL2Elem, usize>,
    /// Class in `mu_E / mu_F` of each `F_{q^2}^*` index.
    mu_class: Vec<usize>,
    /// `tr eta~` on `(mu class, label)`.
    eta_tilde: Vec<Vec<CycloNum>>,
}

/// `Lambda` on `J_alpha` and `Theta = Ind Lambda` on `K_m`.
pub struct TypeData<'a> {
    pub ctx: &'a BhContext,
    pub chi: AbelianChar,
    pub stratum: Stratum,
    /// Cyclotomic order of all values.
    pub n_cyc: u64,
    /// Left coset representatives of `K_m / J_alpha`.
    pub coset_reps: Vec<GL2Elem>,
    pub lambda_dim: i64,
    /// Checks made during the construction, as `(name, pass)`.
    pub checks: Vec<(String, bool)>,
    even: Option<EvenData>,
}

impl<'a> TypeData<'a> {
    fn new(ctx: &'a BhContext, chi: &AbelianChar) -> Result<TypeData<'a>> {
        let stratum = ctx.derive_alpha(chi)?;
        let m = ctx.m();
        let km = ctx.km();
        // J_alpha contains K^ceil(m/2), so representatives can be taken from GL_2(F_q[t]/t^ceil(m/2))
        let els = Km::new(km.p, km.e, m.div_ceil(2) - 1)?.elements(u64::MAX)?;
        let mut coset_reps: Vec<GL2Elem> = Vec::new();
        for g in &els {
            if !coset_reps.iter().any(|r| ctx.in_j_alpha(&km.mat.mul(&km.mat.inv(r).unwrap(), g))) {
                coset_reps.push(*g);
            }
        }
        let mut td = TypeData {
            ctx,
            chi: chi.clone(),
            stratum,
            n_cyc: ctx.e_t,
            coset_reps,
            lambda_dim: 1,
            checks: Vec::new(),
            even: None,
        };
        let k = m.div_ceil(2);
        let t = ctx.torus();
        // chi and psi_alpha agree on the overlap U_E^(floor(m/2)+1)
        let h = m / 2 + 1;
        let glue = t
            .t_level(h)
            .iter()
            .all(|u| ctx.dual.eval(chi, u) == ctx.psi_to_e(ctx.psi_alpha(&td.stratum, &t.c_s(u), h)));
        td.checks.push(("overlap agreement".into(), glue));
        if !glue {
            return Err(Error::Inconsistent("chi and psi_alpha disagree on the overlap".into()));
        }
        if m.is_multiple_of(2) {
            td.build_even()?;
            td.lambda_dim = ctx.q() as i64;
        }
        let _ = k;
        Ok(td)
    }

    fn theta_exp(&self, g: &GL2Elem, h: usize) -> Option<u64> {
        let ctx = self.ctx;
        let t = ctx.torus();
        let mat = &ctx.km().mat;
        let tau = ctx.order_part(g, h)?;
        let x = mat.mul(&mat.inv(&t.c_s(&tau)).ok()?, g);
        Some((ctx.dual.eval(&self.chi, &tau) + ctx.psi_to_e(ctx.psi_alpha(&self.stratum, &x, h))) % ctx.e_t)
    }

    fn build_even(&mut self) -> Result<()> {
        let ctx = self.ctx;
        let m = ctx.m();
        let q = ctx.q() as usize;
        let km = ctx.km();
        let mat = &km.mat;
        let t = ctx.torus();
        let e_t = ctx.e_t;
        let h = m / 2 + 1;
        let j1: Vec<GL2Elem> =
            km.congruence_subgroup(1).into_iter().filter(|g| ctx.order_part(g, m / 2).is_some()).collect();
        let h1: Vec<GL2Elem> = j1.iter().copied().filter(|g| ctx.order_part(g, h).is_some()).collect();
        let theta: HashMap<GL2Elem, u64> =
            h1.iter().map(|g| (*g, self.theta_exp(g, h).unwrap())).collect();
        // theta does not depend on how an element is split
        let th = t.t_level(h);
        let well_defined = h1.iter().all(|g| {
            let tau = ctx.order_part(g, h).unwrap();
            th.iter().all(|v| {
                let tv = t.mul(&tau, v);
                let x = mat.mul(&mat.inv(&t.c_s(&tv)).unwrap(), g);
                (ctx.dual.eval(&self.chi, &tv) + ctx.psi_to_e(ctx.psi_alpha(&self.stratum, &x, h))) % e_t
                    == theta[g]
            })
        });
        self.checks.push(("theta well defined".into(), well_defined));
        if !well_defined {
            return Err(Error::Inconsistent("theta depends on the decomposition".into()));
        }
        let ker: Vec<GL2Elem> = h1.iter().copied().filter(|g| theta[g] == 0).collect();
        let ker_set: std::collections::HashSet<GL2Elem> = ker.iter().copied().collect();
        // J^1 is generated by the image of U_E^1 and the elementary matrices of K^(m/2)
        let r = km.ring();
        let mut j1_gens: Vec<GL2Elem> = t.h_level(1);
        for k in (m / 2).max(1)..=m {
            for i in 0..4 {
                for c in 1..q as u8 {
                    let mut g = mat.identity();
                    g.x[i] = r.add(&g.x[i], &r.monomial(c, k));
                    j1_gens.push(g);
                }
            }
        }
        let normal = j1_gens.iter().all(|y| ker.iter().all(|k| ker_set.contains(&mat.conj(y, k))));
        let f2 = &t.t_ring.f;
        let teich: Vec<GL2Elem> = (1..f2.size as u8).map(|z| t.c_s(&t.t_ring.constant(z))).collect();
        let mu_stable = teich.iter().all(|z| ker.iter().all(|k| ker_set.contains(&mat.conj(z, k))));
        self.checks.push(("ker theta normal in J^1".into(), normal));
        self.checks.push(("ker theta mu_E-stable".into(), mu_stable));
        if !normal || !mu_stable {
            return Err(Error::Inconsistent("ker theta is not normal".into()));
        }
        // J^1 / ker theta
        let mut label: HashMap<GL2Elem, usize> = HashMap::with_capacity(j1.len());
        let mut reps: Vec<GL2Elem> = Vec::new();
        for g in &j1 {
            if label.contains_key(g) {
                continue;
            }
            let l = reps.len();
            for k in &ker {
                label.insert(mat.mul(g, k), l);
            }
            reps.push(*g);
        }
        let nq = reps.len();
        let qgroup = FiniteGroup::from_elements(&(0..nq).collect::<Vec<_>>(), |a, b| label[&mat.mul(&reps[*a], &reps[*b])])?;
        let in_h: Vec<bool> = reps.iter().map(|g| theta.contains_key(g)).collect();
        // mu_E / mu_F
        let fq: Vec<u8> = (1..q as u8).map(|c| t.fq_to_fq2(c)).collect();
        let mut mu_class = vec![usize::MAX; f2.size];
        let mut mu_reps: Vec<u8> = Vec::new();
        for z in 1..f2.size as u8 {
            if mu_class[z as usize] != usize::MAX {
                continue;
            }
            for &c in &fq {
                mu_class[f2.mul(z, c) as usize] = mu_reps.len();
            }
            mu_reps.push(z);
        }
        let n_mu = mu_reps.len();
        let zmat: Vec<GL2Elem> = mu_reps.iter().map(|&z| t.c_s(&t.t_ring.constant(z))).collect();
        let zinv: Vec<GL2Elem> = zmat.iter().map(|z| mat.inv(z)).collect::<Result<_>>()?;
        let gamma_elems: Vec<(usize, usize)> = (0..n_mu).flat_map(|c| (0..nq).map(move |k| (c, k))).collect();
        let gamma = FiniteGroup::from_elements(&gamma_elems, |a, b| {
            let c = mu_class[f2.mul(mu_reps[a.0], mu_reps[b.0]) as usize];
            let moved = mat.mul(&mat.mul(&zinv[b.0], &reps[a.1]), &zmat[b.0]);
            (c, label[&mat.mul(&moved, &reps[b.1])])
        })?;
        let table = gamma.character_table()?;
        let n = lcm(e_t, table.order);
        let theta_bar: Vec<CycloNum> = reps
            .iter()
            .map(|g| match theta.get(g) {
                Some(&e) => CycloNum::zeta_pow(n, (e * (n / e_t)) as i64),
                None => CycloNum::zero(n),
            })
            .collect();
        let ind = qgroup.induce(&in_h, &theta_bar)?;
        let qinv = BigRational::new(1.into(), BigInt::from(q));
        let eta: Vec<CycloNum> = ind.iter().map(|v| v.scale(&qinv)).collect();
        let id = qgroup.identity();
        let sizes1 = vec![1u64; nq];
        let eta_norm = crate::cyclo::inner_product(&eta, &eta, &sizes1, nq as u64).to_integer();
        let hidx: Vec<usize> = (0..nq).filter(|&k| in_h[k]).collect();
        let eh: Vec<CycloNum> = hidx.iter().map(|&k| eta[k].clone()).collect();
        let th_h: Vec<CycloNum> = hidx.iter().map(|&k| theta_bar[k].clone()).collect();
        let eta_theta =
            crate::cyclo::inner_product(&eh, &th_h, &vec![1u64; hidx.len()], hidx.len() as u64).to_integer();
        self.checks.push(("eta(1) = q".into(), eta[id].to_integer() == Some(q as i64)));
        self.checks.push(("<eta, eta> = 1".into(), eta_norm == Some(1)));
        self.checks.push(("<eta|H, theta> = q".into(), eta_theta == Some(q as i64)));
        if eta_norm != Some(1) {
            return Err(Error::Inconsistent("Ind theta / q is not irreducible".into()));
        }
        let gidx: HashMap<(usize, usize), usize> = gamma_elems.iter().enumerate().map(|(i, x)| (*x, i)).collect();
        let one_class = mu_class[1];
        let mut chosen = Vec::new();
        for (ri, row) in table.rows.iter().enumerate() {
            let val = |c: usize, k: usize| row[table.classes.class_of[gidx[&(c, k)]]].lift(n);
            let ok = (0..nq).all(|k| val(one_class, k).map(|v| v == eta[k]).unwrap_or(false))
                && (0..n_mu).filter(|&c| c != one_class).all(|c| {
                    hidx.iter().all(|&k| val(c, k).map(|v| v == theta_bar[k].neg()).unwrap_or(false))
                });
            if ok {
                chosen.push(ri);
            }
        }
        if chosen.len() != 1 {
            return Err(Error::Inconsistent(format!("{} candidates for eta~", chosen.len())));
        }
        let row = &table.rows[chosen[0]];
        let eta_tilde: Vec<Vec<CycloNum>> = (0..n_mu)
            .map(|c| (0..nq).map(|k| row[table.classes.class_of[gidx[&(c, k)]]].lift(n)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        // Lambda~ is constant on the fibers of (e, j) -> ej
        let t1 = t.t_level(1);
        let fiber_ok = t1.iter().all(|u| {
            let uc = t.c_s(u);
            let ui = mat.inv(&uc).unwrap();
            let cu = CycloNum::zeta_pow(n, (ctx.dual.eval(&self.chi, u) * (n / e_t)) as i64);
            (0..n_mu).all(|c| {
                (0..nq).all(|k| cu.mul(&eta_tilde[c][label[&mat.mul(&ui, &reps[k])]]) == eta_tilde[c][k])
            })
        });
        self.checks.push(("Lambda constant on fibers".into(), fiber_ok));
        if !fiber_ok {
            return Err(Error::Inconsistent("Lambda~ is not constant on fibers".into()));
        }
        self.n_cyc = n;
        self.even = Some(EvenData { label, mu_class, eta_tilde });
        Ok(())
    }

    /// `Lambda(g)`, zero off `J_alpha`.
    pub fn lambda(&self, g: &GL2Elem) -> CycloNum {
        let ctx = self.ctx;
        let m = ctx.m();
        let n = self.n_cyc;
        let scale = n / ctx.e_t;
        match &self.even {
            None => match self.theta_exp(g, m.div_ceil(2)) {
                Some(e) => CycloNum::zeta_pow(n, (e * scale) as i64),
                None => CycloNum::zero(n),
            },
            Some(ev) => {
                let Some(tau) = ctx.order_part(g, m / 2) else { return CycloNum::zero(n) };
                let t = ctx.torus();
                let mat = &ctx.km().mat;
                let z = t.t_ring.constant(tau[0]);
                let j = mat.mul(&mat.inv(&t.c_s(&z)).unwrap(), g);
                let c = ev.mu_class[tau[0] as usize];
                let chi_e = CycloNum::zeta_pow(n, (ctx.dual.eval(&self.chi, &z) * scale) as i64);
                chi_e.mul(&ev.eta_tilde[c][ev.label[&j]])
            }
        }
    }

    /// `Theta(g) = sum over y in K/J of Lambda(y^-1 g y)`.
    pub fn theta_at(&self, g: &GL2Elem) -> CycloNum {
        let mat = &self.ctx.km().mat;
        let mut acc = CycloNum::zero(self.n_cyc);
        for y in &self.coset_reps {
            let c = mat.mul(&mat.mul(&mat.inv(y).unwrap(), g), y);
            acc = acc.add(&self.lambda(&c));
        }
        acc
    }

    pub fn theta_dim(&self) -> Option<i64> {
        self.theta_at(&self.ctx.km().mat.identity()).to_integer()
    }

    /// `Theta` on the given classes.
    pub fn theta_table(&self, classes: &[(GL2Elem, usize)]) -> CharTable {
        let mat = &self.ctx.km().mat;
        let values: Vec<CycloNum> = classes.par_iter().map(|(g, _)| self.theta_at(g)).collect();
        CharTable {
            group: format!("K_{}", self.ctx.m()),
            classes: classes.iter().map(|(g, s)| (mat.encode(g), *s)).collect(),
            values,
            provenance: "induced".into(),
        }
    }

    /// `<chi', Theta>` over `H_m`.
    pub fn multiplicity_on_hm(&self, chi2: &AbelianChar) -> Result<i64> {
        let ctx = self.ctx;
        let t = ctx.torus();
        let n = self.n_cyc;
        let scale = n / ctx.e_t;
        let mut acc = CycloNum::zero(n);
        for tau in t.elements() {
            let v = self.theta_at(&t.c_s(tau));
            let c = CycloNum::zeta_pow(n, -((ctx.dual.eval(chi2, tau) * scale) as i64));
            acc = acc.add(&v.mul(&c));
        }
        let r = acc.scale(&BigRational::new(1.into(), BigInt::from(t.elements().len())));
        r.to_integer()
            .ok_or_else(|| Error::Inconsistent(format!("multiplicity is not an integer: {r:?}")))
    }

    /// Characters agreeing with `chi` on `F^* U_E^1`, each with its multiplicity in `Theta|_{H_m}`.
    pub fn cusp_multiplicities(&self) -> Result<Vec<(AbelianChar, i64)>> {
        let ctx = self.ctx;
        let t = ctx.torus();
        let g = &ctx.dual.group;
        let mut sub: Vec<RElem> = Vec::new();
        for z in t.km.ring().units() {
            for h in t.t_level(1) {
                sub.push(t.mul(&t.from_base(&z), &h));
            }
        }
        sub.sort();
        sub.dedup();
        g.characters()
            .into_par_iter()
            .filter(|c| g.agree_on(c, &self.chi, &sub))
            .map(|c| {
                let v = self.multiplicity_on_hm(&c)?;
                Ok((c, v))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u32, m: usize) -> BhContext {
        BhContext::new(p, 1, m, 0).unwrap()
    }

    // Past the first step the linearized condition no longer pins g down:
    // every g = 1 mod t already satisfies it.
    #[test]
    fn congruence_fails_beyond_first_step() {
        let c = ctx(2, 3);
        let chi = c.dual.minimal_classes().remove(0);
        let st = c.derive_alpha(&chi).unwrap();
        assert!(c.check_congruence(&st, 1).unwrap().pass());
        assert!(!c.check_congruence(&st, 2).unwrap().pass());
    }

    #[test]
    fn alpha_is_unique_and_simple() {
        for (p, m) in [(2u32, 1usize), (3, 1), (2, 2)] {
            let c = ctx(p, m);
            for chi in c.dual.minimal_classes() {
                let st = c.derive_alpha(&chi).unwrap();
                assert!(st.simple);
                let q = p as usize;
                assert_eq!(st.candidates, (q * q - 1) * (q * q).pow((m - m / 2 - 1) as u32));
                let js = st.to_json();
                assert_eq!(js["m"], m);
            }
        }
    }

    #[test]
    fn sigma_moves_alpha() {
        let c = ctx(3, 1);
        let f2 = &c.torus().t_ring.f;
        for chi in c.dual.minimal_classes().into_iter().take(4) {
            let a = c.derive_alpha(&chi).unwrap();
            let b = c.derive_alpha(&c.dual.sigma_char(&chi)).unwrap();
            assert_eq!(b.alpha0[0], f2.frob(a.alpha0[0]));
        }
    }

    #[test]
    fn annihilator_matches_family() {
        for p in [2u32, 3] {
            let c = ctx(p, 1);
            let y = c.annihilator_y();
            assert_eq!(y.len(), (p * p) as usize);
            assert_eq!(y, c.y_family());
            let t = c.torus();
            // only 0 of the order lies in Y
            for z in 0..t.t_ring.f.size as u8 {
                let x = t.c_s(&t.t_ring.constant(z));
                let b = [x.x[0][0], x.x[1][0], x.x[2][0], x.x[3][0]];
                assert_eq!(y.contains(&b), z == 0);
            }
        }
    }

    #[test]
    fn diagonal_does_not_intertwine() {
        let c = ctx(3, 1);
        let chi = &c.dual.minimal_classes()[0];
        let st = c.derive_alpha(chi).unwrap();
        let r = c.km().ring();
        let g = c.km().mat.from_entries(r.one(), r.zero(), r.zero(), r.constant(2));
        assert!(!c.check_intertwine(&st, &g));
        for x in c.torus().h_m().iter().step_by(7) {
            assert!(c.check_intertwine(&st, x));
        }
    }

    #[test]
    fn congruence_level_one() {
        for p in [2u32, 3] {
            let c = ctx(p, 1);
            let st = c.derive_alpha(&c.dual.minimal_classes()[0]).unwrap();
            let r = c.check_congruence(&st, 1).unwrap();
            assert!(r.pass(), "{:?}", r.counterexamples);
            assert!(c.check_congruence(&st, 2).is_err());
        }
    }

    #[test]
    fn odd_type_dimension_and_center() {
        let c = ctx(2, 1);
        let chi = &c.dual.minimal_classes()[0];
        let td = c.build_type(chi).unwrap();
        assert_eq!(td.theta_dim(), Some(2));
        let mat = &c.km().mat;
        let n = td.n_cyc;
        let g = c.km().unipotent(&c.km().ring().monomial(1, 0));
        for z in c.km().z_m() {
            let tz = c.torus().c_s_inv(&z).unwrap();
            let cz = CycloNum::zeta_pow(n, (c.dual.eval(chi, &tz) * (n / c.exponent())) as i64);
            assert_eq!(td.theta_at(&mat.mul(&z, &g)), cz.mul(&td.theta_at(&g)));
        }
    }

    #[test]
    fn even_type_q2() {
        let c = ctx(2, 2);
        let chi = &c.dual.minimal_classes()[0];
        let td = c.build_type(chi).unwrap();
        assert!(td.checks.iter().all(|(_, ok)| *ok), "{:?}", td.checks);
        assert_eq!(td.lambda_dim, 2);
        assert_eq!(td.lambda(&c.km().mat.identity()).to_integer(), Some(2));
        assert_eq!(td.theta_dim(), Some(4));
    }
}
