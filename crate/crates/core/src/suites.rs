//! Named verification suites. Each suite appends one [`Record`] per check;
//! records come out in a fixed order so reports are byte-stable.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::adlv::{
    self, build_system, count_points, invm_normal_form, key_computation, lefschetz_check, open_curve_count, phi_w,
    random_cv_point, random_normal_form, Kind, SystemParams, DEFAULT_COUNT_BOUND,
};
use crate::bhtypes::{BhContext, ExhaustiveReport};
use crate::chars::{AbelianChar, TorusDual};
use crate::cyclo::{lcm, CycloNum};
use crate::error::{Error, Result};
use crate::groups::{class_index, GL2Elem};
use crate::trace::{work_field, CharTable, TraceEngine};

/// Inputs shared by all suites.
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub q: u32,
    pub m: usize,
    pub n: Option<usize>,
    /// `None` or `"all"`: every minimal class; `"minimal"`: the first one; otherwise a character spec.
    pub chi: Option<String>,
    /// Largest group or scan the suites may enumerate.
    pub bound: u64,
    pub psi_seed: u64,
    /// Random samples for the normal-form checks.
    pub samples: usize,
}

impl SuiteConfig {
    pub fn new(q: u32, m: usize) -> SuiteConfig {
        SuiteConfig { q, m, n: None, chi: None, bound: 1 << 20, psi_seed: 0, samples: 1000 }
    }

    fn pe(&self) -> Result<(u32, u32)> {
        adlv::prime_power(self.q)
    }

    fn params(&self) -> Value {
        json!({"q": self.q, "m": self.m})
    }

    fn chi_params(&self, dual: &TorusDual, chi: &AbelianChar) -> Value {
        json!({"q": self.q, "m": self.m, "chi": dual.spec_for(chi).format()})
    }

    /// The characters selected by `chi`, each a minimal class representative.
    pub fn characters(&self, dual: &TorusDual) -> Result<Vec<AbelianChar>> {
        let all = dual.minimal_classes();
        match self.chi.as_deref() {
            None | Some("all") => Ok(all),
            Some("minimal") => Ok(all.into_iter().take(1).collect()),
            Some(spec) => {
                let chi = dual.parse_chi(spec)?.chi;
                if !dual.is_minimal(&chi) {
                    return Err(Error::Validation(format!("chi '{spec}' is not minimal of level {}", self.m)));
                }
                Ok(vec![chi])
            }
        }
    }
}

/// One named check with its parameters and outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub name: String,
    pub params: Value,
    pub expected: Value,
    pub got: Value,
    pub pass: bool,
}

impl Record {
    pub fn new(name: &str, params: Value, expected: impl Serialize, got: impl Serialize) -> Record {
        let expected = serde_json::to_value(expected).unwrap_or(Value::Null);
        let got = serde_json::to_value(got).unwrap_or(Value::Null);
        let pass = expected == got;
        Record { name: name.into(), params, expected, got, pass }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

pub trait VerifySuite: Send + Sync {
    fn name(&self) -> &'static str;
    /// Appends records to `out`; on error the records so far stay in `out`.
    fn run(&self, cfg: &SuiteConfig, out: &mut Vec<Record>) -> Result<()>;
}

/// Suites by name; `all` runs every registered suite in [`SuiteRegistry::ORDER`].
pub struct SuiteRegistry {
    suites: HashMap<String, Box<dyn VerifySuite>>,
}

impl Default for SuiteRegistry {
    fn default() -> Self {
        let mut reg = SuiteRegistry { suites: HashMap::new() };
        reg.register(Box::new(Unipotent));
        reg.register(Box::new(Torus));
        reg.register(Box::new(Varieties));
        reg.register(Box::new(Bh));
        reg.register(Box::new(Compare));
        reg
    }
}

impl SuiteRegistry {
    pub const ORDER: [&'static str; 5] = ["unipotent", "torus", "varieties", "bh", "compare"];

    pub fn register(&mut self, suite: Box<dyn VerifySuite>) {
        self.suites.insert(suite.name().to_string(), suite);
    }

    pub fn get(&self, name: &str) -> Option<&dyn VerifySuite> {
        self.suites.get(name).map(|s| s.as_ref())
    }

    pub fn names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.suites.keys().cloned().collect();
        v.sort();
        v
    }

    pub fn run(&self, name: &str, cfg: &SuiteConfig, out: &mut Vec<Record>) -> Result<()> {
        if name == "all" {
            for s in Self::ORDER {
                // the type construction needs positive level
                if (s == "bh" || s == "compare") && cfg.m == 0 {
                    continue;
                }
                if let Some(suite) = self.get(s) {
                    suite.run(cfg, out)?;
                }
            }
            return Ok(());
        }
        let suite = self
            .get(name)
            .ok_or_else(|| Error::Validation(format!("unknown suite '{name}', expected one of {:?} or all", self.names())))?;
        suite.run(cfg, out)
    }
}

fn check_bound(what: &str, size: usize, bound: u64) -> Result<()> {
    if size as u64 > bound {
        return Err(Error::BoundExceeded { what: what.into(), size: size as u128, bound: bound as u128 });
    }
    Ok(())
}

fn km_order(q: u64, m: usize) -> u64 {
    (q * q - 1) * (q * q - q) * q.pow(4 * m as u32)
}

struct Unipotent;

impl VerifySuite for Unipotent {
    fn name(&self) -> &'static str {
        "unipotent"
    }

    fn run(&self, cfg: &SuiteConfig, out: &mut Vec<Record>) -> Result<()> {
        let (p, e) = cfg.pe()?;
        let eng = TraceEngine::new(p, e, cfg.m)?;
        let km = &eng.dual.torus.km;
        let (q, m) = (cfg.q as i64, cfg.m);
        let nm = km.n_m();
        for chi in cfg.characters(&eng.dual)? {
            let params = cfg.chi_params(&eng.dual, &chi);
            let dim = eng.trace_xi(&km.mat.identity(), &chi)?;
            out.push(Record::new("dimension", params.clone(), Some((q - 1) * q.pow(m as u32)), dim.to_integer()));
            let xi = eng.trace_many(&nm, &chi)?;
            let wrong = nm
                .iter()
                .zip(&xi)
                .filter(|(g, v)| {
                    let l = km.mat.level(g);
                    let want = if l > m {
                        q.pow(m as u32 + 1) - q.pow(m as u32)
                    } else if l == m {
                        -q.pow(m as u32)
                    } else {
                        0
                    };
                    v.to_integer() != Some(want)
                })
                .count();
            out.push(Record::new("unipotent traces: mismatches", params.clone(), 0, wrong));
            out.push(unipotent_decomposition(&eng, &nm, &xi, params)?);
        }
        // solution-count formulas are independent of chi
        let mut elems = nm;
        elems.extend(eng.maximal_elements()?);
        let results: Vec<(u64, u64, u64)> = elems
            .par_iter()
            .map(|g| {
                let (mut checked, mut oracle, mut wrong) = (0u64, 0u64, 0u64);
                for tau in eng.compatible_taus(g) {
                    let got = eng.solve_sprime(g, &tau)?;
                    if let Some(want) = eng.predicted_sprime(g, &tau)? {
                        checked += 1;
                        wrong += (got != want) as u64;
                    }
                    match eng.naive_oracle_sprime(g, &tau, 1 << 22) {
                        Ok(n) => {
                            oracle += 1;
                            wrong += (n != got) as u64;
                        }
                        Err(Error::BoundExceeded { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
                Ok((checked, oracle, wrong))
            })
            .collect::<Result<_>>()?;
        let (checked, oracle, wrong) =
            results.iter().fold((0, 0, 0), |a, r| (a.0 + r.0, a.1 + r.1, a.2 + r.2));
        let mut rec = Record::new("solution counts: mismatches", cfg.params(), 0, wrong);
        rec.got = json!({"mismatches": wrong, "formula_checked": checked, "oracle_checked": oracle});
        rec.expected = json!({"mismatches": 0});
        rec.pass = wrong == 0 && checked > 0;
        out.push(rec);
        Ok(())
    }
}

/// Multiplicities of the characters of `N_m = F_q[t]/t^(m+1)` in `xi`.
fn unipotent_decomposition(eng: &TraceEngine, nm: &[GL2Elem], xi: &[CycloNum], params: Value) -> Result<Record> {
    let f = &eng.dual.torus.km.ring().f;
    let m = eng.m();
    let p = f.p as u64;
    let n = eng.n_cyc;
    let q = f.size as u64;
    let total = q.pow(m as u32 + 1);
    let inv = BigRational::new(1.into(), BigInt::from(nm.len()));
    let wrong: Vec<u64> = (0..total)
        .into_par_iter()
        .map(|code| {
            let b: Vec<u8> = (0..=m).map(|i| (code / q.pow(i as u32) % q) as u8).collect();
            let mut acc = CycloNum::zero(n);
            for (g, v) in nm.iter().zip(xi) {
                let mut s = 0u8;
                for i in 0..=m {
                    s = f.add(s, f.mul(b[i], g.x[1][i]));
                }
                let ex = (f.abs_trace(s) % f.p) as u64;
                acc = acc.add(&v.mul(&CycloNum::zeta_pow(n, -((ex * (n / p)) as i64))));
            }
            let mult = acc.scale(&inv).to_integer();
            let want = if b[m] != 0 { 1 } else { 0 };
            if mult == Some(want) {
                Ok(None)
            } else {
                Ok(Some(code))
            }
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(Record::new("unipotent decomposition: mismatches", params, 0, wrong.len()))
}

struct Torus;

impl VerifySuite for Torus {
    fn name(&self) -> &'static str {
        "torus"
    }

    fn run(&self, cfg: &SuiteConfig, out: &mut Vec<Record>) -> Result<()> {
        let (p, e) = cfg.pe()?;
        let eng = TraceEngine::new(p, e, cfg.m)?;
        let dual = &eng.dual;
        let t = &dual.torus;
        let km = &t.km;
        let (q, m) = (cfg.q as i64, cfg.m as i64);
        let n = eng.n_cyc;
        let chis = cfg.characters(dual)?;
        let maximal = eng.maximal_elements()?;
        let scalars: Vec<_> = km.ring().units().map(|u| t.from_base(&u)).collect();
        let mut recovered: Vec<Vec<AbelianChar>> = Vec::new();
        let irreducible = km_order(cfg.q as u64, cfg.m) <= cfg.bound;
        let classes = if irreducible {
            let els = km.elements(cfg.bound)?;
            Some(crate::groups::conjugacy_classes(&km.mat, &els, &km.generators(), cfg.bound as usize)?)
        } else {
            None
        };
        for chi in &chis {
            let params = cfg.chi_params(dual, chi);
            let cs = dual.sigma_char(chi);
            let vals = eng.trace_many(&maximal, chi)?;
            let mut wrong = 0;
            for (x, v) in maximal.iter().zip(&vals) {
                let l = km.mat.level(x) as i64;
                let sign = if (m - l + 1).rem_euclid(2) == 0 { 1 } else { -1 };
                let s = eng.chi_tilde(chi, x)?.add(&eng.chi_tilde(&cs, x)?);
                let want = s.scale(&BigRational::from_integer(BigInt::from(sign * q.pow(l as u32))));
                wrong += (v.lift(n)? != want.lift(n)?) as usize;
            }
            out.push(Record::new("semisimple traces: mismatches", params.clone(), 0, wrong));

            let xi = eng.xi_on_hm(chi)?;
            let mut bad = 0;
            let mut checked = 0;
            for psi in dual.group.characters() {
                if !dual.group.agree_on(&psi, chi, &scalars) {
                    continue;
                }
                checked += 1;
                let mult = eng.hm_multiplicity(&psi, &xi)?;
                let i = dual.i_of_psi(&psi, chi) as i64;
                let want = if (m - i).rem_euclid(2) == 1 { 1 } else { 0 };
                bad += (mult != want) as usize;
            }
            let mut rec = Record::new("H_m multiplicities: mismatches", params.clone(), 0, bad);
            rec.got = json!({"mismatches": bad, "characters": checked});
            rec.expected = json!({"mismatches": 0, "characters": checked});
            out.push(rec);

            let mut got = eng.recover_chi(&xi)?;
            got.sort();
            let mut want = vec![chi.clone(), cs];
            want.sort();
            let fmt = |v: &[AbelianChar]| v.iter().map(|c| dual.spec_for(c).format()).collect::<Vec<_>>();
            out.push(Record::new("character recovery", params.clone(), fmt(&want), fmt(&got)));
            recovered.push(got);

            if let Some(cl) = &classes {
                let reps: Vec<GL2Elem> = cl.iter().map(|c| c.0).collect();
                let values = eng.trace_many(&reps, chi)?;
                let table = CharTable {
                    group: format!("K_{}", cfg.m),
                    classes: cl.iter().map(|(g, s)| (km.mat.encode(g), *s)).collect(),
                    values,
                    provenance: "trace".into(),
                };
                out.push(Record::new("irreducibility: norm", params.clone(), Some(1i64), table.norm().to_integer()));
            }
        }
        if chis.len() > 1 {
            let distinct: BTreeSet<&Vec<AbelianChar>> = recovered.iter().collect();
            out.push(Record::new("character recovery: injective", cfg.params(), chis.len(), distinct.len()));
        }
        Ok(())
    }
}

struct Varieties;

impl VerifySuite for Varieties {
    fn name(&self) -> &'static str {
        "varieties"
    }

    fn run(&self, cfg: &SuiteConfig, out: &mut Vec<Record>) -> Result<()> {
        let (p, e) = cfg.pe()?;
        let params = SystemParams::new(cfg.q, cfg.m, cfg.n)?;
        let pj = json!({"q": cfg.q, "m": cfg.m, "n": params.n});
        let q = cfg.q as u128;
        let bound = DEFAULT_COUNT_BOUND;
        if cfg.m >= 1 {
            let z = build_system(Kind::Zm1, params)?;
            let count = count_points(z.as_ref(), 1, bound)?;
            out.push(Record::new("Zm1 point count", pj.clone(), q.pow(3 * cfg.m as u32).to_string(), count.to_string()));
            let v = lefschetz_check(z.as_ref(), 1, None, bound)?;
            let mut rec = Record::new("Zm1 Lefschetz sum", pj.clone(), count.to_string(), v.predicted.to_string());
            rec.pass = v.equal && v.maximal == Some(true);
            out.push(rec);
        }
        let w = work_field(p, e, 2)?;
        let f = w.field();
        let mut rng = adlv::rng(cfg.psi_seed ^ 0x5eed);
        let n = params.n;
        let (mut round, mut key) = (0usize, 0usize);
        for _ in 0..cfg.samples {
            let nf = random_normal_form(&w, cfg.m, true, &mut rng)?;
            let x = phi_w(f, &nf, n, (2 * n + 4 * cfg.m + 8) as i32);
            round += (invm_normal_form(f, &x, n, cfg.m)? == nf) as usize;
            let pt = random_cv_point(&w, n, cfg.m, &mut rng)?;
            let (got, want) = key_computation(f, &pt, n, cfg.m)?;
            key += (got == want) as usize;
        }
        out.push(Record::new("normal form roundtrip", pj.clone(), cfg.samples, round));
        out.push(Record::new("key computation", pj.clone(), cfg.samples, key));
        let y = build_system(Kind::Yv0m, params)?;
        for s in [1u32, 2] {
            let curve = open_curve_count(p, e, s)?;
            let v = lefschetz_check(y.as_ref(), s, Some(curve), bound)?;
            let mut ps = pj.clone();
            ps["s"] = json!(s);
            out.push(Record::new("Yv0m Lefschetz prediction", ps, v.predicted.to_string(), v.counted.to_string()));
        }
        Ok(())
    }
}

struct Bh;

impl VerifySuite for Bh {
    fn name(&self) -> &'static str {
        "bh"
    }

    fn run(&self, cfg: &SuiteConfig, out: &mut Vec<Record>) -> Result<()> {
        let (p, e) = cfg.pe()?;
        let ctx = BhContext::new(p, e, cfg.m, cfg.psi_seed)?;
        check_bound("K_m", km_order(cfg.q as u64, cfg.m) as usize, cfg.bound)?;
        let mut base = cfg.params();
        base["psi"] = json!(cfg.psi_seed);
        let y = ctx.annihilator_y();
        let fam = ctx.y_family();
        let mut rec = Record::new("annihilator lattice: family", base, (cfg.q * cfg.q) as usize, y.len());
        rec.pass = rec.pass && y == fam;
        out.push(rec);
        let (q, m) = (cfg.q as i64, cfg.m);
        let mut seen: HashMap<String, (ExhaustiveReport, Vec<ExhaustiveReport>)> = HashMap::new();
        for chi in cfg.characters(&ctx.dual)? {
            let mut params = cfg.chi_params(&ctx.dual, &chi);
            params["psi"] = json!(cfg.psi_seed);
            let st = ctx.derive_alpha(&chi)?;
            out.push(Record::new("stratum is simple", params.clone(), true, st.simple));
            // both verdicts depend on chi only through alpha
            let key = st.to_json().to_string();
            if !seen.contains_key(&key) {
                let inter = ctx.intertwining_report(&st, cfg.bound)?;
                let cong = (1..=m.div_ceil(2)).map(|k| ctx.check_congruence(&st, k)).collect::<Result<Vec<_>>>()?;
                seen.insert(key.clone(), (inter, cong));
            }
            let (r, cong) = &seen[&key];
            let mut rec = Record::new("intertwining set equals J_alpha", params.clone(), 0, r.counterexamples.len());
            rec.got = json!({"counterexamples": r.counterexamples.len(), "checked": r.checked});
            rec.expected = json!({"counterexamples": 0, "checked": r.checked});
            out.push(rec);
            for (k, r) in cong.iter().enumerate() {
                let mut pk = params.clone();
                pk["k"] = json!(k + 1);
                out.push(Record::new("congruence check: counterexamples", pk, 0, r.counterexamples.len()));
            }
            let td = ctx.build_type(&chi)?;
            let failed: Vec<&String> = td.checks.iter().filter(|c| !c.1).map(|c| &c.0).collect();
            out.push(Record::new("type construction checks", params.clone(), Vec::<String>::new(), failed));
            out.push(Record::new("type dimension", params.clone(), Some((q - 1) * q.pow(m as u32)), td.theta_dim()));
            let cs = ctx.dual.sigma_char(&chi);
            let mults = td.cusp_multiplicities()?;
            let wrong = mults
                .iter()
                .filter(|(c, v)| {
                    let own = *c == chi || *c == cs;
                    let want = if (m % 2 == 1) == own { 1 } else { 0 };
                    *v != want
                })
                .count();
            let mut rec = Record::new("cuspidal type multiplicities: mismatches", params, 0, wrong);
            rec.got = json!({"mismatches": wrong, "characters": mults.len()});
            rec.expected = json!({"mismatches": 0, "characters": mults.len()});
            out.push(rec);
        }
        Ok(())
    }
}

struct Compare;

impl VerifySuite for Compare {
    fn name(&self) -> &'static str {
        "compare"
    }

    fn run(&self, cfg: &SuiteConfig, out: &mut Vec<Record>) -> Result<()> {
        let (p, e) = cfg.pe()?;
        let ctx = BhContext::new(p, e, cfg.m, cfg.psi_seed)?;
        let eng = TraceEngine::new(p, e, cfg.m)?;
        let km = ctx.km();
        let els = km.elements(cfg.bound)?;
        let gens = km.generators();
        let (classes, index) = class_index(&km.mat, &els, &gens)?;
        let reps: Vec<GL2Elem> = classes.iter().map(|c| c.0).collect();
        let q = cfg.q as i64;
        for chi in cfg.characters(&ctx.dual)? {
            let mut params = cfg.chi_params(&ctx.dual, &chi);
            params["psi"] = json!(cfg.psi_seed);
            let xi = eng.trace_many(&reps, &chi)?;
            let td = ctx.build_type(&chi)?;
            let theta = td.theta_table(&classes);
            let n = lcm(eng.n_cyc, td.n_cyc);
            let mut wrong = 0;
            for (a, b) in xi.iter().zip(&theta.values) {
                wrong += (a.lift(n)? != b.lift(n)?) as usize;
            }
            let mut rec = Record::new("trace character equals induced type", params.clone(), 0, wrong);
            rec.got = json!({"mismatched_classes": wrong, "classes": classes.len()});
            rec.expected = json!({"mismatched_classes": 0, "classes": classes.len()});
            out.push(rec);
            let dim = td.theta_dim();
            out.push(Record::new("induced type dimension", params.clone(), Some((q - 1) * q.pow(cfg.m as u32)), dim));

            let occ = ctx.stratum_occurrences(&|g: &GL2Elem| xi[index[g]].clone())?;
            let found: BTreeSet<[u8; 4]> = occ.iter().map(|o| o.a).collect();
            let closed = occ.iter().all(|o| {
                gens.iter().all(|g| found.contains(&conj_mod_t(ctx.km(), g, o.a)))
            });
            let ok = !occ.is_empty() && closed && occ.iter().all(|o| o.simple && !o.trivial_on_unipotent);
            let mut rec = Record::new("occurring strata are unramified simple", params, true, ok);
            rec.got = json!({"occurring": occ.len(), "conjugation_closed": closed, "all_simple": ok});
            rec.expected = json!({"occurring": occ.len(), "conjugation_closed": true, "all_simple": true});
            out.push(rec);
        }
        Ok(())
    }
}

/// `g a g^-1` for `a in M_2(F_q)`, using `g mod t`.
fn conj_mod_t(km: &crate::groups::Km, g: &GL2Elem, a: [u8; 4]) -> [u8; 4] {
    let mat = &km.mat;
    let g0 = mat.truncate(g, 1);
    let mut x = mat.identity();
    for i in 0..4 {
        x.x[i] = km.ring().constant(a[i]);
    }
    let c = mat.mul(&mat.mul(&g0, &x), &mat.inv(&g0).expect("g is invertible"));
    [c.x[0][0], c.x[1][0], c.x[2][0], c.x[3][0]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_and_unknown() {
        let reg = SuiteRegistry::default();
        assert_eq!(reg.names(), vec!["bh", "compare", "torus", "unipotent", "varieties"]);
        let mut out = Vec::new();
        assert!(matches!(reg.run("nope", &SuiteConfig::new(2, 1), &mut out), Err(Error::Validation(_))));
    }

    #[test]
    fn record_field_order() {
        let r = Record::new("x", json!({"q": 2}), 1, 1);
        assert_eq!(r.to_line(), r#"{"name":"x","params":{"q":2},"expected":1,"got":1,"pass":true}"#);
    }

    #[test]
    fn bh_suite_q2_m1() {
        let reg = SuiteRegistry::default();
        let mut out = Vec::new();
        reg.run("bh", &SuiteConfig::new(2, 1), &mut out).unwrap();
        assert!(out.iter().all(|r| r.pass), "{:?}", out.iter().find(|r| !r.pass));
    }

    #[test]
    fn non_minimal_chi_rejected() {
        let cfg = SuiteConfig { chi: Some("0:0".into()), ..SuiteConfig::new(2, 1) };
        let reg = SuiteRegistry::default();
        let mut out = Vec::new();
        assert!(matches!(reg.run("torus", &cfg, &mut out), Err(Error::Validation(_))));
    }
}
