use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use adlv_core::adlv::{open_curve_count, prime_power, Kind, SystemParams, SystemRegistry, DEFAULT_COUNT_BOUND};
use adlv_core::bhtypes::BhContext;
use adlv_core::cache::CountCache;
use adlv_core::groups::conjugacy_classes;
use adlv_core::suites::{Record, SuiteConfig, SuiteRegistry};
use adlv_core::trace::{CharTable, TraceEngine};
use adlv_core::{adlv, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

const DEFAULT_CACHE: &str = "adlv-cache.jsonl";

#[derive(Parser)]
#[command(name = "adlv", version, about = "Point counts and character checks for level-m coverings of GL2")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    q: u32,
    #[arg(long)]
    m: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Count points of a variety system over F_{q^(2s)}.
    Count {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1)]
        s: u32,
        /// Largest number of scanned points.
        #[arg(long)]
        bound: Option<u128>,
        /// Count cache (JSON lines); ADLV_CACHE takes precedence.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Run verification suites and write one JSON record per check.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "all")]
        suite: String,
        /// Character spec `g0:e0,g1:e1,...`, `minimal` or `all`.
        #[arg(long)]
        chi: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        /// Largest group the suites may enumerate.
        #[arg(long)]
        bound: Option<u64>,
        /// Seed of the additive character; 0 is the standard one.
        #[arg(long, default_value_t = 0)]
        psi: u64,
    },
    /// Export a character table on the conjugacy classes of K_m.
    Table {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        chi: String,
        #[arg(long, value_enum, default_value_t = Source::Trace)]
        source: Source,
        #[arg(long, default_value_t = 0)]
        psi: u64,
    },
    /// Export the simple stratum attached to a character.
    Stratum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        chi: String,
        #[arg(long, default_value_t = 0)]
        psi: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    /// The trace formula on the variety.
    Trace,
    /// The character induced from the cuspidal type.
    Type,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BoundExceeded { .. } => 2,
        Error::Validation(_) | Error::NonUnit(_) => 3,
        _ => 1,
    }
}

fn writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

#[derive(Serialize)]
struct CountReport {
    params: Value,
    count: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    lefschetz: Option<Value>,
}

fn cmd_count(
    common: &Common,
    kind: &str,
    n: Option<usize>,
    s: u32,
    bound: u128,
    cache: PathBuf,
) -> Result<CountReport, Error> {
    let kind: Kind = kind.parse()?;
    let params = SystemParams::new(common.q, common.m, n)?;
    let reg = SystemRegistry::default();
    let sys = reg
        .get(kind.name(), params)
        .ok_or_else(|| Error::Validation(format!("unknown kind {kind}")))??;
    if s == 0 {
        return Err(Error::Validation("s must be positive".into()));
    }
    let mut cache = CountCache::open(cache)?;
    let id = sys.id();
    let count = match cache.get(&id, s) {
        Some(c) => c,
        None => {
            let c = adlv::count_points(sys.as_ref(), s, bound)?;
            cache.insert(&id, s, c)?;
            c
        }
    };
    let mut report = CountReport {
        params: json!({"kind": kind.name(), "q": common.q, "m": params.m, "n": params.n, "s": s}),
        count,
        lefschetz: None,
    };
    let curve = match kind {
        Kind::Yv0m => Some(open_curve_count(params.p, params.e, s)?),
        _ => None,
    };
    if matches!(kind, Kind::Yv0m | Kind::Zm1) {
        let v = adlv::lefschetz_verdict(sys.as_ref(), s, curve, count)?;
        report.lefschetz = Some(json!({
            "predicted": v.predicted.to_string(),
            "equal": v.equal,
            "maximal": v.maximal,
        }));
    }
    Ok(report)
}

fn cmd_table(common: &Common, chi: &str, source: Source, psi: u64) -> Result<Value, Error> {
    let (p, e) = prime_power(common.q)?;
    let eng = TraceEngine::new(p, e, common.m)?;
    let spec = eng.dual.parse_chi(chi)?;
    let km = &eng.dual.torus.km;
    let els = km.elements(1 << 20)?;
    let classes = conjugacy_classes(&km.mat, &els, &km.generators(), 1 << 20)?;
    let table = match source {
        Source::Trace => {
            let reps: Vec<_> = classes.iter().map(|c| c.0).collect();
            CharTable {
                group: format!("K_{}", common.m),
                classes: classes.iter().map(|(g, s)| (km.mat.encode(g), *s)).collect(),
                values: eng.trace_many(&reps, &spec.chi)?,
                provenance: "trace".into(),
            }
        }
        Source::Type => {
            let ctx = BhContext::new(p, e, common.m, psi)?;
            ctx.build_type(&spec.chi)?.theta_table(&classes)
        }
    };
    Ok(table.to_json(&spec.format()))
}

fn cmd_stratum(common: &Common, chi: &str, psi: u64) -> Result<Value, Error> {
    let (p, e) = prime_power(common.q)?;
    let ctx = BhContext::new(p, e, common.m, psi)?;
    let spec = ctx.dual.parse_chi(chi)?;
    Ok(ctx.derive_alpha(&spec.chi)?.to_json())
}

fn write_line(out: &Option<PathBuf>, v: &impl Serialize) -> Result<(), Error> {
    let mut w = writer(out)?;
    writeln!(w, "{}", serde_json::to_string(v)?)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.cmd {
        Cmd::Count { common, kind, n, s, bound, cache } => {
            let cache = std::env::var_os("ADLV_CACHE")
                .map(PathBuf::from)
                .or(cache)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE));
            let report = cmd_count(&common, &kind, n, s, bound.unwrap_or(DEFAULT_COUNT_BOUND), cache)?;
            write_line(&common.out, &report)?;
            Ok(0)
        }
        Cmd::Verify { common, suite, chi, n, bound, psi } => {
            let mut cfg = SuiteConfig::new(common.q, common.m);
            cfg.n = n;
            cfg.chi = chi;
            cfg.psi_seed = psi;
            if let Some(b) = bound {
                if b == 0 {
                    return Err(Error::Validation("bound must be positive".into()));
                }
                cfg.bound = b;
            }
            let reg = SuiteRegistry::default();
            let mut records: Vec<Record> = Vec::new();
            let res = reg.run(&suite, &cfg, &mut records);
            let mut w = writer(&common.out)?;
            for r in &records {
                writeln!(w, "{}", r.to_line())?;
            }
            w.flush()?;
            res?;
            Ok(if records.iter().all(|r| r.pass) { 0 } else { 1 })
        }
        Cmd::Table { common, chi, source, psi } => {
            write_line(&common.out, &cmd_table(&common, &chi, source, psi)?)?;
            Ok(0)
        }
        Cmd::Stratum { common, chi, psi } => {
            write_line(&common.out, &cmd_stratum(&common, &chi, psi)?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    // clap's own exit code 2 would read as a resource bound
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
