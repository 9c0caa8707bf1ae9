//! The `singprop` command line.
//!
//! Exit codes: 0 success, 1 pipeline failure or a certificate that did not
//! pass, 2 usage or scenario parse error, 3 I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geom::{hausdorff, Vec2};
use crate::model::SemiconcaveFn;
use crate::oracle;
use crate::pipeline::{self, ArcStart, CertifyOptions};
use crate::report::{self, num, point, points, polygon};
use crate::scenario::Scenario;
use crate::subdiff;
use crate::tracer::TraceOptions;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Overrides the oracle sampling seed.
pub const SEED_ENV: &str = "SINGPROP_SEED";
/// Samples and radius of the gradient cross-check in `analyze`.
pub const ORACLE_SAMPLES: usize = 512;
pub const ORACLE_RADIUS: f64 = 1e-4;

#[derive(Parser, Debug)]
#[command(name = "singprop", version, about = "Trace and certify singular arcs of min-of-polynomials functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gradient sets and the propagation criterion at points.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Point to analyze; defaults to the scenario seeds.
        #[arg(num_args = 2, value_names = ["X1", "X2"], allow_negative_numbers = true)]
        at: Option<Vec<f64>>,
    },
    /// Grid scan for nondifferentiability.
    Scan {
        #[command(flatten)]
        common: Common,
    },
    /// Trace singular arcs from the seeds.
    Trace {
        #[command(flatten)]
        common: Common,
    },
    /// Trace, build the DC decomposition and certify the turn of every arc.
    Certify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    max_len: Option<f64>,
    #[arg(long)]
    tol_active: Option<f64>,
    #[arg(long)]
    delta_min: Option<f64>,
    #[arg(long)]
    turn_tol: Option<f64>,
    #[arg(long)]
    grid_h: Option<f64>,
}

/// Runs the CLI on `args` (including the program name), printing to the
/// process stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let seed = std::env::var(SEED_ENV).ok();
    run_with(args, seed.as_deref(), &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(args: I, seed_env: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let seed = match seed_env.map(parse_seed) {
        None => oracle::DEFAULT_SEED,
        Some(Some(s)) => s,
        Some(None) => {
            diagnose(err, EXIT_PARSE, &format!("{SEED_ENV} is not an unsigned integer"));
            return EXIT_PARSE;
        }
    };
    match execute(cli.command, seed, err) {
        Ok((code, summary)) => {
            let _ = write!(out, "{}", report::to_pretty(&summary));
            code
        }
        Err(e) => {
            let code = exit_code(&e);
            diagnose(err, code, &e.to_string());
            code
        }
    }
}

fn parse_seed(s: &str) -> Option<u64> {
    let s = s.trim();
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16).ok(),
        None => s.replace('_', "").parse().ok(),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } => EXIT_PARSE,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_FAILURE,
    }
}

fn diagnose(err: &mut dyn Write, code: i32, msg: &str) {
    let _ = write!(err, "{}", report::to_pretty(&json!({ "error": msg, "exit_code": code })));
}

struct Loaded {
    sc: Scenario,
    f: SemiconcaveFn,
    out: PathBuf,
    cert: CertifyOptions,
    grid_h: f64,
}

fn load(c: Common) -> Result<Loaded> {
    let text = std::fs::read_to_string(&c.scenario)?;
    let mut sc = Scenario::parse(&text)?;
    let o = &mut sc.options;
    for (name, value, slot) in [
        ("step", c.step, &mut o.step),
        ("max-len", c.max_len, &mut o.max_len),
        ("tol-active", c.tol_active, &mut o.tol_active),
        ("delta-min", c.delta_min, &mut o.delta_min),
        ("turn-tol", c.turn_tol, &mut o.turn_tol),
    ] {
        if let Some(v) = value {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parse { line: 0, msg: format!("--{name} must be positive") });
            }
            *slot = v;
        }
    }
    if let Some(h) = c.grid_h {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Parse { line: 0, msg: "--grid-h must be positive".into() });
        }
        o.grid_h = Some(h);
    }
    let f = sc.function()?;
    let o = sc.options;
    let cert = CertifyOptions {
        trace: TraceOptions { step: o.step, max_len: o.max_len, tol_active: o.tol_active },
        delta_min: o.delta_min,
        turn_tol: o.turn_tol,
    };
    let grid_h = sc.grid_h();
    Ok(Loaded { sc, f, out: c.out, cert, grid_h })
}

fn execute(cmd: Command, seed: u64, err: &mut dyn Write) -> Result<(i32, Value)> {
    match cmd {
        Command::Analyze { common, at } => analyze(load(common)?, at, seed),
        Command::Scan { common } => scan(load(common)?),
        Command::Trace { common } => trace(load(common)?, err),
        Command::Certify { common } => certify(load(common)?, err),
    }
}

fn starts(l: &Loaded) -> Result<Vec<ArcStart>> {
    pipeline::arc_starts(&l.f, &l.sc.seeds, l.grid_h, l.cert.trace.tol_active)
}

const NO_SEEDS: &str = "no singular seeds";

/// With nothing to trace, only the summary is written and the run fails.
fn no_arcs(l: &Loaded, command: &str, err: &mut dyn Write) -> Result<(i32, Value)> {
    diagnose(err, EXIT_FAILURE, NO_SEEDS);
    let mut body = Map::new();
    body.insert("arcs".into(), json!([]));
    body.insert("error".into(), json!(NO_SEEDS));
    if command == "certify" {
        body.insert("passed".into(), json!(false));
    }
    finish(l, command, Vec::new(), body, EXIT_FAILURE)
}

fn finish(
    l: &Loaded,
    command: &str,
    mut files: Vec<(String, String)>,
    mut body: Map<String, Value>,
    code: i32,
) -> Result<(i32, Value)> {
    body.insert("command".into(), json!(command));
    body.insert("exit_code".into(), json!(code));
    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    let suffix = match command {
        "analyze" | "scan" => command,
        _ => "summary",
    };
    let summary_name = format!("{}_{suffix}.json", l.sc.name);
    body.insert("files".into(), json!([names, vec![summary_name.as_str()]].concat()));
    let summary = report::with_header(&l.sc.name, body);
    files.push((summary_name, report::to_pretty(&summary)));
    report::write_all(&l.out, &files)?;
    Ok((code, summary))
}

fn analyze(l: Loaded, at: Option<Vec<f64>>, seed: u64) -> Result<(i32, Value)> {
    let tol = l.cert.trace.tol_active;
    let pts: Vec<Vec2> = match at {
        Some(v) => vec![Vec2::new(v[0], v[1])],
        None if !l.sc.seeds.is_empty() => l.sc.seeds.clone(),
        None => {
            let found = starts(&l)?;
            if found.is_empty() {
                return Err(Error::InvalidArgument(NO_SEEDS.into()));
            }
            let mut ps: Vec<Vec2> = Vec::new();
            for s in found {
                if !ps.contains(&s.x0) {
                    ps.push(s.x0);
                }
            }
            ps
        }
    };
    let mut entries = Vec::new();
    for x in pts {
        let ds = subdiff::reachable_gradients(&l.f, x, tol)?;
        let dplus = subdiff::superdifferential(&ds);
        let sampled = oracle::sampled_reachable_gradients(&l.f, x, ORACLE_RADIUS, ORACLE_SAMPLES, seed);
        let oracle = match sampled {
            Ok(g) => json!({
                "gradients": points(g.points()),
                "hausdorff": num(hausdorff(g.points(), ds.points())),
            }),
            Err(e) => json!({ "error": e.to_string() }),
        };
        entries.push(json!({
            "point": point(x),
            "value": num(l.f.eval_min(x)?),
            "active": l.f.active_set(x, tol)?,
            "reachable_gradients": points(ds.points()),
            "superdifferential": polygon(&dplus),
            "diam": num(dplus.diam()),
            "subdifferential_f": polygon(&subdiff::subdiff_f(&l.f, x, tol)?),
            "criterion": subdiff::propagation_criterion(&ds),
            "oracle": oracle,
        }));
    }
    let mut body = Map::new();
    body.insert("k".into(), num(l.f.k()));
    body.insert("l".into(), num(l.f.l()));
    body.insert("oracle_seed".into(), json!(seed));
    body.insert("oracle_radius".into(), num(ORACLE_RADIUS));
    body.insert("points".into(), Value::Array(entries));
    finish(&l, "analyze", Vec::new(), body, EXIT_OK)
}

fn scan(l: Loaded) -> Result<(i32, Value)> {
    let s = oracle::grid_singularity_scan(&l.f, l.grid_h)?;
    let mut csv = String::from("col,row,x1,x2\n");
    for &cell in &s.flagged {
        let c = s.center(cell);
        csv.push_str(&format!("{},{},{},{}\n", cell.0, cell.1, report::fmt_f64(c.x), report::fmt_f64(c.y)));
    }
    let mut body = Map::new();
    body.insert("h".into(), num(s.h));
    body.insert("threshold".into(), num(s.threshold));
    body.insert("cells".into(), json!([s.nx, s.ny]));
    body.insert("flagged".into(), json!(s.flagged.len()));
    finish(&l, "scan", vec![(format!("{}_scan.csv", l.sc.name), csv)], body, EXIT_OK)
}

fn arc_id(k: usize) -> String {
    format!("arc{k}")
}

fn trace(l: Loaded, err: &mut dyn Write) -> Result<(i32, Value)> {
    let found = starts(&l)?;
    if found.is_empty() {
        return no_arcs(&l, "trace", err);
    }
    let arcs = pipeline::trace_all(&l.f, &found, &l.cert.trace)?;
    let mut files = Vec::new();
    let mut summaries = Vec::new();
    for (k, arc) in arcs.iter().enumerate() {
        let id = arc_id(k);
        let s = report::arc_summary(&id, arc);
        let mut body = Map::new();
        body.insert("arc".into(), s.clone());
        let doc = report::with_header(&l.sc.name, body);
        files.push((format!("{}_{id}.csv", l.sc.name), report::arc_csv(arc)));
        files.push((format!("{}_{id}.json", l.sc.name), report::to_pretty(&doc)));
        summaries.push(s);
    }
    let mut body = Map::new();
    body.insert("arcs".into(), Value::Array(summaries));
    finish(&l, "trace", files, body, EXIT_OK)
}

fn certify(l: Loaded, err: &mut dyn Write) -> Result<(i32, Value)> {
    let found = starts(&l)?;
    if found.is_empty() {
        return no_arcs(&l, "certify", err);
    }
    let arcs = pipeline::trace_all(&l.f, &found, &l.cert.trace)?;
    let mut files = Vec::new();
    let mut results = Vec::new();
    let mut all_passed = true;
    for (k, arc) in arcs.into_iter().enumerate() {
        let id = arc_id(k);
        let csv = report::arc_csv(&arc);
        let doc = match pipeline::certify_arc(&l.f, arc.clone(), &l.cert) {
            Ok(r) => report::certificate_json(&l.sc.name, &id, &r),
            Err(e) => report::failure_json(&l.sc.name, &id, &arc, &e.to_string()),
        };
        let passed = doc["passed"].as_bool().unwrap_or(false);
        all_passed &= passed;
        results.push(json!({ "id": id, "passed": passed, "stop_reason": arc.stop_reason.as_str() }));
        files.push((format!("{}_{id}.csv", l.sc.name), csv));
        files.push((format!("{}_{id}.json", l.sc.name), report::to_pretty(&doc)));
    }
    let mut body = Map::new();
    body.insert("arcs".into(), Value::Array(results));
    body.insert("passed".into(), json!(all_passed));
    finish(&l, "certify", files, body, if all_passed { EXIT_OK } else { EXIT_FAILURE })
}
