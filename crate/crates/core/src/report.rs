//! JSON and CSV output.
//!
//! Every float is written with 17 significant digits, so reports are
//! byte-identical across runs and round-trip exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Number, Value};

use crate::error::Result;
use crate::geom::Vec2;
use crate::pipeline::ArcReport;
use crate::subdiff::ConvexPolygon;
use crate::tracer::SingularArc;

pub const SCHEMA_VERSION: u32 = 1;
pub const ARC_CSV_HEADER: &str = "s,x1,x2,i,j,t1,t2,diam";

/// `v` with 17 significant digits; non-finite values become `null`.
pub fn num(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    let s = fmt_f64(v);
    Value::Number(s.parse::<Number>().expect("formatted float is a JSON number"))
}

/// `v` as `d.ddddddddddddddddde±x`; zero is always positive.
pub fn fmt_f64(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    let s = format!("{v:.16e}");
    match s.split_once('e') {
        Some((m, e)) if !e.starts_with('-') => format!("{m}e+{e}"),
        _ => s,
    }
}

pub fn point(p: Vec2) -> Value {
    json!([num(p.x), num(p.y)])
}

pub fn points(ps: &[Vec2]) -> Value {
    Value::Array(ps.iter().map(|&p| point(p)).collect())
}

pub fn floats(vs: &[f64]) -> Value {
    Value::Array(vs.iter().map(|&v| num(v)).collect())
}

pub fn polygon(p: &ConvexPolygon) -> Value {
    points(p.vertices())
}

pub fn arc_csv(arc: &SingularArc) -> String {
    let mut out = String::from(ARC_CSV_HEADER);
    out.push('\n');
    for a in &arc.samples {
        let row = [
            fmt_f64(a.s),
            fmt_f64(a.x.x),
            fmt_f64(a.x.y),
            a.pair.0.to_string(),
            a.pair.1.to_string(),
            fmt_f64(a.tangent.x),
            fmt_f64(a.tangent.y),
            fmt_f64(a.dplus_diam),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Everything about an arc except its samples.
pub fn arc_summary(id: &str, arc: &SingularArc) -> Value {
    json!({
        "id": id,
        "seed": point(arc.seed),
        "direction": point(arc.q),
        "pair": [arc.pair.0, arc.pair.1],
        "step": num(arc.options.step),
        "samples": arc.samples.len(),
        "length": num(arc.length()),
        "end": point(arc.samples[arc.samples.len() - 1].x),
        "stop_reason": arc.stop_reason.as_str(),
    })
}

pub fn certificate_json(scenario: &str, id: &str, r: &ArcReport) -> Value {
    let c = &r.checks;
    let cert = &r.certificate;
    json!({
        "schema_version": SCHEMA_VERSION,
        "scenario": scenario,
        "arc": arc_summary(id, &r.arc),
        "cy": {
            "initial_angle": num(r.cy.initial_angle),
            "early_max_angle": num(r.cy.early_max_angle),
            "min_dplus_diam": num(r.cy.min_dplus_diam),
            "delta_min": num(r.cy.delta_min),
            "lipschitz_ratio": num(r.cy.lipschitz_ratio),
        },
        "oracle": {
            "fd_step": num(crate::pipeline::ORACLE_FD_STEP),
            "failures": r.oracle_failures,
            "skipped": r.oracle_skipped,
        },
        "graph": {
            "kept": r.graph.kept,
            "alpha": num(r.graph.alpha()),
            "lipschitz": num(r.graph.lipschitz()),
            "x_range": [num(r.graph.xs[0]), num(r.graph.xs[r.graph.xs.len() - 1])],
        },
        "partition": {
            "delta": num(r.step3.delta),
            "mesh": num(r.step3.classification.mesh),
            "levels": r.step3.classification.levels.len(),
            "classes": r.step3.pieces.len(),
            "selection_residual": num(r.step3.selection_residual),
            "domination_defect": num(r.step3.domination_defect),
            "extension_error": num(r.step3.extension_error),
        },
        "dc": {
            "xs": floats(&r.graph.xs),
            "g": floats(&r.graph.gs),
            "y1": floats(&r.mixing.dc.y1),
            "y2": floats(&r.mixing.dc.y2),
            "offset": num(r.mixing.dc.offset),
            "reconstruction_error": num(r.reconstruction_error),
            "min_convexity": num(r.min_convexity),
            "max_slope": num(r.max_component_slope),
            "slope_bound": num(r.slope_bound),
            "slope_variation": num(r.mixing.slope_variation),
        },
        "turn": {
            "coarse": num(cert.turn_coarse),
            "fine": num(cert.turn_fine),
            "polyline_coarse": num(cert.polyline_turn_coarse),
            "polyline_fine": num(cert.polyline_turn_fine),
            "samples_coarse": cert.samples_coarse,
            "samples_fine": cert.samples_fine,
            "tol": num(cert.tol),
        },
        "checks": {
            "cy": c.cy,
            "oracle_singular": c.oracle_singular,
            "dc_convex": c.dc_convex,
            "reconstruction": c.reconstruction,
            "lipschitz": c.lipschitz,
            "selection": c.selection,
            "domination": c.domination,
            "turn_converged": c.turn_converged,
        },
        "passed": c.all(),
    })
}

/// A report that failed partway; written instead of a certificate.
pub fn failure_json(scenario: &str, id: &str, arc: &SingularArc, error: &str) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "scenario": scenario,
        "arc": arc_summary(id, arc),
        "error": error,
        "passed": false,
    })
}

pub fn with_header(scenario: &str, body: Map<String, Value>) -> Value {
    let mut m = Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("scenario".into(), json!(scenario));
    m.extend(body);
    Value::Object(m)
}

pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Writes all files or none: each goes to a temporary sibling first, and
/// the renames happen only after every write succeeded.
pub fn write_all(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for (name, content) in files {
        let dest = dir.join(name);
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&tmp, content) {
            let _ = fs::remove_file(&tmp);
            cleanup(&staged);
            return Err(e.into());
        }
        staged.push((tmp, dest));
    }
    let mut done = Vec::new();
    for (k, (tmp, dest)) in staged.iter().enumerate() {
        if let Err(e) = fs::rename(tmp, dest) {
            for d in &done {
                let _ = fs::remove_file(d);
            }
            cleanup(&staged[k..]);
            return Err(e.into());
        }
        done.push(dest.clone());
    }
    Ok(done)
}
