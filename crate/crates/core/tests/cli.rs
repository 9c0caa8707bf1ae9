use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.scn"))
}

fn singprop(args: &[&str], out: &Path, scn: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_singprop"))
        .args(args)
        .arg("--scenario")
        .arg(scn)
        .arg("--out")
        .arg(out)
        .env_remove("SINGPROP_SEED")
        .output()
        .unwrap()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = match fs::read_dir(dir) {
        Ok(rd) => rd.map(|e| e.unwrap().file_name().into_string().unwrap()).collect(),
        Err(_) => Vec::new(),
    };
    v.sort();
    v
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn analyze_origin_of_abs_x2() {
    let dir = tempfile::tempdir().unwrap();
    let o = singprop(&["analyze", "0", "0"], dir.path(), &scenario("abs_x2"));
    assert_eq!(o.status.code(), Some(0));
    let stdout: Value = serde_json::from_slice(&o.stdout).unwrap();
    let p = &stdout["points"][0];
    assert_eq!(p["criterion"], Value::Bool(true));
    assert_eq!(p["diam"].as_f64(), Some(2.0));
    assert_eq!(p["reachable_gradients"].as_array().unwrap().len(), 2);
    assert!(p["oracle"]["hausdorff"].as_f64().unwrap() < 1e-3);
    assert_eq!(read_json(&dir.path().join("abs_x2_analyze.json")), stdout);

    let o = singprop(&["analyze", "0.3", "-0.5"], dir.path(), &scenario("abs_x2"));
    assert_eq!(o.status.code(), Some(0));
    let stdout: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(stdout["points"][0]["criterion"], Value::Bool(false));
}

#[test]
fn certify_parabola() {
    let dir = tempfile::tempdir().unwrap();
    let o = singprop(&["certify"], dir.path(), &scenario("parabola"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for arc in ["arc0", "arc1"] {
        let r = read_json(&dir.path().join(format!("parabola_{arc}.json")));
        assert_eq!(r["passed"], Value::Bool(true));
        assert_eq!(r["schema_version"], Value::from(1));
        let t = r["turn"]["coarse"].as_f64().unwrap();
        assert!((t - 2f64.atan()).abs() < 1e-3, "{t}");
        assert!(r["partition"]["selection_residual"].as_f64().unwrap() <= 1e-6);
        let n = r["dc"]["y1"].as_array().unwrap().len();
        assert_eq!(n, r["dc"]["xs"].as_array().unwrap().len());
        let csv = fs::read_to_string(dir.path().join(format!("parabola_{arc}.csv"))).unwrap();
        assert_eq!(csv.lines().next(), Some("s,x1,x2,i,j,t1,t2,diam"));
        assert_eq!(csv.lines().count(), r["arc"]["samples"].as_u64().unwrap() as usize + 1);
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for cmd in ["analyze", "scan", "trace", "certify"] {
        for dir in [a.path(), b.path()] {
            assert_eq!(singprop(&[cmd], dir, &scenario("three_affine")).status.code(), Some(0));
        }
    }
    let names = listing(a.path());
    assert_eq!(names, listing(b.path()));
    for n in &names {
        assert_eq!(fs::read(a.path().join(n)).unwrap(), fs::read(b.path().join(n)).unwrap(), "{n}");
    }
}

#[test]
fn file_counts() {
    // Three arcs from the triple point: six files and the summary.
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(singprop(&["certify"], dir.path(), &scenario("three_affine")).status.code(), Some(0));
    assert_eq!(listing(dir.path()).len(), 7);

    // A seed on the boundary has a single inward direction: one arc, two files.
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("edge.scn");
    let text = fs::read_to_string(scenario("abs_x2")).unwrap().replace("seed = 0 0", "seed = -1 0");
    fs::write(&scn, text.replace("name = abs_x2", "name = edge")).unwrap();
    let out = dir.path().join("out");
    assert_eq!(singprop(&["trace"], &out, &scn).status.code(), Some(0));
    let files = listing(&out);
    assert_eq!(files, ["edge_arc0.csv", "edge_arc0.json", "edge_summary.json"]);

    // No arcs: the summary only, and a failing exit.
    let dir = tempfile::tempdir().unwrap();
    let o = singprop(&["certify"], dir.path(), &scenario("smooth"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no singular seeds"));
    assert_eq!(listing(dir.path()), ["smooth_summary.json"]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.scn");
    fs::write(&bad, "name = bad\ndomain = -1 1 -1 1\nbranch\nterm = 1 x 1\n").unwrap();
    let out = dir.path().join("out");
    let o = singprop(&["certify"], &out, &bad);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
    assert!(listing(&out).is_empty());

    let o = singprop(&["scan"], &out, &dir.path().join("missing.scn"));
    assert_eq!(o.status.code(), Some(3));
    assert!(listing(&out).is_empty());

    // The output directory is a regular file.
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let o = singprop(&["trace"], &blocker, &scenario("abs_x2"));
    assert_eq!(o.status.code(), Some(3));

    let o = singprop(&["certify", "--step", "-1"], &out, &scenario("abs_x2"));
    assert_eq!(o.status.code(), Some(2));

    let o = Command::new(env!("CARGO_BIN_EXE_singprop")).arg("certify").output().unwrap();
    assert_eq!(o.status.code(), Some(2));

    // A turn tolerance nothing can meet fails the certificate, not the run.
    let o = singprop(&["certify", "--turn-tol", "1e-300"], &out, &scenario("parabola"));
    assert_eq!(o.status.code(), Some(1));
    let summary = read_json(&out.join("parabola_summary.json"));
    assert_eq!(summary["passed"], Value::Bool(false));
}

#[test]
fn seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_singprop"));
        c.args(["analyze", "--scenario"]).arg(scenario("parabola")).arg("--out").arg(dir.path());
        match seed {
            Some(s) => c.env("SINGPROP_SEED", s),
            None => c.env_remove("SINGPROP_SEED"),
        };
        c.output().unwrap()
    };
    let default: Value = serde_json::from_slice(&run(None).stdout).unwrap();
    assert_eq!(default["oracle_seed"], Value::from(0x005e_ed2d_u64));
    let o = run(Some("12345"));
    assert_eq!(o.status.code(), Some(0));
    let seeded: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(seeded["oracle_seed"], Value::from(12345));
    assert_eq!(run(Some("not a seed")).status.code(), Some(2));
}

#[test]
fn option_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let o = singprop(&["trace", "--step", "0.1", "--max-len", "0.5"], dir.path(), &scenario("abs_x2"));
    assert_eq!(o.status.code(), Some(0));
    let r = read_json(&dir.path().join("abs_x2_arc0.json"));
    assert_eq!(r["arc"]["step"].as_f64(), Some(0.1));
    assert_eq!(r["arc"]["stop_reason"], Value::from("max_length"));
    assert!((r["arc"]["length"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}
