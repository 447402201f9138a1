use std::path::Path;
use std::process::{Command, Output};

fn vispart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vispart")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> serde_json::Value {
    let o = vispart(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap_or(serde_json::Value::Null)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn set_and_measure_subcommands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let set = dir.path().join("set.txt");
    let g = ok(&["generate", "--kind", "ifs", "--params", r#"{"digits": ["00", "01", "10"]}"#, "--depth", "5", "--out", p(&set)]);
    assert_eq!(g["cells"], 243);
    let text = std::fs::read_to_string(&set).unwrap();
    assert!(text.starts_with("2 5\n"));
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("set.txt.json")).unwrap()).unwrap();
    assert_eq!(sidecar["generator"]["kind"], "ifs");

    let d = ok(&["dim", "--set", p(&set), "--drop", "0"]);
    assert!((d["slope"].as_f64().unwrap() - 3f64.log2()).abs() < 1e-9);

    let m = dir.path().join("mu.txt");
    let trace = dir.path().join("trace.json");
    let f = ok(&["frostman", "--set", p(&set), "--s", "1.5", "--out", p(&m), "--trace", p(&trace)]);
    assert_eq!(f["passed"], true);
    assert!(trace.exists());

    let sp = ok(&["energy", "--measure", p(&m), "--s", "1.0", "--mode", "spatial"]);
    assert!(sp["value"].as_f64().unwrap() > 0.0);
    let fo = ok(&["energy", "--measure", p(&m), "--s", "1.0", "--mode", "fourier", "--R", "32", "--steps", "64"]);
    assert!(fo["value"].as_f64().unwrap() > 0.0);
    let di = ok(&["energy", "--measure", p(&m), "--s", "1.0", "--mode", "directional", "--e", "-1,1", "--steps", "256"]);
    assert!(di["value"].as_f64().unwrap() > 0.0);
    let missing = vispart(&["energy", "--measure", p(&m), "--s", "1.0", "--mode", "directional"]);
    assert_eq!(missing.status.code(), Some(2));

    let vis = dir.path().join("vis.txt");
    let v = ok(&["visible", "--set", p(&set), "--e", "0,1", "--out", p(&vis)]);
    // the top row of each column is visible from above
    assert_eq!(v["visible_cells"], 32);

    let cfg = dir.path().join("params.json");
    std::fs::write(
        &cfg,
        r#"{"n": 2, "J": 5, "tau": 0.1, "epsilon": 0.2, "s": 1.7, "generator": {"kind": "full"}, "directions": 4, "seed": 0}"#,
    )
    .unwrap();
    let cl_out = dir.path().join("lines.json");
    let c = ok(&["classify", "--set", p(&set), "--measure", p(&m), "--params", p(&cfg), "--e", "1,2", "--out", p(&cl_out)]);
    assert!(c["lines"].as_u64().unwrap() > 0);
    let lines: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cl_out).unwrap()).unwrap();
    assert!(lines["lines"].is_array());
}

#[test]
fn certify_and_experiment_report_success() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"n": 2, "J": 5, "tau": 0.1, "epsilon": 0.2, "s": 1.7, "generator": {"kind": "percolation", "p": 0.8},
            "directions": 4, "seed": 2, "steps": 128, "out_dir": "results"}"#,
    )
    .unwrap();
    let r = ok(&["--threads", "2", "certify", "--config", p(&cfg)]);
    assert_eq!(r["hard_failures"].as_array().unwrap().len(), 0);
    assert_eq!(r["records"].as_array().unwrap().len(), 4);

    // relative out_dir resolves against the working directory
    let o = Command::new(env!("CARGO_BIN_EXE_vispart"))
        .current_dir(dir.path())
        .args(["experiment", "--config", "run.json"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("results/experiment.csv")).unwrap();
    assert!(csv.starts_with("e_1,e_2,visible_cells,dim,stderr,exceptional,badline_content,visible_content\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn invalid_inputs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    // s outside the window (1.6, 1.9)
    std::fs::write(
        &cfg,
        r#"{"n": 2, "J": 10, "tau": 0.1, "epsilon": 0.2, "s": 1.95, "generator": {"kind": "full"}, "directions": 4, "seed": 0}"#,
    )
    .unwrap();
    let o = vispart(&["certify", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exponent window"));

    let o = vispart(&["dim", "--set", p(&dir.path().join("missing.txt"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.txt"));

    let o = vispart(&["generate", "--kind", "nonsense", "--depth", "3", "--out", p(&dir.path().join("x.txt"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn literal_scale_config_is_flagged_not_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("literal.json");
    std::fs::write(
        &cfg,
        r#"{"n": 2, "J": 50, "tau": 0.01, "epsilon": 0.02, "s": 1.75, "generator": {"kind": "full"}, "directions": 4, "seed": 0}"#,
    )
    .unwrap();
    let o = vispart(&["certify", "--config", p(&cfg)]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("desk-infeasible scale"), "{err}");
    // accepted, but the grid cannot be built at that depth
    assert_eq!(o.status.code(), Some(2));
}
