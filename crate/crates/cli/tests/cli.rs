use std::path::Path;
use std::process::{Command, Output};

use lmsf_core::{
    run_experiment, EstimatorConfig, EstimatorKind, ExperimentSpec, SparseChannelSpec,
};
use serde_json::Value;

fn lmsf(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmsf"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn lmsf")
}

fn ok(args: &[&str], out: &Path) {
    let o = lmsf(args, out);
    assert!(
        o.status.success(),
        "lmsf {args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

const SMALL: [&str; 7] = ["run", "--runs", "6", "--iters", "120", "--N", "32"];

#[test]
fn rerun_is_byte_identical_and_manifest_replays() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    ok(&SMALL, &a);
    ok(&SMALL, &b);
    for f in ["mse.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }

    let manifest = json(&a.join("manifest.json"));
    assert_eq!(manifest["base_seed"], 1);
    assert_eq!(manifest["spec"]["n_runs"], 6);
    assert_eq!(manifest["diverged_runs"]["RL1-LMSF"], 0);
    let replay: Vec<String> = manifest["args"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let replay: Vec<&str> = replay.iter().map(String::as_str).collect();
    ok(&replay, &c);
    assert_eq!(
        std::fs::read(a.join("mse.csv")).unwrap(),
        std::fs::read(c.join("mse.csv")).unwrap()
    );
}

#[test]
fn csv_matches_in_memory_traces_exactly() {
    let dir = tempfile::tempdir().unwrap();
    ok(&SMALL, dir.path());
    let spec = ExperimentSpec {
        channel: SparseChannelSpec::new(32, 4).unwrap(),
        n_runs: 6,
        n_iterations: 120,
        ..ExperimentSpec::default()
    };
    let traces = run_experiment(&spec).unwrap();
    let text = std::fs::read_to_string(dir.path().join("mse.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iteration,LMSF,ZA-LMSF,RZA-LMSF,RL1-LMSF"
    );
    let mut rows = 0;
    for (k, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], (k + 1).to_string());
        for (t, c) in traces.iter().zip(&cols[1..]) {
            assert_eq!(c.parse::<f64>().unwrap().to_bits(), t.values[k].to_bits());
        }
        rows += 1;
    }
    assert_eq!(rows, 120);
}

#[test]
fn single_algorithm_summary() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["run", "--runs", "3", "--iters", "60", "--algos", "rl1"],
        dir.path(),
    );
    let summary = json(&dir.path().join("summary.json"));
    let entries = summary["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0]["algorithm"], "RL1-LMSF");
    assert!(entries[0]["steady_state_mse"].as_f64().unwrap() > 0.0);
    assert_eq!(summary["verdicts"][0]["expected_order_holds"], Value::Null);
}

#[test]
fn phi_sweep_cells() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "sweep",
            "--param",
            "phi",
            "--values",
            "0.2,0.6,1.0",
            "--runs",
            "2",
            "--iters",
            "40",
            "--N",
            "16",
        ],
        dir.path(),
    );
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["entries"].as_array().unwrap().len(), 12);
    assert_eq!(summary["verdicts"].as_array().unwrap().len(), 3);
    assert_eq!(summary["sweep_parameter"], "phi");
    let header = std::fs::read_to_string(dir.path().join("mse.csv")).unwrap();
    let header = header.lines().next().unwrap().to_string();
    assert_eq!(header.split(',').count(), 13);
    assert!(header.contains("RL1-LMSF[phi=0.6]"));
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["sweep"]["parameter"], "phi");
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(
        &cfg,
        "K = 8\nruns = 2\niters = 30\nphi = 0.4\nalgos = za,lmsf\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(
        &["run", "--config", cfg.to_str().unwrap(), "--phi", "0.6"],
        &out,
    );
    let spec = &json(&out.join("manifest.json"))["spec"];
    assert_eq!(spec["channel"]["n_nonzero"], 8);
    assert_eq!(spec["n_runs"], 2);
    assert_eq!(spec["algorithms"][0]["kind"], "ZA-LMSF");
    assert_eq!(spec["algorithms"][0]["phi"], 0.6);
    assert_eq!(
        spec["algorithms"][0]["lambda"],
        EstimatorConfig::reference(EstimatorKind::Za).lambda
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");

    let o = lmsf(&["run", "--mu", "-1"], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`mu`"));

    let o = lmsf(&["run", "--K", "129"], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`K`"));

    assert_eq!(lmsf(&["run", "--gamma", "1"], &out).status.code(), Some(2));
    assert_eq!(
        lmsf(&["sweep", "--param", "mu", "--values", "1"], &out)
            .status
            .code(),
        Some(2)
    );

    let o = lmsf(
        &[
            "run", "--mu", "1e6", "--algos", "lmsf", "--runs", "2", "--iters", "200",
        ],
        &out,
    );
    assert_eq!(o.status.code(), Some(3));

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = lmsf(
        &["run", "--runs", "1", "--iters", "20"],
        &blocker.join("sub"),
    );
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn penalty_curve_file() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["penalty-curve", "--grid", "11"], dir.path());
    let text = std::fs::read_to_string(dir.path().join("penalty.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "w,zeta_za,zeta_rza,zeta_rl1");
    assert_eq!(lines.len(), 12);
    assert_eq!(lines[6], "0.0,0.0,0.0,0.0");
    let last: Vec<f64> = lines[11].split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    assert!((last[2] - 1.0 / 21.0).abs() < 1e-15);
    assert!((last[3] - 1.0 / 1.05).abs() < 1e-15);
}
