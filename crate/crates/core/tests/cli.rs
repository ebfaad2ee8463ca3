use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use svgd::experiment::ExperimentConfig;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svgd-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn recipe(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("recipes")
        .join(name)
}

fn small_run_config() -> Value {
    json!({
        "target": { "family": "mixture1d", "weights": [0.5, 0.5], "means": [-2.0, 2.0], "sds": [1.0, 1.0] },
        "kernel": { "family": "rbf", "bandwidth": "median" },
        "init": { "family": "gaussian", "mean": [-4.0], "sd": 1.0 },
        "particles": 50,
        "step": { "policy": "planned" },
        "iterations": 60,
        "diagnostics": { "kl": { "lo": -10.0, "hi": 10.0, "points": 500 } }
    })
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn run_to(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bin(&args)
}

#[test]
fn selftest_passes() {
    let out = bin(&["selftest"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0 failed"));
    assert!(!text.contains("FAIL"));
    assert_eq!(
        bin(&["selftest"]).stdout,
        text.as_bytes(),
        "selftest output is deterministic"
    );
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &small_run_config());
    let out_dir = dir.path().join("out");
    let out = run_to(&cfg, &out_dir, &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next(),
        Some("iter,ksd2,avg_ksd2,kl_est,max_dir_norm,time_ms")
    );
    assert_eq!(lines.count(), 60);

    let particles = fs::read_to_string(out_dir.join("final_particles.csv")).unwrap();
    assert_eq!(particles.lines().count(), 50);
    assert!(particles.lines().all(|l| l.parse::<f64>().is_ok()));

    let report: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    for key in ["slope", "intercept", "r2", "window"] {
        assert!(report["rate_fit"].get(key).is_some(), "rate_fit.{key}");
    }
    for key in ["violations", "worst_margin", "tolerance"] {
        assert!(report["descent"].get(key).is_some(), "descent.{key}");
    }
    for key in ["alpha", "B", "M", "C", "gamma", "c_gamma"] {
        assert!(report["plan"][key].is_number(), "plan.{key}");
    }
    let resolved = &report["resolved_config"];
    assert_eq!(resolved["diagnostics"]["descent_tolerance"], json!(0.02));
    assert_eq!(resolved["diagnostics"]["rate_window"], json!([1, 60]));
    assert_eq!(resolved["step"]["safety"], json!(0.5));
    assert!(!out_dir.join("trace.gp").exists());
    assert!(fs::read_dir(&out_dir).unwrap().all(|e| !e
        .unwrap()
        .file_name()
        .to_string_lossy()
        .ends_with(".tmp")));
}

#[test]
fn resolved_config_reproduces_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &small_run_config());
    let first = dir.path().join("first");
    assert_eq!(run_to(&cfg, &first, &[]).status.code(), Some(0));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(first.join("report.json")).unwrap()).unwrap();
    let again = write_config(dir.path(), "resolved.json", &report["resolved_config"]);
    let second = dir.path().join("second");
    assert_eq!(run_to(&again, &second, &[]).status.code(), Some(0));
    assert_eq!(
        fs::read(first.join("trace.csv")).unwrap(),
        fs::read(second.join("trace.csv")).unwrap()
    );
}

#[test]
fn seed_and_thread_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &small_run_config());
    let read = |sub: &str, extra: &[&str]| {
        let out = dir.path().join(sub);
        assert_eq!(run_to(&cfg, &out, extra).status.code(), Some(0));
        fs::read(out.join("trace.csv")).unwrap()
    };
    let one = read("t1", &["--threads", "1"]);
    let three = read("t3", &["--threads", "3"]);
    assert_eq!(one, three, "thread count must not change results");
    let reseeded = read("s7", &["--seed", "7"]);
    assert_ne!(one, reseeded);
}

#[test]
fn gnuplot_script_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = small_run_config();
    v["gnuplot"] = json!(true);
    let cfg = write_config(dir.path(), "c.json", &v);
    let out = dir.path().join("out");
    assert_eq!(run_to(&cfg, &out, &[]).status.code(), Some(0));
    assert!(fs::read_to_string(out.join("trace.gp"))
        .unwrap()
        .contains("trace.csv"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let missing = run_to(&dir.path().join("nope.json"), &out, &[]);
    assert_eq!(missing.status.code(), Some(2));

    let mut v = small_run_config();
    v["iteratons"] = json!(5);
    let out_unknown = run_to(&write_config(dir.path(), "u.json", &v), &out, &[]);
    assert_eq!(out_unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out_unknown.stderr).contains("iteratons"));

    fs::write(
        dir.path().join("bad.json"),
        "{\n  \"target\": {\n    \"family\": 7\n  }\n}",
    )
    .unwrap();
    let syntax = run_to(&dir.path().join("bad.json"), &out, &[]);
    assert_eq!(syntax.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&syntax.stderr).contains("line 3"));

    let mut v = small_run_config();
    v["target"]["weights"] = json!([0.5, 0.4]);
    assert_eq!(
        run_to(&write_config(dir.path(), "w.json", &v), &out, &[])
            .status
            .code(),
        Some(2)
    );

    let mut v = small_run_config();
    v["init"]["mean"] = json!([0.0, 0.0]);
    assert_eq!(
        run_to(&write_config(dir.path(), "d.json", &v), &out, &[])
            .status
            .code(),
        Some(2)
    );

    let no_chaos = bin(&[
        "chaos",
        write_config(dir.path(), "c.json", &small_run_config())
            .to_str()
            .unwrap(),
    ]);
    assert_eq!(no_chaos.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let v = json!({
        "target": { "family": "gaussian", "mean": [0.0], "sd": 0.1 },
        "kernel": { "family": "rbf", "bandwidth": 1.0 },
        "init": { "family": "gaussian", "mean": [1.0], "sd": 1.0 },
        "particles": 10,
        "step": { "policy": "fixed", "gamma": 1e10 },
        "iterations": 500
    });
    let out = run_to(
        &write_config(dir.path(), "c.json", &v),
        &dir.path().join("out"),
        &[],
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("iteration"));
}

#[test]
fn particle_file_init() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("p.csv");
    fs::write(&pts, "-1.0,0.5\n0.0,0.0\n2.0,-1.0\n").unwrap();
    let mut v = json!({
        "target": { "family": "gaussian", "mean": [0.0, 0.0], "sd": 1.0 },
        "kernel": { "family": "imq", "offset": 1.0, "exponent": -0.5 },
        "init": { "family": "file", "path": pts },
        "particles": 3,
        "step": { "policy": "fixed", "gamma": 0.1 },
        "iterations": 15
    });
    let out = dir.path().join("out");
    let ok = run_to(&write_config(dir.path(), "c.json", &v), &out, &[]);
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let rows: Vec<Vec<f64>> = fs::read_to_string(out.join("final_particles.csv"))
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.len() == 2));

    v["particles"] = json!(4);
    let mismatch = run_to(
        &write_config(dir.path(), "c2.json", &v),
        &dir.path().join("o2"),
        &[],
    );
    assert_eq!(mismatch.status.code(), Some(2));
}

#[test]
fn chaos_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let v = json!({
        "target": { "family": "mixture1d", "weights": [0.5, 0.5], "means": [-2.0, 2.0], "sds": [1.0, 1.0] },
        "kernel": { "family": "rbf", "bandwidth": 1.0 },
        "init": { "family": "gaussian", "mean": [0.0], "sd": 1.0 },
        "particles": 10,
        "step": { "policy": "fixed", "gamma": 0.05 },
        "iterations": 0,
        "chaos": { "sizes": [5, 10], "reference_size": 100, "horizon": 0.5, "step_size": 0.05,
                   "repetitions": 4, "record_every": 5, "proxy_check": true }
    });
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "c.json", &v);
    let res = bin(&[
        "chaos",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let csv = fs::read_to_string(out.join("chaos.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,N,w2sq_mean,w2sq_stderr,bound"));
    // steps 0, 5, 10 for two sizes
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.join("chaos_report.json")).unwrap()).unwrap();
    assert_eq!(report["summary"]["final_step"], json!(10));
    assert_eq!(report["proxy"].as_array().unwrap().len(), 6);
    assert!(report["constants"]["L"].is_number());

    let threaded = dir.path().join("threaded");
    let res = bin(&[
        "chaos",
        cfg.to_str().unwrap(),
        "--out",
        threaded.to_str().unwrap(),
        "--threads",
        "3",
    ]);
    assert_eq!(res.status.code(), Some(0));
    assert_eq!(
        fs::read(out.join("chaos.csv")).unwrap(),
        fs::read(threaded.join("chaos.csv")).unwrap()
    );
}

#[test]
fn bundled_recipes_match_builtins() {
    let mut mixture = ExperimentConfig::load(&recipe("mixture.json")).unwrap();
    mixture.output_dir = ExperimentConfig::mixture_recipe().output_dir;
    assert_eq!(mixture, ExperimentConfig::mixture_recipe());
    let mut chaos = ExperimentConfig::load(&recipe("chaos.json")).unwrap();
    chaos.output_dir = ExperimentConfig::chaos_recipe().output_dir;
    assert_eq!(chaos, ExperimentConfig::chaos_recipe());
}
