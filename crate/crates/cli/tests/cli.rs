use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_subfk"));
    c.env_remove("SUBFK_THREADS");
    c
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../examples").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out-dir").arg(out).output().expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn bernstein_check_for_stable_half_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bernstein-check", "--family", "stable", "--alpha", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&dir.path().join("bernstein-check.json"));
    assert_eq!(s["result"]["passed"], true);
    assert_eq!(s["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
    assert!(dir.path().join("bernstein-check.csv").exists());
}

#[test]
fn non_bernstein_candidate_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bernstein-check", "--family", "hyperbolic-k1", "--a", "1", "--b", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&dir.path().join("bernstein-check.json"))["status"], "check_failed");
}

#[test]
fn estimate_reruns_are_byte_identical_across_thread_counts() {
    let cfg = example("fractional_gaussian.json");
    let cfg = cfg.to_str().unwrap();
    let mut texts = Vec::new();
    for threads in ["1", "1", "4"] {
        let dir = tempfile::tempdir().unwrap();
        let o = run(&["estimate", "--config", cfg, "--seed", "7", "--threads", threads], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        texts.push((std::fs::read(dir.path().join("estimate.json")).unwrap(), std::fs::read(dir.path().join("estimate.csv")).unwrap()));
    }
    assert!(texts.iter().all(|t| t == &texts[0]));

    let dir = tempfile::tempdir().unwrap();
    run(&["estimate", "--config", cfg, "--seed", "8"], dir.path());
    let other = json(&dir.path().join("estimate.json"));
    let first: serde_json::Value = serde_json::from_slice(&texts[0].0).unwrap();
    assert_eq!(first["seed"], 7);
    assert_eq!(other["seed"], 8);
    assert_ne!(first["config_hash"], other["config_hash"]);
    assert_ne!(first["result"]["estimate"]["mean"], other["result"]["estimate"]["mean"]);
}

#[test]
fn wallclock_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    run(&["kernel", "--psi", "linear", "--d", "1", "--t", "1", "--n-r", "5"], dir.path());
    assert!(json(&dir.path().join("kernel.json")).get("wallclock_seconds").is_none());
    run(&["kernel", "--psi", "linear", "--d", "1", "--t", "1", "--n-r", "5", "--wallclock"], dir.path());
    assert!(json(&dir.path().join("kernel.json"))["wallclock_seconds"].is_number());
}

#[test]
fn massless_relativistic_kernel_is_the_cauchy_density() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["kernel", "--psi", "relativistic", "--m", "0", "--d", "1", "--t", "1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("kernel.csv")).unwrap();
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let r: f64 = rec[0].parse().unwrap();
        let v: f64 = rec[1].parse().unwrap();
        let cauchy = 1.0 / (std::f64::consts::PI * (1.0 + r * r));
        assert!((v - cauchy).abs() < 1e-6, "r = {r}: {v} vs {cauchy}");
        n += 1;
    }
    assert_eq!(n, 101);
}

#[test]
fn divergent_assumption_a_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["kernel", "--psi", "one-minus-exp", "--a", "1", "--d", "1", "--t", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let s = json(&dir.path().join("kernel.json"));
    assert_eq!(s["result"]["assumption_a"]["finite"], false);
}

#[test]
fn unknown_keys_are_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    for (text, key) in [
        (r#"{"psi": {"family": "stable", "alpha": 0.5}, "dim": 1, "bogus_key": 3}"#, "bogus_key"),
        (r#"{"psi": {"family": "stable", "alpha": 0.5, "beta": 2}, "dim": 1}"#, "beta"),
        (r#"{"psi": {"family": "linear", "b": 1}, "dim": 1, "estimator": {"t": 1, "n_paths": 16, "sede": 1}}"#, "sede"),
    ] {
        let path = dir.path().join("bad.json");
        std::fs::write(&path, text).unwrap();
        let o = run(&["estimate", "--config", path.to_str().unwrap()], dir.path());
        assert_eq!(o.status.code(), Some(1));
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(key), "stderr does not name `{key}`: {err}");
    }
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["bernstein-check", "--family", "stable"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["estimate"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["estimate", "--config", "/nonexistent.json"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["kernel", "--psi", "stable", "--alpha", "2"], dir.path()).status.code(), Some(1));
}

#[test]
fn config_driven_subcommands_pass_on_the_examples() {
    for (cmd, file) in [
        ("oracle-compare", "fractional_gaussian.json"),
        ("oracle-compare", "spin_constant_p2.json"),
        ("diamagnetic", "magnetic_relativistic_2d.json"),
        ("kato", "kato_coulomb.json"),
        ("hyper-check", "hyper_bump.json"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let o = run(&[cmd, "--config", example(file).to_str().unwrap()], dir.path());
        assert_eq!(o.status.code(), Some(0), "{cmd} {file}: {}", String::from_utf8_lossy(&o.stderr));
        let s = json(&dir.path().join(format!("{cmd}.json")));
        assert_eq!(s["status"], "ok");
        assert!(s["config"]["psi"]["family"].is_string());
    }
}

#[test]
fn sample_subordinator_reports_laplace_cells() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["sample-subordinator", "--family", "relativistic", "--m", "1", "--n", "20000", "--seed", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv::Reader::from_path(dir.path().join("sample-subordinator.csv")).unwrap().records().count();
    assert_eq!(rows, 3);
}
