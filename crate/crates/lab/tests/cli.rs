//! End-to-end runs of the `gkdv-lab` binary on small grids.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gkdv_core::io::read_spectrum;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gkdv-lab")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn stderr_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().find(|l| l.starts_with('{')).unwrap_or_else(|| panic!("no JSON on stderr: {text}"));
    serde_json::from_str(line).unwrap()
}

const STABILITY: &str = r#"
experiment = "stability"

[grid]
n = 256
length = 60.0

[solver]
dt = 5e-3
T = 1.0
snapshot_stride = 20

[soliton]
y = -10.0
"#;

#[test]
fn spectrum_first_row_is_the_ground_state() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", "experiment = \"spectrum\"\n[grid]\nn = 512\nlength = 60.0\n");
    let out = tmp.path().join("run");
    let o = lab(&["run", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rows = read_spectrum(&out.join("spectrum.csv")).unwrap();
    assert_eq!(rows[0].0, 0);
    assert!((rows[0].1 + 5.25).abs() <= 1e-6, "{}", rows[0].1);

    let r = lab(&["report", out.to_str().unwrap()]);
    assert_eq!(code(&r), 0);
    let table = String::from_utf8_lossy(&r.stdout);
    for col in ["name", "measured", "expected", "tol", "pass"] {
        assert!(table.contains(col), "{table}");
    }
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(rep["experiment"], "spectrum");
    assert_eq!(rep["failed"], 0);
}

#[test]
fn identities_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "i.toml", "experiment = \"identities\"\n");
    let out = tmp.path().join("run");
    let o = lab(&["run", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let checks: Vec<serde_json::Value> = serde_json::from_str(&fs::read_to_string(out.join("checks.json")).unwrap()).unwrap();
    assert!(checks.iter().all(|c| c["pass"] == true || c["informational"] == true));
}

#[test]
fn stability_is_deterministic_and_reports_the_virial_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "st.toml", STABILITY);
    let runs: Vec<PathBuf> = ["a", "b"].iter().map(|d| tmp.path().join(d)).collect();
    for dir in &runs {
        let o = lab(&["run", "--config", cfg.to_str().unwrap(), "--seed", "7", "--output-dir", dir.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(runs[0].join("conserved.csv")).unwrap();
    assert_eq!(a, fs::read(runs[1].join("conserved.csv")).unwrap());
    assert_eq!(fs::read(runs[0].join("modulation.csv")).unwrap(), fs::read(runs[1].join("modulation.csv")).unwrap());

    let r = lab(&["report", runs[0].to_str().unwrap()]);
    assert_eq!(code(&r), 0);
    assert!(String::from_utf8_lossy(&r.stdout).contains("I_eta monotone"));
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(runs[0].join("report.json")).unwrap()).unwrap();
    assert!(rep["diagnostics"]["i_eta_monotone"].is_boolean());
    let plot = fs::read_to_string(runs[0].join("plot.csv")).unwrap();
    assert!(plot.starts_with("t,c,y_minus_c2t,ip_wQ,ip_wQp,i_eta,d_i_eta_dt\n"));
    assert_eq!(plot.lines().count(), fs::read_to_string(runs[0].join("modulation.csv")).unwrap().lines().count());
}

#[test]
fn another_seed_changes_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "st.toml", STABILITY);
    for (seed, dir) in [("7", "a"), ("8", "b")] {
        let d = tmp.path().join(dir);
        assert_eq!(code(&lab(&["run", "--config", cfg.to_str().unwrap(), "--seed", seed, "--output-dir", d.to_str().unwrap()])), 0);
    }
    assert_ne!(fs::read(tmp.path().join("a/conserved.csv")).unwrap(), fs::read(tmp.path().join("b/conserved.csv")).unwrap());
}

#[test]
fn meta_json_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "st.toml", STABILITY);
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    assert_eq!(code(&lab(&["run", "--config", cfg.to_str().unwrap(), "--seed", "3", "--output-dir", first.to_str().unwrap()])), 0);
    let meta = first.join("meta.json");
    assert_eq!(code(&lab(&["run", "--config", meta.to_str().unwrap(), "--output-dir", second.to_str().unwrap()])), 0);

    let read = |d: &Path| -> serde_json::Value { serde_json::from_str(&fs::read_to_string(d.join("meta.json")).unwrap()).unwrap() };
    let (mut a, mut b) = (read(&first), read(&second));
    assert_eq!(a["config"]["seed"], 3);
    a["config"]["output_dir"] = serde_json::Value::Null;
    b["config"]["output_dir"] = serde_json::Value::Null;
    assert_eq!(a, b);
    assert_eq!(fs::read(first.join("checks.json")).unwrap(), fs::read(second.join("checks.json")).unwrap());
    assert_eq!(fs::read(first.join("conserved.csv")).unwrap(), fs::read(second.join("conserved.csv")).unwrap());
}

#[test]
fn config_errors_exit_with_status_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let cases = [
        "experiment = \"spectrum\"\nunknown = 1\n",
        "experiment = \"spectra\"\n",
        "experiment = \"spectrum\"\n[grid]\nn = 1000\n",
        "experiment = \"stability\"\n[solver]\ndt = 0.0\n",
        "experiment = \"spectrum\"\n[grid\n",
    ];
    for (i, body) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("bad{i}.toml"), body);
        let o = lab(&["run", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()]);
        assert_eq!(code(&o), 2, "case {i}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stderr_json(&o)["error"], "config", "case {i}");
        assert!(!out.join("meta.json").exists(), "case {i}: nothing runs before validation");
    }
    let good = write_config(tmp.path(), "good.toml", "experiment = \"spectrum\"\n");
    assert_eq!(code(&lab(&["run", "--config", good.to_str().unwrap(), "--set", "grid.nope=3"])), 2);
    assert_eq!(code(&lab(&["run", "--config", good.to_str().unwrap(), "--set", "oops"])), 2);
    assert_eq!(code(&lab(&["run", "--config", tmp.path().join("missing.toml").to_str().unwrap()])), 2);
    assert_eq!(code(&lab(&["run"])), 2);
    assert_eq!(code(&lab(&["frobnicate"])), 2);
}

#[test]
fn failed_checks_exit_with_status_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", "experiment = \"spectrum\"\n[grid]\nn = 64\nlength = 80.0\n");
    let out = tmp.path().join("run");
    assert_eq!(code(&lab(&["run", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()])), 1);
    assert_eq!(code(&lab(&["report", out.to_str().unwrap()])), 1);
}

#[test]
fn numeric_abort_exits_with_status_3_and_records_the_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "st.toml", STABILITY);
    let out = tmp.path().join("run");
    let o = lab(&["run", "--config", cfg.to_str().unwrap(), "--set", "perturbation.amplitude=1.5", "--output-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let err = stderr_json(&o);
    assert_eq!(err["exit_code"], 3);
    let on_disk: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(on_disk, err);
}

#[test]
fn report_on_an_empty_directory_is_a_structured_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(&["report", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = stderr_json(&o);
    assert_eq!(err["error"], "missing_artifact");
    assert!(err["message"].as_str().unwrap().contains("meta.json"));
}

#[test]
fn sweep_writes_one_directory_per_variant() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "i.toml", "experiment = \"identities\"\n[grid]\nlength = 80.0\n");
    let out = tmp.path().join("sweep");
    let o = Command::new(env!("CARGO_BIN_EXE_gkdv-lab"))
        .args(["run", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap(), "--sweep", "grid.n=1024,2048", "--sweep", "seed=1,2"])
        .env("GKDV_LAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for n in ["1024", "2048"] {
        for s in ["1", "2"] {
            let d = out.join(format!("grid.n={n},seed={s}"));
            let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("meta.json")).unwrap()).unwrap();
            assert_eq!(meta["config"]["grid"]["n"].as_u64().unwrap().to_string(), n);
            assert!(d.join("checks.json").exists());
        }
    }
    let bad = lab(&["run", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap(), "--sweep", "grid.n=1024,1000"]);
    assert_eq!(code(&bad), 2);
}
