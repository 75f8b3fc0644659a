use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qbat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbat"))
        .args(args)
        .env("QBAT_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, out: &Path, body: &str) -> String {
    let path = dir.join(name);
    fs::write(
        &path,
        format!("{body}\n[output]\ndir = {:?}\nseries = true\n", out.to_str().unwrap()),
    )
    .unwrap();
    path.to_str().unwrap().to_owned()
}

const SWEEP: &str = r#"
[protocol]
N = 6
[battery]
family = "FieldZ"
h = 1.0
[charger]
family = "XYATA"
gamma = 0.5
[grid]
end = 20.0
step = 0.1
[sweep]
parameter = "lambda"
values = [0.0, 0.5, 1.0]
"#;

#[test]
fn list_presets_prints_every_preset_once() {
    let out = qbat(&["list-presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 21);
    let fig5a = text.lines().find(|l| l.starts_with("fig5a")).unwrap();
    assert!(
        fig5a.contains("battery=IsingNN charger=FieldZ lambda=0 sweep=J"),
        "{fig5a}"
    );
}

#[test]
fn validate_names_the_offending_key() {
    let dir = tempfile::tempdir().unwrap();
    let body = SWEEP.replace("N = 6", "N = 6\nlambda = 2.0");
    let cfg = write_config(dir.path(), "bad.toml", dir.path(), &body);
    let out = qbat(&["validate", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("protocol.lambda"), "{err}");

    let good = write_config(dir.path(), "good.toml", dir.path(), SWEEP);
    let out = qbat(&["validate", &good]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("config_hash"));
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let cfg_a = write_config(dir.path(), "a.toml", &a, SWEEP);
    let cfg_b = write_config(dir.path(), "b.toml", &b, SWEEP);
    assert!(qbat(&["run", &cfg_a]).status.success());
    assert!(qbat(&["run", &cfg_b]).status.success());
    for file in [
        "sweep.csv",
        "fit.json",
        "series_lambda_000.csv",
        "series_lambda_002.csv",
    ] {
        let x = fs::read(a.join(file)).unwrap();
        let y = fs::read(b.join(file)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file} differs between runs");
    }
    let csv = fs::read_to_string(a.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("param,value,de_max,t_e,p_max,t_p"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    for key in [
        "software",
        "config",
        "config_hash",
        "wall_time_s",
        "backend",
        "grid",
        "boundary_max",
        "partial",
    ] {
        assert!(manifest.get(key).is_some(), "manifest lacks {key}");
    }
}

#[test]
fn short_grid_flags_a_boundary_maximum() {
    let dir = tempfile::tempdir().unwrap();
    let body = SWEEP
        .replace("end = 20.0", "end = 0.2")
        .replace("step = 0.1", "step = 0.05");
    let cfg = write_config(dir.path(), "short.toml", &dir.path().join("o"), &body);
    let out = qbat(&["run", &cfg]);
    assert!(out.status.success(), "a boundary maximum is a warning");
    assert!(String::from_utf8(out.stderr).unwrap().contains("warning"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["boundary_max"], true);
}

#[test]
fn zero_charger_gives_a_flat_series() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
[protocol]
N = 5
lambda = 0.3
[battery]
family = "FieldZ"
h = 1.0
[charger]
family = "FieldZ"
h = 0.0
[grid]
end = 5.0
step = 0.5
"#;
    let cfg = write_config(dir.path(), "flat.toml", &dir.path().join("o"), body);
    assert!(qbat(&["run", &cfg]).status.success());
    let csv = fs::read_to_string(dir.path().join("o/series.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);
    for line in csv.lines().skip(1) {
        let de: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(de.abs() < 1e-12, "{line}");
    }
}

#[test]
fn failing_sweep_point_exits_nonzero_with_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    let body = SWEEP
        .replace("parameter = \"lambda\"", "parameter = \"N\"")
        .replace("values = [0.0, 0.5, 1.0]", "values = [4, 14]");
    let cfg = write_config(dir.path(), "big.toml", &dir.path().join("o"), &body);
    let out = qbat(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("N = 14"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["partial"], true);
}

#[test]
fn unknown_preset_is_a_config_error() {
    let out = qbat(&["run", "--preset", "fig9"]);
    assert_eq!(out.status.code(), Some(2));
}
