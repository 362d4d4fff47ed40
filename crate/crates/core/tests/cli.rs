use std::fs;
use std::process::Command;

fn latticegate() -> Command {
    Command::new(env!("CARGO_BIN_EXE_latticegate"))
}

const RAMSEY: &str = r#"
command = "ramsey"
seed = 3

[lattice]
sites = 6
boundary = "ring"

[calibration]
anchors = [{ t_us = 210, phase_pi = 1 }]
through_origin = true

[noise]
p_fill = 0.9
ensemble_size = 8

[scan]
t_hold_us = 105
alpha_points = 16
"#;

#[test]
fn ramsey_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ramsey.toml");
    fs::write(&cfg, RAMSEY).unwrap();
    let out = dir.path().join("out");
    let run = latticegate().arg("ramsey").arg("--config").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let csv = fs::read_to_string(out.join("ramsey.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("alpha_rad,p_one"));
    assert_eq!(lines.count(), 16);

    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("ramsey.csv.json")).unwrap()).unwrap();
    assert_eq!(side["command"], "ramsey");
    assert_eq!(side["seed"], 3);
    assert_eq!(side["config_text"], RAMSEY);
    assert_eq!(side["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ramsey.toml");
    fs::write(&cfg, RAMSEY).unwrap();
    let out = dir.path().join("out");
    let run = latticegate()
        .args(["ramsey", "--seed", "99", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success());
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("ramsey.csv.json")).unwrap()).unwrap();
    assert_eq!(side["seed"], 99);
}

#[test]
fn invalid_config_reports_lines_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "command = \"ramsey\"\n[lattice]\nsites = 6\ncolour = 3\n[noise]\np_fill = 2.0\n").unwrap();
    let out = dir.path().join("out");
    let run = latticegate().arg("ramsey").arg("--config").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(!run.status.success());
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("line 4"), "{err}");
    assert!(err.contains("colour"), "{err}");
    assert!(!out.join("ramsey.csv").exists());
}

#[test]
fn missing_config_is_a_usage_error() {
    let run = latticegate().arg("cluster").output().unwrap();
    assert_eq!(run.status.code(), Some(2));
}
