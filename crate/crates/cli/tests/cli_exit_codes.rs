use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_commuteflow"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli_exit_codes").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_config(name: &str, json: &str) -> (Output, PathBuf) {
    let dir = scratch(name);
    let json = json.replace("@OUT@", &dir.join("out").display().to_string());
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    (bin().arg("run").arg(&path).output().unwrap(), dir)
}

#[test]
fn simulate_writes_outputs() {
    let (out, dir) = run_config(
        "simulate",
        r#"{"mode": "simulate", "generator": {"seed": 7, "N": 3, "n": 2},
            "integrator": {"h": 0.001, "t_end": 0.05, "method": "rk4", "tol": 1e-8, "record_every": 5,
                           "stop_commutator_tol": null, "renormalize": false},
            "output_dir": "@OUT@"}"#,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.join("out/simulate.csv")).unwrap();
    assert!(csv.contains("# seed: 7"));
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("t,energy,comm_1_2,comm_1_3,comm_2_3,theta_1"));
    assert!(dir.join("out/simulate.json").exists());
}

#[test]
fn malformed_config_exits_2() {
    let (out, _) = run_config("malformed", "{ not json");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_field_exits_2() {
    let (out, _) = run_config("unknown", r#"{"mode": "simulate", "preset": "fig1", "bogus": 1}"#);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn asymmetric_matrix_exits_2() {
    let (out, _) = run_config("asym", r#"{"mode": "simulate", "matrices": [[[1, 2], [0, 1]], [[0, 1], [1, 0]]]}"#);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_exits_2() {
    let out = bin().args(["run", "/nonexistent/config.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn blow_up_exits_3() {
    let (out, _) = run_config(
        "blowup",
        r#"{"mode": "simulate", "matrices": [[[1e120, 3e120], [3e120, 0]], [[0, 1e120], [1e120, 2e120]]],
            "integrator": {"h": 1.0, "t_end": 5.0, "method": "rk4", "tol": 1e-8, "record_every": 1,
                           "stop_commutator_tol": null, "renormalize": false},
            "output_dir": "@OUT@"}"#,
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn twist_prints_spectrum() {
    let out = bin().args(["twist", "--N", "5", "--winding", "1", "--spectrum"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["degeneracy"], "generic");
    assert!(v["spectrum"].is_object());
}

#[test]
fn linearize_prints_spectrum() {
    let out = bin().args(["linearize", "--seed", "3", "--N", "3", "--n", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 3);
}

#[test]
fn bad_preset_exits_2() {
    let out = bin().args(["reproduce", "fig9", "--out", "/tmp"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
