//! End-to-end checks of the `nonholo` binary: subcommands, CSV shapes and
//! exit codes (0 success, 1 usage, 2 validation/guard failure).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_nonholo")
}

fn tmp() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(name: &str, body: &str) -> PathBuf {
    let path = tmp().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn disk_config(model: &str, dt: f64, t_final: f64, slip_order: usize) -> String {
    format!(
        r#"
[system]
kind = "vertical-disk"
[system.params]
m = 1.0
I = 1.0
J = 0.5
R = 1.0
mu = 1.0
[sim]
epsilon = 0.01
dt = {dt}
t_final = {t_final}
model = "{model}"
record_every = 10
[initial]
theta = 0.0
v_theta = 1.0
v_phi = 1.0
slip_order = {slip_order}
"#
    )
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn usage_errors_exit_one() {
    let out = run(&["simulate"]); // missing required flags
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn simulate_zeroth_circle_csv() {
    let config = write_config(
        "sim_zeroth.toml",
        &disk_config("zeroth", 1e-3, std::f64::consts::PI, 0),
    );
    let out_path = tmp().join("sim_zeroth.csv");
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let header = std::fs::read_to_string(&out_path).unwrap();
    assert!(header.starts_with("t,theta,x,y,phi,v_theta,v_x,v_y,v_phi,ke,slip_norm\n"));
    let rows = read_csv(&out_path);
    let last = rows.last().unwrap();
    assert!((last[0] - std::f64::consts::PI).abs() < 1e-12);
    assert!((last[2] - 0.0).abs() < 1e-6, "x(pi) = {}", last[2]);
    assert!((last[3] - 2.0).abs() < 1e-6, "y(pi) = {}", last[3]);
    // admissible run: zero slip norm, conserved kinetic energy
    assert!(rows.iter().all(|r| r[10].abs() < 1e-9));
    assert!((last[9] - rows[0][9]).abs() < 1e-9);
}

#[test]
fn simulate_zero_horizon_single_row() {
    let config = write_config("sim_zero.toml", &disk_config("zeroth", 1e-3, 0.0, 0));
    let out_path = tmp().join("sim_zero.csv");
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read_csv(&out_path).len(), 1);
}

#[test]
fn simulate_stiffness_guard_exits_two() {
    let config = write_config("sim_stiff.toml", &disk_config("full", 0.01, 1.0, 2));
    let out_path = tmp().join("sim_stiff.csv");
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("too large for stiffness"), "stderr: {err}");
}

#[test]
fn schema_error_exits_two_with_path() {
    let config = write_config("bad.toml", "[system]\nparams = {}\n");
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp().join("never.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("system.kind"));
}

#[test]
fn slip_prints_closed_form_row() {
    let config = write_config("slip.toml", &disk_config("zeroth", 1e-3, 1.0, 0));
    let out = run(&["slip", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "h1_theta,h1_x,h1_y,h1_phi,h2_theta,h2_x,h2_y,h2_phi,slip_theta,slip_x,slip_y,slip_phi"
    );
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    // h1 = (0, 0, -1, 0) at theta = 0 with unit rates
    assert!((row[2] + 1.0).abs() < 1e-10, "row: {row:?}");
    assert!(row[0].abs() < 1e-12 && row[1].abs() < 1e-12 && row[3].abs() < 1e-12);

    // state overrides: theta = pi/2, v_theta = 2, v_phi = 3 -> h1 = (0,6,0,0)
    let out = run(&[
        "slip",
        "--config",
        config.to_str().unwrap(),
        "--theta",
        "1.5707963267948966",
        "--v-theta",
        "2",
        "--v-phi",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((row[1] - 6.0).abs() < 1e-9, "row: {row:?}");

    // no turning -> no slip at any order
    let out = run(&[
        "slip",
        "--config",
        config.to_str().unwrap(),
        "--v-theta",
        "0",
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!(row.iter().all(|x| x.abs() < 1e-12), "row: {row:?}");
}

#[test]
fn simulate_repeat_runs_are_byte_identical() {
    let config = write_config("sim_det.toml", &disk_config("full", 2e-4, 0.2, 2));
    let mut bytes = Vec::new();
    for name in ["det_a.csv", "det_b.csv"] {
        let out_path = tmp().join(name);
        let out = run(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        bytes.push(std::fs::read(&out_path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn validate_passes_on_disk() {
    let config = write_config("validate.toml", &disk_config("full", 2e-4, 1.0, 2));
    let out = run(&[
        "validate",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "42",
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "output:\n{text}");
    assert!(text.contains("PASS projection idempotence"));
    assert!(text.contains("PASS q-map identity"));
    assert!(text.contains("PASS force equivalence"));
    assert!(text.contains("PASS oracle slip match"));
    assert!(text.contains("status: ok"));
}

#[test]
fn validate_rejects_bad_params_exit_two() {
    let config = write_config(
        "validate_bad.toml",
        &disk_config("full", 2e-4, 1.0, 2).replace("m = 1.0", "m = 0.0"),
    );
    let out = run(&["validate", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("strictly positive"));
}
