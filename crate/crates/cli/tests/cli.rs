use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use serde_json::Value;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_magtorus")
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("failed to run magtorus")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn exact_family_scenario_passes() {
    let out = run(&["verify", scenario("linear-family-periodic").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["passed"], true);
    for check in report["checks"].as_array().unwrap() {
        assert!(check["max_sup"].as_f64().unwrap() < 1e-10, "{check}");
    }
    let drift = &report["trajectories"][0]["drift"];
    assert_eq!(drift[1]["name"], "F");
    assert!(drift[1]["relative_drift"].as_f64().unwrap() < 1e-8);
}

#[test]
fn random_nonsolution_fails_without_certificate() {
    let out = run(&["verify", scenario("random-nonsolution").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let report = json(&out);
    let cert = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "certificate").unwrap();
    assert_eq!(cert["certified"], false);
}

#[test]
fn cubic_family_passes() {
    let out = run(&["verify", scenario("power-family-n3").to_str().unwrap()]);
    assert_eq!(code(&out), 0);
}

#[test]
fn truncated_json_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("linear-family-periodic")).unwrap();
    let p = write(dir.path(), "cut.json", &text[..text.len() / 2]);
    let out = run(&["verify", p.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("preset", r#"{"schema_version": 1, "name": "p", "degree": 1, "lambda": {"preset": {"name": "nope"}},
            "coefficients": [{"k": 0, "u": {"const": 0.0}}]}"#),
        ("negative", r#"{"schema_version": 1, "name": "n", "degree": 1, "lambda": {"const": -1.0},
            "coefficients": [{"k": 0, "u": {"const": 0.0}}]}"#),
        ("schema", r#"{"schema_version": 9, "name": "s"}"#),
        ("unknown-key", r#"{"schema_version": 1, "name": "u", "colour": 3}"#),
        ("missing", r#"{"schema_version": 1, "name": "m", "degree": 2, "lambda": {"const": 1.0},
            "coefficients": [{"k": 0, "u": {"const": 0.0}}]}"#),
    ];
    for (name, text) in cases {
        let p = write(dir.path(), &format!("{name}.json"), text);
        let out = run(&["verify", p.to_str().unwrap()]);
        assert_eq!(code(&out), 2, "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = run(&["verify", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn reports_are_byte_identical() {
    let s = scenario("random-nonsolution");
    let a = run(&["verify", s.to_str().unwrap(), "--grid", "16,16", "--seed", "3"]);
    let b = run(&["verify", s.to_str().unwrap(), "--grid", "16,16", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["verify", s.to_str().unwrap(), "--grid", "16,16", "--seed", "4"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn report_and_flux_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&["verify", scenario("power-family-n3").to_str().unwrap(), "--out", d, "--plot-data", "--grid", "8,8"]);
    assert_eq!(code(&out), 0);
    let file = std::fs::read(dir.path().join("report.json")).unwrap();
    assert_eq!(file, out.stdout);
    let flux = std::fs::read_to_string(dir.path().join("fluxes.dat")).unwrap();
    assert!(flux.starts_with("# x y R G H"));
    assert_eq!(flux.lines().filter(|l| !l.is_empty() && !l.starts_with('#')).count(), 64);
}

#[test]
fn constant_field_circle_closes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&["simulate", scenario("flat-constant-field").to_str().unwrap(), "--out", d]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("circle.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(&header[..6], &["t", "x", "y", "phi", "H", "F"]);
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    let pi = std::f64::consts::PI;
    assert!((last[0] - pi).abs() < 1e-15);
    assert!(last[1].abs() < 1e-8);
    assert!((last[2] + 2.0).abs() < 1e-8);
    assert!((last[3] - pi).abs() < 1e-8);
}

#[test]
fn straight_lines_conserve_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", scenario("flat-zero-field").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    for d in report["trajectories"][0]["drift"].as_array().unwrap() {
        assert!(d["max_abs_drift"].as_f64().unwrap() < 1e-12);
    }
    assert!(report["trajectories"][0]["closed_form_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn step_halving_gives_fourth_order() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let s = scenario("flat-constant-field");
    let err = |dt: &str| {
        let out = run(&["simulate", s.to_str().unwrap(), "--out", d, "--dt", dt]);
        assert_eq!(code(&out), 0);
        json(&out)["trajectories"][0]["closed_form_error"].as_f64().unwrap()
    };
    let ratio = err("1e-2") / err("5e-3");
    assert!((12.0..=20.0).contains(&ratio), "{ratio}");
}

#[test]
fn aborted_integration_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "abort.json",
        r#"{"schema_version": 1, "name": "abort",
            "lambda": {"preset": {"name": "linear", "params": {"a": 1.0, "bx": -0.1}}},
            "omega": {"const": 0.0},
            "trajectories": [{"name": "run", "start": [0.0, 0.0, 0.0], "t_end": 50.0, "step": {"fixed": 0.01}}]}"#,
    );
    let out = run(&["simulate", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let report = json(&out);
    assert_eq!(report["trajectories"][0]["termination"]["status"], "aborted");
    let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    assert!(csv.lines().count() > 10);
}

#[test]
fn plot_data_columns_match_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&["simulate", scenario("flat-zero-field").to_str().unwrap(), "--out", d, "--plot-data"]);
    assert_eq!(code(&out), 0);
    let dat = std::fs::read_to_string(dir.path().join("line.dat")).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("line.csv")).unwrap();
    assert!(dat.starts_with("# t x y phi H F"));
    assert_eq!(dat.lines().count(), csv.lines().count());
}

#[test]
fn geodesic_matrix_and_spectrum() {
    let out = run(&["assemble", "--geodesic", "n=2", "a=0,1,1"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["matrix"], serde_json::json!([[0.0, 1.0], [1.0, 2.0]]));
    let s = 2f64.sqrt();
    let e = &r["spectrum"]["eigenvalues"];
    assert!((e[0][0].as_f64().unwrap() - (1.0 - s)).abs() < 1e-12);
    assert!((e[1][0].as_f64().unwrap() - (1.0 + s)).abs() < 1e-12);
    assert_eq!(r["spectrum"]["classification"], "hyperbolic");
}

#[test]
fn degree_one_assembly_matches_golden_file() {
    let out = run(&["assemble", "--degree", "1", "--at", "1,0.3"]);
    assert_eq!(code(&out), 0);
    let golden = std::fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/assemble-n1.json")).unwrap();
    assert_eq!(out.stdout, golden);
}

#[test]
fn degenerate_state_is_reported_not_rejected() {
    let out = run(&["assemble", scenario("degenerate-state").to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["spectrum"]["classification"], "degenerate");
}

#[test]
fn wrong_state_length_is_an_input_error() {
    let out = run(&["assemble", "--degree", "2", "--at", "1,0.3"]);
    assert_eq!(code(&out), 2);
    let out = run(&["assemble", "--degree", "1", "--at", "-1,0.3"]);
    assert_eq!(code(&out), 2);
    let out = run(&["assemble", "--geodesic", "n=2", "a=0,1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn spectrum_sweep_over_the_grid() {
    let out = run(&["assemble", scenario("random-nonsolution").to_str().unwrap(), "--sweep", "--grid", "6,5"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    let points = r["points"].as_array().unwrap();
    assert_eq!(points.len(), 30);
    assert_eq!(points[0]["state"].as_array().unwrap().len(), 4);
    let total: u64 = r["counts"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(total, 30);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn any_truncation_is_an_input_error(frac in 0.0..0.999f64) {
        let dir = tempfile::tempdir().unwrap();
        let text = std::fs::read_to_string(scenario("flat-zero-field")).unwrap();
        let cut = ((text.trim_end().len() as f64) * frac) as usize;
        let p = write(dir.path(), "cut.json", &text[..cut]);
        let out = run(&["verify", p.to_str().unwrap()]);
        prop_assert_eq!(code(&out), 2);
    }

    #[test]
    fn seeded_random_scenarios_fail_cleanly(seed in 0u64..1000) {
        let out = run(&["verify", scenario("random-nonsolution").to_str().unwrap(), "--grid", "8,8",
            "--seed", &seed.to_string()]);
        prop_assert_eq!(code(&out), 1);
    }
}
