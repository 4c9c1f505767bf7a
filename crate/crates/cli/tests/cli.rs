use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const DI: &str = r#"
[plant]
type = "double_integrator"

[gains]
mode = "joint"
kp = 6.0
kd = 10.0

[constraints]
e_max = 0.1
soft = { space = "joint", normal = [0.0, 1.0], offset = 1.5 }

[contact]
k = 100.0
b = 10.0

[governor]
f_ss = 1.0

[sim]
q0 = [0.0, 0.0]
reference = [0.5, 1.8]
duration = 2.0
dt = 1e-3
"#;

fn cerg(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cerg"));
    cmd.args(args).env_remove("CERG_OUT_DIR");
    if let Some(dir) = out_env {
        cmd.env("CERG_OUT_DIR", dir);
    }
    cmd.output().expect("spawn cerg")
}

fn scenario(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(format!("{name}.scenario"));
    fs::write(&path, text).unwrap();
    path
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn run_writes_csv_with_golden_header() {
    let dir = TempDir::new().unwrap();
    let file = scenario(&dir, "di", DI);
    let out_dir = dir.path().join("out");
    let out = cerg(&["run", file.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--plots"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let csv = fs::read_to_string(out_dir.join("di.csv")).unwrap();
    let golden =
        fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/trace_header.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), golden.trim_end());
    assert_eq!(csv.lines().count(), 1 + 2001);

    let summary = json(&out_dir.join("di.summary.json"));
    assert_eq!(summary["mode"], "governed");
    assert_eq!(summary["or_violations"], 0);
    for plot in ["energy", "force", "trajectory"] {
        let svg = fs::read_to_string(out_dir.join(format!("di-{plot}.svg"))).unwrap();
        assert!(svg.starts_with("<svg"), "{plot}");
    }
    assert!(fs::read_to_string(out_dir.join("di-energy.svg")).unwrap().contains("E_max"));
}

#[test]
fn numbers_use_nine_significant_digits() {
    let dir = TempDir::new().unwrap();
    let file = scenario(&dir, "di", DI);
    let out = cerg(&["run", file.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for row in csv_rows(&dir.path().join("di.csv")).iter().skip(1) {
        assert_eq!(row.len(), 18);
        for cell in &row[..17] {
            let mantissa = cell.split('e').next().unwrap();
            let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
            let significant = digits.trim_start_matches('0');
            assert!(significant.len() <= 9, "{cell}");
            cell.parse::<f64>().unwrap();
        }
    }
}

#[test]
fn missing_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let file = scenario(&dir, "broken", &DI.replace("e_max = 0.1\n", ""));
    let out = cerg(&["run", file.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("e_max"), "{}", stderr(&out));
}

#[test]
fn unknown_key_and_missing_file_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let file = scenario(&dir, "typo", &DI.replace("kd = 10.0", "kd = 10.0\nki = 1.0"));
    let out = cerg(&["validate", file.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ki"), "{}", stderr(&out));

    let out = cerg(&["validate", dir.path().join("absent.scenario").to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn no_governor_runs_the_baseline() {
    let dir = TempDir::new().unwrap();
    let file = scenario(&dir, "di", DI);
    let out = cerg(&["run", file.to_str().unwrap(), "--no-governor", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary = json(&dir.path().join("di-baseline.summary.json"));
    assert_eq!(summary["mode"], "baseline");
    for row in csv_rows(&dir.path().join("di-baseline.csv")).iter().skip(1) {
        assert_eq!((row[5].as_str(), row[6].as_str()), ("0.5", "1.8"));
    }
}

#[test]
fn output_dir_falls_back_to_environment() {
    let dir = TempDir::new().unwrap();
    let file = scenario(&dir, "di", DI);
    let env_dir = dir.path().join("from-env");
    let out = cerg(&["run", file.to_str().unwrap()], Some(&env_dir));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(env_dir.join("di.csv").exists());
}

#[test]
fn numerical_blowup_exits_3_with_partial_trace() {
    let dir = TempDir::new().unwrap();
    let text = DI.replace("k = 100.0\nb = 10.0", "k = 1e9\nb = 1e9").replace("duration = 2.0", "duration = 10.0");
    let file = scenario(&dir, "stiff", &text);
    let out = cerg(&["run", file.to_str().unwrap(), "--no-governor", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let summary = json(&dir.path().join("stiff-baseline.summary.json"));
    assert!(summary["error"].is_string());
    let rows = csv_rows(&dir.path().join("stiff-baseline.csv")).len();
    assert!(rows > 2 && rows < 10_002, "{rows}");
}

#[test]
fn validate_echoes_parameters() {
    let dir = TempDir::new().unwrap();
    let file = scenario(&dir, "di", DI);
    let out = cerg(&["validate", file.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("delta_s=0.16666666666666666"), "{text}");
    assert!(text.contains("e_max         0.1"), "{text}");
    assert!(!stderr(&out).contains("warning"));
}

#[test]
fn validate_warns_when_steady_energy_exceeds_bound() {
    let dir = TempDir::new().unwrap();
    let file = scenario(&dir, "hot", &DI.replace("f_ss = 1.0", "f_ss = 1.2"));
    let out = cerg(&["validate", file.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let err = stderr(&out);
    assert!(err.contains("warning"), "{err}");
    assert!(err.contains("E_ss = 0.12") && err.contains("E_max = 0.1"), "{err}");
}

#[test]
fn validate_rejects_inverted_hard_margins() {
    let dir = TempDir::new().unwrap();
    let file = scenario(&dir, "margins", &DI.replace("f_ss = 1.0", "f_ss = 1.0\nzeta = 0.04\ndelta_h = 0.05"));
    let out = cerg(&["validate", file.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("zeta > delta_h > 0"), "{}", stderr(&out));
}

#[test]
fn compare_with_admissible_target_never_touches() {
    let dir = TempDir::new().unwrap();
    let file = scenario(&dir, "free", &DI.replace("reference = [0.5, 1.8]", "reference = [0.5, 1.0]"));
    let out = cerg(&["compare", file.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let runs = json(&dir.path().join("free-compare.json"));
    let runs = runs.as_array().unwrap();
    assert_eq!(runs.len(), 2);
    for r in runs {
        assert_eq!(r["peak_force"], 0.0);
        assert_eq!(r["steady_state"]["force_mean"], 0.0);
        assert!(r["first_contact_time"].is_null());
    }
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("governed-joint") && table.contains("baseline-joint"), "{table}");
}

#[test]
fn compare_lists_both_controllers_when_both_gain_sets_given() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/rr_arm_joint.scenario"))
        .unwrap()
        .replace("duration = 30.0", "duration = 2.5");
    let file = scenario(&dir, "arm", &text);
    let out = cerg(&["compare", file.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let runs = json(&dir.path().join("arm-compare.json"));
    let labels: Vec<String> = runs
        .as_array()
        .unwrap()
        .iter()
        .map(|r| format!("{}-{}", r["mode"].as_str().unwrap(), r["controller"].as_str().unwrap()))
        .collect();
    assert_eq!(labels, ["governed-joint", "governed-task", "baseline-joint"]);
    for suffix in ["energy", "force", "trajectory"] {
        assert!(dir.path().join(format!("arm-compare-{suffix}.svg")).exists());
    }
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let dir = TempDir::new().unwrap();
    let file = scenario(&dir, "di", DI);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let out = cerg(&["run", file.to_str().unwrap(), "--out", d.to_str().unwrap()], None);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(fs::read(a.join("di.csv")).unwrap(), fs::read(b.join("di.csv")).unwrap());
}

#[test]
fn usage_errors_exit_2() {
    let out = cerg(&["frobnicate"], None);
    assert_eq!(out.status.code(), Some(2));
}
