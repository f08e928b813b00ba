//! End-to-end checks of the command-line surface: subcommands, file
//! outputs, and the exit-code contract (0 pass, 1 verification failure,
//! 2 usage/validation error).

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phaselab"))
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("phaselab-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_scenario(dir: &PathBuf, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const STATIC_SCENARIO: &str = r#"{
    "model": "static_spin",
    "params": {"mu_b": 1.0, "theta": 1.0471975511965976},
    "grid": {"steps": 20000},
    "initial": "w_plus",
    "analyses": [{"kind": "phases"}],
    "seed": 7
}"#;

#[test]
fn phases_subcommand_passes_and_prints_table() {
    let dir = workdir("phases");
    let scenario = write_scenario(&dir, "static.json", STATIC_SCENARIO);
    let output = bin().arg("phases").arg(&scenario).output().unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("aa_phase"));
    assert!(stdout.contains("overall: pass"));
}

#[test]
fn malformed_scenario_exits_2_with_field_message() {
    let dir = workdir("badtheta");
    let scenario = write_scenario(
        &dir,
        "bad.json",
        &STATIC_SCENARIO.replace("1.0471975511965976", "4.0"),
    );
    let output = bin().arg("phases").arg(&scenario).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("theta"), "stderr: {stderr}");
}

#[test]
fn missing_file_and_bad_axis_exit_2() {
    let output = bin().arg("phases").arg("/nonexistent.json").output().unwrap();
    assert_eq!(output.status.code(), Some(2));

    let dir = workdir("badaxis");
    let scenario = write_scenario(&dir, "static.json", STATIC_SCENARIO);
    let output = bin()
        .arg("sweep")
        .arg(&scenario)
        .args(["--axis", "omega", "--values", "1.0"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn simulate_emits_json_report_and_trajectory_csv() {
    let dir = workdir("simulate");
    let scenario = write_scenario(&dir, "static.json", STATIC_SCENARIO);
    let traj = dir.join("traj.csv");
    let output = bin()
        .arg("simulate")
        .arg(&scenario)
        .arg("--traj-out")
        .arg(&traj)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["overall_pass"], serde_json::Value::Bool(true));
    assert!(report["timestamp_unix_ms"].is_number());
    assert_eq!(report["defaults"]["steps"], 20000);

    let csv = std::fs::read_to_string(&traj).unwrap();
    assert!(csv.starts_with("t,psi_0_re,psi_0_im,psi_1_re,psi_1_im\n"));
    assert_eq!(csv.lines().count(), 20002);
}

#[test]
fn frame_subcommand_writes_frame_csv() {
    let dir = workdir("frame");
    let scenario = write_scenario(
        &dir,
        "static.json",
        &STATIC_SCENARIO.replace("20000", "4000"),
    );
    let frame = dir.join("frame.csv");
    let output = bin()
        .arg("frame")
        .arg(&scenario)
        .arg("--frame-out")
        .arg(&frame)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let csv = std::fs::read_to_string(&frame).unwrap();
    assert!(csv.starts_with("t,w0_0_re,w0_0_im,w0_1_re,w0_1_im,w1_0_re"));
    assert_eq!(csv.lines().count(), 4002);
}

#[test]
fn sweep_writes_csv_and_empty_values_exit_0() {
    let dir = workdir("sweep");
    let scenario = write_scenario(&dir, "static.json", STATIC_SCENARIO);
    let out = dir.join("sweep.csv");
    let output = bin()
        .arg("sweep")
        .arg(&scenario)
        .args(["--axis", "theta", "--values", "0.5,1.0,1.5"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("axis,value,model,"));
    assert_eq!(csv.lines().count(), 4);

    // empty value list: header only, success
    let output = bin()
        .arg("sweep")
        .arg(&scenario)
        .args(["--axis", "theta", "--values", ""])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
}

#[test]
fn interfere_reports_both_conventions() {
    let dir = workdir("interfere");
    let scenario = write_scenario(&dir, "static.json", STATIC_SCENARIO);
    let output = bin().arg("interfere").arg(&scenario).output().unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("interference_vs_closed_form"));
    assert!(stdout.contains("interference_unsigned_convention"));
    assert!(stdout.contains("interference_convention_discrepancy"));
}

#[test]
fn verify_single_criterion_passes() {
    let output = bin().args(["verify", "--criterion", "2"]).output().unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("[PASS] #2"));

    let output = bin().args(["verify", "--criterion", "99"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn custom_hamiltonian_scenario_runs() {
    let dir = workdir("custom");
    // constant diagonal generator sampled at two times
    let ham = r#"{
        "dim": 2,
        "samples": [
            {"t": 0.0, "matrix": [[-1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]},
            {"t": 10.0, "matrix": [[-1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]}
        ]
    }"#;
    std::fs::write(dir.join("ham.json"), ham).unwrap();
    let scenario = r#"{
        "model": "custom",
        "custom_path": "ham.json",
        "grid": {"t_end": 3.141592653589793, "steps": 20000},
        "initial": {"custom": [[0.8660254037844387, 0.0], [0.5, 0.0]]},
        "analyses": [{"kind": "phases"}]
    }"#;
    let path = write_scenario(&dir, "custom.json", scenario);
    let output = bin().arg("phases").arg(&path).output().unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    // no closed-form oracle: numeric-only rows
    assert!(stdout.contains("aa_phase"));
    assert!(stdout.contains("overall: pass"));
}

#[test]
fn coarse_grid_fails_with_exit_1() {
    // two orders of magnitude fewer steps than the contract grid: the
    // decomposition-residual gate must trip and the exit code must say so
    let dir = workdir("coarse");
    let scenario = write_scenario(
        &dir,
        "coarse.json",
        &STATIC_SCENARIO.replace("20000", "200"),
    );
    let output = bin().arg("phases").arg(&scenario).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("overall: FAIL"));
}

#[test]
fn repo_scenarios_stay_valid() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join("scenarios");
    let output = bin()
        .arg("phases")
        .arg(root.join("static_phases.json"))
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
}
