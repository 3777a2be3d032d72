use std::path::PathBuf;
use std::process::{Command, Output};

fn fermidq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fermidq"))
        .args(args)
        .env_remove("FERMIDQ_TOL")
        .output()
        .expect("run fermidq")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fermidq-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn scenario_writes_a_json_report() {
    let out = tmp("report.json");
    let o = fermidq(&[
        "scenario", "nac", "--hbar", "1", "--omega", "1", "--c", "0.5", "--d", "0.5", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["config"]["c"], 0.5);
    // c = d = ħ/2: p1 = 1/2 + 1/(2(1 - 1/4)) = 7/6
    let p1 = v["spectra"]["++"][0].as_f64().unwrap();
    assert!((p1 - 7.0 / 6.0).abs() < 1e-10);
}

#[test]
fn scenario_reads_config_files_and_flags_override() {
    let cfg = tmp("nac.cfg");
    std::fs::write(&cfg, "hbar = 1\nomega = 2\nc = 0.1\nd = 0.3\n").unwrap();
    let o = fermidq(&["scenario", "nac", "--config", cfg.to_str().unwrap(), "--d", "-0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["omega"], 2.0);
    assert_eq!(v["config"]["d"], -0.1);
}

#[test]
fn near_boundary_couplings_warn() {
    let o = fermidq(&["scenario", "nac", "--c", "0.95", "--d", "0.2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn sweep_writes_csv() {
    let out = tmp("sweep.csv");
    let o = fermidq(&[
        "sweep", "--link", "c=d", "--from", "-0.9", "--to", "0.9", "--steps", "181", "--quantities", "ep_pp,ep_pm",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 182);
    assert!(text.starts_with("c_over_hbar,c,d,ep_pp,"));
}

#[test]
fn eval_pointwise_and_star() {
    let o = fermidq(&["eval", "--expr", "th1*th2 + th2*th1"]);
    assert_eq!(stdout(&o).trim(), "0.0");
    let o = fermidq(&["eval", "--expr", "th1*th2 + th2*th1", "--star", "--c", "0.3"]);
    assert_eq!(stdout(&o).trim(), "0.3");
    let o = fermidq(&["eval", "--expr", "-i*omega*(th1*th3 + th2*th4)", "--omega", "2"]);
    assert_eq!(stdout(&o).trim(), "-2.0*i*th1*th3 - 2.0*i*th2*th4");
    // on the constraint surface pi1 = -(i/2) th1
    let o = fermidq(&["eval", "--expr", "pi1*th1", "--star"]);
    assert_eq!(stdout(&o).trim(), "-0.25*i");
}

#[test]
fn eval_output_parses_back() {
    let o = fermidq(&["eval", "--expr", "(th1 + 2*i*th3)*(th2 - th4)*th1", "--star", "--c", "0.2", "--d", "-0.4"]);
    let first = stdout(&o).trim().to_string();
    let again = fermidq(&["eval", "--expr", &first]);
    assert_eq!(stdout(&again).trim(), first);
}

#[test]
fn usage_errors_exit_with_2() {
    for args in [
        vec!["eval", "--expr", "th1*(th2"],
        vec!["scenario", "nac", "--c", "1.5"],
        vec!["sweep", "--link", "c=2d"],
        vec!["sweep", "--quantities", "mass"],
        vec!["sweep", "--from", "0.5", "--to", "0.1"],
        vec!["verify", "--grid", "medium"],
        vec!["frobnicate"],
    ] {
        assert_eq!(fermidq(&args).status.code(), Some(2), "{args:?}");
    }
    let cfg = tmp("bad.json");
    std::fs::write(&cfg, r#"{"hbar": 1, "mass": 2}"#).unwrap();
    assert_eq!(fermidq(&["scenario", "nac", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn verify_reports_each_criterion() {
    let o = fermidq(&["verify", "--grid", "coarse"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with('[')).collect();
    assert_eq!(lines.len(), 10);
    let failed: Vec<&&str> = lines.iter().filter(|l| l.starts_with("[FAIL]")).collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].contains("monotonicity"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn tolerance_override_from_environment() {
    let bad = Command::new(env!("CARGO_BIN_EXE_fermidq"))
        .args(["verify"])
        .env("FERMIDQ_TOL", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let strict = Command::new(env!("CARGO_BIN_EXE_fermidq"))
        .args(["verify"])
        .env("FERMIDQ_TOL", "1e-18")
        .output()
        .unwrap();
    assert_eq!(strict.status.code(), Some(1));
    assert!(stdout(&strict).contains("[FAIL] criterion 1 "));
}

#[test]
fn perturbed_hodge_sign_fails_the_trace_check() {
    let o = fermidq(&["verify", "--perturb-hodge"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).lines().any(|l| l.starts_with("[FAIL] criterion 4 ")));
}
