use std::process::Command;

fn drto() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_drto"));
    cmd.env_remove("DRTO__EXPERIMENT__TOTAL_FRAMES");
    cmd
}

#[test]
fn verify_alloc_reports_agreement() {
    let out = drto().args(["verify-alloc", "--trials", "200"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("200 trials"));
}

#[test]
fn export_then_run_on_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"system": {"n_st": 3}}"#).unwrap();
    let status = drto()
        .args(["export-trace", "--config"])
        .arg(&cfg)
        .args(["--frames", "150", "--seed", "4", "--out"])
        .arg(&trace)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(std::fs::read_to_string(&trace).unwrap().lines().count(), 151);

    let out_dir = dir.path().join("out");
    let out = drto()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--algo", "drto,enum,pure-tc", "--seed", "1", "--frames", "150", "--trace"])
        .arg(&trace)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("drto vs pure-tc"));
    for f in ["drto_seed1.csv", "enum_seed1.csv", "pure-tc_seed1.csv", "summary.json", "trace_seed1.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    assert_eq!(
        std::fs::read(out_dir.join("trace_seed1.csv")).unwrap(),
        std::fs::read(&trace).unwrap()
    );
}

#[test]
fn env_override_reaches_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = drto()
        .env("DRTO__EXPERIMENT__TOTAL_FRAMES", "30")
        .env("DRTO__SYSTEM__N_ST", "2")
        .args(["run", "--algo", "pure-sat", "--no-timing", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("pure-sat_seed0.csv")).unwrap();
    assert_eq!(csv.lines().count(), 31);
}

#[test]
fn bench_prints_table() {
    let out = drto()
        .args(["bench", "--n", "2,3", "--algo", "pure-tc,cd", "--frames", "150"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 5);
}

#[test]
fn bad_input_fails_cleanly() {
    let out = drto().args(["run", "--algo", "nope"]).output().unwrap();
    assert!(!out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let out = drto().args(["run", "--config"]).arg(&missing).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let out = drto()
        .args(["run", "--n-st", "21", "--frames", "5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success(), "ratio needs enumeration");
}
