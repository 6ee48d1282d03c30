use std::fs;
use std::process::Command;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thermal-hbt"))
}

#[test]
fn oracle_check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args(["oracle-check", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("oracle.csv").exists());

    let cfg = dir.path().join("truncated.toml");
    fs::write(&cfg, "oracle_n_max = 2\n").unwrap();
    let out = cli()
        .args(["oracle-check", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("t"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let out = cli()
        .args(["analytic-curve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = cli().args(["analytic-curve", "--format", "xml"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn json_format_writes_summary_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args(["analytic-curve", "--format", "json", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let mut names: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["run_info.json", "summary.json"]);
}
