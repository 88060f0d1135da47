use std::path::Path;
use std::process::{Command, Output};

fn aqm_lab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aqm-lab")).args(args).current_dir(dir).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const TINY: &str = "scheme = \"red\"\nduration_s = 1.0\n[topology]\nn_ftp = 2\nn_voip = 2\n";

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["--help"][..], &["--version"], &["run", "--help"], &["sweep", "--help"]] {
        let out = aqm_lab(args, dir.path());
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(aqm_lab(&[], dir.path()).status.code(), Some(1));
    assert_eq!(aqm_lab(&["run"], dir.path()).status.code(), Some(1));
    assert_eq!(aqm_lab(&["frobnicate"], dir.path()).status.code(), Some(1));
}

#[test]
fn run_writes_one_csv_row() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tiny.toml", TINY);
    let out = aqm_lab(&["run", "--config", "tiny.toml", "--out", "r.csv", "--seed", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], aqm_lab::metrics::CSV_HEADER);
    assert!(lines[1].starts_with("red,,,4,"), "{}", lines[1]);
}

#[test]
fn run_without_out_prints_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tiny.toml", TINY);
    let a = aqm_lab(&["run", "--config", "tiny.toml"], dir.path());
    let b = aqm_lab(&["run", "--config", "tiny.toml"], dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&a.stdout).starts_with("scheme,"));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn invalid_config_exits_one_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "neg.toml", "scheme = \"pi\"\n[topology]\nbottleneck_bw_bps = -1.0\n");
    let out = aqm_lab(&["run", "--config", "neg.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("topology.bottleneck_bw_bps"));

    write(dir.path(), "typo.toml", "scheme = \"pi\"\n[pi]\nqref = 3\n");
    let out = aqm_lab(&["run", "--config", "typo.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("qref"));

    let out = aqm_lab(&["sweep", "--scenario", "3"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = aqm_lab(&["sweep", "--scenario", "1", "--flows", "5:1:1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unreadable_config_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = aqm_lab(&["run", "--config", "missing.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_ordered_rows() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "base.toml", "duration_s = 1.0\n");
    let args = [
        "sweep", "--scenario", "2", "--schemes", "pi,msqm", "--flows", "0:20:10", "--fixed", "20", "--seeds", "2,1",
        "--scale", "0.1", "--config", "base.toml", "--out", "res", "--jobs", "3",
    ];
    let out = aqm_lab(&args, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("res/scenario2.csv")).unwrap();
    let keys: Vec<String> = csv.lines().skip(1).map(|l| l.split(',').take(4).collect::<Vec<_>>().join(",")).collect();
    let expected: Vec<String> = ["pi", "msqm"]
        .iter()
        .flat_map(|s| [0, 1, 2].into_iter().flat_map(move |n| [2, 1].map(|seed| format!("{s},2,{n},{seed}"))))
        .collect();
    assert_eq!(keys, expected);
}
