use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn idlms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idlms"))
        .args(args)
        .output()
        .expect("failed to launch idlms")
}

fn run_ok(args: &[&str]) -> Output {
    let out = idlms(args);
    assert!(
        out.status.success(),
        "idlms {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn small(out: &Path) -> Vec<String> {
    [
        "--out",
        out.to_str().unwrap(),
        "--n-nodes",
        "8",
        "--cycles",
        "150",
        "--runs",
        "5",
        "--seed",
        "11",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn args<'a>(head: &'a str, rest: &'a [String]) -> Vec<&'a str> {
    std::iter::once(head)
        .chain(rest.iter().map(String::as_str))
        .collect()
}

#[test]
fn run_writes_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let flags = small(dir.path());
    run_ok(&args("run", &flags));
    let curves = fs::read_to_string(dir.path().join("msd_curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 2 * 150);
    let nodes = fs::read_to_string(dir.path().join("nodes.csv")).unwrap();
    assert_eq!(nodes.lines().count(), 1 + 8);
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("master_seed = 11"));
    assert_eq!(
        manifest.lines().filter(|l| l.starts_with("# run ")).count(),
        5
    );
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_ok(&args("run", &small(a.path())));
    run_ok(&args("run", &small(b.path())));
    for f in ["msd_curves.csv", "nodes.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn manifest_reproduces_the_run() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    run_ok(&args("run", &small(first.path())));
    let manifest = first.path().join("manifest.txt");
    run_ok(&[
        "run",
        "--config",
        manifest.to_str().unwrap(),
        "--out",
        second.path().to_str().unwrap(),
    ]);
    for f in ["msd_curves.csv", "nodes.csv"] {
        assert_eq!(
            fs::read(first.path().join(f)).unwrap(),
            fs::read(second.path().join(f)).unwrap()
        );
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.txt");
    fs::write(&cfg, "n_nodes = 8\nn_cycles = 100\nn_runs = 2\nls = 10\n").unwrap();
    let out = dir.path().join("out");
    run_ok(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--ls",
        "30",
        "--out",
        out.to_str().unwrap(),
    ]);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("ls = 30"));
    assert!(manifest.contains("n_nodes = 8"));
}

#[test]
fn bad_configuration_exits_nonzero_naming_key() {
    let out = idlms(&["run", "--ls", "3000", "--cycles", "2000"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ls") && err.contains("n_cycles"), "{err}");

    let out = idlms(&["run", "--mu-max", "fast"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("mu_max"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.txt");
    fs::write(&cfg, "step = 0.1\n").unwrap();
    let out = idlms(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`step`"));
}

#[test]
fn unknown_preset_fails() {
    let out = idlms(&["preset", "fig9"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig2"));
}

#[test]
fn sweep_command_requires_axis() {
    let dir = tempfile::tempdir().unwrap();
    let out = idlms(&["sweep", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn sweep_writes_summary_and_points() {
    let dir = tempfile::tempdir().unwrap();
    let mut flags = small(dir.path());
    flags.extend(["--sweep-axis", "a", "--sweep-values", "0,10"].map(String::from));
    run_ok(&args("sweep", &flags));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.starts_with("a,steady_state_idlms"));
    assert!(dir.path().join("a_0/msd_curves.csv").exists());
    assert!(dir.path().join("a_10/nodes.csv").exists());
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("# check steady_state_nonincreasing"));
}

#[test]
fn preset_accepts_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let flags = small(dir.path());
    let mut all = vec!["preset", "fig6"];
    all.extend(flags.iter().map(String::as_str));
    all.extend(["--sweep-values", "4,8"]);
    run_ok(&all);
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("n_nodes,"));
    assert_eq!(summary.lines().count(), 3);
}
