//! End-to-end checks of the `chns` binary: outputs, manifests and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use chns::io::RunManifest;

fn chns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chns"))
        .args(args)
        .env_remove("CHNS_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn tiny_channel(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "channel",
        "--set",
        "nx=6",
        "--set",
        "ny=4",
        "--set",
        "T=0.03",
        "--set",
        "output_every=2",
        "--output",
        out.to_str().unwrap(),
    ];
    for e in extra {
        args.extend(["--set", e]);
    }
    chns(&args)
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn channel_run_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = tiny_channel(&out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["config.txt", "timeseries.csv", "snapshot_0000000.vtk", "snapshot_0000002.vtk"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let series = std::fs::read_to_string(out.join("timeseries.csv")).unwrap();
    assert_eq!(series.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3);
    let m = manifest(&out);
    assert_eq!(m.command, "channel");
    assert_eq!(m.config["nx"], "6");
    assert_eq!(m.exit_status.unwrap().code, 0);
    assert!(m.files.iter().any(|f| f.ends_with("timeseries.csv")));
}

#[test]
fn environment_overrides_output_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let env_dir = tmp.path().join("from_env");
    let flag_dir = tmp.path().join("from_flag");
    let o = Command::new(env!("CARGO_BIN_EXE_chns"))
        .args(["channel", "--set", "nx=6", "--set", "ny=4", "--set", "T=0.01"])
        .arg("--output")
        .arg(&flag_dir)
        .env("CHNS_OUTPUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(env_dir.join("manifest.json").is_file());
    assert!(!flag_dir.exists());
}

#[test]
fn configuration_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    for bad in ["dt=0.007", "no_such_key=1", "chi=-1", "nx=0"] {
        let o = tiny_channel(&tmp.path().join("bad"), &[bad]);
        assert_eq!(o.status.code(), Some(2), "{bad}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(!tmp.path().join("bad").exists());
}

#[test]
fn newton_failure_exits_with_3_and_keeps_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fail");
    let o = tiny_channel(&out, &["newton_max_iterations=1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(out.join("timeseries.csv").is_file());
    assert!(out.join("snapshot_0000000.vtk").is_file());
    assert_eq!(manifest(&out).exit_status.unwrap().code, 3);
}

#[test]
fn unwritable_output_exits_with_4() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = tiny_channel(&blocker.join("sub"), &[]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn print_config_round_trips_overrides() {
    let o = chns(&["channel", "--set", "dt=0.02", "--print-config"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l.replace(' ', "") == "dt=0.02"), "{text}");
}

#[test]
fn keys_lists_every_setting() {
    let o = chns(&["keys"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for key in ["dt", "chi", "newton_reuse_jacobian", "viscosity_file"] {
        assert!(text.lines().any(|l| l.starts_with(key)), "{key}");
    }
}

#[test]
fn viscosity_table_covers_the_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chns(&["viscosity-table", "--output", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(tmp.path().join("viscosity_table.csv")).unwrap();
    assert_eq!(text.lines().count(), 2 + 52 * 21);
}

#[test]
fn validate_and_fixture_verify_pass() {
    let o = chns(&["validate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    let o = chns(&["fixtures", "verify"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout).matches("PASS").count(), 3);
}
