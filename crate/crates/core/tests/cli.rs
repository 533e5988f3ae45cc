use std::path::Path;
use std::process::Command;

use ris_sesd::exp::{read_sweep_csv, write_sweep_csv};

const BIN: &str = env!("CARGO_BIN_EXE_ris-sesd");

const DESK: &str = r#"
[scene]
bs_antennas = 4
ris_horizontal = 4
ris_vertical = 4
users = 2

[engine]
eta = 2

[codebook]
bits = 2

[sweep]
powers_dbm = [10, 30]
trials = 2
seed = 5

[converge]
trials = 1

[nmse]
dimension = 12
realizations = 4
etas = [2, 4]
"#;

fn run(dir: &Path, args: &[&str], out: &str) -> Vec<u8> {
    let path = dir.join(out);
    let status = Command::new(BIN)
        .args(["--config", dir.join("desk.toml").to_str().unwrap()])
        .args(args)
        .args(["--out", path.to_str().unwrap()])
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success(), "{args:?} exited with {status}");
    std::fs::read(path).unwrap()
}

#[test]
fn every_subcommand_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("desk.toml"), DESK).unwrap();
    for cmd in ["sweep", "converge", "nmse", "example1"] {
        let a = run(dir.path(), &[cmd], &format!("{cmd}-a.csv"));
        let b = run(dir.path(), &[cmd], &format!("{cmd}-b.csv"));
        assert!(a.starts_with(b"# schema=1\n"), "{cmd}");
        assert_eq!(a, b, "{cmd}");
    }
}

#[test]
fn sweep_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("desk.toml"), DESK).unwrap();
    let bytes = run(dir.path(), &["sweep"], "sweep.csv");
    let rows = read_sweep_csv(bytes.as_slice()).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 4);
    let mut again = Vec::new();
    write_sweep_csv(&rows, &mut again).unwrap();
    assert_eq!(again, bytes);
}

#[test]
fn seed_flag_changes_the_draws() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("desk.toml"), DESK).unwrap();
    let a = run(dir.path(), &["sweep"], "a.csv");
    let b = run(dir.path(), &["sweep", "--seed", "6"], "b.csv");
    assert_ne!(a, b);
}

#[test]
fn bad_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[engine]\neta = 3\n").unwrap();
    let out = Command::new(BIN).args(["--config", cfg.to_str().unwrap(), "sweep"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eta"));
}

#[test]
fn example1_reports_pass() {
    let out = Command::new(BIN).arg("example1").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("PASS"));
}
