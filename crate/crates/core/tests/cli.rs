//! Exit codes of the command-line tool.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spillfree"))
}

fn bundled(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

#[test]
fn bundled_config_simulates_cleanly() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .arg("simulate")
        .arg(bundled("frictionless_slosh.toml"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(
        status.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    for f in ["feasibility.json", "trajectory.csv", "verification.json"] {
        assert!(out.path().join(f).exists(), "missing {f}");
    }
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "[physical]\nmu = 0.1\nlength = 1.0\nmass = 0.5\nh_max = 1.0\nbogus = 1\n",
    )
    .unwrap();
    let status = bin().arg("simulate").arg(&cfg).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn infeasible_certificate_is_a_check_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("infeasible.toml");
    // A friction bound far beyond what any gain can absorb.
    std::fs::write(
        &cfg,
        "[physical]\nmu = 0.1\nlength = 1.0\nmass = 0.5\nh_max = 1.0\n\
         [friction]\nmodel = \"const_abs_v\"\ncf = 1e6\n\
         [gains]\nmode = \"explicit\"\ntheorem = \"theorem1\"\nomega = 0.4\nr = 1e-4\ndelta = 1.0\n",
    )
    .unwrap();
    let status = bin()
        .args(["gains", "check"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        status.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
}
