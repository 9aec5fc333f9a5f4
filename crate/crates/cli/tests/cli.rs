use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dressed-ion"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn out_dir(tag: &str) -> PathBuf {
    std::env::temp_dir().join(format!("dressed-ion-cli-{}-{tag}", std::process::id()))
}

#[test]
fn every_sample_config_explains() {
    for name in ["fig2", "fig3a", "fig3b", "stirap-scan", "sideband", "comb", "custom"] {
        let o = bin().args([name, "--explain", "--config"]).arg(configs().join(format!("{name}.toml"))).output().unwrap();
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).lines().any(|l| l.starts_with("seed ")), "{name}");
    }
}

#[test]
fn seed_flag_overrides_config() {
    let o = bin().args(["fig2", "--explain", "--seed", "99"]).output().unwrap();
    let line = stdout(&o).lines().find(|l| l.starts_with("seed ")).map(str::to_owned).unwrap();
    assert_eq!(line.split('=').nth(1).unwrap().split_whitespace().next(), Some("99"));
}

#[test]
fn subcommand_must_match_config() {
    let o = bin().args(["fig2", "--config"]).arg(configs().join("comb.toml")).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("comb"));
}

#[test]
fn custom_without_config_fails() {
    assert!(!bin().arg("custom").output().unwrap().status.success());
}

#[test]
fn scan_output_is_identical_across_worker_counts() {
    let mut sums = Vec::new();
    for workers in ["1", "2"] {
        let dir = out_dir(&format!("scan{workers}"));
        let o = bin().args(["stirap-scan", "--workers", workers, "--out"]).arg(&dir).output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        sums.push(std::fs::read_to_string(dir.join("SHA256SUMS")).unwrap());
        std::fs::remove_dir_all(&dir).ok();
    }
    assert_eq!(sums[0], sums[1]);
}

#[test]
fn custom_schedule_runs_relative_to_config() {
    let dir = out_dir("custom");
    let o = bin().args(["custom", "--config"]).arg(configs().join("custom.toml")).arg("--out").arg(&dir).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.join("manifest.json").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn truncation_breach_sets_exit_status() {
    let dir = out_dir("breach");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("breach.toml");
    std::fs::write(&cfg, "experiment = \"sideband\"\n[sideband]\nnFock = 2\neta = 0.3\ninitialFock = 1\n").unwrap();
    let o = bin().args(["sideband", "--config"]).arg(&cfg).arg("--out").arg(dir.join("out")).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("truncation"), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::remove_dir_all(&dir).ok();
}
