use std::fs;
use std::process::{Command, Output};

fn savark(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_savark")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn run_writes_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ac.ini");
    fs::write(&cfg, "[model]\nkind = ac\n[grid]\nn = 16\n[time]\ndt = 1e-2\nt_final = 0.1\n").unwrap();
    let out = dir.path().join("run");
    let o = savark(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("manifest.json").is_file());
    assert!(out.join("energy.csv").is_file());
    assert!(out.join("snapshots/u_00000010.csv").is_file());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ini");
    fs::write(&bad, "[model]\nkind = ac\nfoo = 1\n[time]\ndt = 1e-2\nt_final = 1\n").unwrap();
    assert_eq!(code(&savark(&["run", "--config", bad.to_str().unwrap()])), 2);
    assert_eq!(code(&savark(&["run", "--config", "/nonexistent.ini"])), 2);
    assert_eq!(code(&savark(&["bogus"])), 2);
    assert_eq!(code(&savark(&["equiv", "--base", "gauss2", "--sweeps", "0", "--model", "ac", "--steps", "5"])), 2);

    let blow = dir.path().join("blow.ini");
    fs::write(
        &blow,
        "[model]\nkind = ch\ninitial = random\n[scheme]\nname = ark_gark_4_5_4\n[grid]\nn = 16\n[time]\ndt = 1e-3\nt_final = 0.1\n",
    )
    .unwrap();
    let out = dir.path().join("blow");
    assert_eq!(code(&savark(&["run", "--config", blow.to_str().unwrap(), "--out", out.to_str().unwrap()])), 3);
    assert!(fs::read_to_string(out.join("manifest.json")).unwrap().contains("\"failed\""));
}

#[test]
fn converge_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m.ini");
    fs::write(
        &cfg,
        "[model]\nkind = ch\nlambda = 0.01\nepsilon = 1\ninitial = manufactured_ch\n[grid]\nn = 16\n[time]\ndt = 0.1\nt_final = 1\n",
    )
    .unwrap();
    let table = dir.path().join("table.csv");
    let o = savark(&[
        "converge",
        "--config",
        cfg.to_str().unwrap(),
        "--dt",
        "0.1,0.05",
        "--reference",
        "manufactured",
        "--out",
        table.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("scheme,dt,l2_error,linf_error,rate_l2,rate_linf\n"));
    assert_eq!(stdout.lines().count(), 3);
    assert_eq!(fs::read_to_string(table).unwrap(), stdout);
    let o = savark(&["converge", "--config", cfg.to_str().unwrap(), "--dt", "0.1", "--reference", "exact"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn audit_and_equiv() {
    let dir = tempfile::tempdir().unwrap();
    let o = savark(&["audit", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().contains("DIARK(5,6,4)"));
    assert_eq!(fs::read_to_string(dir.path().join("audit.csv")).unwrap().lines().count(), 6);
    assert!(dir.path().join("audit.txt").is_file());

    let o = savark(&["equiv", "--base", "gauss2", "--sweeps", "2", "--model", "ac", "--steps", "5"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().contains("PASS"));
}
