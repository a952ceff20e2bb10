//! End-to-end tests of the fracsinc binary: exit codes, file outputs,
//! determinism, kernel-cache correctness, and a 3-d smoke run.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fracsinc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracsinc"))
}

fn run(args: &[&str]) -> Output {
    fracsinc().args(args).output().expect("spawn fracsinc")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn ball_1d_config(dir: &Path, cache: Option<&Path>) -> PathBuf {
    let cache_line = match cache {
        Some(c) => format!(",\n  \"kernel_cache_dir\": {:?}", c.display().to_string()),
        None => String::new(),
    };
    write_config(
        dir,
        "ball1d.json",
        &format!(
            r#"{{
  "d": 1, "s": 0.5, "n_list": [8, 16, 32],
  "shape": {{"kind": "ball", "center": [0.5], "radius": 0.45}},
  "rhs": {{"mode": "direct", "f": "one"}}{cache_line}
}}"#
        ),
    )
}

#[test]
fn missing_config_exits_one() {
    let out = run(&["converge", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_flag_exits_one() {
    let out = run(&["converge", "--config", "x.json", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn kernel_roundtrip_validates() {
    let dir = tempfile::tempdir().unwrap();
    let kpath = dir.path().join("k.fsk");
    let out = run(&[
        "kernel", "--d", "1", "--n", "8", "--s", "0.5", "--out",
        kpath.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let out = run(&[
        "validate-kernel",
        "--file",
        kpath.to_str().unwrap(),
        "--samples",
        "10",
        "--tol",
        "1e-6",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));

    // corrupt a payload byte: loading now fails the checksum, exit 2
    let mut bytes = fs::read(&kpath).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x01;
    fs::write(&kpath, &bytes).unwrap();
    let out = run(&["validate-kernel", "--file", kpath.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_kernel_parameters_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let kpath = dir.path().join("k.fsk");
    // s outside (0,1) is a usage error
    let out = run(&[
        "kernel", "--d", "1", "--n", "8", "--s", "1.5", "--out",
        kpath.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    // bad oversample is a numerical-domain error from the library
    let out = run(&[
        "kernel", "--d", "1", "--n", "8", "--s", "0.5", "--oversample", "3", "--out",
        kpath.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn converge_writes_deterministic_outputs_and_cache_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cfg_nocache = ball_1d_config(dir.path(), None);
    let csv_a = dir.path().join("a.csv");
    let out = run(&[
        "converge",
        "--config",
        cfg_nocache.to_str().unwrap(),
        "--out",
        csv_a.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(csv_a.exists());
    assert!(dir.path().join("a.summary.txt").exists());

    // second run, same config: byte-identical CSV
    let csv_b = dir.path().join("b.csv");
    let out = run(&[
        "converge",
        "--config",
        cfg_nocache.to_str().unwrap(),
        "--out",
        csv_b.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read(&csv_a).unwrap(), fs::read(&csv_b).unwrap());

    // cached runs (cold then warm) match the uncached numbers
    let cfg_cache = ball_1d_config(dir.path(), Some(&cache));
    for name in ["c.csv", "d.csv"] {
        let csv = dir.path().join(name);
        let out = run(&[
            "converge",
            "--config",
            cfg_cache.to_str().unwrap(),
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{out:?}");
        assert_eq!(fs::read(&csv_a).unwrap(), fs::read(&csv).unwrap());
    }
    assert!(cache.read_dir().unwrap().count() >= 3, "cache not populated");

    // the CSV carries the documented columns
    let text = fs::read_to_string(&csv_a).unwrap();
    assert!(text.starts_with("N,h,l2,linf,energy,decay_ratio\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn converge_flags_short_rate_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "short.json",
        r#"{
  "d": 1, "s": 0.5, "n_list": [8, 16],
  "shape": {"kind": "ball", "center": [0.5], "radius": 0.45},
  "rhs": {"mode": "direct", "f": "one"}
}"#,
    );
    let csv = dir.path().join("short.csv");
    let out = run(&[
        "converge",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let summary = fs::read_to_string(dir.path().join("short.summary.txt")).unwrap();
    assert!(summary.contains("insufficient points"));
}

#[test]
fn self_convergence_on_box_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "box.json",
        r#"{
  "d": 1, "s": 0.5, "n_list": [8, 16, 32, 64],
  "shape": {"kind": "box", "lo": [0.25], "hi": [0.75]},
  "rhs": {"mode": "direct", "f": "linear-x1"}
}"#,
    );
    let csv = dir.path().join("box.csv");
    let out = run(&[
        "converge",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = fs::read_to_string(&csv).unwrap();
    let l2: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(l2.len(), 3); // finest row serves as the reference
    assert!(l2.windows(2).all(|w| w[1] < w[0]), "l2 not decreasing: {l2:?}");
}

#[test]
fn solve_writes_solution_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ball_1d_config(dir.path(), None);
    let sol = dir.path().join("solution.csv");
    let out = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        sol.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = fs::read_to_string(&sol).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k1,x1,u"));
    assert_eq!(text.lines().count(), 33); // header + 32 lattice rows
    // center value approximates the closed form 0.45
    let center = text
        .lines()
        .find(|l| l.starts_with("16,"))
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse::<f64>()
        .unwrap();
    assert!((center - 0.45).abs() < 0.02, "center value {center}");
}

#[test]
fn mollifier_dump_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("eta.csv");
    let out = run(&[
        "mollifier-dump",
        "--d",
        "1",
        "--epsilon",
        "0.1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("x1,eta\n"));
    // tabulated mass: sum of values times the grid spacing eps/q
    let mass: f64 = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum::<f64>()
        * (0.1 / 8.0);
    assert!((mass - 1.0).abs() < 1e-8, "mass {mass}");
}

/// 3-d smoke run at N=32 (oversample 4 keeps assembly small).
#[test]
fn smoke_3d_solve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ball3d.json",
        r#"{
  "d": 3, "s": 0.5, "n_list": [32],
  "shape": {"kind": "ball", "center": [0.5, 0.5, 0.5], "radius": 0.3},
  "rhs": {"mode": "direct", "f": "one"},
  "oversample": 4
}"#,
    );
    let sol = dir.path().join("sol3d.csv");
    let out = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        sol.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = fs::read_to_string(&sol).unwrap();
    // center of the ball: exact value Gamma(3/2)/(2 Gamma(2) Gamma(3/2)) * 0.3 = 0.15
    let center = text
        .lines()
        .find(|l| l.starts_with("16,16,16,"))
        .unwrap()
        .split(',')
        .nth(6)
        .unwrap()
        .parse::<f64>()
        .unwrap();
    assert!((center - 0.15).abs() < 0.02, "3d center value {center}");
}
