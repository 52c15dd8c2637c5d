//! End-to-end tests of the binary: exit codes, CSV shape, determinism,
//! configuration precedence, and the output-directory environment variable.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gexpect"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Data portion of a report: everything except the non-deterministic
/// runtime footer.
fn without_runtime(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# runtime_secs="))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn pde_subcommand_emits_one_row_with_config_echo() {
    let out = run(&[
        "pde",
        "--sigma2",
        "0.25",
        "1",
        "--phi",
        "sq",
        "--t",
        "1",
        "--accuracy",
        "coarse",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("# config: subcommand=pde"));
    assert!(text.contains("value,nx,dt,steps"));
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 2, "header plus one row: {text}");
    let value: f64 = data[1].split(',').next().unwrap().parse().unwrap();
    assert!((value - 1.0).abs() < 5e-3, "value {value}");
}

#[test]
fn repeated_runs_are_byte_identical_modulo_runtime() {
    let args = [
        "tree",
        "--sigma2",
        "0.25",
        "1",
        "--steps",
        "5",
        "--sigma-levels",
        "3",
        "--phi",
        "cos1",
        "--times",
        "1",
    ];
    let a = stdout(&run(&args));
    let b = stdout(&run(&args));
    assert_eq!(without_runtime(&a), without_runtime(&b));
    assert!(a.contains("# runtime_secs="));
}

#[test]
fn girsanov_check_error_column_decreases() {
    let out = run(&[
        "girsanov-check",
        "--sigma2",
        "0.25",
        "1",
        "--h",
        "const:0.5",
        "--phi",
        "cos1",
        "--times",
        "1",
        "--m-list",
        "4,6,8",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let errs: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("m,"))
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    assert_eq!(errs.len(), 3);
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn axioms_reports_full_pass_counts() {
    let out = run(&["axioms", "--trials", "10", "--steps", "6"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("axiom,"))
        .collect();
    assert_eq!(rows.len(), 6);
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(
            cells[1], "10",
            "axiom {} not fully passing: {row}",
            cells[0]
        );
        assert_eq!(cells[2], "10");
    }
}

#[test]
fn configuration_errors_exit_2_with_a_message() {
    // Leaf budget exceeded.
    let out = run(&["tree", "--steps", "30", "--sigma-levels", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("budget"), "stderr: {err}");

    // Malformed functional.
    let out = run(&["pde", "--phi", "cos(x1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("syntax error"));

    // Unknown flag (clap convention).
    let out = run(&["pde", "--definitely-not-a-flag"]);
    assert_eq!(out.status.code(), Some(2));

    // Observation time off the step grid.
    let out = run(&["tree", "--steps", "3", "--times", "0.5", "--t-final", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step grid"));
}

#[test]
fn config_file_layering_flags_beat_file_beats_default() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "t = 0.5\naccuracy = coarse\n").unwrap();
    let cfg_str = cfg.to_str().unwrap();

    // File value used when no flag is given.
    let text = stdout(&run(&["pde", "--config", cfg_str, "--phi", "lin"]));
    assert!(text.contains(" t=0.5 "), "echo: {text}");
    assert!(text.contains("accuracy=coarse"));

    // Flag overrides the file.
    let text = stdout(&run(&[
        "pde", "--config", cfg_str, "--phi", "lin", "--t", "1",
    ]));
    assert!(text.contains(" t=1 "), "echo: {text}");
}

#[test]
fn output_flag_and_env_directory_are_honored() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("row.csv");
    let out = run(&[
        "pde",
        "--phi",
        "lin",
        "--accuracy",
        "coarse",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    assert!(Path::new(&path).exists());

    let envdir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["pde", "--phi", "lin", "--accuracy", "coarse"])
        .env("GEXPECT_OUT_DIR", envdir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(envdir.path().join("pde.csv").exists());
}

#[test]
fn version_names_the_schemes() {
    let out = run(&["--version"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("tree"), "{text}");
    assert!(text.contains("monotone"), "{text}");
}

#[test]
fn reproduce_all_quick_passes_and_bias_injection_fails() {
    let out = run(&["reproduce-all", "--quick"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("ALL CRITERIA PASS"));
    assert_eq!(text.matches("PASS] criterion").count(), 10);

    let out = run(&["reproduce-all", "--quick", "--inject-bias", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn a_run_is_reproducible_from_its_echoed_config() {
    let first = stdout(&run(&[
        "girsanov-check",
        "--sigma2",
        "0.25",
        "1",
        "--h",
        "const:0.5",
        "--phi",
        "cos1",
        "--times",
        "1",
        "--m-list",
        "4,6",
    ]));
    let echo = first
        .lines()
        .next()
        .unwrap()
        .strip_prefix("# config: ")
        .unwrap();
    let mut cfg_lines = Vec::new();
    for pair in echo.split(' ') {
        let (k, v) = pair.split_once('=').unwrap();
        if k != "subcommand" {
            cfg_lines.push(format!("{k} = {v}"));
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("echo.cfg");
    std::fs::write(&cfg, cfg_lines.join("\n")).unwrap();
    let second = stdout(&run(&["girsanov-check", "--config", cfg.to_str().unwrap()]));
    assert_eq!(without_runtime(&first), without_runtime(&second));
}

#[test]
fn functional_alias_matches_phi_flag() {
    let a = stdout(&run(&["tree", "--steps", "4", "--phi", "sq", "--times", "1"]));
    let b = stdout(&run(&["tree", "--steps", "4", "--functional", "sq", "--times", "1"]));
    assert_eq!(without_runtime(&a), without_runtime(&b));
}

#[test]
fn totally_degenerate_band_runs_on_explicit_request() {
    let out = run(&[
        "pde",
        "--sigma2",
        "0",
        "0",
        "--phi",
        "sq",
        "--accuracy",
        "coarse",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text
        .lines()
        .find(|l| !l.starts_with('#') && !l.starts_with("value,"))
        .unwrap();
    let value: f64 = row.split(',').next().unwrap().parse().unwrap();
    assert_eq!(value, 0.0);
}
