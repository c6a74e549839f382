use std::process::Command;

use edge_shadows::cli::{run, Outcome};

fn cli(args: &[&str]) -> Outcome {
    run(std::iter::once("edge-shadows").chain(args.iter().copied()))
}

#[test]
fn generate_crack_table() {
    let out = cli(&["generate", "--geometry", "crack", "--kind", "primal", "--j", "1", "--max-h", "10", "--max-f", "10", "--format", "dsl"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.stdout.matches("[crack primal").count(), 36);
    let line = out.stdout.split("[crack primal j=1 h=0 f=10]\n").nth(1).unwrap().lines().next().unwrap();
    assert!(line.ends_with("-46189/268435456 sin 19/2"), "{line}");
}

#[test]
fn generate_notch_dual() {
    let out = cli(&["generate", "--geometry", "vnotch90", "--kind", "dual", "--j", "2", "--max-h", "0", "--max-f", "4", "--format", "dsl"]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.starts_with("[vnotch90 dual j=2 h=0 f=0]\n  1 sin 4/3 ; 0-1/3r3 cos 4/3\n"));
    assert_eq!(out.stdout.matches('[').count(), 5);
}

#[test]
fn generate_single_eigenfunction_and_formats() {
    let out = cli(&["generate", "--geometry", "crack", "--max-h", "0", "--max-f", "0"]);
    assert_eq!((out.code, out.stdout.as_str()), (0, "phi_{0,1,0} = 1 sin 1/2\n"));
    let latex = cli(&["generate", "--geometry", "crack", "--j", "3", "--max-h", "0", "--max-f", "0", "--format", "latex"]);
    assert!(latex.stdout.contains("\\phi _{0,3,0} & = & \\sin \\frac{3\\varphi }{2}"));
    let json = cli(&["generate", "--geometry", "crack", "--max-h", "2", "--max-f", "1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json.stdout).unwrap();
    assert_eq!(v["entries"].as_array().unwrap().len(), 3);
}

#[test]
fn output_is_deterministic_and_can_go_to_a_file() {
    let args = ["generate", "--geometry", "vnotch90", "--j", "1..3", "--max-h", "4", "--max-f", "4", "--format", "json"];
    let a = cli(&args);
    let b = cli(&args);
    assert_eq!(a, b);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let mut with_file: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap();
    with_file.extend(["--output", p]);
    let c = cli(&with_file);
    assert_eq!((c.code, c.stdout.as_str()), (0, ""));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), a.stdout);
}

#[test]
fn generate_errors_exit_two() {
    // integer-exponent duals hit a resonance; the message names the key
    let out = cli(&["generate", "--geometry", "crack", "--kind", "dual", "--j", "2", "--max-h", "0", "--max-f", "4"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("psi_{0,2,2}"), "{}", out.stderr);
    assert_eq!(cli(&["generate", "--geometry", "crack", "--max-h", "3"]).code, 2);
    assert_eq!(cli(&["generate", "--geometry", "crack", "--j", "0"]).code, 2);
    assert_eq!(cli(&["generate", "--geometry", "cone"]).code, 2);
    let bad_out = cli(&["generate", "--geometry", "crack", "--output", "/nonexistent/dir/x"]);
    assert_eq!(bad_out.code, 2);
}

#[test]
fn verify_clean_family() {
    let out = cli(&["verify", "--geometry", "crack", "--kind", "primal", "--j", "1"]);
    assert_eq!(out.code, 0, "{}", out.stdout);
    assert!(out.stdout.starts_with("total 36  matched 36  mismatched 0"));
}

#[test]
fn verify_all_reports_counts() {
    let out = cli(&["verify", "--all"]);
    assert_eq!(out.code, 1);
    assert!(out.stdout.starts_with("total 422  matched 400  mismatched 22\n"), "{}", out.stdout);
}

#[test]
fn verify_corrupted_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.dsl");
    std::fs::write(
        &path,
        "# one good, one corrupted\n[crack primal j=1 h=0 f=1]\n  1/4 sin 1/2\n[crack primal j=1 h=2 f=0]\n  -1/7 sin 1/2\n",
    )
    .unwrap();
    let out = cli(&["verify", "--golden", path.to_str().unwrap()]);
    assert_eq!(out.code, 1);
    assert!(out.stdout.starts_with("total 2  matched 1  mismatched 1\n"));
    assert!(out.stdout.contains("MISMATCH crack phi_{2,1,0} [bad]: sin 1/2: expected -1/7, got -1/6"));
}

#[test]
fn verify_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.dsl");
    std::fs::write(&path, "[crack primal j=1 h=0 f=1]\n  1/4 tan 1/2\n").unwrap();
    let out = cli(&["verify", "--golden", path.to_str().unwrap()]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("broken: 2:7"), "{}", out.stderr);
    assert_eq!(cli(&["verify"]).code, 2);
    assert_eq!(cli(&["verify", "--all", "--j", "1"]).code, 2);
    assert_eq!(cli(&["verify", "--geometry", "crack", "--j", "99"]).code, 2);
    // a resonant key in a golden file is a solver failure
    std::fs::write(&path, "[crack dual j=2 h=0 f=2]\n  1 cos 1/2\n").unwrap();
    let out = cli(&["verify", "--golden", path.to_str().unwrap()]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("psi_{0,2,2}"));
}

#[test]
fn golden_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.dsl"), "[vnotch90 primal j=1 h=0 f=0]\n  1 sin 2/3 ; 0+1/3r3 cos 2/3\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_edge-shadows"))
        .args(["verify", "--geometry", "vnotch90"])
        .env("SHADOW_GOLDEN_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "total 1  matched 1  mismatched 0\n");
}

#[test]
fn eval_values() {
    let out = cli(&["eval", "--geometry", "crack", "--j", "1", "--K", "0", "--rho", "0.25", "--phi", "3.14159265", "--theta", "0", "--mode", "0", "--R", "1"]);
    assert_eq!(out.code, 0);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert!((v["tau"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    let out = cli(&["eval", "--geometry", "crack", "--K", "1", "--rho", "0.04", "--phi", "3.14159265", "--terms"]);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert!((v["tau"].as_f64().unwrap() - 0.202).abs() < 1e-9);
    assert_eq!(v["terms"].as_array().unwrap().len(), 2);
    let out = cli(&["eval", "--geometry", "vnotch90", "--rho", "0", "--phi", "0"]);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["tau"].as_f64(), Some(0.0));
}

#[test]
fn eval_domain_errors_exit_two() {
    assert_eq!(cli(&["eval", "--geometry", "vnotch90", "--rho", "0.1", "--phi", "2.0"]).code, 2);
    assert_eq!(cli(&["eval", "--geometry", "crack", "--rho", "1.5", "--phi", "0"]).code, 2);
    assert_eq!(cli(&["eval", "--geometry", "crack", "--rho", "0.1", "--phi", "0", "--R", "-1"]).code, 2);
    assert_eq!(cli(&["eval", "--geometry", "crack", "--kind", "dual", "--rho", "0", "--phi", "0"]).code, 2);
    assert_eq!(cli(&["eval", "--geometry", "crack", "--rho", "abc", "--phi", "0"]).code, 2);
}

#[test]
fn residual_sweeps() {
    let out = cli(&["residual", "--geometry", "crack", "--j", "1", "--K", "4", "--mode", "2", "--rho-min", "1e-3", "--rho-max", "1e-2", "--samples", "16"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let mut lines = out.stdout.lines();
    assert_eq!(lines.next(), Some("rho,abs_residual"));
    let summary: serde_json::Value = serde_json::from_str(out.stdout.lines().last().unwrap()).unwrap();
    assert!((summary["slope"].as_f64().unwrap() - 3.5).abs() < 0.3);
    assert_eq!(summary["expected"].as_f64(), Some(3.5));
    assert_eq!(out.stdout.lines().count(), 18);

    let out = cli(&["residual", "--geometry", "crack", "--K", "0"]);
    assert_eq!(out.code, 0);

    // a tolerance nothing can meet
    let out = cli(&["residual", "--geometry", "crack", "--K", "0", "--samples", "8", "--tolerance", "0.0001"]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("differs from expected"));
}

#[test]
fn residual_preconditions_exit_two() {
    assert_eq!(cli(&["residual", "--geometry", "crack", "--rho-max", "0.2"]).code, 2);
    assert_eq!(cli(&["residual", "--geometry", "crack", "--samples", "3"]).code, 2);
    assert_eq!(cli(&["residual", "--geometry", "crack", "--rho-min", "0"]).code, 2);
    assert_eq!(cli(&["residual", "--geometry", "crack", "--kind", "dual", "--j", "2", "--K", "3"]).code, 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_edge-shadows");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["verify", "--geometry", "crack", "--kind", "primal", "--j", "1"]), Some(0));
    assert_eq!(status(&["verify", "--geometry", "vnotch90", "--j", "4"]), Some(1));
    assert_eq!(status(&["residual", "--geometry", "crack", "--rho-max", "0.5"]), Some(2));
    assert_eq!(status(&["--version"]), Some(0));
}
