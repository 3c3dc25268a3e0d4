//! End-to-end runs of the `wf-hierarchy` binary.

use std::path::Path;
use std::process::{Command, Output};

use wf_hierarchy::hierarchy::{HierarchicalSolution, SolutionJson};
use wf_hierarchy::Rational;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wf-hierarchy"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn solve_writes_all_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["solve", "--n", "1", "--f", "1", "--t", "0,0.5,1", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["solution.json", "densities.csv", "face_masses.csv", "moments.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let masses = read(&dir.path().join("face_masses.csv"));
    for line in masses.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let (dim, t, mass): (usize, f64, f64) = (
            cols[1].parse().unwrap(),
            cols[2].parse().unwrap(),
            cols[3].parse().unwrap(),
        );
        let expected = if dim == 0 { (1.0 - (-t).exp()) / 2.0 } else { (-t).exp() };
        assert!((mass - expected).abs() < 1e-15, "{line}");
    }
    let json: SolutionJson = serde_json::from_str(&read(&dir.path().join("solution.json"))).unwrap();
    let back = HierarchicalSolution::<Rational>::from_json(&json).unwrap();
    assert_eq!(
        serde_json::to_value(back.to_json()).unwrap(),
        serde_json::to_value(&json).unwrap()
    );
}

#[test]
fn solve_moments_match_oracle() {
    let o = run(&["solve", "--n", "2", "--f", "1", "--t", "1", "--moments", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let oracle = run(&[
        "moments",
        "--n",
        "2",
        "--f",
        "1",
        "--t",
        "1",
        "--moments",
        "2",
        "--format",
        "csv",
    ]);
    let csv = stdout(&oracle);
    for row in summary["moments"].as_array().unwrap() {
        let alpha: Vec<String> = row["alpha"].as_array().unwrap().iter().map(|v| v.to_string()).collect();
        let key = format!("1,{},", alpha.join(";"));
        let line = csv.lines().find(|l| l.starts_with(&key)).unwrap();
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((v - row["value"].as_f64().unwrap()).abs() < 1e-15, "{key}");
    }
}

#[test]
fn zero_data_gives_zero_solution() {
    let o = run(&["solve", "--n", "1", "--f", "0", "--t", "1", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    for line in stdout(&o).lines().skip(1) {
        assert!(line.ends_with(",0"), "{line}");
    }
}

#[test]
fn moments_mass_column_is_constant() {
    let o = run(&[
        "moments", "--n", "2", "--f", "x1 + 1", "--t", "0,1,5", "--format", "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let masses: Vec<String> = stdout(&o)
        .lines()
        .filter(|l| l.split(',').nth(1) == Some("0;0"))
        .map(|l| l.rsplit(',').next().unwrap().to_string())
        .collect();
    assert_eq!(masses.len(), 3);
    assert!(masses.iter().all(|m| m == &masses[0]));
}

#[test]
fn check_passes_exactly_in_rational_mode() {
    let o = run(&["check", "--n", "2", "--f", "1", "--mode", "rational", "--paths", "2000"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    for line in text
        .lines()
        .filter(|l| l.starts_with('[') && !l.contains("monte-carlo"))
    {
        assert!(
            line.starts_with("[PASS]") && line.contains("max_residual=0e0"),
            "{line}"
        );
    }
}

#[test]
fn check_passes_in_double_mode() {
    let o = run(&["check", "--n", "3", "--f", "x1", "--mode", "double", "--paths", "2000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn corrupted_mode_fails_check() {
    let o = run(&["check", "--n", "2", "--f", "x1 + 1", "--inject-fault", "--paths", "500"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("[FAIL] eigen-identity"));
}

#[test]
fn input_errors_exit_with_two() {
    for args in [
        &["solve", "--n", "2", "--f", "x1 x2"][..],
        &["solve", "--n", "2", "--f", "(x1)"],
        &["solve", "--n", "13"],
        &["moments", "--f", "1"],
        &["mc", "--n", "1", "--f", "x1 - 1"],
        &["solve", "--n", "1", "--f", "x1^11"],
    ] {
        let o = run(args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    assert_eq!(run(&["solve", "--bogus"]).status.code(), Some(2));
}

#[test]
fn mc_is_deterministic() {
    let args = [
        "mc",
        "--n",
        "2",
        "--f",
        "1",
        "--t",
        "0.5",
        "--paths",
        "300",
        "--pop-size",
        "100",
        "--seed",
        "11",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&[
        "mc",
        "--n",
        "2",
        "--t",
        "0.5",
        "--paths",
        "300",
        "--pop-size",
        "100",
        "--seed",
        "12",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn mc_fixed_start_csv() {
    let o = run(&[
        "mc",
        "--n",
        "1",
        "--start",
        "0.3,0.7",
        "--t",
        "0",
        "--paths",
        "10",
        "--pop-size",
        "10",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("t,kind,key,value,se\n"));
    assert!(text.contains("0,moment,1,0.7,0"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "n = 2\nf = \"x1\"\nt = [0.25]\nseed = 5\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let o = run(&["solve", "--config", cfg, "--seed", "9", "--explain"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("n        = 2"));
    assert!(text.contains("f        = \"x1\""));
    assert!(text.contains("t        = 0.25"));
    assert!(text.contains("seed     = 9"));

    std::fs::write(dir.path().join("bad.toml"), "colour = 3\n").unwrap();
    let o = run(&["solve", "--config", dir.path().join("bad.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
