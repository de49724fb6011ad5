use std::path::Path;
use std::process::Command;

use mucilage::model::{ParameterSet, StateVector};
use mucilage::ode::Trajectory;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mucilage"))
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn simulate_writes_trajectory_and_growth_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout) = run(&["simulate", "--out", out, "--sensitivities"]);
    assert_eq!(code, 0);
    let rate: f64 = stdout.trim().strip_prefix("growth_rate = ").unwrap().parse().unwrap();
    assert!((rate - 0.335).abs() < 0.01);
    let traj = Trajectory::from_csv(&read(&dir.path().join("trajectory.csv")), StateVector::chemostat_start(&ParameterSet::REFERENCE)).unwrap();
    assert_eq!(traj.len(), 50);
    let sens = read(&dir.path().join("sensitivities.csv"));
    assert_eq!(sens.lines().next().unwrap().split(',').count(), 7 + 66);
    let diag = read(&dir.path().join("diagnostics.csv"));
    assert!(diag.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn empty_chemostat_keeps_nutrients() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(&["simulate", "--out", dir.path().to_str().unwrap(), "--initial", "15,2000,0,0,0,0"]);
    assert_eq!(code, 0);
    let text = read(&dir.path().join("trajectory.csv"));
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!((v[1], v[2], v[5], v[6]), (15.0, 2000.0, 0.0, 0.0));
    }
}

#[test]
fn identify_from_target_prints_zero_residual() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = run(&["identify", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(stdout.trim(), "relative_residual = 0e0");
    let p = ParameterSet::load(dir.path().join("identified.params")).unwrap();
    assert_eq!(p, ParameterSet::REFERENCE);
    assert!(read(&dir.path().join("stages.csv")).starts_with("window_end,phase,iterations,rel_residual,failed,cause"));
}

#[test]
fn identify_divergent_guess_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut guess = ParameterSet::REFERENCE;
    guess.vmax_c *= 1e18;
    let gpath = dir.path().join("guess.params");
    guess.save(&gpath).unwrap();
    let (code, _) = run(&["identify", "--guess", gpath.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(read(&dir.path().join("stages.csv")).contains("blow_up@t=0.01"));
}

#[test]
fn identify_from_observation_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(&["simulate", "--out", out]).0, 0);
    let obs = dir.path().join("trajectory.csv");
    let (code, stdout) = run(&["identify", "--observations", obs.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 0);
    assert_eq!(stdout.trim(), "relative_residual = 0e0");
}

#[test]
fn evaluate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let (code, _) = run(&["evaluate", "--epsilon", "0,0.01", "--trials", "2", "--seed", "5", "--out", d.path().to_str().unwrap()]);
        assert_eq!(code, 0);
    }
    let sa = read(&a.path().join("statistics.csv"));
    assert_eq!(sa, read(&b.path().join("statistics.csv")));
    assert!(sa.lines().nth(1).unwrap().starts_with("0,1,2,100,0e0,0e0,5"));
}

#[test]
fn bad_input_exits_one() {
    assert_eq!(run(&["simulate", "--dt", "x"]).0, 1);
    assert_eq!(run(&["simulate", "--initial", "1,2"]).0, 1);
    assert_eq!(run(&["simulate", "--t-end", "50", "--sample-period", "0.333"]).0, 1);
}
