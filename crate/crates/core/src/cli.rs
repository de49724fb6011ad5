//! Command-line front end: `simulate`, `identify` and `evaluate`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::{check_positivity, check_quota_threshold, log_slope};
use crate::error::{Error, Result};
use crate::harness::{TrialRecord, TrialStatistics, perturb_parameters, run_trials, summarize};
use crate::identification::{IdentificationConfig, ObservationSet, staged_identify};
use crate::model::{ParameterSet, StateVector, idx};
use crate::ode::{IntegrationConfig, Trajectory, integrate, integrate_with_sensitivity};

/// Tolerance used for the positivity and quota checks written by `simulate`.
pub const DIAGNOSTIC_TOL: f64 = 1e-9;

/// Exponential-phase window used for the reported growth rate of `D`.
pub const GROWTH_WINDOW: (f64, f64) = (5.0, 20.0);

#[derive(Debug, Parser)]
#[command(name = "mucilage", version, about = "Diatom/mucilage chemostat simulation and parameter identification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the model and write the sampled trajectory.
    Simulate(SimulateArgs),
    /// Recover the free parameters from observations.
    Identify(IdentifyArgs),
    /// Monte-Carlo perturbation statistics of the identification.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Parameter file; the reference set when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = 50.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sample_period: f64,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Also write forward sensitivities to `sensitivities.csv`.
    #[arg(long)]
    pub sensitivities: bool,
    /// Initial state `N,C,Q_N,Q_C,D,M`; defaults to the chemostat start.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct IdentifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Initial-guess parameter file. Without it the guess is the target
    /// perturbed by `--epsilon` with `--seed`.
    #[arg(long)]
    pub guess: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Observation CSV (`t,N,C,Q_N,Q_C,D,M`) used instead of synthesized data.
    #[arg(long)]
    pub observations: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Perturbation amplitudes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05")]
    pub epsilon: Vec<f64>,
    /// Sampling periods, comma separated; overrides `--sample-period`.
    #[arg(long = "sample-periods", value_delimiter = ',')]
    pub sample_periods: Option<Vec<f64>>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Exit status: 0 success, 1 bad input, 2 numerical failure.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::BlowUp { .. } | Error::NonFiniteState | Error::SingularNormalMatrix => 2,
        _ => 1,
    }
}

/// Parses `args` and runs the command, returning the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Identify(a) => cmd_identify(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    }
}

fn load_params(path: Option<&Path>) -> Result<ParameterSet> {
    match path {
        Some(p) => ParameterSet::load(p),
        None => Ok(ParameterSet::REFERENCE),
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    let p = load_params(a.common.params.as_deref())?;
    let x0 = match &a.initial {
        Some(v) if v.len() == 6 => StateVector::new(v[0], v[1], v[2], v[3], v[4], v[5]),
        Some(v) => return Err(Error::InvalidConfig(format!("--initial needs 6 values, got {}", v.len()))),
        None => StateVector::chemostat_start(&p),
    };
    let cfg = IntegrationConfig::new(a.common.t_end, a.common.sample_period).with_dt(a.common.dt);
    let traj = if a.sensitivities {
        integrate_with_sensitivity(&x0, &p, &cfg)?
    } else {
        integrate(&x0, &p, &cfg)?
    };
    prepare_out(&a.common.out)?;
    let plain = Trajectory { sensitivities: None, ..traj.clone() };
    plain.write_csv(a.common.out.join("trajectory.csv"))?;
    if a.sensitivities {
        traj.write_csv(a.common.out.join("sensitivities.csv"))?;
    }
    let mut report = String::from("property,start,end,max_violation,pass\n");
    let _ = writeln!(report, "{}", check_positivity(&traj, DIAGNOSTIC_TOL));
    let _ = writeln!(report, "{}", check_quota_threshold(&traj, &p, DIAGNOSTIC_TOL));
    write(&a.common.out.join("diagnostics.csv"), &report)?;
    match log_slope(&traj.times, &traj.component(idx::D), GROWTH_WINDOW.0, GROWTH_WINDOW.1) {
        Some(rate) => println!("growth_rate = {rate:.6}"),
        None => println!("growth_rate = nan"),
    }
    Ok(0)
}

pub fn cmd_identify(a: &IdentifyArgs) -> Result<i32> {
    let target = load_params(a.common.params.as_deref())?;
    let obs = match &a.observations {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let traj = Trajectory::from_csv(&text, StateVector::chemostat_start(&target))?;
            ObservationSet::from_trajectory(&traj, target.data(), a.common.sample_period, a.common.dt)?
        }
        None => {
            let x0 = StateVector::chemostat_start(&target);
            let cfg = IntegrationConfig::new(a.common.t_end, a.common.sample_period).with_dt(a.common.dt);
            let traj = integrate(&x0, &target, &cfg)?;
            ObservationSet::from_trajectory(&traj, target.data(), a.common.sample_period, a.common.dt)?
        }
    };
    let p0 = match &a.guess {
        Some(path) => ParameterSet::load(path)?.free_vector(),
        None => perturb_parameters(&target.free_vector(), a.epsilon, a.seed),
    };
    let result = staged_identify(&p0, &obs, &IdentificationConfig::default())?;
    prepare_out(&a.common.out)?;
    write(&a.common.out.join("stages.csv"), &result.report_csv())?;
    target
        .with_free(&result.params)
        .save(a.common.out.join("identified.params"))?;
    println!("relative_residual = {:e}", result.rel_residual);
    match result.failure {
        None => Ok(0),
        Some(status) => {
            eprintln!("identification failed: {}", status.cause());
            Ok(2)
        }
    }
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<i32> {
    let p = load_params(a.common.params.as_deref())?;
    let periods = a.sample_periods.clone().unwrap_or_else(|| vec![a.common.sample_period]);
    let cfg = IdentificationConfig::default();
    let mut stats = format!("{}\n", TrialStatistics::CSV_HEADER);
    let mut trials = format!("sampling_period,{}\n", TrialRecord::CSV_HEADER);
    for &period in &periods {
        for &eps in &a.epsilon {
            let records = run_trials(&p, eps, a.trials, period, a.common.t_end, a.seed, &cfg)?;
            let s = summarize(&records, period)?;
            println!("{}", s.csv_row());
            let _ = writeln!(stats, "{}", s.csv_row());
            for r in &records {
                let _ = writeln!(trials, "{period},{}", r.csv_row());
            }
        }
    }
    prepare_out(&a.common.out)?;
    write(&a.common.out.join("statistics.csv"), &stats)?;
    write(&a.common.out.join("trials.csv"), &trials)?;
    Ok(0)
}
