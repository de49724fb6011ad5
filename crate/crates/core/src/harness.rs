//! Virtual chemostat data and seeded Monte-Carlo trials of the
//! identification pipeline.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::identification::{IdentificationConfig, ObservationSet, staged_identify};
use crate::model::{FreeVector, ParameterSet, StateVector};
#[cfg(test)]
use crate::model::N_FREE;
use crate::ode::{DEFAULT_DT, IntegrationConfig, integrate};

/// Noise-free observations of the model with parameters `p_tg`, sampled every
/// `sample_period` on `(0, t_end]`.
pub fn generate_target(
    p_tg: &ParameterSet,
    x0: &StateVector,
    t_end: f64,
    sample_period: f64,
) -> Result<ObservationSet> {
    let cfg = IntegrationConfig::new(t_end, sample_period);
    let traj = integrate(x0, p_tg, &cfg)?;
    ObservationSet::from_trajectory(&traj, p_tg.data(), sample_period, DEFAULT_DT)
}

/// Relative perturbations `θ_i` drawn uniformly on `[-ε, ε]` from a ChaCha8
/// stream seeded with `seed`.
pub fn draw_theta(epsilon: f64, seed: u64) -> FreeVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FreeVector::from_fn(|_, _| if epsilon > 0.0 { rng.random_range(-epsilon..=epsilon) } else { 0.0 })
}

/// `P_i (1 + θ_i)` with `θ` from [`draw_theta`].
pub fn perturb_parameters(p_tg: &FreeVector, epsilon: f64, seed: u64) -> FreeVector {
    p_tg.component_mul(&draw_theta(epsilon, seed).add_scalar(1.0))
}

/// `‖P - P^tg‖∞ / ‖P^tg‖∞`.
pub fn max_relative_error(p: &FreeVector, p_tg: &FreeVector) -> f64 {
    (p - p_tg).amax() / p_tg.amax()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub epsilon: f64,
    pub theta: FreeVector,
    pub success: bool,
    /// Relative residual of the last successfully evaluated point; `None`
    /// if no point could be evaluated.
    pub final_residual: Option<f64>,
    pub max_rel_error: f64,
    pub wall_time_s: f64,
}

impl TrialRecord {
    pub const CSV_HEADER: &'static str = "seed,epsilon,success,final_residual,max_rel_error,wall_time_s,theta";

    pub fn csv_row(&self) -> String {
        let theta: Vec<String> = self.theta.iter().map(|v| format!("{v:e}")).collect();
        format!(
            "{},{},{},{},{:e},{:.3},{}",
            self.seed,
            self.epsilon,
            self.success,
            self.final_residual.map_or("nan".into(), |r| format!("{r:e}")),
            self.max_rel_error,
            self.wall_time_s,
            theta.join(";")
        )
    }
}

/// Runs one perturbed identification.
pub fn run_trial(
    p_tg: &FreeVector,
    obs: &ObservationSet,
    epsilon: f64,
    seed: u64,
    cfg: &IdentificationConfig,
) -> Result<TrialRecord> {
    let start = Instant::now();
    let theta = draw_theta(epsilon, seed);
    let p0 = p_tg.component_mul(&theta.add_scalar(1.0));
    let result = staged_identify(&p0, obs, cfg)?;
    let residual = result.rel_residual;
    Ok(TrialRecord {
        seed,
        epsilon,
        theta,
        success: result.succeeded(),
        final_residual: residual.is_finite().then_some(residual),
        max_rel_error: max_relative_error(&result.params, p_tg),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// `n_trials` independent identifications with seeds `base_seed + i`,
/// returned in trial order.
pub fn run_trials(
    p_tg: &ParameterSet,
    epsilon: f64,
    n_trials: usize,
    sample_period: f64,
    t_end: f64,
    base_seed: u64,
    cfg: &IdentificationConfig,
) -> Result<Vec<TrialRecord>> {
    if n_trials == 0 {
        return Err(Error::EmptyInput);
    }
    let obs = generate_target(p_tg, &StateVector::chemostat_start(p_tg), t_end, sample_period)?;
    let target = p_tg.free_vector();
    (0..n_trials as u64)
        .into_par_iter()
        .map(|i| run_trial(&target, &obs, epsilon, base_seed + i, cfg))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialStatistics {
    pub epsilon: f64,
    pub sample_period: f64,
    pub n_trials: usize,
    pub success_rate_pct: f64,
    /// Mean final relative residual over trials that have one (failed
    /// trials included).
    pub mean_residual: f64,
    /// Trials contributing to `mean_residual`.
    pub residual_count: usize,
    /// Mean max relative parameter error over successful trials, in percent.
    pub mean_max_error_pct: Option<f64>,
    pub base_seed: u64,
}

impl TrialStatistics {
    pub const CSV_HEADER: &'static str =
        "epsilon,sampling_period,n_trials,success_rate_pct,mean_residual,mean_max_error_pct,base_seed";

    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{:e},{},{}",
            self.epsilon,
            self.sample_period,
            self.n_trials,
            self.success_rate_pct,
            self.mean_residual,
            self.mean_max_error_pct.map_or("nan".into(), |e| format!("{e:e}")),
            self.base_seed
        );
        s
    }
}

/// Aggregates trial records. The records must share one amplitude.
pub fn summarize(records: &[TrialRecord], sample_period: f64) -> Result<TrialStatistics> {
    let first = records.first().ok_or(Error::EmptyInput)?;
    let n = records.len();
    let successes: Vec<&TrialRecord> = records.iter().filter(|r| r.success).collect();
    let residuals: Vec<f64> = records.iter().filter_map(|r| r.final_residual).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let errors: Vec<f64> = successes.iter().map(|r| 100.0 * r.max_rel_error).collect();
    Ok(TrialStatistics {
        epsilon: first.epsilon,
        sample_period,
        n_trials: n,
        success_rate_pct: 100.0 * successes.len() as f64 / n as f64,
        mean_residual: if residuals.is_empty() { f64::NAN } else { mean(&residuals) },
        residual_count: residuals.len(),
        mean_max_error_pct: (!errors.is_empty()).then(|| mean(&errors)),
        base_seed: first.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(success: bool, residual: f64, err: f64) -> TrialRecord {
        TrialRecord {
            seed: 7,
            epsilon: 0.05,
            theta: FreeVector::zeros(),
            success,
            final_residual: Some(residual),
            max_rel_error: err,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn zero_amplitude_is_identity() {
        let p = ParameterSet::REFERENCE.free_vector();
        assert_eq!(perturb_parameters(&p, 0.0, 3), p);
    }

    #[test]
    fn perturbation_is_seeded_and_bounded() {
        let p = ParameterSet::REFERENCE.free_vector();
        assert_eq!(perturb_parameters(&p, 0.3, 11), perturb_parameters(&p, 0.3, 11));
        assert_ne!(perturb_parameters(&p, 0.3, 11), perturb_parameters(&p, 0.3, 12));
        for seed in 0..200 {
            let q = perturb_parameters(&p, 0.5, seed);
            for i in 0..N_FREE {
                assert!(q[i] >= 0.5 * p[i] && q[i] <= 1.5 * p[i]);
            }
        }
    }

    #[test]
    fn single_record_is_echoed() {
        let s = summarize(&[record(true, 1e-7, 1e-7)], 1.0).unwrap();
        assert_eq!(s.success_rate_pct, 100.0);
        assert_eq!(s.mean_residual, 1e-7);
        assert!((s.mean_max_error_pct.unwrap() - 1e-5).abs() < 1e-20);
    }

    #[test]
    fn half_failed() {
        let s = summarize(&[record(true, 1e-7, 0.0), record(false, 0.3, 0.2)], 1.0).unwrap();
        assert_eq!(s.success_rate_pct, 50.0);
        assert!((s.mean_residual - 0.15000005).abs() < 1e-12);
        assert_eq!(s.mean_max_error_pct, Some(0.0));
    }

    #[test]
    fn empty_summary_is_an_error() {
        assert_eq!(summarize(&[], 1.0), Err(Error::EmptyInput));
    }
}
