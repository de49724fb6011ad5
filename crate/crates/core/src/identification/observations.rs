use nalgebra::{DMatrix, DVector};

use super::cost::{CostEvaluation, Objective};
use crate::error::{Error, Result};
use crate::model::{DataParameters, FreeVector, N_FREE, N_STATE, ParameterSet, State, StateVector};
use crate::ode::{IntegrationConfig, Trajectory, integrate, integrate_with_sensitivity};

/// Sampled target trajectory together with everything needed to simulate a
/// candidate parameter vector against it.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    /// `t_j = j·δt`, `j = 1..=m`.
    times: Vec<f64>,
    targets: Vec<State>,
    data: DataParameters,
    initial: StateVector,
    sample_period: f64,
    dt: f64,
    /// Per-variable residual weights; all ones unless set explicitly.
    weights: State,
    target_norm: f64,
}

impl ObservationSet {
    pub fn new(
        data: DataParameters,
        initial: StateVector,
        sample_period: f64,
        dt: f64,
        targets: Vec<State>,
    ) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::EmptyInput);
        }
        let times: Vec<f64> = (1..=targets.len()).map(|j| j as f64 * sample_period).collect();
        let obs = Self {
            times,
            targets,
            data,
            initial,
            sample_period,
            dt,
            weights: State::repeat(1.0),
            target_norm: 0.0,
        };
        obs.integration_config().grid()?;
        obs.with_norm()
    }

    /// Wraps a trajectory sampled every `sample_period` starting at `δt`.
    pub fn from_trajectory(traj: &Trajectory, data: DataParameters, sample_period: f64, dt: f64) -> Result<Self> {
        for (j, t) in traj.times.iter().enumerate() {
            let expected = (j + 1) as f64 * sample_period;
            if (t - expected).abs() > 1e-9 * expected.max(1.0) {
                return Err(Error::InvalidConfig(format!(
                    "observation time {t} is not on the sampling grid (expected {expected})"
                )));
            }
        }
        Self::new(data, traj.initial, sample_period, dt, traj.states.clone())
    }

    fn with_norm(mut self) -> Result<Self> {
        let norm2: f64 = self
            .targets
            .iter()
            .map(|x| x.component_mul(&self.weights).norm_squared())
            .sum();
        if !(norm2 > 0.0 && norm2.is_finite()) {
            return Err(Error::InvalidConfig("target norm must be positive and finite".into()));
        }
        self.target_norm = norm2.sqrt();
        Ok(self)
    }

    /// Replaces the all-ones residual weights.
    pub fn with_weights(mut self, weights: State) -> Result<Self> {
        self.weights = weights;
        self.with_norm()
    }

    /// Keeps the samples with `t_j <= t_end`; the sampling period is unchanged.
    pub fn truncated(&self, t_end: f64) -> Result<Self> {
        let m = self.times.iter().take_while(|&&t| t <= t_end + 1e-9).count();
        if m == 0 {
            return Err(Error::EmptyInput);
        }
        let mut out = self.clone();
        out.times.truncate(m);
        out.targets.truncate(m);
        out.with_norm()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn targets(&self) -> &[State] {
        &self.targets
    }

    pub fn data(&self) -> DataParameters {
        self.data
    }

    pub fn initial(&self) -> StateVector {
        self.initial
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Weighted `|X^tg|₂` over the retained samples.
    pub fn target_norm(&self) -> f64 {
        self.target_norm
    }

    pub fn integration_config(&self) -> IntegrationConfig {
        IntegrationConfig::new(self.len() as f64 * self.sample_period, self.sample_period).with_dt(self.dt)
    }

    pub fn parameters(&self, free: &FreeVector) -> ParameterSet {
        self.data.with_free(free)
    }

    /// Residuals `r_ij = X_i(t_j) - X^tg_i(t_j)` (j-major) and, on request,
    /// their Jacobian `∂r/∂P` built from forward sensitivities.
    pub fn evaluate_cost(&self, free: &FreeVector, with_jacobian: bool) -> Result<CostEvaluation> {
        if !free.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidConfig("free parameters must be positive".into()));
        }
        let p = self.parameters(free);
        let cfg = self.integration_config();
        let traj = if with_jacobian {
            integrate_with_sensitivity(&self.initial, &p, &cfg)?
        } else {
            integrate(&self.initial, &p, &cfg)?
        };
        let m = self.len();
        let mut r = DVector::zeros(N_STATE * m);
        for (j, (x, tg)) in traj.states.iter().zip(&self.targets).enumerate() {
            let rj = (x - tg).component_mul(&self.weights);
            r.rows_mut(N_STATE * j, N_STATE).copy_from(&rj);
        }
        let jacobian = traj.sensitivities.map(|sens| {
            let mut jac = DMatrix::zeros(N_STATE * m, N_FREE);
            for (j, s) in sens.iter().enumerate() {
                for i in 0..N_STATE {
                    for k in 0..N_FREE {
                        jac[(N_STATE * j + i, k)] = self.weights[i] * s[(i, k)];
                    }
                }
            }
            jac
        });
        Ok(CostEvaluation::new(r, jacobian, self.target_norm))
    }
}

/// The identification problem over the free parameters of a chemostat
/// observation set.
///
/// Trial points with non-positive components are projected to `1e-12` of
/// the magnitude of the corresponding reference-scale entry.
#[derive(Debug, Clone)]
pub struct ChemostatProblem<'a> {
    pub obs: &'a ObservationSet,
    pub scale: FreeVector,
}

impl<'a> ChemostatProblem<'a> {
    pub fn new(obs: &'a ObservationSet, scale: FreeVector) -> Self {
        Self { obs, scale }
    }
}

pub(crate) fn to_free(p: &DVector<f64>) -> FreeVector {
    FreeVector::from_column_slice(p.as_slice())
}

impl Objective for ChemostatProblem<'_> {
    fn evaluate(&self, p: &DVector<f64>, with_jacobian: bool) -> Result<CostEvaluation> {
        if p.len() != N_FREE {
            return Err(Error::InvalidConfig(format!("expected {N_FREE} parameters, got {}", p.len())));
        }
        self.obs.evaluate_cost(&to_free(p), with_jacobian)
    }

    fn project(&self, p: &mut DVector<f64>) {
        for (v, s) in p.iter_mut().zip(self.scale.iter()) {
            if !(*v > 0.0) {
                *v = 1e-12 * s.abs();
            }
        }
    }
}
