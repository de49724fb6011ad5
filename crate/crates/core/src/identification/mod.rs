//! Identification of the free model parameters from sampled observations.

mod cost;
mod observations;
mod solvers;
mod staged;

pub use cost::{CostEvaluation, Objective, stopping_criterion};
pub use observations::{ChemostatProblem, ObservationSet};
pub use solvers::{
    DEFAULT_MAX_CONDITION, LineSearchSettings, Phase, PhaseResult, PhaseSettings, PhaseStatus,
    gauss_newton, gauss_newton_step, golden_section, gradient_descent_steps, modified_gauss_newton,
};
pub use staged::{IdentificationConfig, IdentificationResult, StageResult, staged_identify};
