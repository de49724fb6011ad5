//! Growing-window identification driver.

use std::fmt::Write as _;

use nalgebra::DVector;

use super::observations::{ChemostatProblem, ObservationSet, to_free};
use super::solvers::{
    DEFAULT_MAX_CONDITION, LineSearchSettings, Phase, PhaseResult, PhaseSettings, PhaseStatus,
    gauss_newton, gradient_descent_steps, modified_gauss_newton,
};
use crate::error::{Error, Result};
use crate::model::FreeVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentificationConfig {
    /// End of the first identification window [day].
    pub t_half: f64,
    /// Window growth per stage [day].
    pub window_step: f64,
    /// Last window end [day]; clipped to the observation horizon.
    pub t_final: f64,
    pub gradient_steps: usize,
    pub modified_gn: PhaseSettings,
    pub gn: PhaseSettings,
    pub final_gn: PhaseSettings,
    pub line_search: LineSearchSettings,
    pub max_condition: f64,
    /// Treat a divergent integration inside plain Gauss-Newton as a failure
    /// of the whole run instead of carrying the last good point forward.
    pub abort_on_gn_blowup: bool,
}

impl Default for IdentificationConfig {
    fn default() -> Self {
        Self {
            t_half: 20.0,
            window_step: 1.0,
            t_final: 50.0,
            gradient_steps: 2,
            modified_gn: PhaseSettings { max_iterations: 50, tolerance: 1e-4 },
            gn: PhaseSettings { max_iterations: 50, tolerance: 1e-4 },
            final_gn: PhaseSettings { max_iterations: 50, tolerance: 1e-10 },
            line_search: LineSearchSettings::default(),
            max_condition: DEFAULT_MAX_CONDITION,
            abort_on_gn_blowup: false,
        }
    }
}

impl IdentificationConfig {
    pub fn validate(&self) -> Result<()> {
        let tols = [
            self.modified_gn.tolerance,
            self.gn.tolerance,
            self.final_gn.tolerance,
            self.line_search.golden_tolerance,
            self.line_search.initial_step,
        ];
        if !tols.iter().all(|t| *t > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if !(self.t_half > 0.0 && self.t_half < self.t_final && self.window_step > 0.0) {
            return Err(Error::InvalidConfig("need 0 < t_half < t_final and a positive window step".into()));
        }
        Ok(())
    }

    /// Window ends `t_half, t_half + step, …` up to `min(t_final, horizon)`.
    pub fn windows(&self, horizon: f64) -> Vec<f64> {
        let end = self.t_final.min(horizon);
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let t = self.t_half + k as f64 * self.window_step;
            if t >= end - 1e-9 {
                out.push(end);
                break;
            }
            out.push(t);
            k += 1;
        }
        out
    }
}

/// One window of the staged run.
#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    pub window_end: f64,
    pub phases: Vec<PhaseResult>,
    pub params: FreeVector,
    pub rel_residual: f64,
    /// First failing phase status within the stage, if any.
    pub failure: Option<PhaseStatus>,
}

impl StageResult {
    fn from_phases(window_end: f64, phases: Vec<PhaseResult>) -> Self {
        let last = phases.last().expect("at least one phase");
        let good = phases.iter().rev().find(|p| p.rel_residual.is_finite()).unwrap_or(last);
        Self {
            window_end,
            params: to_free(&good.params),
            rel_residual: good.rel_residual,
            failure: phases.iter().find(|p| p.status.failed()).map(|p| p.status),
            phases,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationResult {
    /// Last successfully evaluated parameter vector.
    pub params: FreeVector,
    /// Relative residual of `params` on the window it was last evaluated on.
    pub rel_residual: f64,
    pub stages: Vec<StageResult>,
    /// Set when the run could not continue.
    pub failure: Option<PhaseStatus>,
}

impl IdentificationResult {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    /// `window_end,phase,iterations,rel_residual,failed,cause`, one row per
    /// phase.
    pub fn report_csv(&self) -> String {
        let mut out = String::from("window_end,phase,iterations,rel_residual,failed,cause\n");
        for stage in &self.stages {
            for ph in &stage.phases {
                let _ = writeln!(
                    out,
                    "{},{},{},{:e},{},{}",
                    stage.window_end,
                    ph.phase,
                    ph.iterations,
                    ph.rel_residual,
                    ph.status.failed(),
                    ph.status.cause()
                );
            }
        }
        out
    }
}

/// Identifies the free parameters on growing windows `[0, T_w]`.
///
/// Each window runs a few gradient steps, then modified Gauss-Newton, then
/// plain Gauss-Newton, and hands its result to the next window. A final
/// Gauss-Newton pass with the tight tolerance runs on the full horizon.
///
/// The run fails when the starting point of a window cannot be integrated,
/// when modified Gauss-Newton finds no bounded trial step or a singular
/// normal matrix, or, with `abort_on_gn_blowup`, when plain Gauss-Newton
/// diverges. Otherwise a failing plain Gauss-Newton phase is recorded and
/// the last good point is carried forward.
pub fn staged_identify(
    p0: &FreeVector,
    obs_full: &ObservationSet,
    cfg: &IdentificationConfig,
) -> Result<IdentificationResult> {
    cfg.validate()?;
    let scale = *p0;
    let mut p = DVector::from_column_slice(p0.as_slice());
    let mut stages = Vec::new();
    let finish = |stages: Vec<StageResult>, failure: Option<PhaseStatus>| {
        let last = stages.last().expect("non-empty");
        IdentificationResult {
            params: last.params,
            rel_residual: last.rel_residual,
            failure,
            stages,
        }
    };

    for t_w in cfg.windows(obs_full.t_end()) {
        let obs = obs_full.truncated(t_w)?;
        let problem = ChemostatProblem::new(&obs, scale);
        let mut phases = Vec::with_capacity(3);

        let grad = gradient_descent_steps(&p, &problem, cfg.gradient_steps, &cfg.line_search)?;
        let fatal = grad.status.failed().then_some(grad.status);
        p = grad.params.clone();
        phases.push(grad);
        if fatal.is_some() {
            stages.push(StageResult::from_phases(t_w, phases));
            return Ok(finish(stages, fatal));
        }

        let mgn = modified_gauss_newton(&p, &problem, &cfg.modified_gn, &cfg.line_search, cfg.max_condition)?;
        let fatal = mgn.status.failed().then_some(mgn.status);
        p = mgn.params.clone();
        phases.push(mgn);
        if fatal.is_some() {
            stages.push(StageResult::from_phases(t_w, phases));
            return Ok(finish(stages, fatal));
        }

        let gn = gauss_newton(&p, &problem, &cfg.gn, cfg.max_condition, Phase::GaussNewton)?;
        let fatal = (cfg.abort_on_gn_blowup && gn.status.failed()).then_some(gn.status);
        p = gn.params.clone();
        phases.push(gn);
        stages.push(StageResult::from_phases(t_w, phases));
        if fatal.is_some() {
            return Ok(finish(stages, fatal));
        }
    }

    let problem = ChemostatProblem::new(obs_full, scale);
    let fin = gauss_newton(&p, &problem, &cfg.final_gn, cfg.max_condition, Phase::FinalGaussNewton)?;
    let fatal = (cfg.abort_on_gn_blowup && fin.status.failed()).then_some(fin.status);
    let mut stage = StageResult::from_phases(obs_full.t_end(), vec![fin]);
    if !stage.rel_residual.is_finite() {
        // The final pass could not even evaluate its start; keep the
        // previous stage's point.
        let prev = stages.last().expect("at least one window");
        stage.params = prev.params;
        stage.rel_residual = prev.rel_residual;
    }
    stages.push(stage);
    Ok(finish(stages, fatal))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_windows() {
        let w = IdentificationConfig::default().windows(50.0);
        assert_eq!(w.len(), 31);
        assert_eq!(w[0], 20.0);
        assert_eq!(w[1], 21.0);
        assert_eq!(*w.last().unwrap(), 50.0);
    }

    #[test]
    fn windows_clip_to_horizon() {
        let w = IdentificationConfig::default().windows(22.5);
        assert_eq!(w, vec![20.0, 21.0, 22.0, 22.5]);
    }

    #[test]
    fn invalid_configs() {
        let mut c = IdentificationConfig::default();
        c.t_half = 60.0;
        assert!(c.validate().is_err());
        let mut c = IdentificationConfig::default();
        c.final_gn.tolerance = 0.0;
        assert!(c.validate().is_err());
    }
}
