//! Gauss-Newton, its line-searched variant and steepest descent, written
//! against [`Objective`] so they run on synthetic problems as well.

use std::fmt;

use nalgebra::{Cholesky, DVector};

use super::cost::{CostEvaluation, Objective, stopping_criterion};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSettings {
    pub max_iterations: usize,
    /// Relative-residual target.
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchSettings {
    /// Golden-section stops once the bracket is below this fraction of its
    /// initial width.
    pub golden_tolerance: f64,
    /// Step halvings tried while looking for a non-divergent trial step.
    pub max_halvings: usize,
    /// First trial step of the descent bracket search, relative to `‖P‖`.
    pub initial_step: f64,
    pub max_doublings: usize,
}

impl Default for LineSearchSettings {
    fn default() -> Self {
        Self {
            golden_tolerance: 1e-3,
            max_halvings: 30,
            initial_step: 1e-6,
            max_doublings: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Gradient,
    ModifiedGaussNewton,
    GaussNewton,
    FinalGaussNewton,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Gradient => "gradient",
            Phase::ModifiedGaussNewton => "modified_gn",
            Phase::GaussNewton => "gn",
            Phase::FinalGaussNewton => "final_gn",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseStatus {
    Converged,
    IterationCap,
    /// Neither the line search nor the step reduced the cost.
    Stalled,
    BlowUp { time: f64 },
    SingularNormalMatrix,
}

impl PhaseStatus {
    pub fn failed(&self) -> bool {
        matches!(self, PhaseStatus::BlowUp { .. } | PhaseStatus::SingularNormalMatrix)
    }

    pub fn cause(&self) -> String {
        match self {
            PhaseStatus::Converged => "converged".into(),
            PhaseStatus::IterationCap => "iteration_cap".into(),
            PhaseStatus::Stalled => "stalled".into(),
            PhaseStatus::BlowUp { time } => format!("blow_up@t={time}"),
            PhaseStatus::SingularNormalMatrix => "singular_normal_matrix".into(),
        }
    }

    fn from_error(err: &Error) -> Option<Self> {
        match err {
            Error::BlowUp { time } => Some(PhaseStatus::BlowUp { time: *time }),
            Error::NonFiniteState => Some(PhaseStatus::BlowUp { time: f64::NAN }),
            Error::SingularNormalMatrix => Some(PhaseStatus::SingularNormalMatrix),
            _ => None,
        }
    }
}

/// Outcome of one minimization phase. `params`, `cost` and `rel_residual`
/// describe the last point whose evaluation succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResult {
    pub phase: Phase,
    pub iterations: usize,
    pub params: DVector<f64>,
    pub cost: f64,
    pub rel_residual: f64,
    pub status: PhaseStatus,
}

impl PhaseResult {
    fn at(phase: Phase, iterations: usize, params: &DVector<f64>, eval: &CostEvaluation, status: PhaseStatus) -> Self {
        Self {
            phase,
            iterations,
            params: params.clone(),
            cost: eval.cost,
            rel_residual: eval.rel_residual,
            status,
        }
    }

    fn failed_at_start(phase: Phase, params: &DVector<f64>, err: Error) -> Result<Self> {
        let status = PhaseStatus::from_error(&err).ok_or(err)?;
        Ok(Self {
            phase,
            iterations: 0,
            params: params.clone(),
            cost: f64::NAN,
            rel_residual: f64::NAN,
            status,
        })
    }
}

/// Largest admissible condition estimate of the Jacobi-scaled normal
/// matrix, `1/√ε_mach`.
pub const DEFAULT_MAX_CONDITION: f64 = 6.710_886_4e7;

/// Solves `JᵀJ δ = -Jᵀr` by Cholesky on the Jacobi-scaled normal matrix.
///
/// Parameters whose diagonal entry is below `ε_mach · max diag` have no
/// numerical influence on the residuals over the current window; they are
/// held fixed (`δᵢ = 0`) and the system is solved on the remaining ones.
///
/// Fails with [`Error::SingularNormalMatrix`] when the factorization breaks
/// down or the condition estimate `(max Lᵢᵢ / min Lᵢᵢ)²` exceeds
/// `max_condition`.
pub fn gauss_newton_step(eval: &CostEvaluation, max_condition: f64) -> Result<DVector<f64>> {
    let (a, b) = eval
        .normal_equations()
        .ok_or_else(|| Error::InvalidConfig("Gauss-Newton step needs a Jacobian".into()))?;
    let n = b.len();
    if eval.residuals.iter().all(|&r| r == 0.0) {
        return Ok(DVector::zeros(n));
    }
    let diag = a.diagonal();
    if !diag.iter().all(|d| d.is_finite()) {
        return Err(Error::SingularNormalMatrix);
    }
    let floor = f64::EPSILON * diag.max();
    let active: Vec<usize> = (0..n).filter(|&i| diag[i] > floor).collect();
    if active.is_empty() {
        return Err(Error::SingularNormalMatrix);
    }
    let a = a.select_rows(&active).select_columns(&active);
    let b = b.select_rows(&active);
    let scale = a.diagonal().map(f64::sqrt);
    let scaled = a.zip_map(&(&scale * scale.transpose()), |v, s| v / s);
    let chol = Cholesky::new(scaled).ok_or(Error::SingularNormalMatrix)?;
    let l = chol.l_dirty().diagonal();
    let (lo, hi) = l.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(lo > 0.0) || (hi / lo).powi(2) > max_condition {
        return Err(Error::SingularNormalMatrix);
    }
    let y = chol.solve(&(-b.component_div(&scale)));
    let reduced = y.component_div(&scale);
    if !reduced.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularNormalMatrix);
    }
    let mut delta = DVector::zeros(n);
    for (k, &i) in active.iter().enumerate() {
        delta[i] = reduced[k];
    }
    Ok(delta)
}

/// Golden-section minimization of `f` on `[lo, hi]` given the endpoint
/// values. Returns the best evaluated point in `(lo, hi]` and its value.
pub fn golden_section(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    f_hi: f64,
    rel_tol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let width0 = hi - lo;
    let (mut a, mut b) = (lo, hi);
    let mut best = (hi, f_hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    while b - a > rel_tol * width0 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd < best.1 {
                best = (d, fd);
            }
        }
    }
    best
}

fn cost_along(problem: &impl Objective, p: &DVector<f64>, dir: &DVector<f64>, h: f64) -> f64 {
    match problem.evaluate(&problem.trial_point(p, dir, h), false) {
        Ok(e) if e.cost.is_finite() => e.cost,
        _ => f64::INFINITY,
    }
}

/// Plain Gauss-Newton: `P ← P + δ` until the relative residual reaches the
/// tolerance. A divergent integration ends the phase with
/// [`PhaseStatus::BlowUp`] and the last good point.
pub fn gauss_newton(
    p0: &DVector<f64>,
    problem: &impl Objective,
    settings: &PhaseSettings,
    max_condition: f64,
    phase: Phase,
) -> Result<PhaseResult> {
    let mut p = p0.clone();
    problem.project(&mut p);
    let mut eval = match problem.evaluate(&p, true) {
        Ok(e) => e,
        Err(e) => return PhaseResult::failed_at_start(phase, &p, e),
    };
    for it in 0..settings.max_iterations {
        if stopping_criterion(&eval, settings.tolerance) {
            return Ok(PhaseResult::at(phase, it, &p, &eval, PhaseStatus::Converged));
        }
        let delta = match gauss_newton_step(&eval, max_condition) {
            Ok(d) => d,
            Err(Error::SingularNormalMatrix) => {
                return Ok(PhaseResult::at(phase, it, &p, &eval, PhaseStatus::SingularNormalMatrix));
            }
            Err(e) => return Err(e),
        };
        let next = problem.trial_point(&p, &delta, 1.0);
        match problem.evaluate(&next, true) {
            Ok(e) => {
                p = next;
                eval = e;
            }
            Err(err) => {
                let status = PhaseStatus::from_error(&err).ok_or(err)?;
                return Ok(PhaseResult::at(phase, it + 1, &p, &eval, status));
            }
        }
    }
    let status = if stopping_criterion(&eval, settings.tolerance) {
        PhaseStatus::Converged
    } else {
        PhaseStatus::IterationCap
    };
    Ok(PhaseResult::at(phase, settings.max_iterations, &p, &eval, status))
}

/// Gauss-Newton with the increment used as a descent direction: the step
/// is halved from 1 until the trial integration stays bounded, then refined
/// by golden-section search on `(0, h_k]`. The cost never increases.
pub fn modified_gauss_newton(
    p0: &DVector<f64>,
    problem: &impl Objective,
    settings: &PhaseSettings,
    line: &LineSearchSettings,
    max_condition: f64,
) -> Result<PhaseResult> {
    const PHASE: Phase = Phase::ModifiedGaussNewton;
    let mut p = p0.clone();
    problem.project(&mut p);
    let mut eval = match problem.evaluate(&p, true) {
        Ok(e) => e,
        Err(e) => return PhaseResult::failed_at_start(PHASE, &p, e),
    };
    for it in 0..settings.max_iterations {
        if stopping_criterion(&eval, settings.tolerance) {
            return Ok(PhaseResult::at(PHASE, it, &p, &eval, PhaseStatus::Converged));
        }
        let delta = match gauss_newton_step(&eval, max_condition) {
            Ok(d) => d,
            Err(Error::SingularNormalMatrix) => {
                return Ok(PhaseResult::at(PHASE, it, &p, &eval, PhaseStatus::SingularNormalMatrix));
            }
            Err(e) => return Err(e),
        };

        let mut h = 1.0;
        let mut safe = None;
        let mut last_blowup = f64::NAN;
        for _ in 0..=line.max_halvings {
            match problem.evaluate(&problem.trial_point(&p, &delta, h), false) {
                Ok(e) if e.cost.is_finite() => {
                    safe = Some(e.cost);
                    break;
                }
                Ok(_) => {}
                Err(Error::BlowUp { time }) => last_blowup = time,
                Err(Error::NonFiniteState) => {}
                Err(e) => return Err(e),
            }
            h *= 0.5;
        }
        let Some(f_hk) = safe else {
            return Ok(PhaseResult::at(PHASE, it, &p, &eval, PhaseStatus::BlowUp { time: last_blowup }));
        };

        let (h_best, f_best) = golden_section(
            |s| cost_along(problem, &p, &delta, s),
            0.0,
            h,
            f_hk,
            line.golden_tolerance,
        );
        if !(f_best < eval.cost) {
            return Ok(PhaseResult::at(PHASE, it, &p, &eval, PhaseStatus::Stalled));
        }
        let next = problem.trial_point(&p, &delta, h_best);
        match problem.evaluate(&next, true) {
            Ok(e) => {
                p = next;
                eval = e;
            }
            Err(err) => {
                let status = PhaseStatus::from_error(&err).ok_or(err)?;
                return Ok(PhaseResult::at(PHASE, it + 1, &p, &eval, status));
            }
        }
    }
    let status = if stopping_criterion(&eval, settings.tolerance) {
        PhaseStatus::Converged
    } else {
        PhaseStatus::IterationCap
    };
    Ok(PhaseResult::at(PHASE, settings.max_iterations, &p, &eval, status))
}

/// `n_steps` of steepest descent along `-∇L`.
///
/// The direction is rescaled to the length of `P`. The step bracket
/// `[0, h*]` is found by doubling from `line.initial_step` until the cost
/// increases or the integration diverges; golden-section then picks the
/// step. A step is taken only if it lowers the cost. If the starting point
/// cannot be evaluated, `P0` is returned unchanged.
pub fn gradient_descent_steps(
    p0: &DVector<f64>,
    problem: &impl Objective,
    n_steps: usize,
    line: &LineSearchSettings,
) -> Result<PhaseResult> {
    const PHASE: Phase = Phase::Gradient;
    let mut p = p0.clone();
    problem.project(&mut p);
    let mut eval = match problem.evaluate(&p, true) {
        Ok(e) => e,
        Err(e) => return PhaseResult::failed_at_start(PHASE, &p, e),
    };
    for it in 0..n_steps {
        let grad = eval.gradient().expect("evaluated with Jacobian");
        let gnorm = grad.norm();
        if gnorm == 0.0 || !gnorm.is_finite() {
            return Ok(PhaseResult::at(PHASE, it, &p, &eval, PhaseStatus::Converged));
        }
        let dir = grad * (-p.norm().max(f64::MIN_POSITIVE) / gnorm);

        let mut prev = eval.cost;
        let mut bracket = line.initial_step;
        let mut f_hi = f64::INFINITY;
        for k in 0..line.max_doublings {
            if k > 0 {
                bracket *= 2.0;
            }
            f_hi = cost_along(problem, &p, &dir, bracket);
            if !(f_hi < prev) {
                break;
            }
            prev = f_hi;
        }
        let (h_best, f_best) = golden_section(
            |s| cost_along(problem, &p, &dir, s),
            0.0,
            bracket,
            f_hi,
            line.golden_tolerance,
        );
        if !(f_best < eval.cost) {
            return Ok(PhaseResult::at(PHASE, it, &p, &eval, PhaseStatus::Stalled));
        }
        let next = problem.trial_point(&p, &dir, h_best);
        match problem.evaluate(&next, true) {
            Ok(e) => {
                p = next;
                eval = e;
            }
            Err(err) => {
                let status = PhaseStatus::from_error(&err).ok_or(err)?;
                return Ok(PhaseResult::at(PHASE, it + 1, &p, &eval, status));
            }
        }
    }
    Ok(PhaseResult::at(PHASE, n_steps, &p, &eval, PhaseStatus::IterationCap))
}
