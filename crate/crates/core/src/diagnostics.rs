//! Sampled-trajectory checks of the model's qualitative properties:
//! positivity, persistence of quotas above their minima, and the closed-form
//! behaviour of a nutrient-starved culture.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{ParameterSet, State, StateVector, idx, uptake_rate_c, uptake_rate_n};
use crate::ode::{IntegrationConfig, Trajectory, integrate};

/// Relative tolerance of the starved-regime closed forms.
pub const LIMITED_REGIME_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub property: String,
    pub interval: (f64, f64),
    pub max_violation: f64,
    pub pass: bool,
}

impl RegimeReport {
    fn new(property: &str, interval: (f64, f64), max_violation: f64, tol: f64) -> Self {
        Self {
            property: property.to_string(),
            interval,
            max_violation,
            pass: max_violation <= tol,
        }
    }
}

/// `property,interval_start,interval_end,max_violation,pass`
impl fmt::Display for RegimeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{:e},{}",
            self.property, self.interval.0, self.interval.1, self.max_violation, self.pass
        )
    }
}

fn samples(traj: &Trajectory) -> impl Iterator<Item = (f64, State)> + '_ {
    std::iter::once((0.0, traj.initial.to_vector())).chain(traj.times.iter().copied().zip(traj.states.iter().copied()))
}

fn span(traj: &Trajectory) -> (f64, f64) {
    (0.0, traj.times.last().copied().unwrap_or(0.0))
}

/// Passes iff no recorded component is below `-tol`.
pub fn check_positivity(traj: &Trajectory, tol: f64) -> RegimeReport {
    let violation = samples(traj)
        .map(|(_, x)| -x.min())
        .fold(0.0_f64, f64::max);
    RegimeReport::new("positivity", span(traj), violation, tol)
}

/// Once a quota reaches its minimum it must stay above `Q_min - tol`.
/// A quota that never reaches its minimum passes vacuously.
pub fn check_quota_threshold(traj: &Trajectory, p: &ParameterSet, tol: f64) -> RegimeReport {
    let mut violation = 0.0_f64;
    for (i, q_min) in [(idx::Q_N, p.q_min_n), (idx::Q_C, p.q_min_c)] {
        let mut reached = false;
        for (_, x) in samples(traj) {
            if reached {
                violation = violation.max(q_min - x[i]);
            } else if x[i] >= q_min {
                reached = true;
            }
        }
    }
    RegimeReport::new("quota_threshold", span(traj), violation, tol)
}

/// Least-squares slope of `ln y` against `t` over samples with
/// `t_start <= t <= t_end` and `y > 0`.
pub fn log_slope(times: &[f64], values: &[f64], t_start: f64, t_end: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, y)| **t >= t_start - 1e-12 && **t <= t_end + 1e-12 && **y > 0.0)
        .map(|(t, y)| (*t, y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - mt) * (t - mt)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Composite Simpson integral of uniformly spaced `f[0..=k]`, `k` even.
fn simpson(f: &[f64], h: f64) -> f64 {
    debug_assert!(f.len() % 2 == 1);
    let k = f.len() - 1;
    if k == 0 {
        return 0.0;
    }
    let mut s = f[0] + f[k];
    for (i, v) in f.iter().enumerate().take(k).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

fn rel_err(value: f64, reference: f64) -> f64 {
    let scale = reference.abs().max(value.abs());
    if scale == 0.0 { 0.0 } else { (value - reference).abs() / scale }
}

/// Number of leading grid points (from t = 0) at which `pred` holds.
fn leading_run(grid: &[State], pred: impl Fn(&State) -> bool) -> usize {
    grid.iter().take_while(|x| pred(x)).count()
}

/// Individual closed-form checks in a starved culture, one report per
/// applicable law:
///
/// * `decay`: `D(t) = D(0)·exp(-(a + m_D)·t)` while either quota is below
///   its minimum;
/// * `n_uptake`: `Q_N(t) = Q_N(0) + ∫ τ_N(N)` while `Q_N < Q_min_N`;
/// * `c_uptake`: `Q_C(t) = Q_C(0) + ∫ τ_C(C)` while `Q_C < Q_min_C`.
///
/// The integrals use composite Simpson on the RK4 grid and are compared at
/// every even grid index.
pub fn limited_regime_reports(
    x0: &StateVector,
    p: &ParameterSet,
    cfg: &IntegrationConfig,
) -> Result<Vec<RegimeReport>> {
    let fine = IntegrationConfig {
        sample_period: cfg.dt,
        ..*cfg
    };
    let traj = integrate(x0, p, &fine)?;
    let h = cfg.dt;
    let grid: Vec<State> = samples(&traj).map(|(_, x)| x).collect();

    let n_len = leading_run(&grid, |x| x[idx::Q_N] < p.q_min_n);
    let c_len = leading_run(&grid, |x| x[idx::Q_C] < p.q_min_c);
    let any_len = leading_run(&grid, |x| x[idx::Q_N] < p.q_min_n || x[idx::Q_C] < p.q_min_c);
    if any_len == 0 {
        return Err(Error::PreconditionNotMet(
            "initial quotas are not below their minima".into(),
        ));
    }

    let mut reports = Vec::new();
    let d0 = grid[0][idx::D];
    let rate = p.a + p.m_d;
    let decay = (0..any_len)
        .map(|k| rel_err(grid[k][idx::D], d0 * (-rate * k as f64 * h).exp()))
        .fold(0.0, f64::max);
    reports.push(RegimeReport::new(
        "decay",
        (0.0, (any_len - 1) as f64 * h),
        decay,
        LIMITED_REGIME_TOL,
    ));

    let uptake_check = |name: &str, len: usize, quota: usize, uptake: &dyn Fn(&State) -> f64| {
        let rates: Vec<f64> = grid[..len].iter().map(uptake).collect();
        let q0 = grid[0][quota];
        let worst = (2..len)
            .step_by(2)
            .map(|k| rel_err(grid[k][quota], q0 + simpson(&rates[..=k], h)))
            .fold(0.0, f64::max);
        RegimeReport::new(name, (0.0, (len - 1) as f64 * h), worst, LIMITED_REGIME_TOL)
    };
    if n_len > 0 {
        reports.push(uptake_check("n_uptake", n_len, idx::Q_N, &|x| uptake_rate_n(x[idx::N], p)));
    }
    if c_len > 0 {
        reports.push(uptake_check("c_uptake", c_len, idx::Q_C, &|x| uptake_rate_c(x[idx::C], p)));
    }
    Ok(reports)
}

/// All starved-regime closed forms folded into one report; the violation is
/// the worst relative error over the individual checks.
pub fn limited_regime_oracle(
    x0: &StateVector,
    p: &ParameterSet,
    cfg: &IntegrationConfig,
) -> Result<RegimeReport> {
    let reports = limited_regime_reports(x0, p, cfg)?;
    let end = reports.iter().map(|r| r.interval.1).fold(0.0, f64::max);
    let worst = reports.iter().map(|r| r.max_violation).fold(0.0, f64::max);
    Ok(RegimeReport::new("limited_regime", (0.0, end), worst, LIMITED_REGIME_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(states: Vec<State>) -> Trajectory {
        Trajectory {
            initial: StateVector::from_vector(&states[0]),
            times: (1..states.len()).map(|j| j as f64).collect(),
            states: states[1..].to_vec(),
            sensitivities: None,
        }
    }

    #[test]
    fn positivity_on_synthetic_trajectories() {
        let zero = synthetic(vec![State::zeros(); 4]);
        assert!(check_positivity(&zero, 1e-9).pass);

        let mut bad = vec![State::zeros(); 4];
        bad[2][3] = -1.0;
        let r = check_positivity(&synthetic(bad), 1e-9);
        assert!(!r.pass);
        assert_eq!(r.max_violation, 1.0);
        assert_eq!(r.to_string(), "positivity,0,3,1e0,false");
    }

    #[test]
    fn quota_threshold_cases() {
        let p = ParameterSet::REFERENCE;
        let q = |qn: f64, qc: f64| State::new(1.0, 1.0, qn, qc, 1.0, 0.0);
        // never reaches Q_min_N: vacuous
        let never = synthetic(vec![q(1.0, 0.1), q(2.0, 0.2), q(3.0, 0.3)]);
        assert!(check_quota_threshold(&never, &p, 1e-9).pass);
        // crosses then dips
        let dip = synthetic(vec![q(5.0, 1.0), q(11.0, 1.0), q(9.5, 1.0)]);
        let r = check_quota_threshold(&dip, &p, 1e-9);
        assert!(!r.pass);
        assert!((r.max_violation - 0.5).abs() < 1e-12);
        // dips before crossing is fine
        let early = synthetic(vec![q(9.0, 1.0), q(8.0, 1.0), q(12.0, 1.0), q(13.0, 1.0)]);
        assert!(check_quota_threshold(&early, &p, 1e-9).pass);
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let h = 0.1;
        let f: Vec<f64> = (0..=10).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson(&f, h) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn log_slope_of_exponential() {
        let t: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * (0.2 * t).exp()).collect();
        assert!((log_slope(&t, &y, 5.0, 15.0).unwrap() - 0.2).abs() < 1e-12);
        assert!(log_slope(&t, &y, 5.0, 5.0).is_none());
    }

    #[test]
    fn limited_regime_requires_starvation() {
        let p = ParameterSet::REFERENCE;
        let x0 = StateVector::new(15.0, 2000.0, 20.0, 1.0, 1e-4, 0.0);
        let r = limited_regime_oracle(&x0, &p, &IntegrationConfig::new(5.0, 1.0));
        assert!(matches!(r, Err(Error::PreconditionNotMet(_))));
    }

    #[test]
    fn zero_biomass_decays_trivially() {
        let mut p = ParameterSet::REFERENCE;
        p.n_in = 1e-3;
        let x0 = StateVector::new(p.n_in, p.c_in, 0.0, p.q_min_c, 0.0, 0.0);
        let reports = limited_regime_reports(&x0, &p, &IntegrationConfig::new(5.0, 1.0)).unwrap();
        assert_eq!(reports[0].property, "decay");
        assert_eq!(reports[0].max_violation, 0.0);
    }
}
