//! Fixed-step RK4 integration of the model and of its forward sensitivity
//! system, with sampled output.

use std::fmt::Write as _;
use std::ops::{Add, Mul};
use std::path::Path;

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::model::{
    FreeParameter, N_FREE, ParameterSet, STATE_NAMES, State, StateVector, linearize, rhs,
};

/// `∂X/∂P`: rows in state order, columns in [`FreeParameter::ALL`] order.
pub type SensitivityMatrix = SMatrix<f64, 6, N_FREE>;

/// State in column 0, sensitivities in columns 1..=11.
type Augmented = SMatrix<f64, 6, { N_FREE + 1 }>;

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    /// Final time [day].
    pub t_end: f64,
    /// RK4 step [day].
    pub dt: f64,
    /// Recording interval [day], an integer multiple of `dt`.
    pub sample_period: f64,
    /// Any state component above this magnitude counts as divergence.
    pub blowup_threshold: f64,
}

impl IntegrationConfig {
    pub fn new(t_end: f64, sample_period: f64) -> Self {
        Self {
            t_end,
            dt: DEFAULT_DT,
            sample_period,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    /// Returns `(steps per sample, number of samples)`.
    pub fn grid(&self) -> Result<(usize, usize)> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.blowup_threshold > 0.0) {
            return bad("blow-up threshold must be positive");
        }
        let per_sample = integer_ratio(self.sample_period, self.dt)
            .ok_or_else(|| Error::InvalidConfig("sample period must be a positive multiple of dt".into()))?;
        let samples = integer_ratio(self.t_end, self.sample_period)
            .ok_or_else(|| Error::InvalidConfig("t_end must be a positive multiple of the sample period".into()))?;
        Ok((per_sample, samples))
    }
}

fn integer_ratio(num: f64, den: f64) -> Option<usize> {
    if !(num > 0.0 && den > 0.0 && num.is_finite()) {
        return None;
    }
    let k = (num / den).round();
    (k >= 1.0 && (k * den - num).abs() <= 1e-9 * num).then_some(k as usize)
}

/// Sampled solution. `times[j] = (j + 1)·δt`; the initial condition is kept
/// apart in `initial`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: StateVector,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub sensitivities: Option<Vec<SensitivityMatrix>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<StateVector> {
        self.states.last().map(StateVector::from_vector)
    }

    /// One component across all samples.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|x| x[i]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for name in STATE_NAMES {
            out.push(',');
            out.push_str(name);
        }
        if self.sensitivities.is_some() {
            for name in sensitivity_column_names() {
                out.push(',');
                out.push_str(&name);
            }
        }
        out.push('\n');
        for (j, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            let _ = write!(out, "{}", fmt17(*t));
            for v in x.iter() {
                let _ = write!(out, ",{}", fmt17(*v));
            }
            if let Some(sens) = &self.sensitivities {
                let s = &sens[j];
                for i in 0..6 {
                    for k in 0..N_FREE {
                        let _ = write!(out, ",{}", fmt17(s[(i, k)]));
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Parses the CSV written by [`Trajectory::to_csv`]. The initial state is
    /// not part of the file and must be supplied.
    pub fn from_csv(text: &str, initial: StateVector) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::EmptyInput)?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let expected_state: Vec<&str> = std::iter::once("t").chain(STATE_NAMES).collect();
        if cols.len() < 7 || cols[..7] != expected_state[..] {
            return Err(Error::Parse { line: 1, message: format!("unexpected header `{header}`") });
        }
        let with_sens = match cols.len() {
            7 => false,
            n if n == 7 + 6 * N_FREE => {
                let names = sensitivity_column_names();
                if cols[7..].iter().zip(&names).any(|(a, b)| a != b) {
                    return Err(Error::Parse { line: 1, message: "bad sensitivity columns".into() });
                }
                true
            }
            n => return Err(Error::Parse { line: 1, message: format!("unexpected column count {n}") }),
        };
        let mut traj = Trajectory {
            initial,
            times: Vec::new(),
            states: Vec::new(),
            sensitivities: with_sens.then(Vec::new),
        };
        for (lineno, line) in lines {
            let values = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line: lineno + 1, message: e.to_string() })?;
            if values.len() != cols.len() {
                return Err(Error::Parse { line: lineno + 1, message: "wrong number of fields".into() });
            }
            traj.times.push(values[0]);
            traj.states.push(State::from_column_slice(&values[1..7]));
            if let Some(sens) = traj.sensitivities.as_mut() {
                sens.push(SensitivityMatrix::from_row_slice(&values[7..]));
            }
        }
        Ok(traj)
    }
}

/// `d{state}_d{param}` in row-major order.
pub fn sensitivity_column_names() -> Vec<String> {
    STATE_NAMES
        .iter()
        .flat_map(|x| FreeParameter::ALL.iter().map(move |p| format!("d{x}_d{}", p.name())))
        .collect()
}

/// Scientific notation with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// One classical Runge-Kutta step.
pub fn rk4_step<V, F>(t: f64, x: &V, dt: f64, mut f: F) -> Result<V>
where
    V: Copy + Add<Output = V> + Mul<f64, Output = V>,
    F: FnMut(f64, &V) -> Result<V>,
{
    let half = 0.5 * dt;
    let k1 = f(t, x)?;
    let k2 = f(t + half, &(*x + k1 * half))?;
    let k3 = f(t + half, &(*x + k2 * half))?;
    let k4 = f(t + dt, &(*x + k3 * dt))?;
    Ok(*x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// True iff any entry is non-finite or exceeds `threshold` in magnitude.
pub fn detect_blowup<'a>(x: impl IntoIterator<Item = &'a f64>, threshold: f64) -> bool {
    x.into_iter().any(|v| !v.is_finite() || v.abs() > threshold)
}

fn check_start(x0: &StateVector, cfg: &IntegrationConfig) -> Result<(usize, usize)> {
    if !x0.is_finite() {
        return Err(Error::InvalidConfig("initial state must be finite".into()));
    }
    cfg.grid()
}

/// Integrates the model from `x0` and records every `sample_period`.
pub fn integrate(x0: &StateVector, p: &ParameterSet, cfg: &IntegrationConfig) -> Result<Trajectory> {
    let (per_sample, samples) = check_start(x0, cfg)?;
    let dt = cfg.dt;
    let mut x = x0.to_vector();
    let mut traj = Trajectory {
        initial: *x0,
        times: Vec::with_capacity(samples),
        states: Vec::with_capacity(samples),
        sensitivities: None,
    };
    let f = |t: f64, y: &State| rhs(t, y, p);
    let mut k = 0usize;
    for j in 1..=samples {
        for _ in 0..per_sample {
            let t = k as f64 * dt;
            x = rk4_step(t, &x, dt, f).map_err(|_| Error::BlowUp { time: t })?;
            k += 1;
            if detect_blowup(x.iter(), cfg.blowup_threshold) {
                return Err(Error::BlowUp { time: k as f64 * dt });
            }
        }
        traj.times.push(j as f64 * cfg.sample_period);
        traj.states.push(x);
    }
    Ok(traj)
}

fn augmented_rhs(t: f64, y: &Augmented, p: &ParameterSet) -> Result<Augmented> {
    let x: State = y.fixed_columns::<1>(0).into_owned();
    let lin = linearize(t, &x, p)?;
    let s = y.fixed_columns::<N_FREE>(1);
    let ds = lin.jac_state * s + lin.jac_params;
    let mut out = Augmented::zeros();
    out.fixed_columns_mut::<1>(0).copy_from(&lin.f);
    out.fixed_columns_mut::<N_FREE>(1).copy_from(&ds);
    Ok(out)
}

/// Integrates the coupled state and sensitivity system
/// `dS/dt = ∂F/∂X·S + ∂F/∂P`, `S(0) = 0`, sharing RK4 stages.
///
/// Only the state is checked against the blow-up threshold; sensitivities
/// merely have to stay finite.
pub fn integrate_with_sensitivity(
    x0: &StateVector,
    p: &ParameterSet,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    let (per_sample, samples) = check_start(x0, cfg)?;
    let dt = cfg.dt;
    let mut y = Augmented::zeros();
    y.fixed_columns_mut::<1>(0).copy_from(&x0.to_vector());
    let mut traj = Trajectory {
        initial: *x0,
        times: Vec::with_capacity(samples),
        states: Vec::with_capacity(samples),
        sensitivities: Some(Vec::with_capacity(samples)),
    };
    let f = |t: f64, y: &Augmented| augmented_rhs(t, y, p);
    let mut k = 0usize;
    for j in 1..=samples {
        for _ in 0..per_sample {
            let t = k as f64 * dt;
            y = rk4_step(t, &y, dt, f).map_err(|_| Error::BlowUp { time: t })?;
            k += 1;
            if detect_blowup(y.column(0).iter(), cfg.blowup_threshold)
                || !y.iter().all(|v| v.is_finite())
            {
                return Err(Error::BlowUp { time: k as f64 * dt });
            }
        }
        traj.times.push(j as f64 * cfg.sample_period);
        traj.states.push(y.fixed_columns::<1>(0).into_owned());
        if let Some(s) = traj.sensitivities.as_mut() {
            s.push(y.fixed_columns::<N_FREE>(1).into_owned());
        }
    }
    Ok(traj)
}
