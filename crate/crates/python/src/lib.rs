//! Python bindings: parameter sets, simulation with sensitivities, the rate
//! functions, identification and perturbation trials.

use mucilage::harness::{perturb_parameters, run_trials, summarize};
use mucilage::identification::{IdentificationConfig, ObservationSet, staged_identify};
use mucilage::model::{self, FreeVector, N_FREE, PARAMETER_NAMES, RateValues, State, StateVector};
use mucilage::ode::{IntegrationConfig, integrate, integrate_with_sensitivity};
use mucilage::Error;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::BlowUp { .. } | Error::NonFiniteState | Error::SingularNormalMatrix => {
            PyArithmeticError::new_err(err.to_string())
        }
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn state_from(values: &[f64]) -> PyResult<State> {
    if values.len() != 6 {
        return Err(PyValueError::new_err("a state has 6 components (N, C, Q_N, Q_C, D, M)"));
    }
    Ok(State::from_column_slice(values))
}

fn free_from(values: &[f64]) -> PyResult<FreeVector> {
    if values.len() != N_FREE {
        return Err(PyValueError::new_err(format!("expected {N_FREE} free parameters")));
    }
    Ok(FreeVector::from_column_slice(values))
}

#[pyclass(name = "ParameterSet", from_py_object)]
#[derive(Clone)]
pub struct PyParameterSet {
    inner: model::ParameterSet,
}

#[pymethods]
impl PyParameterSet {
    /// The reference set; keyword arguments override single entries.
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(overrides: Option<std::collections::HashMap<String, f64>>) -> PyResult<Self> {
        let mut inner = model::ParameterSet::REFERENCE;
        for (k, v) in overrides.unwrap_or_default() {
            inner.set(&k, v).map_err(to_py)?;
        }
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        model::ParameterSet::load(path).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        model::ParameterSet::parse(text).map(|inner| Self { inner }).map_err(to_py)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    fn to_text(&self) -> String {
        self.inner.to_file_string()
    }

    fn __getitem__(&self, name: &str) -> PyResult<f64> {
        self.inner
            .get(name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown parameter `{name}`")))
    }

    fn __setitem__(&mut self, name: &str, value: f64) -> PyResult<()> {
        self.inner.set(name, value).map_err(to_py)
    }

    #[staticmethod]
    fn names() -> Vec<&'static str> {
        PARAMETER_NAMES.to_vec()
    }

    #[staticmethod]
    fn free_names() -> Vec<&'static str> {
        model::FreeParameter::ALL.iter().map(|p| p.name()).collect()
    }

    fn free_vector(&self) -> Vec<f64> {
        self.inner.free_vector().as_slice().to_vec()
    }

    fn with_free(&self, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_free(&free_from(&values)?) })
    }

    fn chemostat_start(&self) -> Vec<f64> {
        StateVector::chemostat_start(&self.inner).to_vector().as_slice().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("ParameterSet({})", self.inner.to_file_string().trim().replace('\n', ", "))
    }
}

#[pyclass(frozen, get_all)]
pub struct Simulation {
    times: Vec<f64>,
    /// One `[N, C, Q_N, Q_C, D, M]` row per sample.
    states: Vec<Vec<f64>>,
    /// One 6×11 matrix per sample when requested.
    sensitivities: Option<Vec<Vec<Vec<f64>>>>,
}

/// Integrates the model from `initial` (the chemostat start by default).
#[pyfunction]
#[pyo3(signature = (params, t_end=50.0, sample_period=1.0, dt=0.01, initial=None, sensitivities=false))]
fn simulate(
    params: &PyParameterSet,
    t_end: f64,
    sample_period: f64,
    dt: f64,
    initial: Option<Vec<f64>>,
    sensitivities: bool,
) -> PyResult<Simulation> {
    let p = &params.inner;
    let x0 = match initial {
        Some(v) => StateVector::from_vector(&state_from(&v)?),
        None => StateVector::chemostat_start(p),
    };
    let cfg = IntegrationConfig::new(t_end, sample_period).with_dt(dt);
    let traj = if sensitivities {
        integrate_with_sensitivity(&x0, p, &cfg)
    } else {
        integrate(&x0, p, &cfg)
    }
    .map_err(to_py)?;
    Ok(Simulation {
        states: traj.states.iter().map(|x| x.as_slice().to_vec()).collect(),
        sensitivities: traj.sensitivities.map(|all| {
            all.iter()
                .map(|s| s.row_iter().map(|r| r.iter().copied().collect()).collect())
                .collect()
        }),
        times: traj.times,
    })
}

#[pyfunction]
fn limiter_a(a: f64, b: f64, c: f64, d: f64) -> f64 {
    model::limiter_a(a, b, c, d)
}

/// Rate values `(tau_N, tau_C, tau_D, tau_M, sigma_N, sigma_M, sigma_C)` at `state`.
#[pyfunction]
fn rates(state: Vec<f64>, params: &PyParameterSet) -> PyResult<(f64, f64, f64, f64, f64, f64, f64)> {
    let r = RateValues::evaluate(&state_from(&state)?, &params.inner);
    Ok((r.tau_n, r.tau_c, r.tau_d, r.tau_m, r.sigma_n, r.sigma_m, r.sigma_c))
}

/// Right-hand side `F(t, X)` of the clipped system.
#[pyfunction]
fn rhs(state: Vec<f64>, params: &PyParameterSet) -> PyResult<Vec<f64>> {
    Ok(model::rhs(0.0, &state_from(&state)?, &params.inner).map_err(to_py)?.as_slice().to_vec())
}

#[pyclass(frozen, get_all)]
pub struct Identification {
    params: Vec<f64>,
    rel_residual: f64,
    succeeded: bool,
    failure: Option<String>,
    /// Stage log as CSV text.
    report: String,
}

/// Staged identification against noise-free observations of `target`.
/// Without `guess` the start is `target` perturbed by `epsilon` with `seed`.
#[pyfunction]
#[pyo3(signature = (target, guess=None, epsilon=0.0, seed=0, t_end=50.0, sample_period=1.0))]
fn identify(
    py: Python<'_>,
    target: &PyParameterSet,
    guess: Option<Vec<f64>>,
    epsilon: f64,
    seed: u64,
    t_end: f64,
    sample_period: f64,
) -> PyResult<Identification> {
    let p = target.inner;
    let p0 = match guess {
        Some(g) => free_from(&g)?,
        None => perturb_parameters(&p.free_vector(), epsilon, seed),
    };
    let result = py
        .detach(|| {
            let x0 = StateVector::chemostat_start(&p);
            let traj = integrate(&x0, &p, &IntegrationConfig::new(t_end, sample_period))?;
            let obs = ObservationSet::from_trajectory(&traj, p.data(), sample_period, mucilage::ode::DEFAULT_DT)?;
            staged_identify(&p0, &obs, &IdentificationConfig::default())
        })
        .map_err(to_py)?;
    Ok(Identification {
        params: result.params.as_slice().to_vec(),
        rel_residual: result.rel_residual,
        succeeded: result.succeeded(),
        failure: result.failure.map(|f| f.cause()),
        report: result.report_csv(),
    })
}

/// Seeded perturbation trials; returns the statistics row as a dict-like tuple
/// `(success_rate_pct, mean_residual, mean_max_error_pct)`.
#[pyfunction]
#[pyo3(signature = (params, epsilon, n_trials, sample_period=1.0, t_end=50.0, seed=0))]
fn trials(
    py: Python<'_>,
    params: &PyParameterSet,
    epsilon: f64,
    n_trials: usize,
    sample_period: f64,
    t_end: f64,
    seed: u64,
) -> PyResult<(f64, f64, Option<f64>)> {
    let p = params.inner;
    let stats = py
        .detach(|| {
            let records = run_trials(&p, epsilon, n_trials, sample_period, t_end, seed, &IdentificationConfig::default())?;
            summarize(&records, sample_period)
        })
        .map_err(to_py)?;
    Ok((stats.success_rate_pct, stats.mean_residual, stats.mean_max_error_pct))
}

#[pymodule]
fn mucilage_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParameterSet>()?;
    m.add_class::<Simulation>()?;
    m.add_class::<Identification>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(limiter_a, m)?)?;
    m.add_function(wrap_pyfunction!(rates, m)?)?;
    m.add_function(wrap_pyfunction!(rhs, m)?)?;
    m.add_function(wrap_pyfunction!(identify, m)?)?;
    m.add_function(wrap_pyfunction!(trials, m)?)?;
    Ok(())
}
