use nalgebra::Vector6;

use super::ParameterSet;

/// Number of state variables.
pub const N_STATE: usize = 6;

/// Column vector form of the state, in canonical order `(N, C, Q_N, Q_C, D, M)`.
pub type State = Vector6<f64>;

/// Canonical variable names, also used as CSV headers.
pub const STATE_NAMES: [&str; N_STATE] = ["N", "C", "Q_N", "Q_C", "D", "M"];

/// Indices into [`State`].
pub mod idx {
    pub const N: usize = 0;
    pub const C: usize = 1;
    pub const Q_N: usize = 2;
    pub const Q_C: usize = 3;
    pub const D: usize = 4;
    pub const M: usize = 5;
}

/// The six model variables at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVector {
    /// Nitrogen concentration [µmol/L].
    pub n: f64,
    /// Carbon concentration [µmol/L].
    pub c: f64,
    /// Cellular nitrogen quota [10⁻⁹ µmol/cell].
    pub q_n: f64,
    /// Cellular carbon quota [10⁻⁹ µmol/cell].
    pub q_c: f64,
    /// Diatom concentration [10⁹ cell/L].
    pub d: f64,
    /// TEP concentration [g Xeq/L].
    pub m: f64,
}

impl StateVector {
    pub fn new(n: f64, c: f64, q_n: f64, q_c: f64, d: f64, m: f64) -> Self {
        Self { n, c, q_n, q_c, d, m }
    }

    /// Inlet nutrients, quotas at their minima, 10⁵ cell/L of diatoms and
    /// no TEP.
    pub fn chemostat_start(p: &ParameterSet) -> Self {
        Self::new(p.n_in, p.c_in, p.q_min_n, p.q_min_c, 1e-4, 0.0)
    }

    /// Nutrient equilibrium without biomass.
    pub fn empty_chemostat(p: &ParameterSet) -> Self {
        Self::new(p.n_in, p.c_in, 0.0, 0.0, 0.0, 0.0)
    }

    pub fn to_vector(&self) -> State {
        State::new(self.n, self.c, self.q_n, self.q_c, self.d, self.m)
    }

    pub fn from_vector(v: &State) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|x| x.is_finite())
    }

    pub fn is_non_negative(&self) -> bool {
        self.to_vector().iter().all(|&x| x >= 0.0)
    }
}

impl From<State> for StateVector {
    fn from(v: State) -> Self {
        Self::from_vector(&v)
    }
}

impl From<StateVector> for State {
    fn from(s: StateVector) -> Self {
        s.to_vector()
    }
}

/// Componentwise positive part.
pub fn positive_part(x: &State) -> State {
    x.map(|v| v.max(0.0))
}
