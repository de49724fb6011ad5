//! The two-nutrient diatom/mucilage chemostat model.

mod params;
mod rates;
mod rhs;
mod state;

pub use params::{DataParameters, FreeParameter, FreeVector, N_FREE, PARAMETER_NAMES, ParameterSet};
pub use rates::{
    RateValues, consumption_m, consumption_n, growth_rate, limiter_a, limiter_a_grad, mucilage_rate,
    uptake_rate_c, uptake_rate_n,
};
pub use rhs::{Linearization, ParamJacobian, jac_params, jac_state, linearize, rhs};
pub use state::{N_STATE, STATE_NAMES, State, StateVector, idx, positive_part};
