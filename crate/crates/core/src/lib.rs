//! Two-nutrient diatom/mucilage chemostat model with forward parameter
//! sensitivities, a staged Gauss-Newton identification pipeline and a
//! seeded Monte-Carlo harness around it.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod identification;
pub mod model;
pub mod ode;

pub use error::{Error, Result};
