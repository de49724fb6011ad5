#![allow(dead_code)]

use mucilage::model::{FreeVector, ParameterSet, State, StateVector};
use mucilage::ode::{IntegrationConfig, Trajectory, integrate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const REF: ParameterSet = ParameterSet::REFERENCE;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn target_run(t_end: f64, sample_period: f64) -> Trajectory {
    let cfg = IntegrationConfig::new(t_end, sample_period);
    integrate(&StateVector::chemostat_start(&REF), &REF, &cfg).unwrap()
}

/// Parameters with each free entry scaled by a factor in `[1 - spread, 1 + spread]`.
pub fn jittered_params(rng: &mut impl Rng, spread: f64) -> ParameterSet {
    let free = REF.free_vector();
    let f = FreeVector::from_fn(|i, _| free[i] * (1.0 + rng.random_range(-spread..=spread)));
    REF.with_free(&f)
}

/// `|x - y| / max(|x|, |y|)`, zero when both vanish.
pub fn rel_err(x: f64, y: f64) -> f64 {
    let s = x.abs().max(y.abs());
    if s == 0.0 { 0.0 } else { (x - y).abs() / s }
}

/// A state away from every kink of the clipped right-hand side: all
/// components positive and the limiter's ratios and min branches separated
/// by at least `gap`.
pub fn smooth_state(rng: &mut impl Rng, p: &ParameterSet, gap: f64) -> State {
    loop {
        let x = State::new(
            rng.random_range(0.05..20.0),
            rng.random_range(1.0..2500.0),
            rng.random_range(2.0..90.0),
            rng.random_range(0.1..900.0),
            rng.random_range(1e-3..5.0),
            rng.random_range(1e-3..1.0),
        );
        let (qn, qc) = (x[2], x[3]);
        let t_c = 1.0 - p.q_min_c / qc;
        let t_n = 1.0 - p.q_min_n / qn;
        let t_a = 1.0 - p.alpha * qn / qc;
        let ok = (qc - p.q_min_c).abs() > gap
            && (qn - p.q_min_n).abs() > gap
            && (qc - p.alpha * qn).abs() > gap
            && (t_c.max(0.0) - t_n.max(0.0)).abs() > gap
            && (t_c.max(0.0) - t_a.max(0.0)).abs() > gap;
        if ok {
            return x;
        }
    }
}
