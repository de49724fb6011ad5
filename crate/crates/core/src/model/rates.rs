//! Uptake, growth, release and consumption rates.

use super::{ParameterSet, State, idx};

/// `1 - a⁺ / max(a⁺, b⁺)` with `0/0 = 0`, and its partials in `(a, b)`.
///
/// Derivative selection: `d(x⁺)/dx = 0` at `x = 0`; a tie in the max takes
/// the `b` branch.
#[inline]
fn ratio_term(a: f64, b: f64) -> (f64, [f64; 2]) {
    let ap = a.max(0.0);
    let bp = b.max(0.0);
    if ap > bp {
        return (0.0, [0.0, 0.0]);
    }
    if bp == 0.0 {
        return (1.0, [0.0, 0.0]);
    }
    let sa = if a > 0.0 { 1.0 } else { 0.0 };
    let sb = if b > 0.0 { 1.0 } else { 0.0 };
    (1.0 - ap / bp, [-sa / bp, sb * ap / (bp * bp)])
}

/// The Droop/Liebig limiter
/// `min(1 - a⁺/max(a⁺,b⁺), 1 - c⁺/max(c⁺,d⁺))` with `0/0 = 0`.
///
/// Defined on all of ℝ⁴ and always in `[0, 1]`.
pub fn limiter_a(a: f64, b: f64, c: f64, d: f64) -> f64 {
    limiter_a_grad(a, b, c, d).0
}

/// [`limiter_a`] together with one element of its generalized gradient
/// `(∂/∂a, ∂/∂b, ∂/∂c, ∂/∂d)`. On a tie of the two terms the first one is
/// differentiated.
pub fn limiter_a_grad(a: f64, b: f64, c: f64, d: f64) -> (f64, [f64; 4]) {
    let (t1, g1) = ratio_term(a, b);
    let (t2, g2) = ratio_term(c, d);
    if t1 <= t2 {
        (t1, [g1[0], g1[1], 0.0, 0.0])
    } else {
        (t2, [0.0, 0.0, g2[0], g2[1]])
    }
}

/// Michaelis-Menten-Monod uptake `vmax·x⁺/(k + x⁺)`.
#[inline]
pub(crate) fn monod(x: f64, vmax: f64, k: f64) -> f64 {
    let xp = x.max(0.0);
    let den = k + xp;
    if den == 0.0 { 0.0 } else { vmax * xp / den }
}

pub fn uptake_rate_n(n: f64, p: &ParameterSet) -> f64 {
    monod(n, p.vmax_n, p.k_n)
}

pub fn uptake_rate_c(c: f64, p: &ParameterSet) -> f64 {
    monod(c, p.vmax_c, p.k_c)
}

/// Limiter shared by division and nitrogen consumption.
#[inline]
pub(crate) fn growth_limiter(q_c: f64, q_n: f64, p: &ParameterSet) -> f64 {
    limiter_a(p.q_min_c, q_c, p.q_min_n, q_n)
}

/// Limiter shared by TEP release and its carbon consumption.
#[inline]
pub(crate) fn release_limiter(q_c: f64, q_n: f64, p: &ParameterSet) -> f64 {
    limiter_a(p.q_min_c, q_c, p.alpha * q_n.max(0.0), q_c)
}

/// Division rate τ_D [day⁻¹].
pub fn growth_rate(q_c: f64, q_n: f64, p: &ParameterSet) -> f64 {
    p.mu_d * growth_limiter(q_c, q_n, p)
}

/// EPS release rate τ_M.
pub fn mucilage_rate(q_c: f64, q_n: f64, p: &ParameterSet) -> f64 {
    p.mu_m * release_limiter(q_c, q_n, p)
}

/// Nitrogen consumption for growth σ_N.
pub fn consumption_n(q_c: f64, q_n: f64, p: &ParameterSet) -> f64 {
    p.theta_d * growth_limiter(q_c, q_n, p)
}

/// Carbon consumption for TEP production σ_M.
pub fn consumption_m(q_c: f64, q_n: f64, p: &ParameterSet) -> f64 {
    p.theta_m * release_limiter(q_c, q_n, p)
}

/// All rates at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateValues {
    pub tau_n: f64,
    pub tau_c: f64,
    pub tau_d: f64,
    pub tau_m: f64,
    pub sigma_n: f64,
    pub sigma_m: f64,
    /// Always `alpha·sigma_n + sigma_m`.
    pub sigma_c: f64,
}

impl RateValues {
    pub fn evaluate(x: &State, p: &ParameterSet) -> Self {
        let (q_n, q_c) = (x[idx::Q_N], x[idx::Q_C]);
        let g = growth_limiter(q_c, q_n, p);
        let h = release_limiter(q_c, q_n, p);
        let sigma_n = p.theta_d * g;
        let sigma_m = p.theta_m * h;
        RateValues {
            tau_n: uptake_rate_n(x[idx::N], p),
            tau_c: uptake_rate_c(x[idx::C], p),
            tau_d: p.mu_d * g,
            tau_m: p.mu_m * h,
            sigma_n,
            sigma_m,
            sigma_c: p.alpha * sigma_n + sigma_m,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const P: ParameterSet = ParameterSet::REFERENCE;

    #[test]
    fn limiter_examples() {
        assert_eq!(limiter_a(0.0, 0.0, 0.0, 0.0), 1.0);
        assert_eq!(limiter_a(1.0, 0.5, 1.0, 2.0), 0.0);
        assert_relative_eq!(limiter_a(0.5, 2.0, 10.0, 20.0), 0.5, epsilon = 1e-15);
        // negative arguments are clipped
        assert_eq!(limiter_a(-3.0, -1.0, -2.0, 5.0), 1.0);
    }

    #[test]
    fn uptake_examples() {
        assert_eq!(uptake_rate_n(0.0, &P), 0.0);
        assert_relative_eq!(uptake_rate_n(1.25, &P), 35.0, epsilon = 1e-12);
        assert_relative_eq!(uptake_rate_n(15.0, &P), 70.0 * 15.0 / 16.25, epsilon = 1e-12);
        assert_eq!(uptake_rate_c(0.0, &P), 0.0);
        assert_relative_eq!(uptake_rate_c(1.5, &P), 200.0, epsilon = 1e-12);
        assert_relative_eq!(uptake_rate_c(2000.0, &P), 400.0 * 2000.0 / 2001.5, epsilon = 1e-12);
        assert_eq!(uptake_rate_n(-4.0, &P), 0.0);
    }

    #[test]
    fn growth_examples() {
        assert_eq!(growth_rate(P.q_min_c, 20.0, &P), 0.0);
        assert_relative_eq!(growth_rate(1.0, 20.0, &P), 0.62, epsilon = 1e-14);
        assert_relative_eq!(growth_rate(1e300, 1e300, &P), P.mu_d, epsilon = 1e-12);
        assert_eq!(growth_rate(5.0, P.q_min_n * 0.5, &P), 0.0);
    }

    #[test]
    fn mucilage_examples() {
        assert_eq!(mucilage_rate(160.0, 10.0, &P), 0.0);
        let expected = 8.2 * (1.0_f64 - 0.5 / 320.0).min(1.0 - 160.0 / 320.0);
        assert_relative_eq!(mucilage_rate(320.0, 10.0, &P), expected, epsilon = 1e-14);
        assert_relative_eq!(mucilage_rate(320.0, 10.0, &P), 4.1, epsilon = 1e-14);
        assert_eq!(mucilage_rate(0.0, 10.0, &P), 0.0);
        assert_eq!(mucilage_rate(0.0, 0.0, &P), 0.0);
    }

    #[test]
    fn consumption_examples() {
        assert_eq!(consumption_n(1.0, P.q_min_n, &P), 0.0);
        assert_relative_eq!(consumption_n(1.0, 20.0, &P), 2.25, epsilon = 1e-14);
        assert_relative_eq!(consumption_n(1e300, 1e300, &P), P.theta_d, epsilon = 1e-12);
        assert_eq!(consumption_m(100.0, 10.0, &P), 0.0);
        assert_relative_eq!(consumption_m(320.0, 10.0, &P), 500.0, epsilon = 1e-12);
        assert_eq!(consumption_m(0.0, 10.0, &P), 0.0);
    }

    #[test]
    fn carbon_consumption_split() {
        let x = State::new(3.0, 1500.0, 14.0, 300.0, 0.3, 0.01);
        let r = RateValues::evaluate(&x, &P);
        assert_eq!(r.sigma_c, P.alpha * r.sigma_n + r.sigma_m);
        assert_eq!(r.sigma_n, consumption_n(300.0, 14.0, &P));
        assert_eq!(r.sigma_m, consumption_m(300.0, 14.0, &P));
    }

    #[test]
    fn limiter_gradient_branches() {
        // second term active: 1 - c/d
        let (v, g) = limiter_a_grad(0.5, 2.0, 10.0, 20.0);
        assert_eq!(v, 0.5);
        assert_eq!(g, [0.0, 0.0, -1.0 / 20.0, 10.0 / 400.0]);
        // tie between the two terms selects the first
        let (_, g) = limiter_a_grad(1.0, 2.0, 3.0, 6.0);
        assert_eq!(g, [-0.5, 0.25, 0.0, 0.0]);
        // tie in the max selects b
        let (v, g) = limiter_a_grad(2.0, 2.0, 0.0, 1.0);
        assert_eq!(v, 0.0);
        assert_eq!(g, [-0.5, 0.5, 0.0, 0.0]);
    }
}
