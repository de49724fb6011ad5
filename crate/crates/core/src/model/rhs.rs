//! Right-hand side of the clipped system `dX/dt = F(t, X⁺)` and its
//! piecewise-analytic Jacobians.

use nalgebra::{Matrix6, SMatrix};

use super::params::N_FREE;
use super::rates::{limiter_a_grad, monod};
use super::{ParameterSet, State, idx, positive_part};
use crate::error::{Error, Result};

/// `∂F/∂P` restricted to the free parameters.
pub type ParamJacobian = SMatrix<f64, 6, N_FREE>;

/// Evaluates `F(t, X⁺)`. Parameters are constant, so `t` is unused.
pub fn rhs(_t: f64, x: &State, p: &ParameterSet) -> Result<State> {
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteState);
    }
    let xp = positive_part(x);
    let (n, c, q_n, q_c, d, m) = (xp[0], xp[1], xp[2], xp[3], xp[4], xp[5]);

    let tau_n = monod(n, p.vmax_n, p.k_n);
    let tau_c = monod(c, p.vmax_c, p.k_c);
    let (g, _) = limiter_a_grad(p.q_min_c, q_c, p.q_min_n, q_n);
    let (h, _) = limiter_a_grad(p.q_min_c, q_c, p.alpha * q_n, q_c);
    let tau_d = p.mu_d * g;
    let sigma_n = p.theta_d * g;
    let sigma_m = p.theta_m * h;

    Ok(State::new(
        p.a * (p.n_in - n) - tau_n * d,
        p.a * (p.c_in - c) - tau_c * d,
        tau_n - sigma_n - tau_d * q_n,
        tau_c - p.alpha * sigma_n - sigma_m - tau_d * q_c,
        (tau_d - p.a - p.m_d) * d,
        p.mu_m * h * d - p.a * m,
    ))
}

/// `F`, `∂F/∂X` and `∂F/∂P` evaluated together.
#[derive(Debug, Clone, Copy)]
pub struct Linearization {
    pub f: State,
    pub jac_state: Matrix6<f64>,
    pub jac_params: ParamJacobian,
}

struct MonodPartials {
    value: f64,
    d_x: f64,
    d_vmax: f64,
    d_k: f64,
}

fn monod_partials(x: f64, vmax: f64, k: f64) -> MonodPartials {
    let den = k + x;
    if den == 0.0 {
        return MonodPartials { value: 0.0, d_x: 0.0, d_vmax: 0.0, d_k: 0.0 };
    }
    MonodPartials {
        value: vmax * x / den,
        d_x: vmax * k / (den * den),
        d_vmax: x / den,
        d_k: -vmax * x / (den * den),
    }
}

#[inline]
fn step(x: f64) -> f64 {
    if x > 0.0 { 1.0 } else { 0.0 }
}

/// Value and both Jacobians of `F(t, X⁺)`. Kinks follow the selection rules
/// of [`limiter_a_grad`], and `d(x⁺)/dx` is taken as 0 at `x = 0`.
pub fn linearize(_t: f64, x: &State, p: &ParameterSet) -> Result<Linearization> {
    use idx::*;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteState);
    }
    let xp = positive_part(x);
    let (n, c, q_n, q_c, d, m) = (xp[0], xp[1], xp[2], xp[3], xp[4], xp[5]);
    let s = x.map(step);

    let un = monod_partials(n, p.vmax_n, p.k_n);
    let uc = monod_partials(c, p.vmax_c, p.k_c);
    // dg = (∂/∂Q_min_C, ∂/∂Q_C, ∂/∂Q_min_N, ∂/∂Q_N)
    let (g, dg) = limiter_a_grad(p.q_min_c, q_c, p.q_min_n, q_n);
    // dh = (∂/∂Q_min_C, ∂/∂Q_C [b], ∂/∂(αQ_N), ∂/∂Q_C [d])
    let (h, dh) = limiter_a_grad(p.q_min_c, q_c, p.alpha * q_n, q_c);
    let dh_dqc = dh[1] + dh[3];
    let dh_dqn = p.alpha * dh[2];

    let tau_d = p.mu_d * g;
    let sigma_n = p.theta_d * g;
    let sigma_m = p.theta_m * h;

    let f = State::new(
        p.a * (p.n_in - n) - un.value * d,
        p.a * (p.c_in - c) - uc.value * d,
        un.value - sigma_n - tau_d * q_n,
        uc.value - p.alpha * sigma_n - sigma_m - tau_d * q_c,
        (tau_d - p.a - p.m_d) * d,
        p.mu_m * h * d - p.a * m,
    );

    let mut jx = Matrix6::zeros();
    jx[(N, N)] = s[N] * (-p.a - d * un.d_x);
    jx[(N, D)] = s[D] * (-un.value);

    jx[(C, C)] = s[C] * (-p.a - d * uc.d_x);
    jx[(C, D)] = s[D] * (-uc.value);

    let wn = p.theta_d + p.mu_d * q_n;
    jx[(Q_N, N)] = s[N] * un.d_x;
    jx[(Q_N, Q_C)] = s[Q_C] * (-wn * dg[1]);
    jx[(Q_N, Q_N)] = s[Q_N] * (-wn * dg[3] - tau_d);

    let wc = p.alpha * p.theta_d + p.mu_d * q_c;
    jx[(Q_C, C)] = s[C] * uc.d_x;
    jx[(Q_C, Q_C)] = s[Q_C] * (-wc * dg[1] - p.theta_m * dh_dqc - tau_d);
    jx[(Q_C, Q_N)] = s[Q_N] * (-wc * dg[3] - p.theta_m * dh_dqn);

    jx[(D, Q_C)] = s[Q_C] * p.mu_d * dg[1] * d;
    jx[(D, Q_N)] = s[Q_N] * p.mu_d * dg[3] * d;
    jx[(D, D)] = s[D] * (tau_d - p.a - p.m_d);

    jx[(M, Q_C)] = s[Q_C] * p.mu_m * dh_dqc * d;
    jx[(M, Q_N)] = s[Q_N] * p.mu_m * dh_dqn * d;
    jx[(M, D)] = s[D] * p.mu_m * h;
    jx[(M, M)] = s[M] * (-p.a);

    // Columns: V_max_N, K_N, V_max_C, K_C, m_D, Q_min_N, Q_min_C, mu_D,
    // mu_M, Theta_D, Theta_M.
    let mut jp = ParamJacobian::zeros();
    jp[(N, 0)] = -d * un.d_vmax;
    jp[(N, 1)] = -d * un.d_k;

    jp[(C, 2)] = -d * uc.d_vmax;
    jp[(C, 3)] = -d * uc.d_k;

    jp[(Q_N, 0)] = un.d_vmax;
    jp[(Q_N, 1)] = un.d_k;
    jp[(Q_N, 5)] = -wn * dg[2];
    jp[(Q_N, 6)] = -wn * dg[0];
    jp[(Q_N, 7)] = -g * q_n;
    jp[(Q_N, 9)] = -g;

    jp[(Q_C, 2)] = uc.d_vmax;
    jp[(Q_C, 3)] = uc.d_k;
    jp[(Q_C, 5)] = -wc * dg[2];
    jp[(Q_C, 6)] = -wc * dg[0] - p.theta_m * dh[0];
    jp[(Q_C, 7)] = -g * q_c;
    jp[(Q_C, 9)] = -p.alpha * g;
    jp[(Q_C, 10)] = -h;

    jp[(D, 4)] = -d;
    jp[(D, 5)] = p.mu_d * dg[2] * d;
    jp[(D, 6)] = p.mu_d * dg[0] * d;
    jp[(D, 7)] = g * d;

    jp[(M, 6)] = p.mu_m * dh[0] * d;
    jp[(M, 8)] = h * d;

    Ok(Linearization { f, jac_state: jx, jac_params: jp })
}

pub fn jac_state(t: f64, x: &State, p: &ParameterSet) -> Result<Matrix6<f64>> {
    Ok(linearize(t, x, p)?.jac_state)
}

pub fn jac_params(t: f64, x: &State, p: &ParameterSet) -> Result<ParamJacobian> {
    Ok(linearize(t, x, p)?.jac_params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StateVector;
    use approx::assert_relative_eq;

    const P: ParameterSet = ParameterSet::REFERENCE;

    #[test]
    fn initial_condition_derivatives() {
        let x0 = StateVector::chemostat_start(&P).to_vector();
        let f = rhs(0.0, &x0, &P).unwrap();
        assert_relative_eq!(f[idx::D], -0.69e-4, epsilon = 1e-18);
        assert_eq!(f[idx::M], 0.0);
    }

    #[test]
    fn empty_chemostat_is_at_equilibrium() {
        let x = StateVector::empty_chemostat(&P).to_vector();
        let f = rhs(0.0, &x, &P).unwrap();
        for i in [idx::N, idx::C, idx::D, idx::M] {
            assert_eq!(f[i], 0.0);
        }
    }

    #[test]
    fn negative_components_are_clipped() {
        let x = State::new(-1.0, 30.0, -2.0, 400.0, 0.2, -0.5);
        assert_eq!(rhs(0.0, &x, &P).unwrap(), rhs(0.0, &positive_part(&x), &P).unwrap());
    }

    #[test]
    fn non_finite_state_is_rejected() {
        let x = State::new(1.0, f64::NAN, 1.0, 1.0, 1.0, 1.0);
        assert_eq!(rhs(0.0, &x, &P), Err(Error::NonFiniteState));
        assert!(linearize(0.0, &x, &P).is_err());
    }

    #[test]
    fn linearize_value_matches_rhs() {
        let x = State::new(0.7, 1800.0, 12.0, 250.0, 2.0, 0.05);
        assert_eq!(linearize(0.0, &x, &P).unwrap().f, rhs(0.0, &x, &P).unwrap());
    }

    #[test]
    fn structural_entries() {
        let x = State::new(0.7, 1800.0, 12.0, 250.0, 2.0, 0.05);
        let lin = linearize(0.0, &x, &P).unwrap();
        assert_eq!(lin.jac_state[(idx::M, idx::N)], 0.0);
        let tau_d = crate::model::growth_rate(250.0, 12.0, &P);
        assert_eq!(lin.jac_state[(idx::D, idx::D)], tau_d - P.a - P.m_d);
        for row in 0..6 {
            let expected = if row == idx::D { -x[idx::D] } else { 0.0 };
            assert_eq!(lin.jac_params[(row, 4)], expected);
        }
        let starved = State::new(0.0, 1800.0, 12.0, 250.0, 2.0, 0.05);
        let jp = jac_params(0.0, &starved, &P).unwrap();
        assert!(jp.column(1).iter().all(|&v| v == 0.0));
    }
}
