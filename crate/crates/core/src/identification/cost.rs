use nalgebra::{DMatrix, DVector};

use crate::error::Result;

/// Residuals of one parameter vector against the observations.
#[derive(Debug, Clone, PartialEq)]
pub struct CostEvaluation {
    pub residuals: DVector<f64>,
    /// `rᵀr`.
    pub cost: f64,
    /// `√cost / |X^tg|₂`.
    pub rel_residual: f64,
    /// `∂r/∂P`, rows aligned with `residuals`.
    pub jacobian: Option<DMatrix<f64>>,
}

impl CostEvaluation {
    pub fn new(residuals: DVector<f64>, jacobian: Option<DMatrix<f64>>, target_norm: f64) -> Self {
        let cost = residuals.norm_squared();
        Self {
            rel_residual: cost.sqrt() / target_norm,
            cost,
            residuals,
            jacobian,
        }
    }

    /// `∇L = 2 Jᵀ r`.
    pub fn gradient(&self) -> Option<DVector<f64>> {
        self.jacobian.as_ref().map(|j| 2.0 * j.tr_mul(&self.residuals))
    }

    /// `(JᵀJ, Jᵀr)`; the matrix is filled from its upper triangle so it is
    /// exactly symmetric.
    pub fn normal_equations(&self) -> Option<(DMatrix<f64>, DVector<f64>)> {
        let j = self.jacobian.as_ref()?;
        let p = j.ncols();
        let mut a = DMatrix::zeros(p, p);
        for c in 0..p {
            for r in 0..=c {
                let v = j.column(r).dot(&j.column(c));
                a[(r, c)] = v;
                a[(c, r)] = v;
            }
        }
        Some((a, j.tr_mul(&self.residuals)))
    }
}

/// True iff `√L(P) / |X^tg|₂ <= tol`.
pub fn stopping_criterion(eval: &CostEvaluation, tol: f64) -> bool {
    eval.rel_residual <= tol
}

/// A least-squares objective that the minimizers can drive.
pub trait Objective {
    fn evaluate(&self, p: &DVector<f64>, with_jacobian: bool) -> Result<CostEvaluation>;

    /// Maps a trial point back into the admissible set. Identity by default.
    fn project(&self, _p: &mut DVector<f64>) {}

    fn trial_point(&self, p: &DVector<f64>, direction: &DVector<f64>, h: f64) -> DVector<f64> {
        let mut q = p + direction * h;
        self.project(&mut q);
        q
    }
}
