use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and step policies shared by the nonlinear solvers and the
/// continuation driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Absolute dual-norm tolerance for monotone solves.
    pub abs_tol: f64,
    /// Tolerance relative to the dual norm of the right-hand side.
    pub rel_tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    /// Fixed gradient regularization for 1 < p < 2. `None` selects
    /// `1e-8 * (mean |grad u| + 1)` per evaluation.
    pub eps_reg: Option<f64>,

    pub alpha0: f64,
    pub ds_max: f64,
    pub ds_growth: f64,
    pub max_steps: usize,
    pub corrector_tol: f64,
    pub corrector_max_iter: usize,
    pub max_halvings: usize,
    pub norm_cap: f64,
    pub zero_cap: f64,
    pub trivial_lambda_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-12,
            max_iter: 200,
            armijo: 1e-4,
            eps_reg: None,
            alpha0: 1e-3,
            ds_max: 0.5,
            ds_growth: 1.3,
            max_steps: 200,
            corrector_tol: 1e-9,
            corrector_max_iter: 15,
            max_halvings: 8,
            norm_cap: 50.0,
            zero_cap: 1e-5,
            trivial_lambda_tol: 1e-2,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("armijo", self.armijo),
            ("alpha0", self.alpha0),
            ("ds_max", self.ds_max),
            ("corrector_tol", self.corrector_tol),
            ("norm_cap", self.norm_cap),
            ("zero_cap", self.zero_cap),
            ("trivial_lambda_tol", self.trivial_lambda_tol),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {value}")));
            }
        }
        if self.ds_growth < 1.0 {
            return Err(Error::InvalidConfig("ds_growth must be >= 1".into()));
        }
        if self.max_iter == 0 || self.corrector_max_iter == 0 {
            return Err(Error::InvalidConfig("iteration limits must be nonzero".into()));
        }
        Ok(())
    }
}
