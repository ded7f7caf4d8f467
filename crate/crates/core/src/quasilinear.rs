//! Residuals and generalized Jacobians of the (p,2)-Laplacian problems
//!
//! ```text
//! -Delta_p u - Delta u - gamma u^- = lambda u                    (original)
//! -||v||_{1,2}^{4-p} Delta_p v - Delta v - gamma v^- = lambda v   (1 < p < 2)
//! ```
//!
//! with `gamma = lambda_+ - lambda_-` and `lambda = lambda_+`. The second
//! problem is the image of the first under `v = u / ||u||_{1,2}^{2 - p/2}`,
//! which exchanges large and small solutions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{
    apply_laplacian, check_exponent, dual_norm, flux, inner_l2_unchecked, negative_part, p_laplacian_unchecked,
    pos_neg_parts, Field,
};
use crate::tridiag::Tridiagonal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemParams {
    pub p: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// Gradient regularization of the Jacobian weight. `None` picks 0 for
    /// `p > 2` and `1e-8 * (mean |grad u| + 1)` for `1 < p < 2`.
    pub eps_reg: Option<f64>,
}

impl ProblemParams {
    pub fn new(p: f64, gamma: f64, lambda: f64) -> Result<Self> {
        check_exponent(p)?;
        if p == 2.0 {
            return Err(Error::InvalidExponent {
                p,
                reason: "p = 2 is the linear case",
            });
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma must be >= 0, got {gamma}")));
        }
        let params = Self {
            p,
            gamma,
            lambda,
            eps_reg: None,
        };
        params.warn_if_negative_minus();
        Ok(params)
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn with_eps_reg(self, eps: f64) -> Self {
        Self {
            eps_reg: Some(eps),
            ..self
        }
    }

    pub fn lambda_plus(&self) -> f64 {
        self.lambda
    }

    pub fn lambda_minus(&self) -> f64 {
        self.lambda - self.gamma
    }

    pub(crate) fn warn_if_negative_minus(&self) {
        if self.lambda_minus() <= 0.0 {
            log::warn!(
                "lambda_- = lambda - gamma = {} is not positive (lambda = {}, gamma = {})",
                self.lambda_minus(),
                self.lambda,
                self.gamma
            );
        }
    }

    fn eps_for(&self, grads: &[f64]) -> f64 {
        match self.eps_reg {
            Some(e) => e,
            None if self.p > 2.0 => 0.0,
            None => {
                let mean = grads.iter().map(|g| g.abs()).sum::<f64>() / grads.len() as f64;
                1e-8 * (mean + 1.0)
            }
        }
    }
}

/// `v` together with the coefficient `||v||_{1,2}^{4-p}` of its p-Laplacian term.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedField {
    pub v: Field,
    pub coeff: f64,
}

impl TransformedField {
    pub fn new(v: Field, p: f64) -> Self {
        let coeff = v.h10_norm().powf(4.0 - p);
        Self { v, coeff }
    }
}

fn linear_part(u: &Field, gamma: f64, lambda: f64) -> Field {
    let mut r = apply_laplacian(u);
    r.axpy(-gamma, &negative_part(u));
    r.axpy(-lambda, u);
    r
}

/// Dual representation of `-Delta_p u - Delta u - gamma u^- - lambda u`.
pub fn residual_original(u: &Field, params: &ProblemParams) -> Result<Field> {
    check_exponent(params.p)?;
    let mut r = linear_part(u, params.gamma, params.lambda);
    r.axpy(1.0, &p_laplacian_unchecked(u, params.p));
    Ok(r)
}

/// Dual norm of the weak-form residual
/// `int |u'|^{p-2} u' phi' + int u' phi' - lambda_+ int u^+ phi + lambda_- int u^- phi`.
pub fn residual_weak(u: &Field, lambda_plus: f64, lambda_minus: f64, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if u.is_zero() {
        return Err(Error::ZeroField);
    }
    let (up, um) = pos_neg_parts(u);
    let mut r = apply_laplacian(u);
    r.axpy(1.0, &p_laplacian_unchecked(u, p));
    r.axpy(-lambda_plus, &up);
    r.axpy(lambda_minus, &um);
    Ok(dual_norm(&r))
}

/// Discrete energy whose gradient (in the `L2` pairing) is [`residual_original`]:
/// `||u||_{1,p}^p / p + ||u||_{1,2}^2 / 2 + gamma ||u^-||_2^2 / 2 - lambda ||u||_2^2 / 2`.
pub fn energy_original(u: &Field, params: &ProblemParams) -> f64 {
    let p = params.p;
    let wp = u.w1p_norm(p);
    let h1 = u.h10_norm();
    let neg = negative_part(u).l2_norm();
    let l2 = u.l2_norm();
    wp.powf(p) / p + 0.5 * h1 * h1 + 0.5 * params.gamma * neg * neg - 0.5 * params.lambda * l2 * l2
}

/// Stiffness of the linearized p-Laplacian, scaled by `coeff`, plus the
/// Laplacian stiffness.
fn stiffness(u: &Field, p: f64, coeff: f64, eps: f64) -> Result<Tridiagonal> {
    let grads = u.gradients();
    let h2 = u.grid().h() * u.grid().h();
    let n = u.values().len();
    let weights: Vec<f64> = if coeff == 0.0 {
        vec![1.0; n + 1]
    } else {
        grads
            .iter()
            .map(|&g| {
                if eps == 0.0 {
                    if g == 0.0 {
                        return if p > 2.0 { Ok(1.0) } else { Err(Error::SingularWeight) };
                    }
                    Ok(1.0 + coeff * (p - 1.0) * g.abs().powf(p - 2.0))
                } else {
                    Ok(1.0 + coeff * (p - 1.0) * (g * g + eps * eps).powf(0.5 * (p - 2.0)))
                }
            })
            .collect::<Result<_>>()?
    };
    let diag = (0..n).map(|i| (weights[i] + weights[i + 1]) / h2).collect();
    let off: Vec<f64> = (1..n).map(|j| -weights[j] / h2).collect();
    Ok(Tridiagonal::new(off.clone(), diag, off))
}

fn add_sign_and_shift(t: &mut Tridiagonal, u: &Field, gamma: f64, lambda: f64) {
    for (d, &ui) in t.diag.iter_mut().zip(u.values()) {
        // d/du (-gamma u^-) = gamma on {u < 0}; slope 0 is taken at u = 0
        if ui < 0.0 {
            *d += gamma;
        }
        *d -= lambda;
    }
}

/// Generalized Jacobian of [`residual_original`]: a symmetric tridiagonal
/// matrix acting on nodal values and returning dual vectors.
pub fn jacobian_original(u: &Field, params: &ProblemParams) -> Result<Tridiagonal> {
    check_exponent(params.p)?;
    let eps = params.eps_for(&u.gradients());
    let mut t = stiffness(u, params.p, 1.0, eps)?;
    add_sign_and_shift(&mut t, u, params.gamma, params.lambda);
    Ok(t)
}

fn check_sublinear(p: f64) -> Result<()> {
    if p > 1.0 && p < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent {
            p,
            reason: "the infinity transform needs 1 < p < 2",
        })
    }
}

/// `v = u / ||u||_{1,2}^{2 - p/2}`.
pub fn to_infinity_variable(u: &Field, p: f64) -> Result<TransformedField> {
    check_sublinear(p)?;
    if u.is_zero() {
        return Err(Error::ZeroField);
    }
    let v = u.scaled(u.h10_norm().powf(-(2.0 - 0.5 * p)));
    Ok(TransformedField::new(v, p))
}

/// Inverse of [`to_infinity_variable`]: `u = v ||v||_{1,2}^{-(2 - p/2)/(1 - p/2)}`.
pub fn from_infinity_variable(v: &Field, p: f64) -> Result<Field> {
    check_sublinear(p)?;
    if v.is_zero() {
        return Err(Error::ZeroField);
    }
    Ok(v.scaled(back_transform_scale(v.h10_norm(), p)))
}

/// Factor `s` with `u = s v`.
pub fn back_transform_scale(v_h10: f64, p: f64) -> f64 {
    v_h10.powf(-(2.0 - 0.5 * p) / (1.0 - 0.5 * p))
}

/// `||u||_{1,2}` of the back-transformed field, `||v||_{1,2}^{-1/(1 - p/2)}`.
pub fn back_transformed_h10(v_h10: f64, p: f64) -> f64 {
    v_h10.powf(-1.0 / (1.0 - 0.5 * p))
}

/// Dual representation of `-||v||^{4-p} Delta_p v - Delta v - gamma v^- - lambda v`.
pub fn residual_transformed(v: &Field, params: &ProblemParams) -> Result<Field> {
    check_sublinear(params.p)?;
    let mut r = linear_part(v, params.gamma, params.lambda);
    let coeff = v.h10_norm().powf(4.0 - params.p);
    if coeff > 0.0 {
        r.axpy(coeff, &p_laplacian_unchecked(v, params.p));
    }
    Ok(r)
}

/// Tridiagonal part plus the rank-one term `a b^T` from differentiating the
/// norm coefficient.
#[derive(Debug, Clone)]
pub struct TransformedJacobian {
    pub tri: Tridiagonal,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl TransformedJacobian {
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let bx: f64 = self.b.iter().zip(x).map(|(b, x)| b * x).sum();
        let mut y = self.tri.matvec(x);
        for (yi, ai) in y.iter_mut().zip(&self.a) {
            *yi += ai * bx;
        }
        y
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = self.tri.to_dense();
        let n = self.a.len();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += self.a[i] * self.b[j];
            }
        }
        m
    }

    /// Sherman-Morrison on top of the pivoted tridiagonal solve.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let y = self.tri.solve(rhs)?;
        if self.b.iter().all(|&b| b == 0.0) {
            return Ok(y);
        }
        let z = self.tri.solve(&self.a)?;
        let by: f64 = self.b.iter().zip(&y).map(|(b, y)| b * y).sum();
        let bz: f64 = self.b.iter().zip(&z).map(|(b, z)| b * z).sum();
        let denom = 1.0 + bz;
        if denom.abs() < 1e-14 {
            return Err(Error::SingularSystem);
        }
        Ok(y.iter().zip(&z).map(|(y, z)| y - z * by / denom).collect())
    }
}

/// Generalized Jacobian of [`residual_transformed`].
pub fn jacobian_transformed(v: &Field, params: &ProblemParams) -> Result<TransformedJacobian> {
    check_sublinear(params.p)?;
    let p = params.p;
    let norm = v.h10_norm();
    let coeff = norm.powf(4.0 - p);
    let eps = params.eps_for(&v.gradients());
    let mut tri = stiffness(v, p, coeff, eps)?;
    add_sign_and_shift(&mut tri, v, params.gamma, params.lambda);
    let n = v.values().len();
    let (a, b) = if norm > 0.0 {
        // d ||v||^{4-p} / dv_i = (4 - p) ||v||^{2-p} h (K v)_i
        let kv = apply_laplacian(v);
        let scale = (4.0 - p) * norm.powf(2.0 - p) * v.grid().h();
        (
            p_laplacian_unchecked(v, p).into_values(),
            kv.values().iter().map(|x| scale * x).collect(),
        )
    } else {
        (vec![0.0; n], vec![0.0; n])
    };
    Ok(TransformedJacobian { tri, a, b })
}

/// Dual pairing `<r, w>` realized by the `L2` inner product.
pub fn pairing(r: &Field, w: &Field) -> f64 {
    inner_l2_unchecked(r, w)
}

/// `|g|^{p-2} g` applied to a slice of element gradients.
pub fn fluxes(grads: &[f64], p: f64) -> Vec<f64> {
    grads.iter().map(|&g| flux(g, p)).collect()
}
