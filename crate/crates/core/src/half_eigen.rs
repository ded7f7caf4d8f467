//! Half-eigenvalues of `-Delta - gamma (.)^-`, the split pair near a
//! simple eigenvalue `lambda_k`, and the Fucik curves of the Laplacian.
//!
//! Two routes are kept side by side: closed-form sine-arc shooting for the
//! continuum problem on `(0, L)`, and an exact three-term recurrence for the
//! discrete problem on the grid. Discrete values are the ones used
//! downstream; the continuum values are reported alongside.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{apply_laplacian, dual_norm, inner_l2_unchecked, negative_part, Field, Grid};
use crate::spectrum::{discrete_eigenvalue, eigenpair};

/// Sign of the first hump (equivalently of `u'(0)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StartSign {
    Positive,
    Negative,
}

impl StartSign {
    pub fn value(self) -> f64 {
        match self {
            StartSign::Positive => 1.0,
            StartSign::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaWindow {
    pub k: usize,
    /// `min{lambda_k - lambda_{k-1}, lambda_{k+1} - lambda_k}` from discrete eigenvalues.
    pub gamma_max: f64,
}

impl GammaWindow {
    pub fn contains(&self, gamma: f64) -> bool {
        (0.0..self.gamma_max).contains(&gamma)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitEigenPair {
    pub k: usize,
    pub gamma: f64,
    /// Discrete split eigenvalues.
    pub lambda1: f64,
    pub lambda2: f64,
    /// Continuum values from closed-form shooting on `(0, L)`.
    pub shoot1: f64,
    pub shoot2: f64,
    pub v1: Field,
    pub v2: Field,
    pub eta: f64,
    pub residual1: f64,
    pub residual2: f64,
}

impl SplitEigenPair {
    pub fn lambda(&self, which: usize) -> f64 {
        if which == 2 {
            self.lambda2
        } else {
            self.lambda1
        }
    }

    pub fn eigenfunction(&self, which: usize) -> &Field {
        if which == 2 {
            &self.v2
        } else {
            &self.v1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FucikPoint {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub n_plus: usize,
    pub n_minus: usize,
}

pub fn gamma_window(grid: &Grid, k: usize) -> Result<GammaWindow> {
    if k < 2 {
        return Err(Error::IndexOutOfRange {
            k,
            max: grid.n_interior() - 1,
        });
    }
    if k + 1 > grid.n_interior() {
        return Err(Error::IndexOutOfRange {
            k,
            max: grid.n_interior() - 1,
        });
    }
    let below = discrete_eigenvalue(grid, k) - discrete_eigenvalue(grid, k - 1);
    let above = discrete_eigenvalue(grid, k + 1) - discrete_eigenvalue(grid, k);
    Ok(GammaWindow {
        k,
        gamma_max: below.min(above),
    })
}

fn check_positive(lambda_plus: f64, lambda_minus: f64) -> Result<()> {
    if lambda_plus > 0.0 && lambda_minus > 0.0 && lambda_plus.is_finite() && lambda_minus.is_finite() {
        Ok(())
    } else {
        Err(Error::NonpositiveParameters {
            lambda_plus,
            lambda_minus,
        })
    }
}

/// Walks the sine arcs of `u'' = -lambda_+ u^+ + lambda_- u^-` from `u(0) = 0`,
/// `u'(0) = 1`. Returns `(u(L), humps)` with `humps` the per-sign count and
/// the fractional progress through the hump containing `L`.
fn walk_arcs(lambda_plus: f64, lambda_minus: f64, length: f64) -> (f64, usize, usize, f64) {
    let (wp, wm) = (lambda_plus.sqrt(), lambda_minus.sqrt());
    let mut x = 0.0;
    let mut positive = true;
    let (mut n_plus, mut n_minus) = (0usize, 0usize);
    let end_tol = 1e-13 * length;
    loop {
        let w = if positive { wp } else { wm };
        let len = PI / w;
        let remaining = length - x;
        if remaining <= end_tol && n_plus + n_minus > 0 {
            return (0.0, n_plus, n_minus, 1.0);
        }
        if positive {
            n_plus += 1;
        } else {
            n_minus += 1;
        }
        if x + len >= length - end_tol {
            let t = remaining.min(len);
            let mag = (w * t).sin() / w;
            let value = if positive { mag } else { -mag };
            return (value, n_plus, n_minus, t / len);
        }
        x += len;
        positive = !positive;
    }
}

/// Closed-form shooting for `-u'' = lambda_+ u^+ - lambda_- u^-` on `(0, L)`
/// with `u(0) = 0`, `u'(0) = 1`. Returns `(u(L), n_plus, n_minus)`; `u(L)`
/// vanishes exactly on the Fucik spectrum.
pub fn fucik_shoot(lambda_plus: f64, lambda_minus: f64, length: f64) -> Result<(f64, usize, usize)> {
    check_positive(lambda_plus, lambda_minus)?;
    if length.is_nan() || length <= 0.0 {
        return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
    }
    let (v, np, nm, _) = walk_arcs(lambda_plus, lambda_minus, length);
    Ok((v, np, nm))
}

/// Continuous hump count covered by `(0, L)`; increasing in both parameters.
fn hump_phase(lambda_plus: f64, lambda_minus: f64, length: f64, start: StartSign) -> f64 {
    let (lp, lm) = match start {
        StartSign::Positive => (lambda_plus, lambda_minus),
        StartSign::Negative => (lambda_minus, lambda_plus),
    };
    let (_, np, nm, frac) = walk_arcs(lp, lm, length);
    (np + nm) as f64 - 1.0 + frac
}

fn bisect(mut lo: f64, mut hi: f64, iterations: usize, above: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Continuum half-eigenvalue with `m` humps of `-u'' - gamma u^- = lambda u`
/// on `(0, L)`: root of the shooting function along `lambda_- = lambda - gamma`.
pub fn shoot_half_eigenvalue(length: f64, m: usize, start: StartSign, gamma: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::Bracketing("hump count must be positive".into()));
    }
    // lambda lies in [mu_m, mu_m + gamma] with mu_m = (m pi / L)^2
    let mu = (m as f64 * PI / length).powi(2);
    let lo = (mu - 0.5 * mu).max(gamma + 1e-12 * mu);
    let hi = mu + gamma + mu;
    let phase = |lam: f64| hump_phase(lam, lam - gamma, length, start);
    if !(phase(lo) < m as f64 && phase(hi) >= m as f64) {
        return Err(Error::Bracketing(format!(
            "no sign change of the shooting function in [{lo}, {hi}]"
        )));
    }
    Ok(bisect(lo, hi, 200, |lam| phase(lam) >= m as f64))
}

/// Point on the Fucik curve with hump counts `(n_plus, n_minus)` at the given
/// `lambda_plus`: solves for `lambda_minus` by bisection on the shooting phase.
pub fn fucik_curve_point(length: f64, n_plus: usize, n_minus: usize, lambda_plus: f64) -> Result<Option<FucikPoint>> {
    if n_minus == 0 || n_plus == 0 || n_plus.abs_diff(n_minus) > 1 {
        return Err(Error::Bracketing(format!(
            "unsupported hump pattern ({n_plus}, {n_minus})"
        )));
    }
    if lambda_plus.is_nan() || lambda_plus <= 0.0 {
        return Err(Error::NonpositiveParameters {
            lambda_plus,
            lambda_minus: f64::NAN,
        });
    }
    let start = if n_minus > n_plus {
        StartSign::Negative
    } else {
        StartSign::Positive
    };
    let m = (n_plus + n_minus) as f64;
    // positive humps alone must leave room for the negative ones
    if n_plus as f64 * PI / lambda_plus.sqrt() >= length {
        return Ok(None);
    }
    let phase = |lm: f64| hump_phase(lambda_plus, lm, length, start);
    let mut hi = (m * PI / length).powi(2);
    while phase(hi) < m {
        hi *= 2.0;
        if hi > 1e12 {
            return Ok(None);
        }
    }
    let mut lo = hi;
    while phase(lo) >= m {
        lo *= 0.5;
        if lo < 1e-12 {
            return Ok(None);
        }
    }
    let lambda_minus = bisect(lo, hi, 200, |lm| phase(lm) >= m);
    Ok(Some(FucikPoint {
        lambda_plus,
        lambda_minus,
        n_plus,
        n_minus,
    }))
}

/// Samples the Fucik curves with up to `max_humps` humps for `lambda_plus`
/// in `[lp_min, lp_max]`.
pub fn fucik_sweep(length: f64, max_humps: usize, lp_min: f64, lp_max: f64, samples: usize) -> Result<Vec<FucikPoint>> {
    let mut out = Vec::new();
    let samples = samples.max(2);
    let lp_at = |i: usize| lp_min + (lp_max - lp_min) * i as f64 / (samples - 1) as f64;
    let lambda1 = (PI / length).powi(2);
    for m in 1..=max_humps {
        if m == 1 {
            // u > 0: vertical line lambda_+ = lambda_1; u < 0: horizontal line
            for i in 0..samples {
                let t = lp_at(i);
                out.push(FucikPoint {
                    lambda_plus: lambda1,
                    lambda_minus: t,
                    n_plus: 1,
                    n_minus: 0,
                });
                out.push(FucikPoint {
                    lambda_plus: t,
                    lambda_minus: lambda1,
                    n_plus: 0,
                    n_minus: 1,
                });
            }
            continue;
        }
        let patterns: Vec<(usize, usize)> = if m % 2 == 0 {
            vec![(m / 2, m / 2)]
        } else {
            vec![(m / 2 + 1, m / 2), (m / 2, m / 2 + 1)]
        };
        for (np, nm) in patterns {
            for i in 0..samples {
                if let Some(pt) = fucik_curve_point(length, np, nm, lp_at(i))? {
                    out.push(pt);
                }
            }
        }
    }
    Ok(out)
}

/// Solves `-Delta_h u - gamma u^- = lambda u` node by node from `u_0 = 0`,
/// `u_1 = sign * h`; returns `u_1..u_{n+1}`.
fn discrete_shoot(grid: &Grid, lambda: f64, gamma: f64, start: StartSign) -> Vec<f64> {
    let n = grid.n_interior();
    let h2 = grid.h() * grid.h();
    let mut u = Vec::with_capacity(n + 1);
    let mut prev = 0.0;
    let mut cur = start.value() * grid.h();
    u.push(cur);
    for _ in 0..n {
        let neg = (-cur).max(0.0);
        let next = 2.0 * cur - prev - h2 * (lambda * cur + gamma * neg);
        prev = cur;
        cur = next;
        u.push(cur);
    }
    u
}

fn sign_changes(u: &[f64]) -> usize {
    let mut count = 0;
    let mut last = 0.0f64;
    for &v in u {
        if v != 0.0 {
            if last != 0.0 && v.signum() != last.signum() {
                count += 1;
            }
            last = v;
        }
    }
    count
}

/// Discrete half-eigenpair with `m` humps. The oscillation count of the
/// shooting recurrence is monotone in `lambda`; the eigenvalue is where it
/// first reaches `m`. The eigenfunction is polished by Newton on the
/// normalized system.
pub fn half_eigenpair(grid: &Grid, m: usize, start: StartSign, gamma: f64) -> Result<(f64, Field)> {
    let n = grid.n_interior();
    if m == 0 || m > n {
        return Err(Error::IndexOutOfRange { k: m, max: n });
    }
    let osc = |lam: f64| sign_changes(&discrete_shoot(grid, lam, gamma, start));
    let lo = -1.0;
    let mut hi = 4.0 / (grid.h() * grid.h()) + gamma + 1.0;
    let mut guard = 0;
    while osc(hi) < m {
        hi *= 2.0;
        guard += 1;
        if guard > 20 {
            return Err(Error::Bracketing(format!("oscillation count never reaches {m}")));
        }
    }
    if osc(lo) >= m {
        return Err(Error::Bracketing("oscillation at negative lambda".into()));
    }
    let lambda = bisect(lo, hi, 200, |lam| osc(lam) >= m);
    let mut values = discrete_shoot(grid, lambda, gamma, start);
    values.truncate(n);
    let u = Field::new(*grid, values)?;
    let u = u.scaled(1.0 / u.l2_norm());
    polish_half_eigenpair(u, lambda, gamma)
}

/// Newton on `(K u - gamma u^- - lambda u, (||u||_2^2 - 1) / 2) = 0`.
fn polish_half_eigenpair(mut u: Field, mut lambda: f64, gamma: f64) -> Result<(f64, Field)> {
    let grid = *u.grid();
    let n = grid.n_interior();
    let h = grid.h();
    let k_mat = grid.laplacian_matrix().to_dense();
    let mut best = (half_residual_field(&u, lambda, gamma), lambda, u.clone());
    for _ in 0..8 {
        let r = half_residual_field(&u, lambda, gamma);
        let c = 0.5 * (u.l2_norm().powi(2) - 1.0);
        let rn = dual_norm(&r);
        if rn < dual_norm(&best.0) {
            best = (r.clone(), lambda, u.clone());
        }
        if rn <= 1e-14 * (1.0 + lambda) && c.abs() <= 1e-15 {
            break;
        }
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        jac.view_mut((0, 0), (n, n)).copy_from(&k_mat);
        for i in 0..n {
            let ui = u.values()[i];
            jac[(i, i)] += if ui < 0.0 { gamma } else { 0.0 } - lambda;
            jac[(i, n)] = -ui;
            jac[(n, i)] = h * ui;
        }
        let mut rhs = DVector::zeros(n + 1);
        for i in 0..n {
            rhs[i] = -r.values()[i];
        }
        rhs[n] = -c;
        let Some(step) = jac.lu().solve(&rhs) else { break };
        for i in 0..n {
            u.values_mut()[i] += step[i];
        }
        lambda += step[n];
    }
    let r = half_residual_field(&u, lambda, gamma);
    if dual_norm(&r) > dual_norm(&best.0) {
        return Ok((best.1, best.2));
    }
    Ok((lambda, u))
}

fn half_residual_field(u: &Field, lambda: f64, gamma: f64) -> Field {
    let mut r = apply_laplacian(u);
    r.axpy(-gamma, &negative_part(u));
    r.axpy(-lambda, u);
    r
}

/// Dual norm of the weak residual of `-Delta u - gamma u^- = lambda u`.
pub fn half_eigen_residual(u: &Field, lambda: f64, gamma: f64) -> Result<f64> {
    if u.is_zero() {
        return Err(Error::ZeroField);
    }
    Ok(dual_norm(&half_residual_field(u, lambda, gamma)))
}

/// The split pair `(lambda^1_k, lambda^2_k)` with eigenfunctions whose
/// `e_k` components are positive and negative respectively.
pub fn split_eigenvalues(grid: &Grid, k: usize, gamma: f64) -> Result<SplitEigenPair> {
    let max = grid.n_interior() - 1;
    if k == 0 || k > max {
        return Err(Error::IndexOutOfRange { k, max });
    }
    if k == 1 {
        if gamma != 0.0 {
            return Err(Error::GammaOutsideWindow {
                k,
                gamma,
                gamma_max: 0.0,
            });
        }
    } else {
        let window = gamma_window(grid, k)?;
        if !window.contains(gamma) {
            return Err(Error::GammaOutsideWindow {
                k,
                gamma,
                gamma_max: window.gamma_max,
            });
        }
    }
    let ek = eigenpair(grid, k)?;
    let lambda_k = ek.lambda;
    let lambda_next = discrete_eigenvalue(grid, k + 1);

    let (lambda1, v1) = half_eigenpair(grid, k, StartSign::Positive, gamma)?;
    let (lambda2, v2) = half_eigenpair(grid, k, StartSign::Negative, gamma)?;
    let slack = 1e-9 * lambda_next;
    for lam in [lambda1, lambda2] {
        if lam < lambda_k - slack || lam > lambda_next + slack {
            return Err(Error::Bracketing(format!(
                "half-eigenvalue {lam} outside [{lambda_k}, {lambda_next}]"
            )));
        }
    }
    let c1 = inner_l2_unchecked(&ek.e, &v1);
    let c2 = inner_l2_unchecked(&ek.e, &v2);
    if !(c1 > 0.0 && c2 < 0.0) {
        return Err(Error::Bracketing(format!(
            "half-eigenfunction projections ({c1}, {c2}) have the wrong signs"
        )));
    }
    let shoot1 = shoot_half_eigenvalue(grid.length(), k, StartSign::Positive, gamma)?;
    let shoot2 = shoot_half_eigenvalue(grid.length(), k, StartSign::Negative, gamma)?;
    Ok(SplitEigenPair {
        k,
        gamma,
        lambda1,
        lambda2,
        shoot1,
        shoot2,
        residual1: half_eigen_residual(&v1, lambda1, gamma)?,
        residual2: half_eigen_residual(&v2, lambda2, gamma)?,
        v1,
        v2,
        eta: 0.5 * c1.abs().min(c2.abs()),
    })
}

/// Discrete half-eigenvalues of `-Delta - gamma (.)^-` inside `[lo, hi]`.
pub fn half_spectrum(grid: &Grid, gamma: f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for m in 1..=grid.n_interior() {
        // every m-hump half-eigenvalue lies in [lambda_m, lambda_m + gamma]
        let lam_m = discrete_eigenvalue(grid, m);
        if lam_m > hi {
            break;
        }
        if lam_m + gamma < lo {
            continue;
        }
        for start in [StartSign::Positive, StartSign::Negative] {
            let (lam, _) = half_eigenpair(grid, m, start, gamma)?;
            if (lo..=hi).contains(&lam) {
                out.push(lam);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}
