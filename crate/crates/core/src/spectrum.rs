//! Eigenpairs of the discrete Dirichlet Laplacian.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{apply_laplacian, inner_l2_unchecked, Field, Grid};

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub k: usize,
    pub lambda: f64,
    /// Unit `L2` norm; first nonzero nodal value positive.
    pub e: Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub k: usize,
    pub lambda_discrete: f64,
    pub lambda_continuum: f64,
}

fn check_index(grid: &Grid, k: usize) -> Result<()> {
    if k == 0 || k > grid.n_interior() {
        Err(Error::IndexOutOfRange {
            k,
            max: grid.n_interior(),
        })
    } else {
        Ok(())
    }
}

/// `(2/h^2)(1 - cos(k pi h / L))`.
pub fn discrete_eigenvalue(grid: &Grid, k: usize) -> f64 {
    let h = grid.h();
    2.0 / (h * h) * (1.0 - (k as f64 * std::f64::consts::PI * h / grid.length()).cos())
}

/// `(k pi / L)^2`.
pub fn continuum_eigenvalue(grid: &Grid, k: usize) -> f64 {
    let w = k as f64 * std::f64::consts::PI / grid.length();
    w * w
}

/// Closed-form k-th eigenpair.
pub fn eigenpair(grid: &Grid, k: usize) -> Result<EigenPair> {
    check_index(grid, k)?;
    let w = k as f64 * std::f64::consts::PI / grid.length();
    let e = Field::from_fn(*grid, |x| (w * x).sin());
    Ok(EigenPair {
        k,
        lambda: discrete_eigenvalue(grid, k),
        e: normalize_with_sign(e),
    })
}

pub fn spectrum_rows(grid: &Grid, count: usize) -> Result<Vec<SpectrumRow>> {
    check_index(grid, count.max(1))?;
    Ok((1..=count)
        .map(|k| SpectrumRow {
            k,
            lambda_discrete: discrete_eigenvalue(grid, k),
            lambda_continuum: continuum_eigenvalue(grid, k),
        })
        .collect())
}

fn normalize_with_sign(e: Field) -> Field {
    let norm = e.l2_norm();
    let tiny = 1e-12 * e.max_abs();
    let first = e.values().iter().copied().find(|v| v.abs() > tiny).unwrap_or(1.0);
    e.scaled(first.signum() / norm)
}

/// Number of eigenvalues of the Laplacian matrix below `x` (Sturm count
/// from the signs of the `LDL^T` pivots).
fn sturm_count(grid: &Grid, x: f64) -> usize {
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let a = 2.0 * inv_h2 - x;
    let b2 = inv_h2 * inv_h2;
    let mut count = 0;
    let mut d = a;
    for i in 0..grid.n_interior() {
        if i > 0 {
            let prev = if d == 0.0 { f64::EPSILON * inv_h2 } else { d };
            d = a - b2 / prev;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// k-th eigenpair by Sturm bisection followed by shifted inverse iteration.
/// Independent of the closed form; used to cross-check it.
pub fn eigenpair_iterative(grid: &Grid, k: usize) -> Result<EigenPair> {
    check_index(grid, k)?;
    let (mut lo, mut hi) = (0.0, 4.0 / (grid.h() * grid.h()));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(grid, mid) >= k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-9 * hi {
            break;
        }
    }
    // nudge the shift off the eigenvalue so the factorization stays regular
    let shift = 0.5 * (lo + hi) * (1.0 + 1e-10);
    let shifted = grid.laplacian_matrix().shifted(-shift);

    let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
    let mut x: Vec<f64> = (0..grid.n_interior()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut lambda = shift;
    for _ in 0..50 {
        let y = shifted.solve(&x)?;
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = y.into_iter().map(|v| v / norm).collect();
        let e = Field::from_vec_unchecked(*grid, x.clone());
        let le = apply_laplacian(&e);
        let ee = inner_l2_unchecked(&e, &e);
        lambda = inner_l2_unchecked(&le, &e) / ee;
        let res = le.lin_comb(1.0, &e, -lambda).l2_norm() / ee.sqrt();
        if res <= 1e-12 * lambda {
            break;
        }
    }
    Ok(EigenPair {
        k,
        lambda,
        e: normalize_with_sign(Field::from_vec_unchecked(*grid, x)),
    })
}

/// `||u||_{1,2}^2 / ||u||_2^2`.
pub fn rayleigh_quotient(u: &Field) -> Result<f64> {
    if u.is_zero() {
        return Err(Error::ZeroField);
    }
    let h10 = u.h10_norm();
    let l2 = u.l2_norm();
    Ok(h10 * h10 / (l2 * l2))
}

/// Minimizes the discrete Rayleigh quotient over `trials` random starts by
/// projected Sobolev-gradient descent with a Rayleigh-Ritz line search on
/// `span{u, grad}`.
pub fn rayleigh_lambda1(grid: &Grid, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k_mat = grid.laplacian_matrix();
    let mut best = f64::INFINITY;
    for _ in 0..trials.max(1) {
        let start: Vec<f64> = (0..grid.n_interior()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut u = Field::from_vec_unchecked(*grid, start);
        u = u.scaled(1.0 / u.l2_norm());
        let mut rho = rayleigh_quotient(&u).expect("nonzero start");
        for _ in 0..500 {
            let lu = apply_laplacian(&u);
            // Sobolev gradient of the quotient on the unit sphere
            let precond = k_mat.solve_thomas(u.values()).expect("SPD");
            let mut g = Field::from_vec_unchecked(*grid, precond).scaled(rho);
            g = u.lin_comb(1.0, &g, -1.0);
            let proj = inner_l2_unchecked(&g, &u);
            g.axpy(-proj, &u);
            let gn = g.l2_norm();
            if gn < 1e-15 {
                break;
            }
            let g = g.scaled(1.0 / gn);
            let lg = apply_laplacian(&g);
            let a11 = inner_l2_unchecked(&lu, &u);
            let a12 = inner_l2_unchecked(&lu, &g);
            let a22 = inner_l2_unchecked(&lg, &g);
            let mean = 0.5 * (a11 + a22);
            let rad = (0.25 * (a11 - a22).powi(2) + a12 * a12).sqrt();
            let mu = mean - rad;
            // eigenvector of [[a11, a12], [a12, a22]] for mu
            let (c1, c2) = if a12.abs() > 0.0 { (a12, mu - a11) } else { (1.0, 0.0) };
            let next = u.lin_comb(c1, &g, c2);
            u = next.scaled(1.0 / next.l2_norm());
            let new_rho = rayleigh_quotient(&u).expect("nonzero iterate");
            let done = (rho - new_rho).abs() <= 1e-15 * rho;
            rho = new_rho.min(rho);
            if done {
                break;
            }
        }
        best = best.min(rho);
    }
    best
}
