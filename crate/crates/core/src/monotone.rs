//! Solvers for the strongly monotone operators
//! `M u = -Delta_p u - Delta u - gamma u^-` (p > 2, global) and
//! `A v = -||v||_{1,2}^{4-p} Delta_p v - Delta v - gamma v^-` (1 < p < 2, on a ball),
//! with sampled coercivity diagnostics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::{dual_norm, inner_l2_unchecked, p_laplacian_unchecked, solve_laplacian, Field, Grid};
use crate::quasilinear::{
    energy_original, jacobian_original, jacobian_transformed, residual_original, residual_transformed, ProblemParams,
};
use crate::sampling::{random_on_sphere, random_sine_series};

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub solution: Field,
    pub iterations: usize,
    pub final_residual: f64,
    /// Smallest sampled `<Mu - Mw, u - w> / ||u - w||_{1,2}^2`.
    pub coercivity_estimate: f64,
    pub ball_radius_used: Option<f64>,
    /// Steps that fell back to the preconditioned gradient (Picard) direction.
    pub picard_steps: usize,
}

fn require_superlinear(p: f64) -> Result<()> {
    if p > 2.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidExponent {
            p,
            reason: "the global monotone solver needs p > 2",
        })
    }
}

fn require_sublinear(p: f64) -> Result<()> {
    if p > 1.0 && p < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent {
            p,
            reason: "the ball solver needs 1 < p < 2",
        })
    }
}

fn effective(params: &ProblemParams, config: &SolverConfig) -> ProblemParams {
    match config.eps_reg {
        Some(e) => params.with_eps_reg(e),
        None => *params,
    }
}

fn converged(res: f64, fnorm: f64, config: &SolverConfig) -> bool {
    res <= config.abs_tol || res <= config.rel_tol * fnorm
}

fn pair_ratio(du: &Field, dr: &Field) -> Option<f64> {
    let n2 = du.h10_norm().powi(2);
    (n2 > 0.0).then(|| inner_l2_unchecked(dr, du) / n2)
}

/// Solve `M u = f` for `p > 2` from `u = 0`. The `lambda` of `params` is ignored.
pub fn solve_monotone(f: &Field, params: &ProblemParams, config: &SolverConfig) -> Result<SolveReport> {
    solve_monotone_from(f, params, &Field::zeros(*f.grid()), config)
}

pub fn solve_monotone_from(
    f: &Field,
    params: &ProblemParams,
    init: &Field,
    config: &SolverConfig,
) -> Result<SolveReport> {
    require_superlinear(params.p)?;
    config.validate()?;
    if init.grid() != f.grid() {
        return Err(Error::GridMismatch);
    }
    let params = effective(&params.with_lambda(0.0), config);
    newton_energy(f, &params, init.clone(), config)
}

/// Semismooth Newton for `R(u) = 0` including the `lambda u` term, with the
/// same energy line search as [`solve_monotone`]. Converges globally when
/// the energy is coercive, e.g. for `lambda_+`, `lambda_-` below `lambda_1`.
pub fn newton_original(init: &Field, params: &ProblemParams, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let params = effective(params, config);
    newton_energy(&Field::zeros(*init.grid()), &params, init.clone(), config)
}

struct Accepted {
    u: Field,
    r: Field,
    res: f64,
}

fn newton_energy(f: &Field, params: &ProblemParams, init: Field, config: &SolverConfig) -> Result<SolveReport> {
    let fnorm = dual_norm(f);
    let residual = |u: &Field| -> Result<Field> {
        let mut r = residual_original(u, params)?;
        r.axpy(-1.0, f);
        Ok(r)
    };
    let energy = |u: &Field| energy_original(u, params) - inner_l2_unchecked(f, u);

    let line_search = |u: &Field, d: &Field, slope: f64, res: f64| -> Result<Option<Accepted>> {
        let e0 = energy(u);
        let mut t = 1.0;
        for _ in 0..60 {
            let cand = u.lin_comb(1.0, d, t);
            if cand.is_finite() {
                let e = energy(&cand);
                let decrease = config.armijo * t * slope;
                if e <= e0 + decrease {
                    let r = residual(&cand)?;
                    let res = dual_norm(&r);
                    return Ok(Some(Accepted { u: cand, r, res }));
                }
                // energy differences drown in round-off close to the minimizer
                if decrease.abs() <= 1e-13 * (1.0 + e0.abs()) {
                    let r = residual(&cand)?;
                    let res_c = dual_norm(&r);
                    if res_c < res {
                        return Ok(Some(Accepted { u: cand, r, res: res_c }));
                    }
                }
            }
            t *= 0.5;
        }
        Ok(None)
    };

    let mut u = init;
    let mut r = residual(&u)?;
    let mut res = dual_norm(&r);
    let mut coercivity = f64::INFINITY;
    let mut picard_steps = 0;
    for iteration in 0..=config.max_iter {
        if converged(res, fnorm, config) {
            if !coercivity.is_finite() {
                coercivity = probe_coercivity(&u, &residual)?;
            }
            return Ok(SolveReport {
                solution: u,
                iterations: iteration,
                final_residual: res,
                coercivity_estimate: coercivity,
                ball_radius_used: None,
                picard_steps,
            });
        }
        if iteration == config.max_iter {
            break;
        }
        let neg_r: Vec<f64> = r.values().iter().map(|x| -x).collect();
        let newton = jacobian_original(&u, params)
            .and_then(|j| j.solve_thomas(&neg_r))
            .ok()
            .map(|d| Field::from_vec_unchecked(*u.grid(), d))
            .filter(|d| d.is_finite());
        let mut accepted = None;
        if let Some(d) = newton {
            let slope = inner_l2_unchecked(&r, &d);
            if slope < 0.0 {
                accepted = line_search(&u, &d, slope, res)?;
            }
        }
        if accepted.is_none() {
            picard_steps += 1;
            let d = solve_laplacian(&r).scaled(-1.0);
            let slope = inner_l2_unchecked(&r, &d);
            accepted = line_search(&u, &d, slope, res)?;
        }
        let Some(step) = accepted else { break };
        if let Some(q) = pair_ratio(&step.u.sub(&u), &step.r.sub(&r)) {
            coercivity = coercivity.min(q);
        }
        log::debug!(
            "monotone iteration {iteration}: residual {:.3e} -> {:.3e}",
            res,
            step.res
        );
        u = step.u;
        r = step.r;
        res = step.res;
    }
    Err(Error::NotConverged {
        iterations: config.max_iter,
        residual: res,
        best: Box::new(u),
    })
}

fn probe_coercivity(u: &Field, residual: &impl Fn(&Field) -> Result<Field>) -> Result<f64> {
    let probe = Field::from_fn(*u.grid(), |x| (std::f64::consts::PI * x / u.grid().length()).sin());
    let probe = probe.scaled(1e-3 * (1.0 + u.h10_norm()) / probe.h10_norm());
    let dr = residual(&u.add(&probe))?.sub(&residual(u)?);
    Ok(pair_ratio(&probe, &dr).unwrap_or(f64::NAN))
}

/// Sampled coercivity of `A` on the ball of `H^1_0` radius `radius`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoercivityReport {
    pub radius: f64,
    pub samples: usize,
    /// Smallest `<A u - A w, u - w> / ||u - w||_{1,2}^2` over the samples.
    pub min_ratio: f64,
    /// Largest `|c(u) - c(w)| |<-Delta_p w, u - w>| / (r^2 ||u - w||_{1,2}^2)`,
    /// where `c(v) = ||v||_{1,2}^{4-p}`.
    pub c_prime: f64,
    /// `1 - c_prime r^2`.
    pub lower_bound: f64,
}

/// Pairs `(u, w)` are drawn with directions and radial fractions fixed by
/// `seed`, so reports at different radii see rescaled copies of the same pairs.
pub fn ball_coercivity(
    grid: &Grid,
    params: &ProblemParams,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<CoercivityReport> {
    require_sublinear(params.p)?;
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    let p = params.p;
    let params = params.with_lambda(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    let mut c_prime: f64 = 0.0;
    let coeff = |v: &Field| v.h10_norm().powf(4.0 - p);
    for _ in 0..samples {
        let a: f64 = rng.gen_range(0.0..1.0);
        let b: f64 = rng.gen_range(0.0..1.0);
        let u = random_on_sphere(grid, &mut rng, radius * a);
        let w = random_on_sphere(grid, &mut rng, radius * b);
        let du = u.sub(&w);
        let n2 = du.h10_norm().powi(2);
        if n2 == 0.0 {
            continue;
        }
        let dr = residual_transformed(&u, &params)?.sub(&residual_transformed(&w, &params)?);
        min_ratio = min_ratio.min(inner_l2_unchecked(&dr, &du) / n2);
        let cross = (coeff(&u) - coeff(&w)).abs() * inner_l2_unchecked(&p_laplacian_unchecked(&w, p), &du).abs();
        c_prime = c_prime.max(cross / (radius * radius * n2));
    }
    Ok(CoercivityReport {
        radius,
        samples,
        min_ratio,
        c_prime,
        lower_bound: 1.0 - c_prime * radius * radius,
    })
}

/// Largest dyadic `r <= 1` whose sampled lower bound is at least 0.5.
pub fn default_ball_radius(grid: &Grid, params: &ProblemParams, samples: usize, seed: u64) -> Result<f64> {
    let mut r = 1.0;
    for _ in 0..40 {
        let rep = ball_coercivity(grid, params, r, samples, seed)?;
        if rep.lower_bound >= 0.5 && rep.min_ratio > 0.0 {
            return Ok(r);
        }
        r *= 0.5;
    }
    Err(Error::NotCoercive { radius: r, sample: 0.0 })
}

const BALL_SAMPLES: usize = 64;
const BALL_SEED: u64 = 0xba11;

/// Solve `A v = f` for `1 < p < 2` with `||v||_{1,2} <= r`. The `lambda` of
/// `params` is ignored.
pub fn solve_monotone_ball(f: &Field, params: &ProblemParams, r: f64, config: &SolverConfig) -> Result<SolveReport> {
    require_sublinear(params.p)?;
    config.validate()?;
    let grid = *f.grid();
    let params = effective(&params.with_lambda(0.0), config);
    let coercivity = ball_coercivity(&grid, &params, r, BALL_SAMPLES, BALL_SEED)?;
    if coercivity.min_ratio <= 0.0 {
        return Err(Error::NotCoercive {
            radius: r,
            sample: coercivity.min_ratio,
        });
    }
    let mut min_ratio = coercivity.min_ratio;

    let fnorm = dual_norm(f);
    let residual = |v: &Field| -> Result<Field> {
        let mut res = residual_transformed(v, &params)?;
        res.axpy(-1.0, f);
        Ok(res)
    };
    let mut v = Field::zeros(grid);
    let mut res_field = residual(&v)?;
    let mut res = dual_norm(&res_field);
    for iteration in 0..=config.max_iter {
        if converged(res, fnorm, config) {
            return Ok(SolveReport {
                solution: v,
                iterations: iteration,
                final_residual: res,
                coercivity_estimate: min_ratio,
                ball_radius_used: Some(r),
                picard_steps: 0,
            });
        }
        if iteration == config.max_iter {
            break;
        }
        let jac = jacobian_transformed(&v, &params)?;
        let neg: Vec<f64> = res_field.values().iter().map(|x| -x).collect();
        let d = Field::from_vec_unchecked(grid, jac.solve(&neg)?);
        let mut t = 1.0;
        let mut step = None;
        for _ in 0..40 {
            let cand = v.lin_comb(1.0, &d, t);
            let rc = residual(&cand)?;
            let rn = dual_norm(&rc);
            if rn <= (1.0 - 1e-4 * t) * res {
                step = Some((cand, rc, rn));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, rc, rn)) = step else { break };
        let norm = cand.h10_norm();
        if norm > r {
            return Err(Error::LeftBall { radius: r, norm });
        }
        if let Some(q) = pair_ratio(&cand.sub(&v), &rc.sub(&res_field)) {
            min_ratio = min_ratio.min(q);
        }
        v = cand;
        res_field = rc;
        res = rn;
    }
    Err(Error::NotConverged {
        iterations: config.max_iter,
        residual: res,
        best: Box::new(v),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VectorInequalityReport {
    pub p: f64,
    pub samples: usize,
    /// Largest `c1` with `(x2 - x1).(phi(x2) - phi(x1)) >= c1 |x2 - x1|^p` on the samples.
    pub c1_emp: f64,
    /// Smallest `c2` with `|phi(x2) - phi(x1)| <= c2 (|x1| + |x2|)^{p-2} |x2 - x1|`.
    pub c2_emp: f64,
    /// Samples breaking either inequality with `c1 = 2^{2-p}`, `c2 = p - 1`.
    pub violations: usize,
}

fn phi2(x: [f64; 2], p: f64) -> [f64; 2] {
    let n = x[0].hypot(x[1]);
    if n == 0.0 {
        [0.0, 0.0]
    } else {
        let s = n.powf(p - 2.0);
        [s * x[0], s * x[1]]
    }
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> [f64; 2] {
    let mut x = [rng.gen_range(-scale..scale), 0.0];
    if dim == 2 {
        x[1] = rng.gen_range(-scale..scale);
    }
    x
}

/// Sample pairs in R^1 and R^2 (uniform, log-scaled, antipodal, nearly equal,
/// one at the origin) and measure both vector inequalities for `phi(x) = |x|^{p-2} x`.
pub fn check_vector_inequalities(p: f64, samples: usize, seed: u64) -> Result<VectorInequalityReport> {
    require_superlinear(p)?;
    let c1_floor = 2f64.powf(2.0 - p);
    let c2_ceiling = p - 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c1_emp = f64::INFINITY;
    let mut c2_emp: f64 = 0.0;
    let mut violations = 0;
    for i in 0..samples {
        let dim = 1 + i % 2;
        let (x1, x2) = match (i / 2) % 5 {
            0 => (random_vector(&mut rng, dim, 10.0), random_vector(&mut rng, dim, 10.0)),
            1 => {
                let s1 = 10f64.powf(rng.gen_range(-3.0..3.0));
                let s2 = 10f64.powf(rng.gen_range(-3.0..3.0));
                (random_vector(&mut rng, dim, s1), random_vector(&mut rng, dim, s2))
            }
            2 => {
                let x = random_vector(&mut rng, dim, 10.0);
                (x, [-x[0], -x[1]])
            }
            3 => {
                let x = random_vector(&mut rng, dim, 10.0);
                let d = random_vector(&mut rng, dim, 1e-3);
                (x, [x[0] + d[0], x[1] + d[1]])
            }
            _ => ([0.0, 0.0], random_vector(&mut rng, dim, 10.0)),
        };
        let dx = [x2[0] - x1[0], x2[1] - x1[1]];
        let dist = dx[0].hypot(dx[1]);
        if dist == 0.0 {
            continue;
        }
        let (f1, f2) = (phi2(x1, p), phi2(x2, p));
        let df = [f2[0] - f1[0], f2[1] - f1[1]];
        let ratio_a = (dx[0] * df[0] + dx[1] * df[1]) / dist.powf(p);
        let sum = x1[0].hypot(x1[1]) + x2[0].hypot(x2[1]);
        let ratio_b = df[0].hypot(df[1]) / (sum.powf(p - 2.0) * dist);
        c1_emp = c1_emp.min(ratio_a);
        c2_emp = c2_emp.max(ratio_b);
        if ratio_a < c1_floor * (1.0 - 1e-12) || ratio_b > c2_ceiling * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    Ok(VectorInequalityReport {
        p,
        samples,
        c1_emp,
        c2_emp,
        violations,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MonotonicityReport {
    pub pairs: usize,
    pub violations: usize,
    /// Smallest `<Mu - Mw, u - w> / ||u - w||_{1,p}^p`.
    pub min_ratio: f64,
}

/// Check `<Mu - Mw, u - w> >= c1 ||u - w||_{1,p}^p` on random smooth pairs
/// with amplitudes spread over three decades.
pub fn monotonicity_sweep(
    grid: &Grid,
    params: &ProblemParams,
    c1: f64,
    pairs: usize,
    seed: u64,
) -> Result<MonotonicityReport> {
    require_superlinear(params.p)?;
    let params = params.with_lambda(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut min_ratio = f64::INFINITY;
    for _ in 0..pairs {
        let a = 10f64.powf(rng.gen_range(-2.0..1.0));
        let b = 10f64.powf(rng.gen_range(-2.0..1.0));
        let u = random_sine_series(grid, &mut rng, 8, a);
        let w = random_sine_series(grid, &mut rng, 8, b);
        let du = u.sub(&w);
        let denom = du.w1p_norm(params.p).powf(params.p);
        if denom == 0.0 {
            continue;
        }
        let dr = residual_original(&u, &params)?.sub(&residual_original(&w, &params)?);
        let ratio = inner_l2_unchecked(&dr, &du) / denom;
        min_ratio = min_ratio.min(ratio);
        if ratio < c1 * (1.0 - 1e-10) {
            violations += 1;
        }
    }
    Ok(MonotonicityReport {
        pairs,
        violations,
        min_ratio,
    })
}

/// Largest `||M^{-1} f - M^{-1} g||_{1,2} / ||f - g||_*` over random
/// right-hand sides and perturbations.
pub fn inverse_continuity(
    grid: &Grid,
    params: &ProblemParams,
    pairs: usize,
    seed: u64,
    config: &SolverConfig,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let amp = 10f64.powf(rng.gen_range(-1.0..2.0));
        let f = random_sine_series(grid, &mut rng, 8, amp);
        let scale = 10f64.powf(rng.gen_range(-4.0..0.0));
        let g = f.add(&random_sine_series(grid, &mut rng, 8, scale));
        let uf = solve_monotone(&f, params, config)?.solution;
        let ug = solve_monotone(&g, params, config)?.solution;
        let df = dual_norm(&f.sub(&g));
        if df > 0.0 {
            worst = worst.max(uf.sub(&ug).h10_norm() / df);
        }
    }
    Ok(worst)
}
