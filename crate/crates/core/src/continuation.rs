//! Lyapunov-Schmidt splitting along `e_k`, cone localization, and
//! pseudo-arclength tracing of the branches that leave the split
//! eigenvalues of `-Delta - gamma (.)^-`.
//!
//! For `p > 2` the traced equation is the original one and the branch
//! starts at `(lambda^which_k, 0)`. For `1 < p < 2` the traced variable is
//! `v = u / ||u||_{1,2}^{2 - p/2}`, so small `v` corresponds to large `u`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::{dual_norm, inner_l2_unchecked, solve_laplacian, Field, Grid};
use crate::half_eigen::{half_spectrum, split_eigenvalues};
use crate::monotone::solve_monotone_from;
use crate::quasilinear::{
    back_transformed_h10, from_infinity_variable, jacobian_original, jacobian_transformed, residual_original,
    residual_transformed, ProblemParams,
};
use crate::spectrum::eigenpair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn for_which(which: usize) -> Self {
        if which == 2 {
            Side::Minus
        } else {
            Side::Plus
        }
    }

    fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// `u = alpha e_k + v` with `(e_k, v)_2 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LSDecomposition {
    pub alpha: f64,
    pub v: Field,
}

pub fn decompose(u: &Field, k: usize) -> Result<LSDecomposition> {
    let e = eigenpair(u.grid(), k)?.e;
    let alpha = inner_l2_unchecked(u, &e);
    Ok(LSDecomposition {
        alpha,
        v: u.lin_comb(1.0, &e, -alpha),
    })
}

pub fn recompose(d: &LSDecomposition, k: usize) -> Result<Field> {
    let e = eigenpair(d.v.grid(), k)?.e;
    Ok(d.v.lin_comb(1.0, &e, d.alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeParams {
    pub rho: f64,
    pub eta: f64,
}

fn in_cone(alpha: f64, l2: f64, eta: f64, side: Side) -> bool {
    side.sign() * alpha > eta * l2
}

/// `(e_k, u)_2 > eta ||u||_2` for `Plus`, `< -eta ||u||_2` for `Minus`.
pub fn cone_test(u: &Field, k: usize, cone: &ConeParams, side: Side) -> Result<bool> {
    if u.is_zero() {
        return Err(Error::ZeroField);
    }
    let e = eigenpair(u.grid(), k)?.e;
    Ok(in_cone(inner_l2_unchecked(u, &e), u.l2_norm(), cone.eta, side))
}

/// Defects of the scalar and complement equations of the reduced system
///
/// ```text
/// alpha = alpha lambda / lambda_k + (T(u), e_k)_2
/// v     = lambda (-Delta)^{-1} v + P_k T(u)
/// ```
///
/// for `u = alpha e_k + v`, where `T(u) = M^{-1}(lambda u) - (-Delta)^{-1}(lambda u)`.
/// Only defined for `p > 2`, where `M` is globally invertible.
pub fn ls_residual(
    alpha: f64,
    lambda: f64,
    v: &Field,
    params: &ProblemParams,
    k: usize,
    config: &SolverConfig,
) -> Result<(f64, Field)> {
    let grid = *v.grid();
    let ek = eigenpair(&grid, k)?;
    let u = v.lin_comb(1.0, &ek.e, alpha);
    if u.is_zero() {
        return Ok((0.0, Field::zeros(grid)));
    }
    let lu = u.scaled(lambda);
    let inner = SolverConfig {
        abs_tol: 0.1 * config.corrector_tol,
        ..*config
    };
    let m_inv = solve_monotone_from(&lu, params, &u, &inner)?.solution;
    let t = m_inv.sub(&solve_laplacian(&lu));
    let te = inner_l2_unchecked(&t, &ek.e);
    let scalar = alpha - alpha * lambda / ek.lambda - te;
    let pk_t = t.lin_comb(1.0, &ek.e, -te);
    let mut vector = v.lin_comb(1.0, &solve_laplacian(v), -lambda);
    vector.axpy(-1.0, &pk_t);
    Ok((scalar, vector))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchSeed {
    pub k: usize,
    /// 1 seeds along `v^1_k` (positive `e_k` component), 2 along `v^2_k`.
    pub which: usize,
    pub gamma: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    /// Arclength measured from `(lambda^which_k, 0)`.
    pub s: f64,
    pub lambda: f64,
    #[serde(skip)]
    pub u: Field,
    /// `(u, e_k)_2` of the traced variable.
    pub alpha: f64,
    pub l2: f64,
    pub h12: f64,
    pub in_cone: bool,
    /// Dual norm of the traced equation's residual, re-evaluated after acceptance.
    pub residual: f64,
    /// `||u||_{1,2}` in the original variable (back-transformed when `p < 2`).
    pub h12_original: f64,
    /// Original-equation residual at the back-transformed point.
    pub residual_original: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Termination {
    MeetsInfinity,
    MeetsTrivial { mu: f64 },
    MaxSteps,
    CorrectorFailure,
}

#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub seed: BranchSeed,
    pub seed_lambda: f64,
    pub eta: f64,
    /// True when the traced variable is the transformed `v` (`1 < p < 2`).
    pub transformed: bool,
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
    /// Times `alpha` changed sign between consecutive accepted points.
    pub alpha_sign_changes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Regime {
    Original,
    Transformed,
}

struct System {
    regime: Regime,
    params: ProblemParams,
}

impl System {
    fn residual(&self, u: &Field, lambda: f64) -> Result<Field> {
        let params = self.params.with_lambda(lambda);
        match self.regime {
            Regime::Original => residual_original(u, &params),
            Regime::Transformed => residual_transformed(u, &params),
        }
    }

    fn jacobian(&self, u: &Field, lambda: f64) -> Result<DMatrix<f64>> {
        let params = self.params.with_lambda(lambda);
        Ok(match self.regime {
            Regime::Original => jacobian_original(u, &params)?.to_dense(),
            Regime::Transformed => jacobian_transformed(u, &params)?.to_dense(),
        })
    }
}

/// Linear side condition closing the `(u, lambda)` system:
/// `h gu.u + gl lambda = rhs`.
struct Constraint {
    gu: Vec<f64>,
    gl: f64,
    rhs: f64,
}

impl Constraint {
    fn value(&self, u: &Field, lambda: f64) -> f64 {
        self.gu.iter().zip(u.values()).map(|(a, b)| a * b).sum::<f64>() + self.gl * lambda - self.rhs
    }
}

struct Corrected {
    u: Field,
    lambda: f64,
    residual: f64,
}

/// Newton direction of the bordered system `[J, -u; g_u, g_l]`.
fn newton_direction(sys: &System, u: &Field, lambda: f64, f: &Field, c: &Constraint) -> Option<(Field, f64)> {
    let n = u.values().len();
    let jac = sys.jacobian(u, lambda).ok()?;
    let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&jac);
    for i in 0..n {
        m[(i, n)] = -u.values()[i];
        m[(n, i)] = c.gu[i];
    }
    m[(n, n)] = c.gl;
    let mut rhs = DVector::<f64>::zeros(n + 1);
    for i in 0..n {
        rhs[i] = -f.values()[i];
    }
    rhs[n] = -c.value(u, lambda);
    let d = m.lu().solve(&rhs)?;
    let du = Field::new(*u.grid(), d.as_slice()[..n].to_vec()).ok()?;
    d[n].is_finite().then_some((du, d[n]))
}

struct Iterate {
    u: Field,
    lambda: f64,
    f: Field,
    res: f64,
    merit: f64,
}

impl Iterate {
    fn new(sys: &System, u: Field, lambda: f64, c: &Constraint) -> Option<Self> {
        let f = sys.residual(&u, lambda).ok()?;
        let res = dual_norm(&f);
        let merit = res + c.value(&u, lambda).abs();
        merit.is_finite().then_some(Self {
            u,
            lambda,
            f,
            res,
            merit,
        })
    }
}

/// Damped Newton step. Backtracking matters for `1 < p < 2`, where the flux
/// behaves like `sign(g) |g|^{p-1}` and full steps cycle around element
/// gradients close to zero.
fn damped_step(sys: &System, it: &Iterate, c: &Constraint) -> Option<Iterate> {
    let (du, dl) = newton_direction(sys, &it.u, it.lambda, &it.f, c)?;
    let mut t = 1.0;
    for _ in 0..12 {
        let cand = Iterate::new(sys, it.u.lin_comb(1.0, &du, t), it.lambda + t * dl, c)?;
        if cand.merit <= (1.0 - 1e-4 * t) * it.merit {
            return Some(cand);
        }
        t *= 0.5;
    }
    None
}

/// Damped Newton on the bordered system, then up to three polishing steps
/// kept only while they halve the residual.
fn correct(sys: &System, u0: Field, lambda0: f64, c: &Constraint, config: &SolverConfig) -> Option<Corrected> {
    let tol = config.corrector_tol;
    let done = |it: &Iterate| it.res <= tol && c.value(&it.u, it.lambda).abs() <= tol;
    let mut it = Iterate::new(sys, u0, lambda0, c)?;
    let mut iterations = 0;
    while !done(&it) {
        if iterations == config.corrector_max_iter {
            return None;
        }
        it = damped_step(sys, &it, c)?;
        iterations += 1;
    }
    for _ in 0..3 {
        match damped_step(sys, &it, c) {
            Some(next) if next.res <= 0.5 * it.res => it = next,
            _ => break,
        }
    }
    Some(Corrected {
        u: it.u,
        lambda: it.lambda,
        residual: it.res,
    })
}

fn metric_dist(a: &Field, la: f64, b: &Field, lb: f64) -> f64 {
    let du = a.sub(b).l2_norm();
    du.hypot(la - lb)
}

/// Trace the branch leaving `(lambda^which_k(gamma), 0)`.
pub fn trace_branch(grid: &Grid, seed: BranchSeed, config: &SolverConfig) -> Result<Branch> {
    config.validate()?;
    if seed.which != 1 && seed.which != 2 {
        return Err(Error::InvalidConfig(format!(
            "which must be 1 or 2, got {}",
            seed.which
        )));
    }
    let split = split_eigenvalues(grid, seed.k, seed.gamma)?;
    let lam0 = split.lambda(seed.which);
    let mut params = ProblemParams::new(seed.p, seed.gamma, lam0)?;
    if let Some(e) = config.eps_reg {
        params = params.with_eps_reg(e);
    }
    let regime = if seed.p > 2.0 {
        Regime::Original
    } else {
        Regime::Transformed
    };
    let sys = System { regime, params };
    let ek = eigenpair(grid, seed.k)?.e;
    let side = Side::for_which(seed.which);
    let eta = split.eta;
    let h = grid.h();

    let vs = split.eigenfunction(seed.which);
    let vs = vs.scaled(1.0 / vs.l2_norm());

    let make_point = |u: Field, lambda: f64, s: f64| -> Result<BranchPoint> {
        let fresh = dual_norm(&sys.residual(&u, lambda)?);
        let alpha = inner_l2_unchecked(&u, &ek);
        let l2 = u.l2_norm();
        let h12 = u.h10_norm();
        let (h12_original, residual_original_) = match regime {
            Regime::Original => (h12, fresh),
            Regime::Transformed => {
                let back = from_infinity_variable(&u, seed.p)?;
                let r = residual_original(&back, &params.with_lambda(lambda))?;
                (back_transformed_h10(h12, seed.p), dual_norm(&r))
            }
        };
        Ok(BranchPoint {
            s,
            lambda,
            alpha,
            l2,
            h12,
            in_cone: in_cone(alpha, l2, eta, side),
            residual: fresh,
            h12_original,
            residual_original: residual_original_,
            u,
        })
    };

    let seed_constraint = Constraint {
        gu: vs.values().iter().map(|x| h * x).collect(),
        gl: 0.0,
        rhs: config.alpha0,
    };
    let first =
        correct(&sys, vs.scaled(config.alpha0), lam0, &seed_constraint, config).ok_or_else(|| Error::SeedFailure {
            lambda: lam0,
            reason: "bordered Newton did not converge".into(),
        })?;
    let s0 = first.u.l2_norm().hypot(first.lambda - lam0);
    log::info!(
        "seeded k = {} which = {} at lambda = {:.6} (residual {:.2e})",
        seed.k,
        seed.which,
        first.lambda,
        first.residual
    );
    let mut points = vec![make_point(first.u, first.lambda, s0)?];

    let mut tangent_u = vs.clone();
    let mut tangent_l = 0.0;
    let mut ds = config.alpha0;
    let mut halvings = 0;
    let mut alpha_sign_changes = 0;
    let mut termination = Termination::MaxSteps;

    while points.len() < config.max_steps {
        let last = points.last().expect("nonempty");
        let pred_u = last.u.lin_comb(1.0, &tangent_u, ds);
        let pred_l = last.lambda + ds * tangent_l;
        let c = Constraint {
            gu: tangent_u.values().iter().map(|x| h * x).collect(),
            gl: tangent_l,
            rhs: h * inner_dot(&tangent_u, &last.u) + tangent_l * last.lambda + ds,
        };
        // the first step uses the seed tangent, which ignores the slope of lambda
        let first_step = points.len() == 1;
        let accepted = correct(&sys, pred_u.clone(), pred_l, &c, config)
            .filter(|k| first_step || metric_dist(&k.u, k.lambda, &pred_u, pred_l) <= ds);
        let Some(next) = accepted else {
            halvings += 1;
            if halvings > config.max_halvings {
                termination = Termination::CorrectorFailure;
                break;
            }
            ds *= 0.5;
            log::debug!("corrector failed, ds -> {ds:.3e}");
            continue;
        };
        halvings = 0;
        let step = metric_dist(&next.u, next.lambda, &last.u, last.lambda);
        if step == 0.0 {
            termination = Termination::CorrectorFailure;
            break;
        }
        tangent_u = next.u.sub(&last.u).scaled(1.0 / step);
        tangent_l = (next.lambda - last.lambda) / step;
        let s = last.s + step;
        let prev_alpha = last.alpha;
        let pt = make_point(next.u, next.lambda, s)?;
        if pt.alpha * prev_alpha < 0.0 {
            alpha_sign_changes += 1;
            log::info!("alpha changed sign at lambda = {:.6}", pt.lambda);
        }
        log::debug!("accepted lambda = {:.8} l2 = {:.3e} ds = {:.3e}", pt.lambda, pt.l2, ds);
        let (l2, lambda) = (pt.l2, pt.lambda);
        points.push(pt);
        ds = (ds * config.ds_growth).min(config.ds_max);

        if l2 > config.norm_cap {
            termination = Termination::MeetsInfinity;
            break;
        }
        let near_seed = [split.lambda1, split.lambda2]
            .iter()
            .any(|&l| (lambda - l).abs() <= config.trivial_lambda_tol);
        if l2 < config.zero_cap && !near_seed {
            let tol = config.trivial_lambda_tol;
            let nearby = half_spectrum(grid, seed.gamma, lambda - tol, lambda + tol)?;
            if let Some(&mu) = nearby
                .iter()
                .min_by(|a, b| (*a - lambda).abs().total_cmp(&(*b - lambda).abs()))
            {
                termination = Termination::MeetsTrivial { mu };
                break;
            }
        }
    }
    log::info!("branch finished after {} points: {:?}", points.len(), termination);
    Ok(Branch {
        seed,
        seed_lambda: lam0,
        eta,
        transformed: regime == Regime::Transformed,
        points,
        termination,
        alpha_sign_changes,
    })
}

fn inner_dot(a: &Field, b: &Field) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum()
}

/// Trace several seeds on up to `jobs` threads; results keep the input order.
pub fn trace_branches(grid: &Grid, seeds: &[BranchSeed], config: &SolverConfig, jobs: usize) -> Vec<Result<Branch>> {
    let jobs = jobs.max(1).min(seeds.len().max(1));
    let mut out: Vec<Option<Result<Branch>>> = (0..seeds.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|j| {
                scope.spawn(move || {
                    (j..seeds.len())
                        .step_by(jobs)
                        .map(|i| (i, trace_branch(grid, seeds[i], config)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for handle in handles {
            for (i, r) in handle.join().expect("branch worker panicked") {
                out[i] = Some(r);
            }
        }
    });
    out.into_iter().map(|r| r.expect("every seed traced")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalizationReport {
    /// Distance of the first point (ordered by distance from the seed) that
    /// leaves the cone or has the wrong `alpha` sign; the largest checked
    /// distance when there is none.
    pub rho0: f64,
    pub violation_found: bool,
    /// Violations among points closer than `cone.rho`.
    pub violations_within_rho: usize,
    pub checked: usize,
}

pub fn localization_check(branch: &Branch, cone: &ConeParams) -> LocalizationReport {
    let side = Side::for_which(branch.seed.which);
    let mut dists: Vec<(f64, bool)> = branch
        .points
        .iter()
        .map(|pt| {
            let d = (pt.lambda - branch.seed_lambda).hypot(pt.l2);
            let ok = in_cone(pt.alpha, pt.l2, cone.eta, side) && side.sign() * pt.alpha > 0.0;
            (d, ok)
        })
        .collect();
    dists.sort_by(|a, b| a.0.total_cmp(&b.0));
    let first_bad = dists.iter().find(|(_, ok)| !ok).map(|(d, _)| *d);
    LocalizationReport {
        rho0: first_bad.unwrap_or_else(|| dists.last().map_or(0.0, |d| d.0)),
        violation_found: first_bad.is_some(),
        violations_within_rho: dists.iter().filter(|(d, ok)| *d < cone.rho && !ok).count(),
        checked: dists.len(),
    }
}

fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

/// Slope of `log |lambda - lambda_seed|` against `log |alpha|` over points
/// with `|alpha| <= alpha_max`. Needs at least three such points.
pub fn slope_fit(branch: &Branch, alpha_max: f64) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = branch
        .points
        .iter()
        .filter(|pt| pt.alpha != 0.0 && pt.alpha.abs() <= alpha_max && pt.lambda != branch.seed_lambda)
        .map(|pt| (pt.alpha.abs().ln(), (pt.lambda - branch.seed_lambda).abs().ln()))
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    least_squares(&xs, &ys).map(|(_, b)| b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeedLimit {
    pub lambda: f64,
    pub l2: f64,
}

/// Extrapolate the first `count` points to the trivial solution: `lambda`
/// is fitted as `a + b ||u||_2^q` with `q = p - 2` (or `q = 2` for the
/// transformed variable) and `||u||_2` linearly in `s`.
pub fn seed_limit(branch: &Branch, count: usize) -> Option<SeedLimit> {
    let pts = &branch.points[..count.min(branch.points.len())];
    let q = if branch.transformed { 2.0 } else { branch.seed.p - 2.0 };
    let xs: Vec<f64> = pts.iter().map(|pt| pt.l2.powf(q)).collect();
    let ys: Vec<f64> = pts.iter().map(|pt| pt.lambda).collect();
    let (lambda, _) = least_squares(&xs, &ys)?;
    let ss: Vec<f64> = pts.iter().map(|pt| pt.s).collect();
    let ls: Vec<f64> = pts.iter().map(|pt| pt.l2).collect();
    let (l2, _) = least_squares(&ss, &ls)?;
    Some(SeedLimit { lambda, l2 })
}
