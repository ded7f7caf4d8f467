//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use fucik_core::monotone::{ball_coercivity, default_ball_radius};
use fucik_core::quasilinear::back_transform_scale;
use fucik_core::sampling::{random_on_sphere, random_sine_series};
use fucik_core::spectrum::eigenpair_iterative;
use fucik_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn grid() -> Grid {
    Grid::new(PI, 199).unwrap()
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn linear_spectrum() -> Outcome {
    let g = grid();
    let fine = g.refined();
    let mut details = Vec::new();
    for k in 1..=3 {
        let exact = (k * k) as f64;
        let coarse = eigenpair_iterative(&g, k).map_err(|e| e.to_string())?.lambda;
        let refined = eigenpair_iterative(&fine, k).map_err(|e| e.to_string())?.lambda;
        let rel = (coarse - exact).abs() / exact;
        let factor = (coarse - exact).abs() / (refined - exact).abs();
        check(rel <= 1e-3, format!("k = {k}: relative error {rel:.3e}"))?;
        check(
            (3.5..=4.5).contains(&factor),
            format!("k = {k}: rate factor {factor:.3}"),
        )?;
        details.push(format!("k={k} rel={rel:.2e} factor={factor:.3}"));
    }
    Ok(details.join(", "))
}

fn split_degeneration() -> Outcome {
    let g = grid();
    let mut worst_l: f64 = 0.0;
    let mut worst_v: f64 = 0.0;
    for k in 1..=4 {
        let sp = split_eigenvalues(&g, k, 0.0).map_err(|e| e.to_string())?;
        let ek = eigenpair(&g, k).unwrap();
        worst_l = worst_l
            .max((sp.lambda1 - ek.lambda).abs())
            .max((sp.lambda2 - ek.lambda).abs());
        worst_v = worst_v.max(sp.v1.sub(&ek.e).l2_norm()).max(sp.v2.add(&ek.e).l2_norm());
    }
    check(worst_l <= 1e-8, format!("eigenvalue deviation {worst_l:.3e}"))?;
    check(worst_v <= 1e-6, format!("eigenfunction deviation {worst_v:.3e}"))?;
    Ok(format!(
        "max |lambda - lambda_k| = {worst_l:.2e}, max eigenfunction error = {worst_v:.2e}"
    ))
}

fn split_window() -> Outcome {
    let g = grid();
    let l2 = discrete_eigenvalue(&g, 2);
    let l3 = discrete_eigenvalue(&g, 3);
    for gamma in [0.5, 1.0, 2.0] {
        let sp = split_eigenvalues(&g, 2, gamma).map_err(|e| e.to_string())?;
        for lam in [sp.lambda1, sp.lambda2] {
            check(
                (l2..=l3).contains(&lam),
                format!("gamma = {gamma}: {lam} outside [{l2}, {l3}]"),
            )?;
        }
    }
    let oracle = bisect(1.0 + 1e-12, 100.0, |l| 1.0 / l.sqrt() + 1.0 / (l - 1.0).sqrt() - 1.0);
    let sp = split_eigenvalues(&g, 2, 1.0).map_err(|e| e.to_string())?;
    let worst = [sp.shoot1, sp.shoot2, sp.lambda1, sp.lambda2]
        .iter()
        .map(|l| (l - oracle).abs())
        .fold(0.0, f64::max);
    check(
        worst <= 5e-3,
        format!("shooting deviates from oracle {oracle} by {worst:.3e}"),
    )?;
    Ok(format!(
        "oracle = {oracle:.6}, shooting = {:.6}, max deviation {worst:.2e}",
        sp.shoot1
    ))
}

/// Minimum over t in [-1, 1] of the scalar ratio
/// `(1 - t)(1 - |t|^{p-2} t) / |1 - t|^p`, which by homogeneity and symmetry
/// is the best constant in 1D.
fn ratio_floor(p: f64) -> f64 {
    let ratio = |t: f64| (1.0 - t) * (1.0 - t.abs().powf(p - 2.0) * t) / (1.0 - t).abs().powf(p);
    let mut best = f64::INFINITY;
    for i in 0..=20_000 {
        let t = -1.0 + 2.0 * i as f64 / 20_000.0;
        if t < 1.0 {
            best = best.min(ratio(t));
        }
    }
    best
}

fn lindqvist() -> Outcome {
    let mut details = Vec::new();
    for p in [2.5, 3.0, 4.0] {
        let rep = check_vector_inequalities(p, 100_000, 42).map_err(|e| e.to_string())?;
        let floor = ratio_floor(p);
        check(
            (floor - 2f64.powf(2.0 - p)).abs() < 1e-9,
            format!("p = {p}: oracle floor {floor}"),
        )?;
        check(rep.violations == 0, format!("p = {p}: {} violations", rep.violations))?;
        check(
            rep.c1_emp >= floor * (1.0 - 1e-12),
            format!("p = {p}: c1 = {} < {floor}", rep.c1_emp),
        )?;
        details.push(format!("p={p} c1={:.6} c2={:.4}", rep.c1_emp, rep.c2_emp));
    }
    Ok(details.join(", "))
}

fn monotone_round_trip() -> Outcome {
    let g = grid();
    let params = ProblemParams::new(3.0, 0.5, 0.0).unwrap();
    let config = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let u_star = random_sine_series(&g, &mut rng, 8, 3.0);
    let f = residual_original(&u_star, &params).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let init = random_sine_series(&g, &mut rng, 8, 10.0);
        let rep = solve_monotone_from(&f, &params, &init, &config).map_err(|e| e.to_string())?;
        worst = worst.max(rep.solution.sub(&u_star).h10_norm());
    }
    check(worst <= 1e-7, format!("recovery error {worst:.3e}"))?;
    let c1 = check_vector_inequalities(3.0, 100_000, 7).unwrap().c1_emp;
    let sweep = monotonicity_sweep(&g, &params, c1, 10_000, 11).map_err(|e| e.to_string())?;
    check(
        sweep.violations == 0,
        format!("{} monotonicity violations", sweep.violations),
    )?;
    Ok(format!(
        "max ||u - u*||_1,2 = {worst:.2e}, 1e4 pairs, min ratio {:.3}",
        sweep.min_ratio
    ))
}

fn ball_invertibility() -> Outcome {
    let g = grid();
    let params = ProblemParams::new(1.5, 0.5, 0.0).unwrap();
    let r0 = default_ball_radius(&g, &params, 200, 42).map_err(|e| e.to_string())?;
    let bounds: Vec<f64> = (0..4)
        .map(|j| {
            ball_coercivity(&g, &params, r0 / 2f64.powi(j), 200, 42)
                .unwrap()
                .lower_bound
        })
        .collect();
    check(
        bounds.windows(2).all(|w| w[1] > w[0]),
        format!("bounds not increasing: {bounds:?}"),
    )?;
    check(
        bounds.iter().all(|&b| b > 0.0 && b <= 1.0),
        format!("bounds outside (0, 1]: {bounds:?}"),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let v_star = random_on_sphere(&g, &mut rng, 0.45 * r0);
        let f = residual_transformed(&v_star, &params).unwrap();
        let rep = solve_monotone_ball(&f, &params, r0, &SolverConfig::default()).map_err(|e| e.to_string())?;
        worst = worst.max(rep.solution.sub(&v_star).h10_norm());
    }
    check(worst <= 1e-7, format!("recovery error {worst:.3e}"))?;
    Ok(format!("r0 = {r0}, bounds = {bounds:.6?}, recovery error {worst:.2e}"))
}

fn branch_check(which: usize, config: &SolverConfig) -> std::result::Result<(Branch, String), String> {
    let g = grid();
    let seed = BranchSeed {
        k: 2,
        which,
        gamma: 0.5,
        p: 3.0,
    };
    let b = trace_branch(&g, seed, config).map_err(|e| e.to_string())?;
    let side = Side::for_which(which);
    let sign = if which == 1 { 1.0 } else { -1.0 };
    check(
        b.points.len() >= 50,
        format!("which {which}: only {} points", b.points.len()),
    )?;
    let lim = seed_limit(&b, 5).ok_or("seed extrapolation failed")?;
    check(
        (lim.lambda - b.seed_lambda).abs() <= 1e-2,
        format!("which {which}: extrapolated {}", lim.lambda),
    )?;
    for pt in b.points.iter().filter(|pt| pt.l2 < 0.1) {
        let cone = ConeParams { rho: 1.0, eta: b.eta };
        check(
            cone_test(&pt.u, 2, &cone, side).unwrap() && sign * pt.alpha > 0.0,
            format!("which {which}: early point at lambda {} leaves the cone", pt.lambda),
        )?;
    }
    let slope = slope_fit(&b, 1e-2).ok_or("too few points for the slope fit")?;
    check((slope - 1.0).abs() <= 0.2, format!("which {which}: slope {slope:.3}"))?;
    let msg = format!(
        "which={which}: {} points, {:?}, lambda(0) = {:.5} vs {:.5}, slope {slope:.3}",
        b.points.len(),
        b.termination,
        lim.lambda,
        b.seed_lambda
    );
    Ok((b, msg))
}

fn branch_config() -> SolverConfig {
    SolverConfig {
        alpha0: 1e-4,
        ..SolverConfig::default()
    }
}

fn bifurcation_from_trivial() -> Outcome {
    let config = branch_config();
    let (_, a) = branch_check(1, &config)?;
    let (_, b) = branch_check(2, &config)?;
    Ok(format!("{a}; {b}"))
}

fn bifurcation_from_infinity() -> Outcome {
    let g = grid();
    // alpha0 = 1e-2 keeps the back-transform factor near 3e8 (see README)
    let config = SolverConfig {
        alpha0: 1e-2,
        ..SolverConfig::default()
    };
    let seed = BranchSeed {
        k: 2,
        which: 1,
        gamma: 0.5,
        p: 1.5,
    };
    let b = trace_branch(&g, seed, &config).map_err(|e| e.to_string())?;
    let large: Vec<&BranchPoint> = b
        .points
        .iter()
        .filter(|pt| pt.h12_original >= 1e3 && (pt.lambda - b.seed_lambda).abs() <= 0.1)
        .collect();
    check(!large.is_empty(), "no point with ||u||_1,2 >= 1e3 near the seed")?;
    let worst = b.points.iter().map(|pt| pt.residual_original).fold(0.0, f64::max);
    check(worst <= 1e-5, format!("back-transformed residual {worst:.3e}"))?;
    let top = large.iter().map(|pt| pt.h12_original).fold(0.0, f64::max);
    Ok(format!(
        "{} points near the seed with ||u||_1,2 >= 1e3 (max {top:.2e}), max original residual {worst:.2e}",
        large.len()
    ))
}

fn trivial_only() -> Outcome {
    let g = grid();
    let lambda1 = discrete_eigenvalue(&g, 1);
    let params = ProblemParams::new(3.0, 0.0, 0.5 * lambda1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let amp = 10f64.powf(rand::Rng::gen_range(&mut rng, -2.0..2.0));
        let init = random_sine_series(&g, &mut rng, 8, amp);
        let rep = newton_original(&init, &params, &SolverConfig::default()).map_err(|e| e.to_string())?;
        worst = worst.max(rep.solution.l2_norm());
    }
    check(worst <= 1e-8, format!("largest limit norm {worst:.3e}"))?;
    Ok(format!("20 starts, largest ||u||_2 = {worst:.2e}"))
}

fn equivalences() -> Outcome {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst_weak: f64 = 0.0;
    for _ in 0..20 {
        let u = random_sine_series(&g, &mut rng, 8, 5.0);
        let gamma = rand::Rng::gen_range(&mut rng, 0.0..3.0);
        let lambda = rand::Rng::gen_range(&mut rng, -5.0..20.0);
        let params = ProblemParams::new(3.0, gamma, lambda).unwrap();
        let strong = dual_norm(&residual_original(&u, &params).unwrap());
        let weak = residual_weak(&u, lambda, lambda - gamma, 3.0).unwrap();
        worst_weak = worst_weak.max((strong - weak).abs() / strong);
    }
    check(worst_weak <= 1e-10, format!("weak/strong mismatch {worst_weak:.3e}"))?;

    let config = branch_config();
    let seed = BranchSeed {
        k: 2,
        which: 1,
        gamma: 0.5,
        p: 3.0,
    };
    let b = trace_branch(&grid(), seed, &config).map_err(|e| e.to_string())?;
    let params = ProblemParams::new(3.0, 0.5, b.seed_lambda).unwrap();
    let mut worst_ls: f64 = 0.0;
    for pt in &b.points {
        let d = decompose(&pt.u, 2).unwrap();
        let (s, v) = ls_residual(d.alpha, pt.lambda, &d.v, &params, 2, &config).map_err(|e| e.to_string())?;
        worst_ls = worst_ls.max(s.abs()).max(v.l2_norm());
    }
    check(
        worst_ls <= 10.0 * config.corrector_tol,
        format!("LS defect {worst_ls:.3e}"),
    )?;

    let mut worst_rt: f64 = 0.0;
    for _ in 0..20 {
        let amp = 10f64.powf(rand::Rng::gen_range(&mut rng, -3.0..3.0));
        let u = random_sine_series(&g, &mut rng, 8, amp);
        let v = to_infinity_variable(&u, 1.5).unwrap();
        let back = from_infinity_variable(&v.v, 1.5).unwrap();
        worst_rt = worst_rt.max(back.sub(&u).l2_norm() / u.l2_norm());
        let _ = back_transform_scale(v.v.h10_norm(), 1.5);
    }
    check(worst_rt <= 1e-10, format!("round trip error {worst_rt:.3e}"))?;
    Ok(format!(
        "weak/strong {worst_weak:.1e}, LS defect {worst_ls:.1e} over {} points, round trip {worst_rt:.1e}",
        b.points.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("linear spectrum oracle", linear_spectrum),
        ("split eigenvalues at gamma = 0", split_degeneration),
        ("split eigenvalue window and shooting oracle", split_window),
        ("vector inequalities", lindqvist),
        ("monotone solver round trip", monotone_round_trip),
        ("ball invertibility", ball_invertibility),
        ("bifurcation from the trivial solution", bifurcation_from_trivial),
        ("bifurcation from infinity", bifurcation_from_infinity),
        ("trivial-only region", trivial_only),
        ("formulation equivalences", equivalences),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let label = format!("criterion {:>2}", i + 1);
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| name.contains(f.as_str()) || label.contains(f.as_str()))
        {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("{label} PASS  {name} ({secs:.1}s): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("{label} FAIL  {name} ({secs:.1}s): {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
