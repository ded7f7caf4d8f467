use std::f64::consts::PI;

use fucik_core::sampling::random_sine_series;
use fucik_core::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid() -> Grid {
    Grid::new(PI, 99).unwrap()
}

/// Sobolev gradient descent with a fixed step on
/// `||u||_{1,p}^p / p + ||u||_{1,2}^2 / 2 + gamma ||u^-||^2 / 2 - <f, u>`.
fn gradient_descent(f: &Field, p: f64, gamma: f64, init: Field) -> Field {
    let params = ProblemParams::new(p, gamma, 0.0).unwrap();
    let mut u = init;
    for _ in 0..200_000 {
        let mut g = residual_original(&u, &params).unwrap();
        g.axpy(-1.0, f);
        if dual_norm(&g) < 1e-11 {
            break;
        }
        let step = solve_laplacian(&g);
        u.axpy(-0.2, &step);
    }
    u
}

#[test]
fn unique_solution_from_many_starts() {
    let g = grid();
    let f = Field::from_fn(g, |x| (2.0 * x).sin());
    let params = ProblemParams::new(3.0, 0.5, 0.0).unwrap();
    let config = SolverConfig::default();
    let reference = solve_monotone(&f, &params, &config).unwrap();
    assert!(reference.final_residual <= config.abs_tol);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..5 {
        let init = random_sine_series(&g, &mut rng, 8, 5.0);
        let rep = solve_monotone_from(&f, &params, &init, &config).unwrap();
        assert!(rep.solution.sub(&reference.solution).h10_norm() < 1e-7);
    }
    let oracle = gradient_descent(&f, 3.0, 0.5, Field::zeros(g));
    assert!(oracle.sub(&reference.solution).h10_norm() < 1e-7);
}

#[test]
fn negative_part_matters() {
    // with gamma > 0 the solution differs from the gamma = 0 one on {u < 0}
    let g = grid();
    let f = Field::from_fn(g, |x| (2.0 * x).sin());
    let config = SolverConfig::default();
    let a = solve_monotone(&f, &ProblemParams::new(3.0, 0.0, 0.0).unwrap(), &config).unwrap();
    let b = solve_monotone(&f, &ProblemParams::new(3.0, 2.0, 0.0).unwrap(), &config).unwrap();
    let neg_a = a
        .solution
        .values()
        .iter()
        .filter(|&&x| x < 0.0)
        .map(|x| x.abs())
        .sum::<f64>();
    let neg_b = b
        .solution
        .values()
        .iter()
        .filter(|&&x| x < 0.0)
        .map(|x| x.abs())
        .sum::<f64>();
    assert!(neg_b < neg_a);
}

#[test]
fn coercivity_estimate_is_reported() {
    let g = grid();
    let f = Field::from_fn(g, |x| 20.0 * x.sin());
    let rep = solve_monotone(
        &f,
        &ProblemParams::new(4.0, 0.5, 0.0).unwrap(),
        &SolverConfig::default(),
    )
    .unwrap();
    assert!(rep.coercivity_estimate >= 1.0 - 1e-9);
    assert!(rep.iterations > 0);
}

#[test]
fn bounded_inverse_modulus() {
    let g = Grid::new(PI, 49).unwrap();
    let params = ProblemParams::new(3.0, 0.5, 0.0).unwrap();
    let k = inverse_continuity(&g, &params, 100, 3, &SolverConfig::default()).unwrap();
    assert!(k <= 1.0 + 1e-6, "{k}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn strong_monotonicity(seed in 0u64..10_000, p in 2.2f64..5.0, gamma in 0.0f64..3.0) {
        let g = grid();
        let params = ProblemParams::new(p, gamma, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_sine_series(&g, &mut rng, 8, 3.0);
        let w = random_sine_series(&g, &mut rng, 8, 3.0);
        let du = u.sub(&w);
        let dm = residual_original(&u, &params).unwrap().sub(&residual_original(&w, &params).unwrap());
        let lhs = inner_l2(&dm, &du).unwrap();
        let c1 = 2f64.powf(2.0 - p);
        prop_assert!(lhs >= c1 * du.w1p_norm(p).powf(p) * (1.0 - 1e-10));
        prop_assert!(lhs >= du.h10_norm().powi(2) * (1.0 - 1e-10));
    }

    #[test]
    fn manufactured_round_trip(seed in 0u64..10_000) {
        let g = grid();
        let params = ProblemParams::new(3.0, 0.5, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u_star = random_sine_series(&g, &mut rng, 8, 4.0);
        let f = residual_original(&u_star, &params).unwrap();
        let rep = solve_monotone(&f, &params, &SolverConfig::default()).unwrap();
        prop_assert!(rep.solution.sub(&u_star).h10_norm() <= 1e-7);
    }
}
