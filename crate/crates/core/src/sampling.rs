//! Random smooth fields used by the diagnostics and the tests.

use rand::Rng;

use crate::grid::{Field, Grid};

/// Sine series with `modes` terms and coefficients uniform in `[-1, 1] / j`,
/// scaled by `amplitude`.
pub fn random_sine_series<R: Rng>(grid: &Grid, rng: &mut R, modes: usize, amplitude: f64) -> Field {
    let coeffs: Vec<f64> = (1..=modes).map(|j| rng.gen_range(-1.0..1.0) / j as f64).collect();
    let l = grid.length();
    Field::from_fn(*grid, |x| {
        amplitude
            * coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c * ((j + 1) as f64 * std::f64::consts::PI * x / l).sin())
                .sum::<f64>()
    })
}

/// Random smooth field rescaled to `||u||_{1,2} = radius`.
pub fn random_on_sphere<R: Rng>(grid: &Grid, rng: &mut R, radius: f64) -> Field {
    loop {
        let u = random_sine_series(grid, rng, 8, 1.0);
        let norm = u.h10_norm();
        if norm > 1e-8 {
            return u.scaled(radius / norm);
        }
    }
}

#[cfg(test)]
pub(crate) fn random_smooth_field<R: Rng>(grid: &Grid, rng: &mut R, amplitude: f64) -> Field {
    random_sine_series(grid, rng, 6, amplitude)
}
