//! Uniform P1 discretization of a Dirichlet interval `(0, L)`.
//!
//! Operator outputs ("dual" vectors) are nodal load vectors divided by the
//! spacing `h`, so [`inner_l2`] against a primal field realizes the duality
//! pairing. Zeroth-order terms use the trapezoid rule, which with zero
//! boundary values reduces to `h * sum(u_i w_i)`.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tridiag::Tridiagonal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    length: f64,
    n_interior: usize,
    h: f64,
}

impl Grid {
    pub const DEFAULT_INTERIOR: usize = 199;

    pub fn new(length: f64, n_interior: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if n_interior < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 interior nodes, got {n_interior}"
            )));
        }
        Ok(Self {
            length,
            n_interior,
            h: length / (n_interior + 1) as f64,
        })
    }

    /// `(0, pi)` with 199 interior nodes.
    pub fn standard() -> Self {
        Self::new(std::f64::consts::PI, Self::DEFAULT_INTERIOR).expect("valid default grid")
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Coordinate of interior node `i` (0-based).
    pub fn node(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_interior).map(|i| self.node(i))
    }

    /// Same grid with half the spacing.
    pub fn refined(&self) -> Self {
        Self::new(self.length, 2 * self.n_interior + 1).expect("refinement of a valid grid")
    }

    /// Nodal matrix of `-Delta_h`.
    pub fn laplacian_matrix(&self) -> Tridiagonal {
        let n = self.n_interior;
        let inv_h2 = 1.0 / (self.h * self.h);
        Tridiagonal::new(vec![-inv_h2; n - 1], vec![2.0 * inv_h2; n], vec![-inv_h2; n - 1])
    }

    fn same_as(&self, other: &Grid) -> bool {
        self.n_interior == other.n_interior && self.length == other.length
    }
}

/// Nodal values of a function vanishing on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_interior {
            return Err(Error::InvalidGrid(format!(
                "expected {} nodal values, got {}",
                grid.n_interior,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("field values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_interior);
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_interior],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.nodes().map(f).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &Field, b: f64) -> Field {
        debug_assert!(self.grid.same_as(&other.grid));
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.lin_comb(1.0, other, -1.0)
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Field) {
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += a * y;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Elementwise-constant gradients on the `n + 1` elements, boundary
    /// values included.
    pub fn gradients(&self) -> Vec<f64> {
        let n = self.values.len();
        let h = self.grid.h;
        (0..=n)
            .map(|j| {
                let left = if j == 0 { 0.0 } else { self.values[j - 1] };
                let right = if j == n { 0.0 } else { self.values[j] };
                (right - left) / h
            })
            .collect()
    }

    pub fn l2_norm(&self) -> f64 {
        inner_l2_unchecked(self, self).sqrt()
    }

    pub fn h10_norm(&self) -> f64 {
        let h = self.grid.h;
        (h * self.gradients().iter().map(|g| g * g).sum::<f64>()).sqrt()
    }

    pub fn w1p_norm(&self, p: f64) -> f64 {
        let h = self.grid.h;
        (h * self.gradients().iter().map(|g| g.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
    }

    /// CSV with header `x,value`; boundary rows carry value 0.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        let push = |out: &mut String, x: f64, v: f64| {
            writeln!(out, "{},{}", crate::io::fmt_num(x), crate::io::fmt_num(v)).unwrap();
        };
        push(&mut out, 0.0, 0.0);
        for (x, &v) in self.grid.nodes().zip(&self.values) {
            push(&mut out, x, v);
        }
        push(&mut out, self.grid.length, 0.0);
        out
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// Parses the format produced by [`Field::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("x,value") {
            return Err(Error::InvalidGrid("missing `x,value` header".into()));
        }
        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (x, v) = line
                .split_once(',')
                .ok_or_else(|| Error::InvalidGrid(format!("malformed row `{line}`")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidGrid(format!("bad number `{s}`: {e}")))
            };
            rows.push((parse(x)?, parse(v)?));
        }
        if rows.len() < 5 {
            return Err(Error::InvalidGrid("too few rows".into()));
        }
        let length = rows.last().unwrap().0;
        let grid = Grid::new(length, rows.len() - 2)?;
        Field::new(grid, rows[1..rows.len() - 1].iter().map(|r| r.1).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub l2: f64,
    pub h10: f64,
    pub w1p: f64,
}

/// Nodewise `(u+, u-)` with `u = u+ - u-`.
pub fn pos_neg_parts(u: &Field) -> (Field, Field) {
    (u.map(|v| v.max(0.0)), u.map(|v| (-v).max(0.0)))
}

pub fn negative_part(u: &Field) -> Field {
    u.map(|v| (-v).max(0.0))
}

/// Dual representation of `-Delta_h u`.
pub fn apply_laplacian(u: &Field) -> Field {
    let n = u.values.len();
    let inv_h2 = 1.0 / (u.grid.h * u.grid.h);
    let v = &u.values;
    let values = (0..n)
        .map(|i| {
            let left = if i == 0 { 0.0 } else { v[i - 1] };
            let right = if i + 1 == n { 0.0 } else { v[i + 1] };
            (2.0 * v[i] - left - right) * inv_h2
        })
        .collect();
    Field::from_vec_unchecked(u.grid, values)
}

/// `|g|^(p-2) g`, extended by 0 at `g = 0`.
#[inline]
pub fn flux(g: f64, p: f64) -> f64 {
    if g == 0.0 {
        0.0
    } else {
        g.abs().powf(p - 1.0).copysign(g)
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidExponent {
            p,
            reason: "p must exceed 1",
        })
    }
}

/// Dual representation of `-Delta_{p,h} u`.
pub fn apply_p_laplacian(u: &Field, p: f64) -> Result<Field> {
    check_exponent(p)?;
    Ok(p_laplacian_unchecked(u, p))
}

pub(crate) fn p_laplacian_unchecked(u: &Field, p: f64) -> Field {
    let h = u.grid.h;
    let fluxes: Vec<f64> = u.gradients().into_iter().map(|g| flux(g, p)).collect();
    let values = (0..u.values.len()).map(|i| (fluxes[i] - fluxes[i + 1]) / h).collect();
    Field::from_vec_unchecked(u.grid, values)
}

pub fn inner_l2(u: &Field, w: &Field) -> Result<f64> {
    if !u.grid.same_as(&w.grid) {
        return Err(Error::GridMismatch);
    }
    Ok(inner_l2_unchecked(u, w))
}

pub(crate) fn inner_l2_unchecked(u: &Field, w: &Field) -> f64 {
    u.grid.h * u.values.iter().zip(&w.values).map(|(a, b)| a * b).sum::<f64>()
}

pub fn norms(u: &Field, p: f64) -> Result<NormReport> {
    check_exponent(p)?;
    Ok(NormReport {
        l2: u.l2_norm(),
        h10: u.h10_norm(),
        w1p: u.w1p_norm(p),
    })
}

/// `(-Delta_h)^{-1} f` for a dual vector `f`.
pub fn solve_laplacian(f: &Field) -> Field {
    let x = f
        .grid
        .laplacian_matrix()
        .solve_thomas(&f.values)
        .expect("Dirichlet Laplacian is positive definite");
    Field::from_vec_unchecked(f.grid, x)
}

/// Norm of a dual vector in `W^{-1,2}`: `sup <r, phi> / ||phi||_{1,2}`
/// over the discrete test space.
pub fn dual_norm(r: &Field) -> f64 {
    let z = solve_laplacian(r);
    inner_l2_unchecked(r, &z).max(0.0).sqrt()
}
