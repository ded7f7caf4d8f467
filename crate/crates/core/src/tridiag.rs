//! Tridiagonal matrices in nodal form.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    /// Sub-diagonal, `lower[i]` sits at row `i + 1`, column `i`.
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    /// Super-diagonal, `upper[i]` sits at row `i`, column `i + 1`.
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Self {
        let n = diag.len();
        assert!(n >= 1);
        assert_eq!(lower.len(), n - 1);
        assert_eq!(upper.len(), n - 1);
        Self { lower, diag, upper }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(x.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    /// Adds `shift` to every diagonal entry.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        out.diag.iter_mut().for_each(|d| *d += shift);
        out
    }

    /// Thomas algorithm without pivoting. Intended for symmetric positive
    /// definite or diagonally dominant systems.
    pub fn solve_thomas(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut beta = self.diag[0];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::SingularSystem);
        }
        d[0] = rhs[0] / beta;
        for i in 1..n {
            c[i - 1] = self.upper[i - 1] / beta;
            beta = self.diag[i] - self.lower[i - 1] * c[i - 1];
            if beta == 0.0 || !beta.is_finite() {
                return Err(Error::SingularSystem);
            }
            d[i] = (rhs[i] - self.lower[i - 1] * d[i - 1]) / beta;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// Gaussian elimination with partial pivoting (the LAPACK `gtsv`
    /// scheme). Safe for indefinite and nearly singular shifts.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        if n == 1 {
            if self.diag[0] == 0.0 {
                return Err(Error::SingularSystem);
            }
            return Ok(vec![rhs[0] / self.diag[0]]);
        }
        let mut dl = self.lower.clone();
        let mut d = self.diag.clone();
        let mut du = self.upper.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut b = rhs.to_vec();

        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    return Err(Error::SingularSystem);
                }
                let fact = dl[i] / d[i];
                d[i + 1] -= fact * du[i];
                b[i + 1] -= fact * b[i];
                dl[i] = 0.0;
            } else {
                // swap rows i and i + 1
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                let temp = d[i + 1];
                d[i + 1] = du[i] - fact * temp;
                if i < n - 2 {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du2[i];
                }
                du[i] = temp;
                let tb = b[i];
                b[i] = b[i + 1];
                b[i + 1] = tb - fact * b[i + 1];
            }
        }
        if d[n - 1] == 0.0 {
            return Err(Error::SingularSystem);
        }

        b[n - 1] /= d[n - 1];
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem);
        }
        Ok(b)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.len();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.upper[i];
                m[(i + 1, i)] = self.lower[i];
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Tridiagonal {
        Tridiagonal::new(vec![1.0, -2.0, 0.5], vec![0.1, 3.0, -1.0, 2.0], vec![4.0, 1.0, 1.5])
    }

    #[test]
    fn pivoted_solve_inverts_matvec() {
        let t = sample();
        let x = vec![1.0, -2.0, 0.25, 3.0];
        let b = t.matvec(&x);
        let y = t.solve(&b).unwrap();
        for (a, e) in y.iter().zip(&x) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn pivoting_handles_zero_leading_pivot() {
        let t = Tridiagonal::new(vec![1.0], vec![0.0, 1.0], vec![1.0]);
        let y = t.solve(&[2.0, 3.0]).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-14 && (y[1] - 2.0).abs() < 1e-14);
        assert!(t.solve_thomas(&[2.0, 3.0]).is_err());
    }

    #[test]
    fn thomas_matches_pivoted_on_spd() {
        let t = Tridiagonal::new(vec![-1.0; 4], vec![2.5; 5], vec![-1.0; 4]);
        let b = vec![1.0, 0.0, -1.0, 2.0, 0.5];
        let a = t.solve_thomas(&b).unwrap();
        let c = t.solve(&b).unwrap();
        for (x, y) in a.iter().zip(&c) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_is_reported() {
        let t = Tridiagonal::new(vec![1.0], vec![1.0, 1.0], vec![1.0]);
        assert!(matches!(t.solve(&[1.0, 1.0]), Err(Error::SingularSystem)));
    }
}
