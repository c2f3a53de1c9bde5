//! Small dense linear-algebra helpers.
//!
//! The design matrices in this crate are tiny (sites + covariates, rarely more
//! than a few dozen columns), so a plain Cholesky factorization covers every
//! solve without pulling in a LAPACK backend.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// Stores the lower factor L with A = L·Lᵀ.
pub struct Cholesky {
    lower: Array2<f64>,
}

impl Cholesky {
    /// Factor a symmetric positive-definite matrix.
    ///
    /// Fails with a numerical error when a pivot is not strictly positive,
    /// i.e. the matrix is singular or indefinite.
    pub fn new(a: ArrayView2<f64>) -> Result<Cholesky> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Numerical(format!(
                "cholesky requires a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let mut l = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a[[i, j]];
                for k in 0..j {
                    sum -= l[[i, k]] * l[[j, k]];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(Error::Numerical(format!(
                            "matrix is not positive definite (pivot {sum:e} at {i})"
                        )));
                    }
                    l[[i, i]] = sum.sqrt();
                } else {
                    l[[i, j]] = sum / l[[j, j]];
                }
            }
        }
        Ok(Cholesky { lower: l })
    }

    /// Solve A·x = b.
    pub fn solve(&self, b: ArrayView1<f64>) -> Array1<f64> {
        let n = self.lower.nrows();
        debug_assert_eq!(b.len(), n);
        // forward: L·y = b
        let mut y = Array1::<f64>::zeros(n);
        for i in 0..n {
            let mut sum = b[i];
            for k in 0..i {
                sum -= self.lower[[i, k]] * y[k];
            }
            y[i] = sum / self.lower[[i, i]];
        }
        // backward: Lᵀ·x = y
        let mut x = Array1::<f64>::zeros(n);
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in (i + 1)..n {
                sum -= self.lower[[k, i]] * x[k];
            }
            x[i] = sum / self.lower[[i, i]];
        }
        x
    }
}

/// Compute AᵀA for a tall matrix.
pub fn gram(a: ArrayView2<f64>) -> Array2<f64> {
    let (n, d) = a.dim();
    let mut g = Array2::<f64>::zeros((d, d));
    for r in 0..n {
        let row = a.row(r);
        for i in 0..d {
            let v = row[i];
            if v == 0.0 {
                continue;
            }
            for j in i..d {
                g[[i, j]] += v * row[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            g[[i, j]] = g[[j, i]];
        }
    }
    g
}

/// Compute Aᵀy.
pub fn gramv(a: ArrayView2<f64>, y: ArrayView1<f64>) -> Array1<f64> {
    let (n, d) = a.dim();
    let mut out = Array1::<f64>::zeros(d);
    for r in 0..n {
        let w = y[r];
        if w == 0.0 {
            continue;
        }
        let row = a.row(r);
        for j in 0..d {
            out[j] += row[j] * w;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn solves_spd_system() {
        let a = array![[4.0, 2.0], [2.0, 3.0]];
        let chol = Cholesky::new(a.view()).unwrap();
        let x = chol.solve(array![2.0, 1.0].view());
        // exact solution (0.5, 0.0)
        assert!((x[0] - 0.5).abs() < 1e-12);
        assert!(x[1].abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(Cholesky::new(a.view()).is_err());
    }

    #[test]
    fn gram_matches_manual() {
        let a = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let g = gram(a.view());
        assert_eq!(g, array![[35.0, 44.0], [44.0, 56.0]]);
        let v = gramv(a.view(), array![1.0, 1.0, 1.0].view());
        assert_eq!(v, array![9.0, 12.0]);
    }
}
