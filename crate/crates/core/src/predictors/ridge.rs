//! Ridge regression with an unpenalized intercept, solved in closed form.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::RidgeConfig;
use crate::error::Result;
use crate::linalg::{gram, gramv, Cholesky};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub alpha: f64,
    pub n_features: usize,
}

/// Normal-equation matrix of the augmented design [X | 1] with the penalty
/// on the feature block only.
fn normal_system(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    alpha: f64,
) -> (Array2<f64>, Array1<f64>) {
    let (n, p) = x.dim();
    let mut aug = Array2::<f64>::ones((n, p + 1));
    for j in 0..n {
        for g in 0..p {
            aug[[j, g]] = x[[j, g]];
        }
    }
    let mut lhs = gram(aug.view());
    for g in 0..p {
        lhs[[g, g]] += alpha;
    }
    let rhs = gramv(aug.view(), y);
    (lhs, rhs)
}

impl RidgeModel {
    pub fn train(x: ArrayView2<f64>, y: &[f64], config: &RidgeConfig) -> Result<RidgeModel> {
        let y = ArrayView1::from(y);
        let (lhs, rhs) = normal_system(x, y, config.alpha);
        let solution = Cholesky::new(lhs.view())?.solve(rhs.view());
        let p = x.ncols();
        Ok(RidgeModel {
            weights: solution.iter().take(p).copied().collect(),
            intercept: solution[p],
            alpha: config.alpha,
            n_features: p,
        })
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|j| {
                let row = x.row(j);
                self.intercept
                    + self
                        .weights
                        .iter()
                        .zip(row.iter())
                        .map(|(w, v)| w * v)
                        .sum::<f64>()
            })
            .collect()
    }

    /// Relative residual of the solved normal equations,
    /// ‖(AᵀA + D)w − Aᵀy‖ / ‖Aᵀy‖ with A = [X | 1] and D the penalty.
    pub fn normal_equation_residual(&self, x: ArrayView2<f64>, y: &[f64]) -> f64 {
        let (lhs, rhs) = normal_system(x, ArrayView1::from(y), self.alpha);
        let mut w: Vec<f64> = self.weights.clone();
        w.push(self.intercept);
        let mut residual = 0.0f64;
        let mut rhs_norm = 0.0f64;
        for i in 0..lhs.nrows() {
            let lhs_i: f64 = (0..lhs.ncols()).map(|j| lhs[[i, j]] * w[j]).sum();
            residual += (lhs_i - rhs[i]) * (lhs_i - rhs[i]);
            rhs_norm += rhs[i] * rhs[i];
        }
        (residual / rhs_norm).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn recovers_exact_linear_fit_as_alpha_vanishes() {
        let x = array![[1.0], [2.0], [3.0], [4.0]];
        let y = [3.0, 6.0, 9.0, 12.0];
        let model = RidgeModel::train(x.view(), &y, &RidgeConfig { alpha: 1e-10 }).unwrap();
        assert!((model.weights[0] - 3.0).abs() < 1e-6, "{}", model.weights[0]);
        assert!(model.intercept.abs() < 1e-6);
    }

    #[test]
    fn intercept_is_not_penalized() {
        // constant shift must be absorbed entirely by the intercept
        let x = array![[-1.0], [0.0], [1.0], [2.0]];
        let y = [99.0, 100.0, 101.0, 102.0];
        let model = RidgeModel::train(x.view(), &y, &RidgeConfig { alpha: 1e-10 }).unwrap();
        assert!((model.intercept - 100.0).abs() < 1e-6);
    }

    #[test]
    fn normal_equation_residual_is_small() {
        let x = array![
            [0.3, 1.2],
            [-0.7, 0.4],
            [1.5, -0.9],
            [2.2, 0.1],
            [-1.1, -1.7]
        ];
        let y = [1.0, -0.5, 2.0, 3.1, -2.4];
        let model = RidgeModel::train(x.view(), &y, &RidgeConfig { alpha: 1.0 }).unwrap();
        assert!(model.normal_equation_residual(x.view(), &y) < 1e-8);
    }
}
