//! Multinomial logistic regression with an L2 penalty on the weights
//! (intercepts unpenalized), minimized by L-BFGS with backtracking line
//! search to a gradient-norm tolerance.
//!
//! Class 0 is the reference: the model holds one logit row per non-reference
//! class, so the binary case reduces to a single sigmoid.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::LogisticConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticModel {
    /// (K−1) × (p+1); the last column of each row is the intercept.
    weights: Array2<f64>,
    pub n_classes: usize,
    pub n_features: usize,
}

/// Per-sample-mean negative log-likelihood plus L2 penalty, with its
/// gradient at `theta`.
///
/// The mean scaling keeps the gradient-norm tolerance meaningful for any
/// sample count; the penalty is `l2/(2n)·‖w‖²` so the minimizer matches the
/// sum-scaled objective with penalty `l2/2·‖w‖²`.
///
/// `theta` is the flattened (K−1)×(p+1) parameter block, row-major, intercept
/// last in each row. Exposed so the analytic gradient can be compared against
/// finite differences.
pub fn objective_and_gradient(
    theta: &[f64],
    x: ArrayView2<f64>,
    labels: &[usize],
    n_classes: usize,
    l2: f64,
) -> (f64, Vec<f64>) {
    let (n, p) = x.dim();
    let rows = n_classes - 1;
    let width = p + 1;
    debug_assert_eq!(theta.len(), rows * width);

    let mut nll = 0.0;
    let mut grad = vec![0.0f64; rows * width];
    let mut logits = vec![0.0f64; rows];
    for j in 0..n {
        let xr = x.row(j);
        for c in 0..rows {
            let w = &theta[c * width..(c + 1) * width];
            let mut u = w[p];
            for g in 0..p {
                u += w[g] * xr[g];
            }
            logits[c] = u;
        }
        // log-sum-exp over the implicit zero logit of the reference class
        let max_u = logits.iter().fold(0.0f64, |a, &b| a.max(b));
        let mut denom = (-max_u).exp();
        for &u in logits.iter() {
            denom += (u - max_u).exp();
        }
        let log_denom = max_u + denom.ln();
        let y = labels[j];
        let log_p = if y == 0 { 0.0 } else { logits[y - 1] } - log_denom;
        nll -= log_p;
        for c in 0..rows {
            let prob = (logits[c] - log_denom).exp();
            let indicator = if y == c + 1 { 1.0 } else { 0.0 };
            let coeff = prob - indicator;
            let gw = &mut grad[c * width..(c + 1) * width];
            for g in 0..p {
                gw[g] += coeff * xr[g];
            }
            gw[p] += coeff;
        }
    }
    for c in 0..rows {
        for g in 0..p {
            let w = theta[c * width + g];
            nll += 0.5 * l2 * w * w;
            grad[c * width + g] += l2 * w;
        }
    }
    let scale = 1.0 / n as f64;
    for g in grad.iter_mut() {
        *g *= scale;
    }
    (nll * scale, grad)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// L-BFGS with Armijo backtracking; falls back to steepest descent when a
/// direction is not a descent direction.
fn minimize(
    mut theta: Vec<f64>,
    x: ArrayView2<f64>,
    labels: &[usize],
    n_classes: usize,
    config: &LogisticConfig,
) -> Result<Vec<f64>> {
    const MEMORY: usize = 8;
    let (mut value, mut grad) = objective_and_gradient(&theta, x, labels, n_classes, config.l2);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();

    for _ in 0..config.max_iters {
        if norm(&grad) < config.grad_tol {
            return Ok(theta);
        }
        // two-loop recursion
        let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
        let k = s_hist.len();
        let mut alphas = vec![0.0f64; k];
        for i in (0..k).rev() {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            let a = rho * dot(&s_hist[i], &dir);
            alphas[i] = a;
            for (d, y) in dir.iter_mut().zip(&y_hist[i]) {
                *d -= a * y;
            }
        }
        if k > 0 {
            let scale = dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1]);
            for d in dir.iter_mut() {
                *d *= scale;
            }
        }
        for i in 0..k {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            let b = rho * dot(&y_hist[i], &dir);
            for (d, s) in dir.iter_mut().zip(&s_hist[i]) {
                *d += (alphas[i] - b) * s;
            }
        }
        let mut slope = dot(&grad, &dir);
        if slope >= 0.0 {
            dir = grad.iter().map(|g| -g).collect();
            slope = -dot(&grad, &grad);
            s_hist.clear();
            y_hist.clear();
        }

        // Armijo backtracking
        let mut step = 1.0;
        let mut advanced = false;
        for _ in 0..60 {
            let trial: Vec<f64> = theta
                .iter()
                .zip(&dir)
                .map(|(t, d)| t + step * d)
                .collect();
            let (trial_value, trial_grad) =
                objective_and_gradient(&trial, x, labels, n_classes, config.l2);
            if trial_value <= value + 1e-4 * step * slope {
                let s: Vec<f64> = trial.iter().zip(&theta).map(|(a, b)| a - b).collect();
                let yv: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
                if dot(&s, &yv) > 1e-12 {
                    if s_hist.len() == MEMORY {
                        s_hist.remove(0);
                        y_hist.remove(0);
                    }
                    s_hist.push(s);
                    y_hist.push(yv);
                }
                theta = trial;
                value = trial_value;
                grad = trial_grad;
                advanced = true;
                break;
            }
            step *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    if norm(&grad) < config.grad_tol {
        Ok(theta)
    } else {
        Err(Error::Numerical(format!(
            "logistic regression did not reach gradient tolerance {:e} (gradient norm {:e})",
            config.grad_tol,
            norm(&grad)
        )))
    }
}

impl LogisticModel {
    pub fn train(
        x: ArrayView2<f64>,
        labels: &[usize],
        n_classes: usize,
        config: &LogisticConfig,
    ) -> Result<LogisticModel> {
        let (n, p) = x.dim();
        if labels.len() != n {
            return Err(Error::Validation("label count mismatch".into()));
        }
        let theta = vec![0.0f64; (n_classes - 1) * (p + 1)];
        let theta = minimize(theta, x, labels, n_classes, config)?;
        Ok(LogisticModel {
            weights: Array2::from_shape_vec((n_classes - 1, p + 1), theta)
                .expect("row-major parameter block"),
            n_classes,
            n_features: p,
        })
    }

    /// Per-class probabilities via softmax over the reference-class logits.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let (m, p) = x.dim();
        let rows = self.n_classes - 1;
        let mut out = Array2::<f64>::zeros((m, self.n_classes));
        let mut logits = vec![0.0f64; rows];
        for j in 0..m {
            let xr = x.row(j);
            for c in 0..rows {
                let mut u = self.weights[[c, p]];
                for g in 0..p {
                    u += self.weights[[c, g]] * xr[g];
                }
                logits[c] = u;
            }
            let max_u = logits.iter().fold(0.0f64, |a, &b| a.max(b));
            let mut denom = (-max_u).exp();
            for &u in logits.iter() {
                denom += (u - max_u).exp();
            }
            out[[j, 0]] = (-max_u).exp() / denom;
            for c in 0..rows {
                out[[j, c + 1]] = (logits[c] - max_u).exp() / denom;
            }
        }
        out
    }
}
