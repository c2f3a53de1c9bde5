//! Evaluation metrics: MAE, R², age bias, AUC, balanced accuracy, F1.
//!
//! All functions are pure and stateless. Balanced accuracy is reported in
//! percent; everything else on its natural scale.

use crate::error::{Error, Result};

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b || a == 0 {
        return Err(Error::Validation(format!(
            "metric inputs must be equal-length and non-empty, got {a} and {b}"
        )));
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check_lengths(y_true.len(), y_pred.len())?;
    let sum: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p).abs())
        .sum();
    Ok(sum / y_true.len() as f64)
}

/// Coefficient of determination, 1 − SS_res/SS_tot.
pub fn r2(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check_lengths(y_true.len(), y_pred.len())?;
    if y_true.len() < 2 {
        return Err(Error::Validation("r2 requires at least 2 samples".into()));
    }
    let mean: f64 = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Validation("r2 undefined for a constant target".into()));
    }
    let ss_res: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p) * (t - p))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Pearson correlation between the true value and the prediction error
/// (predicted − true).
///
/// Returns 0 when either side has zero variance, so perfect predictions
/// report no bias. A constant predictor yields exactly −1.
pub fn age_bias(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check_lengths(y_true.len(), y_pred.len())?;
    if y_true.len() < 2 {
        return Err(Error::Validation(
            "age bias requires at least 2 samples".into(),
        ));
    }
    let n = y_true.len() as f64;
    let resid: Vec<f64> = y_true.iter().zip(y_pred).map(|(t, p)| p - t).collect();
    let mt = y_true.iter().sum::<f64>() / n;
    let mr = resid.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vt = 0.0;
    let mut vr = 0.0;
    for (t, r) in y_true.iter().zip(&resid) {
        let dt = t - mt;
        let dr = r - mr;
        cov += dt * dr;
        vt += dt * dt;
        vr += dr * dr;
    }
    if vt == 0.0 || vr == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (vt * vr).sqrt())
}

/// Area under the ROC curve via the Mann–Whitney statistic, ties counted ½.
///
/// `y_true` holds 0/1 class indices; `scores` are scores for class 1.
pub fn auc(y_true: &[usize], scores: &[f64]) -> Result<f64> {
    check_lengths(y_true.len(), scores.len())?;
    let n_pos = y_true.iter().filter(|&&c| c == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Validation(
            "auc requires both classes present".into(),
        ));
    }
    // average ranks with tie correction
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0f64; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &ix in &order[i..=j] {
            ranks[ix] = avg_rank;
        }
        i = j + 1;
    }
    let rank_sum_pos: f64 = y_true
        .iter()
        .zip(&ranks)
        .filter(|(&c, _)| c == 1)
        .map(|(_, &r)| r)
        .sum();
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Balanced accuracy in percent: 100 × mean of per-class recalls.
///
/// `y_true`/`y_pred` hold class indices below `n_classes`; every class must
/// occur in `y_true`.
pub fn bacc(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<f64> {
    check_lengths(y_true.len(), y_pred.len())?;
    let mut totals = vec![0usize; n_classes];
    let mut hits = vec![0usize; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::Validation("class index out of range".into()));
        }
        totals[t] += 1;
        if p == t {
            hits[t] += 1;
        }
    }
    if let Some(c) = totals.iter().position(|&t| t == 0) {
        return Err(Error::Validation(format!(
            "class {c} has no true samples; balanced accuracy undefined"
        )));
    }
    let recall_sum: f64 = hits
        .iter()
        .zip(&totals)
        .map(|(&h, &t)| h as f64 / t as f64)
        .sum();
    Ok(100.0 * recall_sum / n_classes as f64)
}

/// F1 score for the given positive class: 2PR/(P+R), 0 when P+R = 0.
pub fn f1(y_true: &[usize], y_pred: &[usize], positive_class: usize) -> Result<f64> {
    check_lengths(y_true.len(), y_pred.len())?;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == positive_class, p == positive_class) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    // independent O(n_pos * n_neg) oracle for the rank-based implementation
    fn auc_brute(y: &[usize], s: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut pairs = 0.0;
        for (i, &yi) in y.iter().enumerate() {
            if yi != 1 {
                continue;
            }
            for (j, &yj) in y.iter().enumerate() {
                if yj != 0 {
                    continue;
                }
                pairs += 1.0;
                if s[i] > s[j] {
                    num += 1.0;
                } else if s[i] == s[j] {
                    num += 0.5;
                }
            }
        }
        num / pairs
    }

    #[test]
    fn mae_cases() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[1.0, 3.0], &[2.0, 5.0]).unwrap(), 1.5);
        // constant offset c gives |c|
        assert_eq!(mae(&[1.0, 2.0, 3.0], &[-1.0, 0.0, 1.0]).unwrap(), 2.0);
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn r2_cases() {
        assert_eq!(r2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        // predicting the mean gives 0
        assert_eq!(r2(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 0.0);
        // worked case: 1 - 4/2 = -1
        assert_eq!(r2(&[0.0, 1.0, 2.0], &[0.0, 1.0, 4.0]).unwrap(), -1.0);
        assert!(r2(&[2.0, 2.0], &[1.0, 3.0]).is_err());
    }

    #[test]
    fn age_bias_cases() {
        let y = [20.0, 35.0, 50.0, 65.0, 80.0];
        // constant predictor: corr(y, c - y) = -1 exactly
        let c = [48.0; 5];
        assert!((age_bias(&y, &c).unwrap() + 1.0).abs() < 1e-12);
        // perfect predictions: zero residual variance guard
        assert_eq!(age_bias(&y, &y).unwrap(), 0.0);
        // y_pred = 2y: corr(y, y) = +1
        let double: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        assert!((age_bias(&y, &double).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn auc_worked_case() {
        // brute-forced over all 4 positive-negative pairs: 3 wins / 4
        let y = [0, 0, 1, 1];
        let s = [0.1, 0.4, 0.35, 0.8];
        assert_eq!(auc(&y, &s).unwrap(), 0.75);
        assert_eq!(auc_brute(&y, &s), 0.75);
    }

    #[test]
    fn auc_extremes() {
        assert_eq!(auc(&[0, 0, 1, 1], &[0.1, 0.2, 0.8, 0.9]).unwrap(), 1.0);
        assert_eq!(auc(&[0, 1, 0, 1], &[0.5, 0.5, 0.5, 0.5]).unwrap(), 0.5);
        assert!(auc(&[1, 1], &[0.2, 0.3]).is_err());
    }

    #[test]
    fn auc_matches_brute_force_on_random_draws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let n = rng.random_range(5..40);
            let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
            if y.iter().all(|&c| c == 0) || y.iter().all(|&c| c == 1) {
                continue;
            }
            // quantized scores force ties
            let s: Vec<f64> = (0..n)
                .map(|_| (rng.random_range(0..10) as f64) / 10.0)
                .collect();
            let fast = auc(&y, &s).unwrap();
            assert!((fast - auc_brute(&y, &s)).abs() < 1e-12);
        }
    }

    #[test]
    fn auc_complement_identity_without_ties() {
        let y = [0, 1, 0, 1, 1, 0];
        let s = [0.11, 0.52, 0.23, 0.94, 0.35, 0.46];
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        assert!((auc(&y, &s).unwrap() + auc(&y, &neg).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bacc_cases() {
        // recalls 0.5 and 1.0
        assert_eq!(bacc(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap(), 75.0);
        assert_eq!(bacc(&[0, 1], &[0, 1], 2).unwrap(), 100.0);
        assert!(bacc(&[0, 0], &[0, 0], 2).is_err());
    }

    #[test]
    fn bacc_equals_accuracy_when_balanced() {
        let y_true = [0, 0, 0, 1, 1, 1];
        let y_pred = [0, 1, 0, 1, 0, 1];
        let acc = y_true
            .iter()
            .zip(&y_pred)
            .filter(|(t, p)| t == p)
            .count() as f64
            / y_true.len() as f64;
        assert_eq!(bacc(&y_true, &y_pred, 2).unwrap(), 100.0 * acc);
    }

    #[test]
    fn f1_cases() {
        // P = 2/3, R = 1
        assert!((f1(&[0, 0, 1, 1], &[0, 1, 1, 1], 1).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(f1(&[0, 1], &[0, 1], 1).unwrap(), 1.0);
        // no predicted positives
        assert_eq!(f1(&[0, 1], &[0, 0], 1).unwrap(), 0.0);
    }

    #[test]
    fn metrics_are_permutation_equivariant() {
        let y = [20.0, 30.0, 40.0, 50.0];
        let p = [22.0, 29.0, 43.0, 48.0];
        let perm = [2usize, 0, 3, 1];
        let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let pp: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
        assert_eq!(mae(&y, &p).unwrap(), mae(&yp, &pp).unwrap());
        assert_eq!(r2(&y, &p).unwrap(), r2(&yp, &pp).unwrap());
        let yc = [0usize, 1, 0, 1];
        let sc = [0.2, 0.7, 0.4, 0.9];
        let ycp: Vec<usize> = perm.iter().map(|&i| yc[i]).collect();
        let scp: Vec<f64> = perm.iter().map(|&i| sc[i]).collect();
        assert_eq!(auc(&yc, &sc).unwrap(), auc(&ycp, &scp).unwrap());
    }
}
