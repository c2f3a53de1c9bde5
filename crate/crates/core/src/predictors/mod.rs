//! Predictive and stack models behind one train/predict contract.

pub mod forest;
pub mod logistic;
pub mod ridge;
pub mod tree;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use forest::{ForestClassifier, ForestRegressor};
pub use logistic::LogisticModel;
pub use ridge::RidgeModel;

/// Features drawn per split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub seed: u64,
}

impl ForestConfig {
    /// 100 unbounded trees, √p features per split, bootstrap on.
    pub fn classification(seed: u64) -> ForestConfig {
        ForestConfig {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            max_features: MaxFeatures::Sqrt,
            seed,
        }
    }

    /// 100 unbounded trees, all features per split, bootstrap on.
    pub fn regression(seed: u64) -> ForestConfig {
        ForestConfig {
            max_features: MaxFeatures::All,
            ..ForestConfig::classification(seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// L2 penalty on the weight block.
    pub l2: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            l2: 1.0,
            max_iters: 500,
            grad_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeConfig {
    pub alpha: f64,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        RidgeConfig { alpha: 1.0 }
    }
}

/// Which model to train, with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorSpec {
    RandomForestClassifier(ForestConfig),
    RandomForestRegressor(ForestConfig),
    Logistic(LogisticConfig),
    Ridge(RidgeConfig),
}

impl PredictorSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PredictorSpec::RandomForestClassifier(c) | PredictorSpec::RandomForestRegressor(c) => {
                if c.n_trees < 1 {
                    return Err(Error::Config("forest needs at least 1 tree".into()));
                }
                if c.min_samples_split < 2 {
                    return Err(Error::Config("min_samples_split must be >= 2".into()));
                }
                if let MaxFeatures::Count(0) = c.max_features {
                    return Err(Error::Config("max_features count must be >= 1".into()));
                }
            }
            PredictorSpec::Logistic(c) => {
                if c.l2 < 0.0 {
                    return Err(Error::Config("logistic l2 must be >= 0".into()));
                }
                if c.grad_tol <= 0.0 {
                    return Err(Error::Config("logistic grad_tol must be > 0".into()));
                }
            }
            PredictorSpec::Ridge(c) => {
                if c.alpha < 0.0 {
                    return Err(Error::Config("ridge alpha must be >= 0".into()));
                }
            }
        }
        Ok(())
    }

    pub fn is_classifier(&self) -> bool {
        matches!(
            self,
            PredictorSpec::RandomForestClassifier(_) | PredictorSpec::Logistic(_)
        )
    }

    /// Clone with the forest seed replaced; deterministic solvers pass
    /// through unchanged.
    pub fn reseeded(&self, seed: u64) -> PredictorSpec {
        match self {
            PredictorSpec::RandomForestClassifier(c) => {
                PredictorSpec::RandomForestClassifier(ForestConfig { seed, ..c.clone() })
            }
            PredictorSpec::RandomForestRegressor(c) => {
                PredictorSpec::RandomForestRegressor(ForestConfig { seed, ..c.clone() })
            }
            other => other.clone(),
        }
    }
}

/// Training targets.
#[derive(Debug, Clone, Copy)]
pub enum TargetsRef<'a> {
    Real(&'a [f64]),
    Class { labels: &'a [usize], n_classes: usize },
}

/// A trained model; immutable and shareable across threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FittedPredictor {
    ForestClassifier(ForestClassifier),
    ForestRegressor(ForestRegressor),
    Logistic(LogisticModel),
    Ridge(RidgeModel),
}

fn check_training_inputs(x: ArrayView2<f64>, y: &TargetsRef) -> Result<()> {
    if x.nrows() < 2 {
        return Err(Error::Validation(
            "training needs at least 2 samples".into(),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite training feature".into()));
    }
    match y {
        TargetsRef::Real(values) => {
            if values.len() != x.nrows() {
                return Err(Error::Validation("target length mismatch".into()));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation("non-finite training target".into()));
            }
        }
        TargetsRef::Class { labels, n_classes } => {
            if labels.len() != x.nrows() {
                return Err(Error::Validation("target length mismatch".into()));
            }
            if *n_classes < 2 {
                return Err(Error::Validation("classifier needs >= 2 classes".into()));
            }
            if labels.iter().any(|&l| l >= *n_classes) {
                return Err(Error::Validation("class index out of range".into()));
            }
            let first = labels[0];
            if labels.iter().all(|&l| l == first) {
                return Err(Error::Validation(
                    "classifier training saw a single class".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Train the model described by `spec` on `(x, y)`.
pub fn train(spec: &PredictorSpec, x: ArrayView2<f64>, y: TargetsRef) -> Result<FittedPredictor> {
    spec.validate()?;
    check_training_inputs(x, &y)?;
    match (spec, y) {
        (PredictorSpec::RandomForestClassifier(c), TargetsRef::Class { labels, n_classes }) => Ok(
            FittedPredictor::ForestClassifier(ForestClassifier::train(x, labels, n_classes, c)?),
        ),
        (PredictorSpec::Logistic(c), TargetsRef::Class { labels, n_classes }) => Ok(
            FittedPredictor::Logistic(LogisticModel::train(x, labels, n_classes, c)?),
        ),
        (PredictorSpec::RandomForestRegressor(c), TargetsRef::Real(values)) => Ok(
            FittedPredictor::ForestRegressor(ForestRegressor::train(x, values, c)?),
        ),
        (PredictorSpec::Ridge(c), TargetsRef::Real(values)) => {
            Ok(FittedPredictor::Ridge(RidgeModel::train(x, values, c)?))
        }
        _ => Err(Error::Config(
            "predictor kind does not match the target kind".into(),
        )),
    }
}

impl FittedPredictor {
    pub fn feature_width(&self) -> usize {
        match self {
            FittedPredictor::ForestClassifier(m) => m.n_features,
            FittedPredictor::ForestRegressor(m) => m.n_features,
            FittedPredictor::Logistic(m) => m.n_features,
            FittedPredictor::Ridge(m) => m.n_features,
        }
    }

    pub fn n_classes(&self) -> Option<usize> {
        match self {
            FittedPredictor::ForestClassifier(m) => Some(m.n_classes),
            FittedPredictor::Logistic(m) => Some(m.n_classes),
            _ => None,
        }
    }

    /// Classification: per-class probabilities (rows sum to 1 up to
    /// rounding). Regression: a single column of point predictions.
    pub fn predict_scores(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.feature_width() {
            return Err(Error::Validation(format!(
                "prediction width {} does not match the model ({})",
                x.ncols(),
                self.feature_width()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite prediction input".into()));
        }
        Ok(match self {
            FittedPredictor::ForestClassifier(m) => m.predict_proba(x),
            FittedPredictor::Logistic(m) => m.predict_proba(x),
            FittedPredictor::ForestRegressor(m) => column(m.predict(x)),
            FittedPredictor::Ridge(m) => column(m.predict(x)),
        })
    }

    /// Argmax class per row (classifiers only).
    pub fn predict_labels(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        let scores = self.predict_scores(x)?;
        if self.n_classes().is_none() {
            return Err(Error::Validation(
                "label prediction on a regression model".into(),
            ));
        }
        Ok(scores
            .outer_iter()
            .map(|row| {
                (0..row.len())
                    .max_by(|&a, &b| row[a].total_cmp(&row[b]))
                    .unwrap_or(0)
            })
            .collect())
    }
}

fn column(values: Vec<f64>) -> Array2<f64> {
    let n = values.len();
    Array2::from_shape_vec((n, 1), values).expect("column vector")
}
