//! Leakage-free pretend-target prediction.
//!
//! Unlabeled samples cannot be harmonized with a target covariate. Instead,
//! they are harmonized once per candidate ("pretended") target value, the
//! predictive model scores every variant, the per-value scores form a score
//! matrix, and a stack model maps each score-matrix row to the final
//! prediction. True test targets never enter the pipeline: `predict` has no
//! target parameter.

use ndarray::{s, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combat::{self, CombatConfig, CombatModel};
use crate::error::{Error, Result};
use crate::predictors::{self, FittedPredictor, PredictorSpec, TargetsRef};
use crate::rng::substream;
use crate::tabular::{encode_class_indices, Dataset, TargetValues, TaskKind};

/// How regression pretend values are chosen (classification always pretends
/// the full class list).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PretendSpec {
    /// Linearly spaced over the training-target range, inclusive.
    Count(usize),
    /// Explicit values in column order.
    Explicit(Vec<f64>),
}

impl Default for PretendSpec {
    fn default() -> Self {
        PretendSpec::Count(10)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrettyConfig {
    /// Inner cross-validation folds producing the out-of-sample score matrix.
    pub k_inner: usize,
    pub pretend: PretendSpec,
    pub predictive: PredictorSpec,
    pub stack: PredictorSpec,
    pub combat: CombatConfig,
    /// Pass the dataset's extra covariates into the internal harmonization.
    pub use_covariates: bool,
    pub seed: u64,
}

impl PrettyConfig {
    /// Forest predictive model and logistic stack (classification tasks).
    pub fn classification(seed: u64) -> PrettyConfig {
        PrettyConfig {
            k_inner: 5,
            pretend: PretendSpec::default(),
            predictive: PredictorSpec::RandomForestClassifier(
                predictors::ForestConfig::classification(seed),
            ),
            stack: PredictorSpec::Logistic(predictors::LogisticConfig::default()),
            combat: CombatConfig::default(),
            use_covariates: false,
            seed,
        }
    }

    /// Ridge predictive and stack models (regression tasks).
    pub fn regression(seed: u64) -> PrettyConfig {
        PrettyConfig {
            predictive: PredictorSpec::Ridge(predictors::RidgeConfig::default()),
            stack: PredictorSpec::Ridge(predictors::RidgeConfig::default()),
            ..PrettyConfig::classification(seed)
        }
    }

    fn validate(&self, task: &TaskKind) -> Result<()> {
        if self.k_inner < 2 {
            return Err(Error::Config("k_inner must be >= 2".into()));
        }
        self.predictive.validate()?;
        self.stack.validate()?;
        let classification = task.is_classification();
        if self.predictive.is_classifier() != classification
            || self.stack.is_classifier() != classification
        {
            return Err(Error::Config(
                "predictive/stack model kinds must match the task".into(),
            ));
        }
        if let PretendSpec::Explicit(values) = &self.pretend {
            if !classification && values.len() < 2 {
                return Err(Error::Config("need at least 2 pretend values".into()));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("non-finite pretend value".into()));
            }
        }
        if let PretendSpec::Count(r) = &self.pretend {
            if !classification && *r < 2 {
                return Err(Error::Config("need at least 2 pretend values".into()));
            }
        }
        Ok(())
    }
}

/// The pretended targets, in score-matrix column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PretendValues {
    Classes(Vec<String>),
    Values(Vec<f64>),
}

impl PretendValues {
    pub fn len(&self) -> usize {
        match self {
            PretendValues::Classes(c) => c.len(),
            PretendValues::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Candidate target values for one task: the sorted class list, or values
/// spanning the training-target range.
pub fn enumerate_pretend_values(
    target: &TargetValues,
    task: &TaskKind,
    spec: &PretendSpec,
) -> Result<PretendValues> {
    match task {
        TaskKind::Classification { classes } => Ok(PretendValues::Classes(classes.clone())),
        TaskKind::Regression => {
            let TargetValues::Real(values) = target else {
                return Err(Error::Validation("regression task with class targets".into()));
            };
            match spec {
                PretendSpec::Explicit(list) => {
                    if list.len() < 2 {
                        return Err(Error::Config("need at least 2 pretend values".into()));
                    }
                    Ok(PretendValues::Values(list.clone()))
                }
                PretendSpec::Count(r) => {
                    if *r < 2 {
                        return Err(Error::Config("need at least 2 pretend values".into()));
                    }
                    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    if hi <= lo {
                        return Err(Error::Validation(
                            "constant regression target has an empty range".into(),
                        ));
                    }
                    let step = (hi - lo) / (*r as f64 - 1.0);
                    Ok(PretendValues::Values(
                        (0..*r).map(|i| lo + step * i as f64).collect(),
                    ))
                }
            }
        }
    }
}

/// Predictive-model scores under every pretended target value, one column
/// per value: positive-class probability (binary), probability of the
/// pretended class (multi-class), or the point prediction (regression).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub values: Array2<f64>,
    pub pretend: PretendValues,
}

/// Harmonize `x` under each pretend value and collect the predictor scores.
pub fn build_score_matrix(
    model: &CombatModel,
    predictor: &FittedPredictor,
    x: ArrayView2<f64>,
    sites: &[String],
    extra_covariates: Option<ArrayView2<f64>>,
    pretend: &PretendValues,
    task: &TaskKind,
) -> Result<ScoreMatrix> {
    let m = x.nrows();
    let r = pretend.len();
    let mut out = Array2::<f64>::zeros((m, r));
    for col in 0..r {
        let encoded = match (pretend, task) {
            (PretendValues::Classes(_), TaskKind::Classification { classes }) => {
                encode_class_indices(&vec![col; m], classes.len())
            }
            (PretendValues::Values(values), TaskKind::Regression) => {
                Array2::from_elem((m, 1), values[col])
            }
            _ => {
                return Err(Error::Validation(
                    "pretend values do not match the task".into(),
                ))
            }
        };
        let covs = hstack(&encoded, extra_covariates)?;
        let harmonized = combat::transform(model, x, sites, Some(covs.view()))?;
        let scores = predictor.predict_scores(harmonized.view())?;
        let column = match task {
            TaskKind::Regression => scores.column(0).to_owned(),
            TaskKind::Classification { classes } => {
                if classes.len() == 2 {
                    scores.column(1).to_owned()
                } else {
                    scores.column(col).to_owned()
                }
            }
        };
        out.slice_mut(s![.., col]).assign(&column);
    }
    Ok(ScoreMatrix {
        values: out,
        pretend: pretend.clone(),
    })
}

fn hstack(left: &Array2<f64>, right: Option<ArrayView2<f64>>) -> Result<Array2<f64>> {
    match right {
        None => Ok(left.clone()),
        Some(r) => ndarray::concatenate(Axis(1), &[left.view(), r])
            .map_err(|e| Error::Validation(format!("covariate stacking failed: {e}"))),
    }
}

/// The fitted pipeline bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrettyModel {
    /// Harmonization fitted on the full training set with the target
    /// covariate.
    pub final_combat: CombatModel,
    /// Predictive model trained on the fully harmonized training data.
    pub final_predictor: FittedPredictor,
    /// Stack model trained on the out-of-sample score matrix.
    pub stack: FittedPredictor,
    pub pretend: PretendValues,
    pub task: TaskKind,
    pub use_covariates: bool,
}

impl PrettyModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<PrettyModel> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Final predictions; classification also carries the stack scores.
#[derive(Debug, Clone)]
pub enum Prediction {
    Regression(Vec<f64>),
    Classification {
        /// Stack-model probabilities, one column per class.
        scores: Array2<f64>,
        /// Argmax class index per row.
        labels: Vec<usize>,
    },
}

impl Prediction {
    /// Point prediction (regression) or positive-class probability (binary
    /// classification) per row.
    pub fn primary_scores(&self) -> Vec<f64> {
        match self {
            Prediction::Regression(v) => v.clone(),
            Prediction::Classification { scores, .. } => {
                scores.column(scores.ncols() - 1).to_vec()
            }
        }
    }
}

fn targets_ref<'a>(dataset: &'a Dataset) -> TargetsRef<'a> {
    match dataset.task() {
        TaskKind::Regression => TargetsRef::Real(dataset.target_reals().expect("regression")),
        TaskKind::Classification { classes } => TargetsRef::Class {
            labels: dataset.class_indices(),
            n_classes: classes.len(),
        },
    }
}

fn fit_covariates(dataset: &Dataset, use_covariates: bool) -> Result<Array2<f64>> {
    let encoded = crate::tabular::encode_target_covariate(dataset.target(), dataset.task())?;
    let extra = if use_covariates {
        dataset.covariates()
    } else {
        None
    };
    hstack(&encoded, extra)
}

/// Train the full pipeline and also return the out-of-sample score matrix
/// the stack model was trained on.
pub fn fit_with_details(
    train: &Dataset,
    config: &PrettyConfig,
) -> Result<(PrettyModel, ScoreMatrix)> {
    config.validate(train.task())?;
    let n = train.n();
    if n < 2 * config.k_inner {
        return Err(Error::Validation(format!(
            "{n} samples are too few for {} inner folds",
            config.k_inner
        )));
    }
    let task = train.task().clone();
    let pretend = enumerate_pretend_values(train.target(), &task, &config.pretend)?;

    // inner folds stratified so every fold keeps every site (and class)
    let strata: Vec<String> = match &task {
        TaskKind::Classification { classes } => train
            .sites()
            .iter()
            .zip(train.class_indices())
            .map(|(site, &c)| format!("{site}\u{1f}{}", classes[c]))
            .collect(),
        TaskKind::Regression => train.sites().to_vec(),
    };
    let folds = crate::tabular::stratified_partition(
        &strata,
        config.k_inner,
        substream(config.seed, "inner_folds", 0),
    );

    let fold_scores: Vec<(Vec<usize>, Array2<f64>)> = folds
        .into_par_iter()
        .enumerate()
        .map(|(f, (train_idx, val_idx))| -> Result<(Vec<usize>, Array2<f64>)> {
            let inner = train.select_rows(&train_idx);
            check_fold_coverage(train, &inner, f)?;
            let val = train.select_rows(&val_idx);

            let covs = fit_covariates(&inner, config.use_covariates)?;
            let fold_combat =
                combat::fit(inner.features(), inner.sites(), Some(covs.view()), &config.combat)
                    .map_err(|e| e.with_fold(0, f))?;
            let harmonized =
                combat::transform(&fold_combat, inner.features(), inner.sites(), Some(covs.view()))
                    .map_err(|e| e.with_fold(0, f))?;
            let predictive = predictors::train(
                &config
                    .predictive
                    .reseeded(substream(config.seed, "inner_predictive", f as u64)),
                harmonized.view(),
                targets_ref(&inner),
            )
            .map_err(|e| e.with_fold(0, f))?;

            let extra = if config.use_covariates {
                val.covariates()
            } else {
                None
            };
            let scores = build_score_matrix(
                &fold_combat,
                &predictive,
                val.features(),
                val.sites(),
                extra,
                &pretend,
                &task,
            )
            .map_err(|e| e.with_fold(0, f))?;
            Ok((val_idx, scores.values))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut oos = Array2::<f64>::zeros((n, pretend.len()));
    for (val_idx, scores) in &fold_scores {
        for (row, &j) in val_idx.iter().enumerate() {
            for c in 0..pretend.len() {
                oos[[j, c]] = scores[[row, c]];
            }
        }
    }

    let stack = predictors::train(
        &config.stack.reseeded(substream(config.seed, "stack", 0)),
        oos.view(),
        targets_ref(train),
    )?;

    let covs = fit_covariates(train, config.use_covariates)?;
    let final_combat = combat::fit(
        train.features(),
        train.sites(),
        Some(covs.view()),
        &config.combat,
    )?;
    let harmonized =
        combat::transform(&final_combat, train.features(), train.sites(), Some(covs.view()))?;
    let final_predictor = predictors::train(
        &config
            .predictive
            .reseeded(substream(config.seed, "final_predictive", 0)),
        harmonized.view(),
        targets_ref(train),
    )?;

    Ok((
        PrettyModel {
            final_combat,
            final_predictor,
            stack,
            pretend: pretend.clone(),
            task,
            use_covariates: config.use_covariates,
        },
        ScoreMatrix {
            values: oos,
            pretend,
        },
    ))
}

/// Train the full pipeline on a labeled training set.
pub fn fit(train: &Dataset, config: &PrettyConfig) -> Result<PrettyModel> {
    fit_with_details(train, config).map(|(model, _)| model)
}

fn check_fold_coverage(full: &Dataset, inner: &Dataset, fold: usize) -> Result<()> {
    for site in full.sites() {
        if !inner.sites().contains(site) {
            return Err(Error::Validation(format!(
                "inner fold {fold} lost site {site:?} from its training side"
            )));
        }
    }
    if let TaskKind::Classification { classes } = full.task() {
        for (c, class) in classes.iter().enumerate() {
            if !inner.class_indices().contains(&c) {
                return Err(Error::Validation(format!(
                    "inner fold {fold} lost class {class:?} from its training side"
                )));
            }
        }
    }
    Ok(())
}

/// Predict targets for unlabeled samples. True targets are not an input;
/// absence of leakage is enforced by the signature.
pub fn predict(
    model: &PrettyModel,
    x: ArrayView2<f64>,
    sites: &[String],
    extra_covariates: Option<ArrayView2<f64>>,
) -> Result<Prediction> {
    let extra = if model.use_covariates {
        extra_covariates
    } else {
        None
    };
    let scores = build_score_matrix(
        &model.final_combat,
        &model.final_predictor,
        x,
        sites,
        extra,
        &model.pretend,
        &model.task,
    )?;
    match &model.task {
        TaskKind::Regression => {
            let out = model.stack.predict_scores(scores.values.view())?;
            Ok(Prediction::Regression(out.column(0).to_vec()))
        }
        TaskKind::Classification { .. } => {
            let probs = model.stack.predict_scores(scores.values.view())?;
            let labels = model.stack.predict_labels(scores.values.view())?;
            Ok(Prediction::Classification {
                scores: probs,
                labels,
            })
        }
    }
}
