//! The five benchmark harmonization schemes and the cross-validated runner
//! that compares them.
//!
//! Two schemes leak test information by construction: whole-data
//! harmonization (fits and applies the harmonization before the folds are
//! split) and test-target leakage (harmonizes the test fold with its true
//! targets). The runner counts every transform call that carries test-fold
//! targets, so leakage-free runs can assert the counter stayed at zero.

use std::collections::BTreeMap;
use std::time::Instant;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::combat::{self, CombatConfig};
use crate::error::{Error, Result};
use crate::metrics;
use crate::predictors::{self, PredictorSpec};
use crate::pretty::{self, PrettyConfig};
use crate::rng::substream;
use crate::tabular::{encode_target_covariate, make_folds, Dataset, TaskKind};

/// One of the five benchmark schemes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Scheme {
    /// Pooled raw features, no harmonization.
    Unharmonized,
    /// Whole-data harmonization: fit once on the pooled data with the target
    /// covariate, transform everything, then cross-validate on the
    /// pre-harmonized matrix. Leaks by construction.
    Wdh,
    /// Per fold: fit on the training side with the target covariate and
    /// harmonize the test side with its true targets. Leaks test targets.
    Ttl,
    /// Per fold: fit on the training side without the target covariate;
    /// the test side is harmonized without any target information.
    NoTarget,
    /// The pretend-target pipeline.
    Pretty(PrettyConfig),
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Unharmonized => "unharmonized",
            Scheme::Wdh => "wdh",
            Scheme::Ttl => "ttl",
            Scheme::NoTarget => "no_target",
            Scheme::Pretty(_) => "pretty",
        }
    }

    /// True for the schemes that pass test-fold targets into harmonization.
    pub fn leaks(&self) -> bool {
        matches!(self, Scheme::Wdh | Scheme::Ttl)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldParams {
    pub k: usize,
    pub repeats: usize,
    pub stratify: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    /// Predictive model of the four plain schemes (the pretend-target scheme
    /// carries its own models).
    pub predictor: PredictorSpec,
    pub folds: FoldParams,
    pub combat: CombatConfig,
    /// Pass the dataset's extra covariates into every harmonization.
    #[serde(default)]
    pub include_covariates: bool,
    /// F1 positive class; defaults to the lexicographically larger label.
    #[serde(default)]
    pub positive_class: Option<String>,
}

impl ExperimentConfig {
    fn validate(&self, dataset: &Dataset) -> Result<()> {
        let classification = dataset.task().is_classification();
        if classification != self.folds.stratify {
            return Err(Error::Config(if classification {
                "classification experiments use stratified folds".into()
            } else {
                "regression experiments use plain k-fold".into()
            }));
        }
        self.predictor.validate()?;
        if self.predictor.is_classifier() != classification {
            return Err(Error::Config(
                "predictor kind must match the task".into(),
            ));
        }
        Ok(())
    }
}

/// Per-fold metrics plus wall-clock seconds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub repeat: usize,
    pub metrics: BTreeMap<String, f64>,
    pub wall_secs: f64,
}

/// Full result of one (dataset, scheme) run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scheme: String,
    pub leakage: bool,
    pub seed: u64,
    pub folds: Vec<FoldRecord>,
    /// Arithmetic mean of the fold metrics.
    pub aggregate: BTreeMap<String, f64>,
    /// Transform calls whose covariates carried test-fold targets; zero for
    /// every leakage-free scheme.
    pub test_target_transform_calls: u64,
}

/// Raw predictions of one fold.
#[derive(Debug, Clone)]
pub struct FoldOutput {
    /// Point predictions (regression) or positive-class probabilities
    /// (binary classification), in test-index order.
    pub scores: Vec<f64>,
    /// Argmax labels (classification only).
    pub labels: Option<Vec<usize>>,
    /// Transform calls that carried test-fold targets inside this fold.
    pub leak_calls: u64,
}

/// Scheme-level work shared by all folds (the pooled pre-harmonized matrix
/// of whole-data harmonization).
enum SchemeContext {
    None,
    Pooled { harmonized: Array2<f64>, leak_calls: u64 },
}

fn extra_covariates<'a>(
    dataset: &'a Dataset,
    config: &ExperimentConfig,
) -> Option<ArrayView2<'a, f64>> {
    if config.include_covariates {
        dataset.covariates()
    } else {
        None
    }
}

fn stack_covariates(
    encoded: Array2<f64>,
    extra: Option<ArrayView2<f64>>,
) -> Result<Array2<f64>> {
    match extra {
        None => Ok(encoded),
        Some(r) => ndarray::concatenate(Axis(1), &[encoded.view(), r])
            .map_err(|e| Error::Validation(format!("covariate stacking failed: {e}"))),
    }
}

fn prepare_context(dataset: &Dataset, config: &ExperimentConfig) -> Result<SchemeContext> {
    match config.scheme {
        Scheme::Wdh => {
            // the pooled covariate matrix includes every future test row's
            // true target: this is the leak
            let encoded = encode_target_covariate(dataset.target(), dataset.task())?;
            let covs = stack_covariates(encoded, extra_covariates(dataset, config))?;
            let (_, harmonized) = combat::fit_transform(
                dataset.features(),
                dataset.sites(),
                Some(covs.view()),
                &config.combat,
            )?;
            Ok(SchemeContext::Pooled {
                harmonized,
                leak_calls: 1,
            })
        }
        _ => Ok(SchemeContext::None),
    }
}

fn predictor_targets<'a>(dataset: &'a Dataset) -> predictors::TargetsRef<'a> {
    match dataset.task() {
        TaskKind::Regression => {
            predictors::TargetsRef::Real(dataset.target_reals().expect("regression targets"))
        }
        TaskKind::Classification { classes } => predictors::TargetsRef::Class {
            labels: dataset.class_indices(),
            n_classes: classes.len(),
        },
    }
}

/// Train the configured predictor on `(x_train, train targets)` and score
/// `x_test`; returns primary scores and labels.
fn train_and_score(
    config: &ExperimentConfig,
    fold_index: u64,
    x_train: ArrayView2<f64>,
    train: &Dataset,
    x_test: ArrayView2<f64>,
) -> Result<(Vec<f64>, Option<Vec<usize>>)> {
    let spec = config.predictor.reseeded(substream(
        config.folds.seed,
        "fold_predictor",
        fold_index,
    ));
    let model = predictors::train(&spec, x_train, predictor_targets(train))?;
    let scores = model.predict_scores(x_test)?;
    match train.task() {
        TaskKind::Regression => Ok((scores.column(0).to_vec(), None)),
        TaskKind::Classification { .. } => {
            let labels = model.predict_labels(x_test)?;
            Ok((scores.column(scores.ncols() - 1).to_vec(), Some(labels)))
        }
    }
}

fn run_fold_with_context(
    dataset: &Dataset,
    context: &SchemeContext,
    train_idx: &[usize],
    test_idx: &[usize],
    fold_index: u64,
    config: &ExperimentConfig,
) -> Result<FoldOutput> {
    let train = dataset.select_rows(train_idx);
    let test = dataset.select_rows(test_idx);
    let mut leak_calls = 0u64;

    let (scores, labels) = match &config.scheme {
        Scheme::Unharmonized => {
            train_and_score(config, fold_index, train.features(), &train, test.features())?
        }
        Scheme::Wdh => {
            let SchemeContext::Pooled { harmonized, .. } = context else {
                return Err(Error::Validation("missing pooled harmonization".into()));
            };
            let h_train = harmonized.select(Axis(0), train_idx);
            let h_test = harmonized.select(Axis(0), test_idx);
            train_and_score(config, fold_index, h_train.view(), &train, h_test.view())?
        }
        Scheme::Ttl => {
            let encoded = encode_target_covariate(train.target(), train.task())?;
            let train_covs = stack_covariates(encoded, extra_covariates(&train, config))?;
            let (model, h_train) = combat::fit_transform(
                train.features(),
                train.sites(),
                Some(train_covs.view()),
                &config.combat,
            )?;
            // harmonizing the test fold requires its true targets: the leak
            let encoded_test = encode_target_covariate(test.target(), test.task())?;
            let test_covs = stack_covariates(encoded_test, extra_covariates(&test, config))?;
            let h_test =
                combat::transform(&model, test.features(), test.sites(), Some(test_covs.view()))?;
            leak_calls += 1;
            train_and_score(config, fold_index, h_train.view(), &train, h_test.view())?
        }
        Scheme::NoTarget => {
            let covs = extra_covariates(&train, config);
            let (model, h_train) = combat::fit_transform(
                train.features(),
                train.sites(),
                covs,
                &config.combat,
            )?;
            let h_test = combat::transform(
                &model,
                test.features(),
                test.sites(),
                extra_covariates(&test, config),
            )?;
            train_and_score(config, fold_index, h_train.view(), &train, h_test.view())?
        }
        Scheme::Pretty(pretty_config) => {
            let fold_config = PrettyConfig {
                seed: substream(pretty_config.seed, "fold", fold_index),
                ..pretty_config.clone()
            };
            let model = pretty::fit(&train, &fold_config)?;
            let extra = if fold_config.use_covariates {
                test.covariates()
            } else {
                None
            };
            match pretty::predict(&model, test.features(), test.sites(), extra)? {
                pretty::Prediction::Regression(values) => (values, None),
                pretty::Prediction::Classification { scores, labels } => (
                    scores.column(scores.ncols() - 1).to_vec(),
                    Some(labels),
                ),
            }
        }
    };

    Ok(FoldOutput {
        scores,
        labels,
        leak_calls,
    })
}

/// Run one fold of a scheme in isolation (whole-data harmonization prepares
/// its pooled matrix internally).
pub fn run_single_fold(
    dataset: &Dataset,
    train_idx: &[usize],
    test_idx: &[usize],
    fold_index: u64,
    config: &ExperimentConfig,
) -> Result<FoldOutput> {
    let context = prepare_context(dataset, config)?;
    let mut out =
        run_fold_with_context(dataset, &context, train_idx, test_idx, fold_index, config)?;
    if let SchemeContext::Pooled { leak_calls, .. } = context {
        out.leak_calls += leak_calls;
    }
    Ok(out)
}

fn fold_metrics(
    dataset: &Dataset,
    test_idx: &[usize],
    output: &FoldOutput,
    config: &ExperimentConfig,
) -> Result<BTreeMap<String, f64>> {
    let mut m = BTreeMap::new();
    match dataset.task() {
        TaskKind::Regression => {
            let truth: Vec<f64> = {
                let all = dataset.target_reals().expect("regression targets");
                test_idx.iter().map(|&j| all[j]).collect()
            };
            m.insert("mae".into(), metrics::mae(&truth, &output.scores)?);
            m.insert("r2".into(), metrics::r2(&truth, &output.scores)?);
            m.insert("age_bias".into(), metrics::age_bias(&truth, &output.scores)?);
        }
        TaskKind::Classification { classes } => {
            let truth: Vec<usize> = test_idx
                .iter()
                .map(|&j| dataset.class_indices()[j])
                .collect();
            let labels = output
                .labels
                .as_ref()
                .ok_or_else(|| Error::Validation("classification fold without labels".into()))?;
            m.insert(
                "bacc".into(),
                metrics::bacc(&truth, labels, classes.len())?,
            );
            if classes.len() == 2 {
                m.insert("auc".into(), metrics::auc(&truth, &output.scores)?);
                let positive = match &config.positive_class {
                    Some(label) => dataset.task().class_index(label)?,
                    None => classes.len() - 1,
                };
                m.insert("f1".into(), metrics::f1(&truth, labels, positive)?);
            }
        }
    }
    Ok(m)
}

/// Metric column order for reports and comparison tables.
pub fn metric_names(task: &TaskKind) -> Vec<String> {
    match task {
        TaskKind::Regression => vec!["mae".into(), "r2".into(), "age_bias".into()],
        TaskKind::Classification { classes } if classes.len() == 2 => {
            vec!["auc".into(), "bacc".into(), "f1".into()]
        }
        TaskKind::Classification { .. } => vec!["bacc".into()],
    }
}

/// Cross-validate one scheme on one dataset.
pub fn run_experiment(dataset: &Dataset, config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate(dataset)?;
    let plan = make_folds(
        dataset,
        config.folds.k,
        config.folds.repeats,
        config.folds.stratify,
        config.folds.seed,
    )?;
    let context = prepare_context(dataset, config)?;

    let mut records = Vec::with_capacity(plan.folds.len());
    let mut leak_calls = match &context {
        SchemeContext::Pooled { leak_calls, .. } => *leak_calls,
        SchemeContext::None => 0,
    };
    for (index, (train_idx, test_idx)) in plan.folds.iter().enumerate() {
        let repeat = index / config.folds.k;
        let fold = index % config.folds.k;
        let start = Instant::now();
        let output = run_fold_with_context(
            dataset,
            &context,
            train_idx,
            test_idx,
            index as u64,
            config,
        )
        .map_err(|e| e.with_fold(repeat, fold))?;
        leak_calls += output.leak_calls;
        let metrics = fold_metrics(dataset, test_idx, &output, config)
            .map_err(|e| e.with_fold(repeat, fold))?;
        records.push(FoldRecord {
            fold,
            repeat,
            metrics,
            wall_secs: start.elapsed().as_secs_f64(),
        });
    }

    let mut aggregate = BTreeMap::new();
    for name in metric_names(dataset.task()) {
        let sum: f64 = records
            .iter()
            .map(|r| r.metrics.get(&name).copied().unwrap_or(f64::NAN))
            .sum();
        aggregate.insert(name, sum / records.len() as f64);
    }

    Ok(ExperimentReport {
        scheme: config.scheme.name().into(),
        leakage: config.scheme.leaks(),
        seed: config.folds.seed,
        folds: records,
        aggregate,
        test_target_transform_calls: leak_calls,
    })
}

/// Aligned multi-scheme comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub metric_names: Vec<String>,
    pub reports: Vec<ExperimentReport>,
}

impl Comparison {
    /// One scheme per row, one aggregate metric per column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scheme,leakage");
        for name in &self.metric_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for report in &self.reports {
            out.push_str(&report.scheme);
            out.push(',');
            out.push_str(if report.leakage { "true" } else { "false" });
            for name in &self.metric_names {
                let value = report.aggregate.get(name).copied().unwrap_or(f64::NAN);
                out.push_str(&format!(",{value:.6}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn report(&self, scheme: &str) -> Option<&ExperimentReport> {
        self.reports.iter().find(|r| r.scheme == scheme)
    }
}

/// Run several schemes with aligned folds and collect a comparison table.
///
/// All configs must share identical fold parameters so every scheme sees the
/// same train/test index sets.
pub fn compare_schemes(dataset: &Dataset, configs: &[ExperimentConfig]) -> Result<Comparison> {
    if configs.is_empty() {
        return Err(Error::Config("no schemes to compare".into()));
    }
    let folds = &configs[0].folds;
    for c in configs {
        if c.folds != *folds {
            return Err(Error::Config(format!(
                "fold parameters of scheme {:?} do not match the first scheme; \
                 folds must align for a comparison",
                c.scheme.name()
            )));
        }
    }
    let reports = configs
        .iter()
        .map(|c| run_experiment(dataset, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        metric_names: metric_names(dataset.task()),
        reports,
    })
}
