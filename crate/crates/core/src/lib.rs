//! Multi-site tabular data harmonization and leakage-aware prediction pipelines.
//!
//! The crate provides:
//!
//! - [`combat`]: parametric location/scale harmonization with empirical-Bayes
//!   shrinkage of per-site corrections and optional covariate preservation.
//! - [`pretty`]: a leakage-free prediction pipeline that harmonizes unlabeled
//!   samples under every candidate ("pretended") target value, collects the
//!   predictive-model scores into a score matrix, and stacks them.
//! - [`schemes`]: five benchmark harmonization schemes (unharmonized, whole-data,
//!   test-target-leakage, no-target, pretend-target) behind a cross-validated
//!   experiment runner with a leakage audit counter.
//! - [`predictors`]: random forest, logistic regression, and ridge regression
//!   behind one train/predict contract.
//! - [`synthgen`]: synthetic multi-site generators plus samplers that force
//!   site-target dependence or independence on any dataset.
//! - [`metrics`]: MAE, R², age bias, AUC, balanced accuracy, F1.
//! - [`tabular`]: dataset representation, CSV ingestion, target encoding, and
//!   cross-validation fold plans.

pub mod combat;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod predictors;
pub mod pretty;
pub mod rng;
pub mod schemes;
pub mod synthgen;
pub mod tabular;

pub use error::{Error, Result};
pub use tabular::{Dataset, FoldPlan, TaskKind};
