//! Dataset representation, CSV ingestion, target encoding, and
//! cross-validation fold plans shared by every other module.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Prediction task, with the ordered class list for classification.
///
/// Class order is the lexicographic sort of the class strings, so encodings
/// are deterministic across runs and machines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskKind {
    Regression,
    Classification { classes: Vec<String> },
}

impl TaskKind {
    pub fn is_classification(&self) -> bool {
        matches!(self, TaskKind::Classification { .. })
    }

    pub fn n_classes(&self) -> usize {
        match self {
            TaskKind::Regression => 0,
            TaskKind::Classification { classes } => classes.len(),
        }
    }

    pub fn class_index(&self, label: &str) -> Result<usize> {
        match self {
            TaskKind::Regression => Err(Error::Validation(
                "class lookup on a regression task".into(),
            )),
            TaskKind::Classification { classes } => {
                classes.iter().position(|c| c == label).ok_or_else(|| {
                    Error::Validation(format!(
                        "unknown class {label:?}; known classes: {classes:?}"
                    ))
                })
            }
        }
    }
}

/// Raw target column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetValues {
    Real(Vec<f64>),
    Class(Vec<String>),
}

impl TargetValues {
    pub fn len(&self) -> usize {
        match self {
            TargetValues::Real(v) => v.len(),
            TargetValues::Class(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, idx: &[usize]) -> TargetValues {
        match self {
            TargetValues::Real(v) => TargetValues::Real(idx.iter().map(|&i| v[i]).collect()),
            TargetValues::Class(v) => {
                TargetValues::Class(idx.iter().map(|&i| v[i].clone()).collect())
            }
        }
    }
}

/// An immutable n-sample tabular dataset with per-sample site labels,
/// a target, and optional extra covariates.
///
/// Safe to share read-only across parallel fold evaluations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    features: Array2<f64>,
    sites: Vec<String>,
    target: TargetValues,
    covariates: Option<Array2<f64>>,
    feature_names: Vec<String>,
    covariate_names: Vec<String>,
    task: TaskKind,
    /// Class index per row for classification, empty for regression.
    class_idx: Vec<usize>,
}

impl Dataset {
    /// Assemble and validate a dataset.
    ///
    /// For classification the class list of `task` is derived from the data
    /// when `Classification { classes: vec![] }` is passed.
    pub fn new(
        features: Array2<f64>,
        sites: Vec<String>,
        target: TargetValues,
        covariates: Option<Array2<f64>>,
        feature_names: Vec<String>,
        covariate_names: Vec<String>,
        task: TaskKind,
    ) -> Result<Dataset> {
        let n = features.nrows();
        if n == 0 {
            return Err(Error::Validation("empty dataset".into()));
        }
        if sites.len() != n || target.len() != n {
            return Err(Error::Validation(format!(
                "row count mismatch: {} features, {} sites, {} targets",
                n,
                sites.len(),
                target.len()
            )));
        }
        if feature_names.len() != features.ncols() {
            return Err(Error::Validation("feature name count mismatch".into()));
        }
        if let Some(c) = &covariates {
            if c.nrows() != n {
                return Err(Error::Validation("covariate row count mismatch".into()));
            }
            if covariate_names.len() != c.ncols() {
                return Err(Error::Validation("covariate name count mismatch".into()));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation("non-finite covariate value".into()));
            }
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite feature value".into()));
        }

        let mut site_counts: BTreeMap<&str, usize> = BTreeMap::new();
        for s in &sites {
            *site_counts.entry(s.as_str()).or_insert(0) += 1;
        }
        if let Some((site, _)) = site_counts.iter().find(|(_, &c)| c < 2) {
            return Err(Error::Validation(format!(
                "site {site:?} has fewer than 2 samples"
            )));
        }

        let (task, class_idx) = match (&task, &target) {
            (TaskKind::Regression, TargetValues::Real(v)) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Validation("non-finite target value".into()));
                }
                (TaskKind::Regression, Vec::new())
            }
            (TaskKind::Classification { classes }, TargetValues::Class(labels)) => {
                let classes = if classes.is_empty() {
                    let mut c: Vec<String> = labels.clone();
                    c.sort();
                    c.dedup();
                    c
                } else {
                    classes.clone()
                };
                if classes.len() < 2 {
                    return Err(Error::Validation(
                        "classification target has fewer than 2 distinct classes".into(),
                    ));
                }
                let task = TaskKind::Classification { classes };
                let idx = labels
                    .iter()
                    .map(|l| task.class_index(l))
                    .collect::<Result<Vec<_>>>()?;
                (task, idx)
            }
            _ => {
                return Err(Error::Validation(
                    "target kind does not match the declared task".into(),
                ))
            }
        };

        Ok(Dataset {
            features,
            sites,
            target,
            covariates,
            feature_names,
            covariate_names,
            task,
            class_idx,
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn sites(&self) -> &[String] {
        &self.sites
    }

    pub fn target(&self) -> &TargetValues {
        &self.target
    }

    pub fn covariates(&self) -> Option<ArrayView2<'_, f64>> {
        self.covariates.as_ref().map(|c| c.view())
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn task(&self) -> &TaskKind {
        &self.task
    }

    /// Class index per row; empty for regression.
    pub fn class_indices(&self) -> &[usize] {
        &self.class_idx
    }

    /// Real-valued targets (regression only).
    pub fn target_reals(&self) -> Option<&[f64]> {
        match &self.target {
            TargetValues::Real(v) => Some(v),
            TargetValues::Class(_) => None,
        }
    }

    /// Row subset in the given index order.
    ///
    /// Ingest-time invariants (per-site counts) are deliberately not
    /// re-checked: fold subsets may hold a single row of a site.
    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), idx),
            sites: idx.iter().map(|&i| self.sites[i].clone()).collect(),
            target: self.target.select(idx),
            covariates: self.covariates.as_ref().map(|c| c.select(Axis(0), idx)),
            feature_names: self.feature_names.clone(),
            covariate_names: self.covariate_names.clone(),
            task: self.task.clone(),
            class_idx: if self.class_idx.is_empty() {
                Vec::new()
            } else {
                idx.iter().map(|&i| self.class_idx[i]).collect()
            },
        }
    }
}

/// How to pick feature columns from a header.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnSelect {
    /// Explicit list of column names or `*`/`?` glob patterns.
    List(Vec<String>),
    /// A single name or glob pattern.
    Pattern(String),
}

impl ColumnSelect {
    fn patterns(&self) -> Vec<&str> {
        match self {
            ColumnSelect::List(v) => v.iter().map(|s| s.as_str()).collect(),
            ColumnSelect::Pattern(p) => vec![p.as_str()],
        }
    }
}

/// Minimal glob: `*` matches any run, `?` matches one character.
fn glob_match(pattern: &str, name: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let s: Vec<char> = name.chars().collect();
    fn rec(p: &[char], s: &[char]) -> bool {
        match (p.first(), s.first()) {
            (None, None) => true,
            (Some('*'), _) => rec(&p[1..], s) || (!s.is_empty() && rec(p, &s[1..])),
            (Some('?'), Some(_)) => rec(&p[1..], &s[1..]),
            (Some(c), Some(d)) if c == d => rec(&p[1..], &s[1..]),
            _ => false,
        }
    }
    rec(&p, &s)
}

/// Column-role mapping for CSV ingestion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Schema {
    pub site_col: String,
    pub target_col: String,
    pub feature_cols: ColumnSelect,
    #[serde(default)]
    pub covariate_cols: Vec<String>,
    /// "regression" or "classification"; classes are inferred from the data.
    pub task: TaskSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskSpec {
    Regression,
    Classification,
}

/// Load a dataset from a UTF-8 CSV file with a header row.
///
/// Roles are assigned by the schema, never by column position; row order is
/// preserved. Any unparseable or missing feature cell fails the load.
pub fn load_dataset(path: &Path, schema: &Schema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read header: {e}")))?
        .iter()
        .map(|h| h.to_string())
        .collect();

    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column {name:?}")))
    };
    let site_ix = col(&schema.site_col)?;
    let target_ix = col(&schema.target_col)?;

    let mut feature_ix: Vec<usize> = Vec::new();
    for pat in schema.feature_cols.patterns() {
        let before = feature_ix.len();
        for (i, h) in headers.iter().enumerate() {
            if glob_match(pat, h) && i != site_ix && i != target_ix && !feature_ix.contains(&i) {
                feature_ix.push(i);
            }
        }
        if feature_ix.len() == before {
            return Err(Error::Schema(format!(
                "feature pattern {pat:?} matches no column"
            )));
        }
    }
    if feature_ix.is_empty() {
        return Err(Error::Schema("no feature columns selected".into()));
    }
    let covariate_ix: Vec<usize> = schema
        .covariate_cols
        .iter()
        .map(|c| col(c))
        .collect::<Result<Vec<_>>>()?;

    let mut sites = Vec::new();
    let mut raw_target: Vec<String> = Vec::new();
    let mut feat_rows: Vec<f64> = Vec::new();
    let mut cov_rows: Vec<f64> = Vec::new();

    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: r + 1,
            column: "<record>".into(),
            message: e.to_string(),
        })?;
        let cell = |ix: usize| record.get(ix).unwrap_or("").trim().to_string();
        sites.push(cell(site_ix));
        raw_target.push(cell(target_ix));
        for &fi in &feature_ix {
            let raw = cell(fi);
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                row: r + 1,
                column: headers[fi].clone(),
                message: format!("expected a number, got {raw:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: r + 1,
                    column: headers[fi].clone(),
                    message: "non-finite value".into(),
                });
            }
            feat_rows.push(v);
        }
        for &ci in &covariate_ix {
            let raw = cell(ci);
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                row: r + 1,
                column: headers[ci].clone(),
                message: format!("expected a number, got {raw:?}"),
            })?;
            cov_rows.push(v);
        }
    }

    let n = sites.len();
    if n == 0 {
        return Err(Error::Validation("empty dataset".into()));
    }
    let features = Array2::from_shape_vec((n, feature_ix.len()), feat_rows)
        .expect("row-major feature buffer");
    let covariates = if covariate_ix.is_empty() {
        None
    } else {
        Some(
            Array2::from_shape_vec((n, covariate_ix.len()), cov_rows)
                .expect("row-major covariate buffer"),
        )
    };

    let (target, task) = match schema.task {
        TaskSpec::Regression => {
            let vals = raw_target
                .iter()
                .enumerate()
                .map(|(r, s)| {
                    s.parse::<f64>().map_err(|_| Error::Parse {
                        row: r + 1,
                        column: schema.target_col.clone(),
                        message: format!("expected a number, got {s:?}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            (TargetValues::Real(vals), TaskKind::Regression)
        }
        TaskSpec::Classification => (
            TargetValues::Class(raw_target),
            TaskKind::Classification { classes: vec![] },
        ),
    };

    Dataset::new(
        features,
        sites,
        target,
        covariates,
        feature_ix.iter().map(|&i| headers[i].clone()).collect(),
        covariate_ix.iter().map(|&i| headers[i].clone()).collect(),
        task,
    )
}

/// A repeated k-fold plan over row indices.
///
/// Folds are stored repeat-major: entry `r*k + f` is fold `f` of repeat `r`.
/// Within every repeat the test sets partition `0..n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<(Vec<usize>, Vec<usize>)>,
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
}

/// Build a (optionally stratified) repeated k-fold plan.
///
/// A pure function of `(n, class labels, k, repeats, stratify, seed)`:
/// the same arguments always produce the same index lists.
pub fn make_folds(
    dataset: &Dataset,
    k: usize,
    repeats: usize,
    stratify: bool,
    seed: u64,
) -> Result<FoldPlan> {
    let n = dataset.n();
    if k < 2 {
        return Err(Error::Validation(format!("k must be >= 2, got {k}")));
    }
    if repeats < 1 {
        return Err(Error::Validation("repeats must be >= 1".into()));
    }
    if n < k {
        return Err(Error::Validation(format!(
            "cannot split {n} samples into {k} folds"
        )));
    }
    let strata: Vec<String> = if stratify {
        match dataset.task() {
            TaskKind::Classification { classes } => {
                let counts = class_counts(dataset.class_indices(), classes.len());
                if let Some((c, cnt)) = counts.iter().enumerate().find(|(_, &c)| c < k) {
                    return Err(Error::Validation(format!(
                        "class {:?} has {cnt} samples, fewer than k={k}",
                        classes[c]
                    )));
                }
                dataset
                    .class_indices()
                    .iter()
                    .map(|&c| classes[c].clone())
                    .collect()
            }
            TaskKind::Regression => {
                return Err(Error::Validation(
                    "stratified folds require a classification task".into(),
                ))
            }
        }
    } else {
        vec![String::new(); n]
    };

    let mut folds = Vec::with_capacity(k * repeats);
    for rep in 0..repeats {
        let rng_seed = rng::substream(seed, "folds", rep as u64);
        folds.extend(stratified_partition(&strata, k, rng_seed));
    }
    Ok(FoldPlan {
        folds,
        k,
        repeats,
        seed,
    })
}

/// Partition `0..n` into k folds balanced within each stratum.
///
/// Items of every stratum are shuffled and dealt round-robin, with a rolling
/// start offset so fold sizes stay within one item of each other overall.
/// Returns `(train, test)` pairs with sorted index lists.
pub fn stratified_partition(strata: &[String], k: usize, seed: u64) -> Vec<(Vec<usize>, Vec<usize>)> {
    let n = strata.len();
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in strata.iter().enumerate() {
        groups.entry(s.as_str()).or_default().push(i);
    }

    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; n];
    let mut offset = 0usize;
    for (_, mut idx) in groups {
        idx.shuffle(&mut rng);
        for (j, &row) in idx.iter().enumerate() {
            assignment[row] = (offset + j) % k;
        }
        offset = (offset + idx.len()) % k;
    }

    (0..k)
        .map(|f| {
            let test: Vec<usize> = (0..n).filter(|&i| assignment[i] == f).collect();
            let train: Vec<usize> = (0..n).filter(|&i| assignment[i] != f).collect();
            (train, test)
        })
        .collect()
}

pub(crate) fn class_counts(class_idx: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0usize; n_classes];
    for &c in class_idx {
        counts[c] += 1;
    }
    counts
}

/// Encode a target column as a real covariate matrix for harmonization.
///
/// Regression: one column of raw values. Binary classification: one 0/1
/// column (first class in sorted order = 0). K classes: K−1 indicator
/// columns against the first class.
pub fn encode_target_covariate(target: &TargetValues, task: &TaskKind) -> Result<Array2<f64>> {
    match (task, target) {
        (TaskKind::Regression, TargetValues::Real(v)) => {
            Ok(Array2::from_shape_vec((v.len(), 1), v.clone()).expect("column vector"))
        }
        (TaskKind::Classification { classes }, TargetValues::Class(labels)) => {
            let idx = labels
                .iter()
                .map(|l| task.class_index(l))
                .collect::<Result<Vec<usize>>>()?;
            Ok(encode_class_indices(&idx, classes.len()))
        }
        _ => Err(Error::Validation(
            "target kind does not match the task".into(),
        )),
    }
}

/// Indicator encoding of class indices: binary → one 0/1 column, K classes →
/// K−1 columns against class 0.
pub fn encode_class_indices(class_idx: &[usize], n_classes: usize) -> Array2<f64> {
    let n = class_idx.len();
    let width = if n_classes <= 2 { 1 } else { n_classes - 1 };
    let mut out = Array2::<f64>::zeros((n, width));
    for (j, &c) in class_idx.iter().enumerate() {
        if n_classes <= 2 {
            out[[j, 0]] = c as f64;
        } else if c > 0 {
            out[[j, c - 1]] = 1.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn schema(task: TaskSpec) -> Schema {
        Schema {
            site_col: "site".into(),
            target_col: "y".into(),
            feature_cols: ColumnSelect::Pattern("f*".into()),
            covariate_cols: vec![],
            task,
        }
    }

    #[test]
    fn loads_small_csv() {
        let f = write_csv("site,y,f1,f2\nA,0.5,1.0,2.0\nA,0.7,1.5,2.5\nB,0.9,3.0,4.0\nB,1.1,3.5,4.5\n");
        let ds = load_dataset(f.path(), &schema(TaskSpec::Regression)).unwrap();
        assert_eq!(ds.n(), 4);
        assert_eq!(ds.p(), 2);
        assert_eq!(ds.sites(), ["A", "A", "B", "B"]);
        assert_eq!(ds.feature_names(), ["f1", "f2"]);
    }

    #[test]
    fn header_only_file_is_empty() {
        let f = write_csv("site,y,f1\n");
        let err = load_dataset(f.path(), &schema(TaskSpec::Regression)).unwrap_err();
        assert!(err.to_string().contains("empty dataset"), "{err}");
    }

    #[test]
    fn single_row_site_is_rejected() {
        // site B appears once: oracle = count rows per site
        let f = write_csv("site,y,f1\nA,1,1.0\nA,2,2.0\nB,3,3.0\n");
        let err = load_dataset(f.path(), &schema(TaskSpec::Regression)).unwrap_err();
        assert!(err.to_string().contains("\"B\""), "{err}");
    }

    #[test]
    fn missing_column_is_schema_error() {
        let f = write_csv("place,y,f1\nA,1,1.0\nA,2,2.0\n");
        let err = load_dataset(f.path(), &schema(TaskSpec::Regression)).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
    }

    #[test]
    fn bad_cell_reports_row_and_column() {
        let f = write_csv("site,y,f1\nA,1,1.0\nA,2,oops\n");
        let err = load_dataset(f.path(), &schema(TaskSpec::Regression)).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "f1");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn empty_feature_cell_is_rejected() {
        let f = write_csv("site,y,f1\nA,1,1.0\nA,2,\n");
        assert!(load_dataset(f.path(), &schema(TaskSpec::Regression)).is_err());
    }

    #[test]
    fn classification_classes_sorted() {
        let f = write_csv("site,y,f1\nA,m,1.0\nA,f,2.0\nB,m,3.0\nB,f,4.0\n");
        let ds = load_dataset(f.path(), &schema(TaskSpec::Classification)).unwrap();
        match ds.task() {
            TaskKind::Classification { classes } => assert_eq!(classes, &["f", "m"]),
            _ => panic!("expected classification"),
        }
        assert_eq!(ds.class_indices(), [1, 0, 1, 0]);
    }

    fn toy_classification(n_per_class: usize) -> Dataset {
        let n = n_per_class * 2;
        let features = Array2::from_shape_fn((n, 2), |(i, j)| (i * 2 + j) as f64);
        let sites: Vec<String> = (0..n)
            .map(|i| if i % 2 == 0 { "A".into() } else { "B".into() })
            .collect();
        let labels: Vec<String> = (0..n)
            .map(|i| {
                if i < n_per_class {
                    "c0".into()
                } else {
                    "c1".into()
                }
            })
            .collect();
        Dataset::new(
            features,
            sites,
            TargetValues::Class(labels),
            None,
            vec!["f1".into(), "f2".into()],
            vec![],
            TaskKind::Classification { classes: vec![] },
        )
        .unwrap()
    }

    #[test]
    fn plain_folds_partition() {
        let ds = toy_classification(5);
        let plan = make_folds(&ds, 5, 1, false, 7).unwrap();
        assert_eq!(plan.folds.len(), 5);
        let mut seen = vec![false; 10];
        for (train, test) in &plan.folds {
            assert_eq!(test.len(), 2);
            assert_eq!(train.len(), 8);
            for &t in test {
                assert!(!seen[t], "test sets overlap");
                seen[t] = true;
                assert!(!train.contains(&t));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn stratified_folds_preserve_class_balance() {
        let ds = toy_classification(50);
        let plan = make_folds(&ds, 5, 1, true, 3).unwrap();
        for (_, test) in &plan.folds {
            let c1 = test.iter().filter(|&&i| ds.class_indices()[i] == 1).count();
            let c0 = test.len() - c1;
            assert_eq!(c0, 10);
            assert_eq!(c1, 10);
        }
    }

    #[test]
    fn folds_are_deterministic() {
        let ds = toy_classification(20);
        let a = make_folds(&ds, 4, 3, true, 11).unwrap();
        let b = make_folds(&ds, 4, 3, true, 11).unwrap();
        assert_eq!(a.folds, b.folds);
        let c = make_folds(&ds, 4, 3, true, 12).unwrap();
        assert_ne!(a.folds, c.folds);
    }

    #[test]
    fn stratification_requires_enough_class_members() {
        let ds = toy_classification(3);
        let err = make_folds(&ds, 5, 1, true, 0).unwrap_err();
        assert!(err.to_string().contains("fewer than k"), "{err}");
    }

    #[test]
    fn encodes_binary_indicator() {
        let target = TargetValues::Class(vec!["F".into(), "M".into(), "M".into()]);
        let task = TaskKind::Classification {
            classes: vec!["F".into(), "M".into()],
        };
        let enc = encode_target_covariate(&target, &task).unwrap();
        assert_eq!(enc.column(0).to_vec(), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn encodes_regression_identity() {
        let target = TargetValues::Real(vec![22.0, 31.0]);
        let enc = encode_target_covariate(&target, &TaskKind::Regression).unwrap();
        assert_eq!(enc.dim(), (2, 1));
        assert_eq!(enc.column(0).to_vec(), vec![22.0, 31.0]);
    }

    #[test]
    fn encodes_three_classes_as_two_indicators() {
        // one-hot minus reference, worked by hand
        let target = TargetValues::Class(vec!["a".into(), "b".into(), "c".into(), "a".into()]);
        let task = TaskKind::Classification {
            classes: vec!["a".into(), "b".into(), "c".into()],
        };
        let enc = encode_target_covariate(&target, &task).unwrap();
        assert_eq!(enc.dim(), (4, 2));
        assert_eq!(
            enc.outer_iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, 0.0]
            ]
        );
    }

    #[test]
    fn unseen_class_is_rejected() {
        let target = TargetValues::Class(vec!["F".into(), "X".into()]);
        let task = TaskKind::Classification {
            classes: vec!["F".into(), "M".into()],
        };
        let err = encode_target_covariate(&target, &task).unwrap_err();
        assert!(err.to_string().contains("known classes"), "{err}");
    }

    #[test]
    fn glob_patterns() {
        assert!(glob_match("f*", "f01"));
        assert!(glob_match("*_vol", "hippo_vol"));
        assert!(glob_match("f?", "f1"));
        assert!(!glob_match("f?", "f12"));
        assert!(!glob_match("f*", "g1"));
    }
}
