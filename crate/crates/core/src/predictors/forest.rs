//! Bagged CART forests for classification and regression.
//!
//! Bootstrap draws are defined on a canonical (lexicographically sorted) row
//! ordering, so training is invariant to permutations of the input rows under
//! the same seed. Trees grow in parallel with per-tree derived seeds.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{GrowParams, LeafStat, Tree, TreeTarget};
use super::{ForestConfig, MaxFeatures};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestClassifier {
    trees: Vec<Tree>,
    pub n_classes: usize,
    pub n_features: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestRegressor {
    trees: Vec<Tree>,
    pub n_features: usize,
}

fn resolve_candidates(max_features: &MaxFeatures, p: usize) -> usize {
    match max_features {
        MaxFeatures::Sqrt => (p as f64).sqrt().floor().max(1.0) as usize,
        MaxFeatures::All => p,
        MaxFeatures::Count(c) => (*c).clamp(1, p),
    }
}

/// Rows sorted by feature content, ties broken by the target, so identical
/// inputs in any order yield identical bootstrap content.
fn canonical_order(x: ArrayView2<f64>, target: &TreeTarget) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    order.sort_unstable_by(|&a, &b| {
        for g in 0..x.ncols() {
            let c = x[[a, g]].total_cmp(&x[[b, g]]);
            if c != std::cmp::Ordering::Equal {
                return c;
            }
        }
        match target {
            TreeTarget::Class { labels, .. } => labels[a].cmp(&labels[b]),
            TreeTarget::Real(values) => values[a].total_cmp(&values[b]),
        }
    });
    order
}

fn grow_forest(
    x: ArrayView2<f64>,
    target: &TreeTarget,
    config: &ForestConfig,
) -> Result<Vec<Tree>> {
    let (n, p) = x.dim();
    if n < 2 {
        return Err(Error::Validation(
            "forest training needs at least 2 samples".into(),
        ));
    }
    let order = canonical_order(x, target);
    let params = GrowParams {
        max_depth: config.max_depth,
        min_samples_split: config.min_samples_split,
        n_candidates: resolve_candidates(&config.max_features, p),
    };
    let trees: Vec<Tree> = (0..config.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut tree_rng = rng::stream_rng(config.seed, "tree", i as u64);
            let bootstrap: Vec<usize> = (0..n)
                .map(|_| order[tree_rng.random_range(0..n)])
                .collect();
            Tree::grow(x, target, bootstrap, &params, &mut tree_rng)
        })
        .collect();
    Ok(trees)
}

impl ForestClassifier {
    pub fn train(
        x: ArrayView2<f64>,
        labels: &[usize],
        n_classes: usize,
        config: &ForestConfig,
    ) -> Result<ForestClassifier> {
        let target = TreeTarget::Class { labels, n_classes };
        let trees = grow_forest(x, &target, config)?;
        Ok(ForestClassifier {
            trees,
            n_classes,
            n_features: x.ncols(),
        })
    }

    /// Mean of per-tree leaf class frequencies; each row sums to one up to
    /// rounding.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let m = x.nrows();
        let mut out = Array2::<f64>::zeros((m, self.n_classes));
        let scale = 1.0 / self.trees.len() as f64;
        let mut row_buf = vec![0.0f64; x.ncols()];
        for j in 0..m {
            for (b, v) in row_buf.iter_mut().zip(x.row(j)) {
                *b = *v;
            }
            for tree in &self.trees {
                if let LeafStat::Probs(p) = tree.leaf_for(&row_buf) {
                    for (k, v) in p.iter().enumerate() {
                        out[[j, k]] += v;
                    }
                }
            }
            for k in 0..self.n_classes {
                out[[j, k]] *= scale;
            }
        }
        out
    }
}

impl ForestRegressor {
    pub fn train(
        x: ArrayView2<f64>,
        values: &[f64],
        config: &ForestConfig,
    ) -> Result<ForestRegressor> {
        let target = TreeTarget::Real(values);
        let trees = grow_forest(x, &target, config)?;
        Ok(ForestRegressor {
            trees,
            n_features: x.ncols(),
        })
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let scale = 1.0 / self.trees.len() as f64;
        let mut row_buf = vec![0.0f64; x.ncols()];
        (0..x.nrows())
            .map(|j| {
                for (b, v) in row_buf.iter_mut().zip(x.row(j)) {
                    *b = *v;
                }
                let sum: f64 = self
                    .trees
                    .iter()
                    .map(|t| match t.leaf_for(&row_buf) {
                        LeafStat::Value(v) => *v,
                        LeafStat::Probs(_) => unreachable!("regression tree"),
                    })
                    .sum();
                sum * scale
            })
            .collect()
    }
}
