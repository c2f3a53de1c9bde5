//! CART decision trees shared by the random-forest wrappers.
//!
//! Classification trees minimize weighted Gini impurity, regression trees
//! minimize within-node variance. Candidate thresholds are midpoints between
//! consecutive distinct values; ties in gain resolve to the first candidate
//! in (sorted feature, ascending threshold) order, so growth is fully
//! deterministic given the RNG.

use ndarray::ArrayView2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf(LeafStat),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum LeafStat {
    /// Class frequencies of the training samples in the leaf.
    Probs(Vec<f64>),
    /// Mean target of the training samples in the leaf.
    Value(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

pub enum TreeTarget<'a> {
    Class { labels: &'a [usize], n_classes: usize },
    Real(&'a [f64]),
}

pub struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features drawn (without replacement) per split.
    pub n_candidates: usize,
}

struct Grower<'a> {
    x: ArrayView2<'a, f64>,
    target: &'a TreeTarget<'a>,
    params: &'a GrowParams,
    nodes: Vec<Node>,
}

impl Tree {
    pub fn grow(
        x: ArrayView2<f64>,
        target: &TreeTarget,
        samples: Vec<usize>,
        params: &GrowParams,
        rng: &mut ChaCha8Rng,
    ) -> Tree {
        let mut grower = Grower {
            x,
            target,
            params,
            nodes: Vec::new(),
        };
        grower.build(samples, 0, rng);
        Tree {
            nodes: grower.nodes,
        }
    }

    pub fn leaf_for(&self, row: &[f64]) -> &LeafStat {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf(stat) => return stat,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Grower<'_> {
    /// Append the subtree for `samples`, returning its root index.
    fn build(&mut self, samples: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> u32 {
        let at_depth_cap = self
            .params
            .max_depth
            .is_some_and(|d| depth >= d);
        if samples.len() < self.params.min_samples_split || at_depth_cap || self.is_pure(&samples)
        {
            return self.push_leaf(&samples);
        }
        let Some(split) = self.find_split(&samples, rng) else {
            return self.push_leaf(&samples);
        };

        let (left_samples, right_samples): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&s| self.x[[s, split.feature]] <= split.threshold);
        debug_assert!(!left_samples.is_empty() && !right_samples.is_empty());

        let node = self.nodes.len() as u32;
        self.nodes.push(Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: 0,
            right: 0,
        });
        let left = self.build(left_samples, depth + 1, rng);
        let right = self.build(right_samples, depth + 1, rng);
        match &mut self.nodes[node as usize] {
            Node::Split {
                left: l, right: r, ..
            } => {
                *l = left;
                *r = right;
            }
            Node::Leaf(_) => unreachable!(),
        }
        node
    }

    fn is_pure(&self, samples: &[usize]) -> bool {
        match self.target {
            TreeTarget::Class { labels, .. } => {
                let first = labels[samples[0]];
                samples.iter().all(|&s| labels[s] == first)
            }
            TreeTarget::Real(values) => {
                let first = values[samples[0]];
                samples.iter().all(|&s| values[s] == first)
            }
        }
    }

    fn push_leaf(&mut self, samples: &[usize]) -> u32 {
        let stat = match self.target {
            TreeTarget::Class { labels, n_classes } => {
                let mut counts = vec![0usize; *n_classes];
                for &s in samples {
                    counts[labels[s]] += 1;
                }
                let n = samples.len() as f64;
                LeafStat::Probs(counts.into_iter().map(|c| c as f64 / n).collect())
            }
            TreeTarget::Real(values) => {
                let sum: f64 = samples.iter().map(|&s| values[s]).sum();
                LeafStat::Value(sum / samples.len() as f64)
            }
        };
        let at = self.nodes.len() as u32;
        self.nodes.push(Node::Leaf(stat));
        at
    }

    fn find_split(&self, samples: &[usize], rng: &mut ChaCha8Rng) -> Option<BestSplit> {
        let p = self.x.ncols();
        let m = self.params.n_candidates.min(p).max(1);
        // partial Fisher-Yates, then sorted for a canonical scan order
        let mut pool: Vec<usize> = (0..p).collect();
        for i in 0..m {
            let j = rng.random_range(i..p);
            pool.swap(i, j);
        }
        let mut candidates: Vec<usize> = pool[..m].to_vec();
        candidates.sort_unstable();

        let mut order: Vec<usize> = samples.to_vec();
        let mut best: Option<BestSplit> = None;
        for &f in &candidates {
            order.sort_unstable_by(|&a, &b| self.x[[a, f]].total_cmp(&self.x[[b, f]]));
            if let Some(split) = self.scan_feature(f, &order) {
                if best.as_ref().is_none_or(|b| split.score > b.score) {
                    best = Some(split);
                }
            }
        }
        best
    }

    /// Scan boundaries between distinct values of one feature; returns the
    /// best split or `None` when the feature is constant on the node.
    fn scan_feature(&self, feature: usize, order: &[usize]) -> Option<BestSplit> {
        let n = order.len();
        match self.target {
            TreeTarget::Class { labels, n_classes } => {
                let mut total = vec![0usize; *n_classes];
                for &s in order {
                    total[labels[s]] += 1;
                }
                let mut left = vec![0usize; *n_classes];
                let mut best: Option<BestSplit> = None;
                for i in 0..n - 1 {
                    left[labels[order[i]]] += 1;
                    let lo = self.x[[order[i], feature]];
                    let hi = self.x[[order[i + 1], feature]];
                    if lo == hi {
                        continue;
                    }
                    let n_left = (i + 1) as f64;
                    let n_right = (n - i - 1) as f64;
                    // maximizing sum of squared counts over child size is
                    // equivalent to minimizing weighted Gini impurity
                    let sq = |counts: &[usize], side: f64| {
                        counts.iter().map(|&c| (c * c) as f64).sum::<f64>() / side
                    };
                    let right: Vec<usize> =
                        total.iter().zip(&left).map(|(t, l)| t - l).collect();
                    let score = sq(&left, n_left) + sq(&right, n_right);
                    if best.as_ref().is_none_or(|b| score > b.score) {
                        best = Some(BestSplit {
                            feature,
                            threshold: 0.5 * (lo + hi),
                            score,
                        });
                    }
                }
                best
            }
            TreeTarget::Real(values) => {
                let total_sum: f64 = order.iter().map(|&s| values[s]).sum();
                let mut left_sum = 0.0;
                let mut best: Option<BestSplit> = None;
                for i in 0..n - 1 {
                    left_sum += values[order[i]];
                    let lo = self.x[[order[i], feature]];
                    let hi = self.x[[order[i + 1], feature]];
                    if lo == hi {
                        continue;
                    }
                    let n_left = (i + 1) as f64;
                    let n_right = (n - i - 1) as f64;
                    let right_sum = total_sum - left_sum;
                    // maximizing this is equivalent to minimizing child SSE
                    let score = left_sum * left_sum / n_left + right_sum * right_sum / n_right;
                    if best.as_ref().is_none_or(|b| score > b.score) {
                        best = Some(BestSplit {
                            feature,
                            threshold: 0.5 * (lo + hi),
                            score,
                        });
                    }
                }
                best
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand_chacha::rand_core::SeedableRng;

    fn params(p: usize) -> GrowParams {
        GrowParams {
            max_depth: None,
            min_samples_split: 2,
            n_candidates: p,
        }
    }

    #[test]
    fn separates_a_clean_threshold() {
        let x = array![[1.0], [2.0], [3.0], [10.0], [11.0], [12.0]];
        let labels = vec![0, 0, 0, 1, 1, 1];
        let target = TreeTarget::Class {
            labels: &labels,
            n_classes: 2,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = Tree::grow(x.view(), &target, (0..6).collect(), &params(1), &mut rng);
        match tree.leaf_for(&[2.5]) {
            LeafStat::Probs(p) => assert_eq!(p, &vec![1.0, 0.0]),
            other => panic!("unexpected leaf {other:?}"),
        }
        match tree.leaf_for(&[11.5]) {
            LeafStat::Probs(p) => assert_eq!(p, &vec![0.0, 1.0]),
            other => panic!("unexpected leaf {other:?}"),
        }
    }

    #[test]
    fn regression_tree_fits_step_function() {
        let x = array![[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]];
        let values = vec![1.0, 1.0, 1.0, 5.0, 5.0, 5.0];
        let target = TreeTarget::Real(&values);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = Tree::grow(x.view(), &target, (0..6).collect(), &params(1), &mut rng);
        assert!(matches!(tree.leaf_for(&[0.5]), LeafStat::Value(v) if *v == 1.0));
        assert!(matches!(tree.leaf_for(&[11.0]), LeafStat::Value(v) if *v == 5.0));
    }

    #[test]
    fn constant_features_become_a_leaf() {
        let x = array![[3.0], [3.0], [3.0], [3.0]];
        let labels = vec![0, 1, 0, 1];
        let target = TreeTarget::Class {
            labels: &labels,
            n_classes: 2,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = Tree::grow(x.view(), &target, (0..4).collect(), &params(1), &mut rng);
        match tree.leaf_for(&[3.0]) {
            LeafStat::Probs(p) => assert_eq!(p, &vec![0.5, 0.5]),
            other => panic!("unexpected leaf {other:?}"),
        }
    }
}
