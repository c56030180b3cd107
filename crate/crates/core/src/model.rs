//! From-scratch CART trees and Random Forests, plus the last-value
//! baseline.
//!
//! Training is deterministic by construction: all randomness derives
//! from splitmix64 seeds, candidate thresholds are midpoints between
//! consecutive distinct sorted feature values, and ties between equally
//! good splits resolve to the lowest feature index and then the lowest
//! threshold. Per-node statistics accumulate over value-sorted samples,
//! so fitting with `bootstrap = false` is invariant to training row
//! order down to the last bit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{splitmix64, Real, SplitMix64};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    BadParams(String),
    #[error("training data must contain at least one row and one column")]
    EmptyTrainingSet,
    #[error("history must be non-empty")]
    EmptyHistory,
    #[error("forest was trained for a different task")]
    TaskMismatch,
    #[error("unsupported forest format version {0}")]
    BadVersion(u32),
    #[error("forest deserialization failed: {0}")]
    Serde(String),
}

/// What a forest predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

/// Per-tree growth limits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 12,
            min_samples_split: 2,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.max_depth < 1 {
            return Err(ModelError::BadParams("max_depth must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(ModelError::BadParams(
                "min_samples_split must be >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// Ensemble parameters. `mtry` of `None` picks the conventional default
/// at fit time: ceil(sqrt(p)) for classification, ceil(p/3) for
/// regression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            mtry: None,
            bootstrap: true,
            seed: 0,
            tree: TreeParams::default(),
        }
    }
}

impl ForestParams {
    pub fn validate(&self, n_features: usize) -> Result<(), ModelError> {
        self.tree.validate()?;
        if self.n_trees < 1 {
            return Err(ModelError::BadParams("n_trees must be >= 1".into()));
        }
        if let Some(mtry) = self.mtry {
            if mtry < 1 || mtry > n_features {
                return Err(ModelError::BadParams(format!(
                    "mtry must lie in [1, {n_features}], got {mtry}"
                )));
            }
        }
        Ok(())
    }
}

/// Training targets: class indices or regression values.
#[derive(Debug, Clone, Copy)]
pub enum TrainingTargets<'a, R: Real> {
    Classes {
        labels: &'a [usize],
        n_classes: usize,
    },
    Values(&'a [R]),
}

impl<'a, R: Real> TrainingTargets<'a, R> {
    fn len(&self) -> usize {
        match self {
            TrainingTargets::Classes { labels, .. } => labels.len(),
            TrainingTargets::Values(values) => values.len(),
        }
    }

    fn task(&self) -> Task {
        match self {
            TrainingTargets::Classes { .. } => Task::Classification,
            TrainingTargets::Values(_) => Task::Regression,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node<R> {
    Split {
        feature: usize,
        threshold: R,
        left: usize,
        right: usize,
    },
    ClassLeaf {
        counts: Vec<u64>,
    },
    ValueLeaf {
        value: R,
    },
}

/// A fitted CART tree stored as a node arena with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<R> {
    pub nodes: Vec<Node<R>>,
}

impl<R: Real> Tree<R> {
    fn leaf(&self, row: &[R]) -> &Node<R> {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
                leaf => return leaf,
            }
        }
    }

    /// Majority class at the reached leaf; count ties resolve to the
    /// lowest class index.
    pub fn predict_class(&self, row: &[R]) -> Result<usize, ModelError> {
        match self.leaf(row) {
            Node::ClassLeaf { counts } => Ok(argmax(counts)),
            _ => Err(ModelError::TaskMismatch),
        }
    }

    pub fn predict_value(&self, row: &[R]) -> Result<R, ModelError> {
        match self.leaf(row) {
            Node::ValueLeaf { value } => Ok(*value),
            _ => Err(ModelError::TaskMismatch),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<R>(nodes: &[Node<R>], at: usize) -> usize {
            match &nodes[at] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                _ => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

fn argmax(counts: &[u64]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct TreeBuilder<'a, R: Real> {
    x: &'a [Vec<R>],
    targets: TrainingTargets<'a, R>,
    params: &'a TreeParams,
    n_features: usize,
    mtry: usize,
    nodes: Vec<Node<R>>,
}

struct BestSplit<R> {
    feature: usize,
    threshold: R,
    weighted_impurity: R,
}

impl<'a, R: Real> TreeBuilder<'a, R> {
    fn build(&mut self, samples: &[usize], depth: usize, rng: &mut SplitMix64) -> usize {
        let can_split = samples.len() >= self.params.min_samples_split
            && depth < self.params.max_depth
            && !self.is_pure(samples);

        if can_split {
            if let Some(split) = self.best_split(samples, rng) {
                let (left_samples, right_samples): (Vec<usize>, Vec<usize>) = samples
                    .iter()
                    .partition(|&&i| self.x[i][split.feature] <= split.threshold);
                let at = self.nodes.len();
                // Placeholder; children indices are patched in below.
                self.nodes.push(Node::Split {
                    feature: split.feature,
                    threshold: split.threshold,
                    left: 0,
                    right: 0,
                });
                let left = self.build(&left_samples, depth + 1, rng);
                let right = self.build(&right_samples, depth + 1, rng);
                if let Node::Split {
                    left: l, right: r, ..
                } = &mut self.nodes[at]
                {
                    *l = left;
                    *r = right;
                }
                return at;
            }
        }
        self.make_leaf(samples)
    }

    fn is_pure(&self, samples: &[usize]) -> bool {
        match &self.targets {
            TrainingTargets::Classes { labels, .. } => {
                samples.windows(2).all(|w| labels[w[0]] == labels[w[1]])
            }
            TrainingTargets::Values(values) => {
                samples.windows(2).all(|w| values[w[0]] == values[w[1]])
            }
        }
    }

    fn make_leaf(&mut self, samples: &[usize]) -> usize {
        let node = match &self.targets {
            TrainingTargets::Classes { labels, n_classes } => {
                let mut counts = vec![0u64; *n_classes];
                for &i in samples {
                    counts[labels[i]] += 1;
                }
                Node::ClassLeaf { counts }
            }
            TrainingTargets::Values(values) => {
                // Summing in sorted-value order keeps the leaf mean
                // independent of training row order.
                let mut ys: Vec<R> = samples.iter().map(|&i| values[i]).collect();
                ys.sort_by(|a, b| a.partial_cmp(b).expect("finite targets"));
                let sum = ys.iter().fold(R::zero(), |acc, &v| acc + v);
                Node::ValueLeaf {
                    value: sum / R::from_count(ys.len()),
                }
            }
        };
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    /// Candidate features for this node, ascending.
    fn candidate_features(&self, rng: &mut SplitMix64) -> Vec<usize> {
        if self.mtry >= self.n_features {
            (0..self.n_features).collect()
        } else {
            let mut picked = rng.sample_indices(self.n_features, self.mtry);
            picked.sort_unstable();
            picked
        }
    }

    fn best_split(&self, samples: &[usize], rng: &mut SplitMix64) -> Option<BestSplit<R>> {
        let mut best: Option<BestSplit<R>> = None;
        for feature in self.candidate_features(rng) {
            self.scan_feature(feature, samples, &mut best);
        }
        best
    }

    fn scan_feature(&self, feature: usize, samples: &[usize], best: &mut Option<BestSplit<R>>) {
        let n = samples.len();
        let nr = R::from_count(n);
        match &self.targets {
            TrainingTargets::Classes { labels, n_classes } => {
                let mut pairs: Vec<(R, usize)> = samples
                    .iter()
                    .map(|&i| (self.x[i][feature], labels[i]))
                    .collect();
                pairs.sort_by(|a, b| {
                    a.0.partial_cmp(&b.0)
                        .expect("finite features")
                        .then(a.1.cmp(&b.1))
                });
                let mut total = vec![0u64; *n_classes];
                for &(_, class) in &pairs {
                    total[class] += 1;
                }
                let mut left = vec![0u64; *n_classes];
                for i in 0..n - 1 {
                    left[pairs[i].1] += 1;
                    if pairs[i].0 == pairs[i + 1].0 {
                        continue;
                    }
                    let nl = i + 1;
                    let gini = |counts: &[u64], total_n: usize| {
                        let tn = R::from_count(total_n);
                        let sum_sq = counts.iter().fold(R::zero(), |acc, &c| {
                            let p = R::from_count(c as usize) / tn;
                            acc + p * p
                        });
                        R::one() - sum_sq
                    };
                    let right: Vec<u64> = total
                        .iter()
                        .zip(&left)
                        .map(|(&t, &l)| t - l)
                        .collect();
                    let weighted = R::from_count(nl) / nr * gini(&left, nl)
                        + R::from_count(n - nl) / nr * gini(&right, n - nl);
                    let threshold = midpoint(pairs[i].0, pairs[i + 1].0);
                    consider(best, feature, threshold, weighted);
                }
            }
            TrainingTargets::Values(values) => {
                let mut pairs: Vec<(R, R)> = samples
                    .iter()
                    .map(|&i| (self.x[i][feature], values[i]))
                    .collect();
                pairs.sort_by(|a, b| {
                    a.0.partial_cmp(&b.0)
                        .expect("finite features")
                        .then(a.1.partial_cmp(&b.1).expect("finite targets"))
                });
                let total_sum = pairs.iter().fold(R::zero(), |acc, p| acc + p.1);
                let total_sq = pairs.iter().fold(R::zero(), |acc, p| acc + p.1 * p.1);
                let mut left_sum = R::zero();
                let mut left_sq = R::zero();
                for i in 0..n - 1 {
                    left_sum = left_sum + pairs[i].1;
                    left_sq = left_sq + pairs[i].1 * pairs[i].1;
                    if pairs[i].0 == pairs[i + 1].0 {
                        continue;
                    }
                    let nl = R::from_count(i + 1);
                    let nrr = R::from_count(n - i - 1);
                    let variance = |sum: R, sq: R, count: R| {
                        let mean = sum / count;
                        (sq / count - mean * mean).max(R::zero())
                    };
                    let weighted = nl / nr * variance(left_sum, left_sq, nl)
                        + nrr / nr * variance(total_sum - left_sum, total_sq - left_sq, nrr);
                    let threshold = midpoint(pairs[i].0, pairs[i + 1].0);
                    consider(best, feature, threshold, weighted);
                }
            }
        }
    }
}

/// Midpoint between two consecutive distinct sorted values. When the
/// exact midpoint rounds up to `b` (adjacent floats), fall back to `a`
/// so the `x <= threshold` partition always leaves both sides occupied.
fn midpoint<R: Real>(a: R, b: R) -> R {
    let mid = (a + b) / R::from_count(2);
    if mid < b {
        mid
    } else {
        a
    }
}

/// Keep the candidate only when strictly better; scanning features and
/// thresholds in ascending order therefore implements the documented
/// tie-break.
fn consider<R: Real>(best: &mut Option<BestSplit<R>>, feature: usize, threshold: R, weighted: R) {
    let better = match best {
        None => true,
        Some(b) => weighted < b.weighted_impurity,
    };
    if better {
        *best = Some(BestSplit {
            feature,
            threshold,
            weighted_impurity: weighted,
        });
    }
}

fn validate_training_data<R: Real>(
    x: &[Vec<R>],
    targets: &TrainingTargets<'_, R>,
) -> Result<usize, ModelError> {
    let n = x.len();
    if n == 0 || x[0].is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let p = x[0].len();
    if x.iter().any(|row| row.len() != p) {
        return Err(ModelError::DimensionMismatch(
            "all rows must have the same number of features".into(),
        ));
    }
    if targets.len() != n {
        return Err(ModelError::DimensionMismatch(format!(
            "{} rows but {} targets",
            n,
            targets.len()
        )));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ModelError::BadParams("features must be finite".into()));
    }
    match targets {
        TrainingTargets::Classes { labels, n_classes } => {
            if labels.iter().any(|&c| c >= *n_classes) {
                return Err(ModelError::DimensionMismatch(
                    "class label out of range".into(),
                ));
            }
        }
        TrainingTargets::Values(values) => {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::BadParams("targets must be finite".into()));
            }
        }
    }
    Ok(p)
}

/// Fit a single CART tree on all features.
pub fn fit_tree<R: Real>(
    x: &[Vec<R>],
    targets: TrainingTargets<'_, R>,
    params: &TreeParams,
    rng: &mut SplitMix64,
) -> Result<Tree<R>, ModelError> {
    let p = validate_training_data(x, &targets)?;
    params.validate()?;
    let mut builder = TreeBuilder {
        x,
        targets,
        params,
        n_features: p,
        mtry: p,
        nodes: Vec::new(),
    };
    let samples: Vec<usize> = (0..x.len()).collect();
    builder.build(&samples, 0, rng);
    Ok(Tree {
        nodes: builder.nodes,
    })
}

/// A fitted ensemble with everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest<R> {
    pub task: Task,
    pub params: ForestParams,
    pub n_features: usize,
    pub n_classes: Option<usize>,
    pub tree_seeds: Vec<u64>,
    pub trees: Vec<Tree<R>>,
}

/// Forest prediction for a classification task.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPrediction {
    pub class: usize,
    /// Fraction of trees voting for the predicted class.
    pub probability: f64,
    pub votes: Vec<u64>,
}

const FOREST_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ForestDocument<R> {
    version: u32,
    forest: Forest<R>,
}

/// Fit a random forest. Tree `t` is trained with seed
/// `splitmix64(seed + t)`; given the same data and parameters the result
/// is identical however many threads participate.
pub fn fit_forest<R: Real>(
    x: &[Vec<R>],
    targets: TrainingTargets<'_, R>,
    params: &ForestParams,
) -> Result<Forest<R>, ModelError> {
    let p = validate_training_data(x, &targets)?;
    params.validate(p)?;
    let task = targets.task();
    let mtry = params.mtry.unwrap_or(match task {
        Task::Classification => (p as f64).sqrt().ceil() as usize,
        Task::Regression => p.div_ceil(3),
    });

    let tree_seeds: Vec<u64> = (0..params.n_trees)
        .map(|t| splitmix64(params.seed.wrapping_add(t as u64)))
        .collect();

    let n = x.len();
    let trees: Vec<Tree<R>> = tree_seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = SplitMix64::new(seed);
            let samples: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.next_below(n as u64) as usize).collect()
            } else {
                (0..n).collect()
            };
            let mut builder = TreeBuilder {
                x,
                targets,
                params: &params.tree,
                n_features: p,
                mtry,
                nodes: Vec::new(),
            };
            builder.build(&samples, 0, &mut rng);
            Tree {
                nodes: builder.nodes,
            }
        })
        .collect();

    Ok(Forest {
        task,
        params: params.clone(),
        n_features: p,
        n_classes: match targets {
            TrainingTargets::Classes { n_classes, .. } => Some(n_classes),
            TrainingTargets::Values(_) => None,
        },
        tree_seeds,
        trees,
    })
}

impl<R: Real> Forest<R> {
    fn check_row(&self, row: &[R]) -> Result<(), ModelError> {
        if row.len() != self.n_features {
            return Err(ModelError::DimensionMismatch(format!(
                "expected {} features, got {}",
                self.n_features,
                row.len()
            )));
        }
        Ok(())
    }

    /// Majority vote over the trees; vote ties resolve to the lowest
    /// class index.
    pub fn predict_class(&self, row: &[R]) -> Result<ClassPrediction, ModelError> {
        if self.task != Task::Classification {
            return Err(ModelError::TaskMismatch);
        }
        self.check_row(row)?;
        let n_classes = self.n_classes.unwrap_or(0);
        let mut votes = vec![0u64; n_classes];
        for tree in &self.trees {
            votes[tree.predict_class(row)?] += 1;
        }
        let class = argmax(&votes);
        Ok(ClassPrediction {
            class,
            probability: votes[class] as f64 / self.trees.len() as f64,
            votes,
        })
    }

    /// Mean of the tree leaf means, without the output clamp.
    pub fn predict_value_raw(&self, row: &[R]) -> Result<R, ModelError> {
        if self.task != Task::Regression {
            return Err(ModelError::TaskMismatch);
        }
        self.check_row(row)?;
        let mut sum = R::zero();
        for tree in &self.trees {
            sum = sum + tree.predict_value(row)?;
        }
        Ok(sum / R::from_count(self.trees.len()))
    }

    /// Regression prediction clamped to `[0, 1]`, the contest-intensity
    /// range.
    pub fn predict_value(&self, row: &[R]) -> Result<R, ModelError> {
        Ok(self.predict_value_raw(row)?.max(R::zero()).min(R::one()))
    }

    /// Versioned JSON serialization; stable byte-for-byte for a given
    /// forest.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ForestDocument {
            version: FOREST_FORMAT_VERSION,
            forest: self.clone(),
        })
        .expect("forest serialization cannot fail")
    }

    pub fn from_json(raw: &str) -> Result<Forest<R>, ModelError> {
        let doc: ForestDocument<R> =
            serde_json::from_str(raw).map_err(|e| ModelError::Serde(e.to_string()))?;
        if doc.version != FOREST_FORMAT_VERSION {
            return Err(ModelError::BadVersion(doc.version));
        }
        Ok(doc.forest)
    }
}

/// The last-value baseline: tomorrow looks like today.
pub fn last_baseline<T: Clone>(history: &[T]) -> Result<T, ModelError> {
    history.last().cloned().ok_or(ModelError::EmptyHistory)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(data: &[&[f64]]) -> Vec<Vec<f64>> {
        data.iter().map(|r| r.to_vec()).collect()
    }

    fn classes(labels: &[usize]) -> TrainingTargets<'_, f64> {
        TrainingTargets::Classes {
            labels,
            n_classes: 2,
        }
    }

    #[test]
    fn pure_root_collapses_to_one_leaf() {
        let x = rows(&[&[1.0], &[2.0], &[3.0]]);
        let labels = [1, 1, 1];
        let tree = fit_tree(
            &x,
            classes(&labels),
            &TreeParams::default(),
            &mut SplitMix64::new(0),
        )
        .unwrap();
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.predict_class(&[999.0]).unwrap(), 1);
    }

    #[test]
    fn one_dimensional_split_lands_at_midpoint() {
        let x = rows(&[&[1.0], &[2.0], &[3.0], &[4.0]]);
        let labels = [0, 0, 1, 1];
        let tree = fit_tree(
            &x,
            classes(&labels),
            &TreeParams::default(),
            &mut SplitMix64::new(0),
        )
        .unwrap();
        match &tree.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 2.5);
            }
            other => panic!("expected split at root, got {other:?}"),
        }
        for (row, label) in x.iter().zip(labels) {
            assert_eq!(tree.predict_class(row).unwrap(), label);
        }
    }

    #[test]
    fn xor_needs_depth_two() {
        let x = rows(&[&[0.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]]);
        let labels = [0, 1, 1, 0];
        let tree = fit_tree(
            &x,
            classes(&labels),
            &TreeParams {
                max_depth: 2,
                min_samples_split: 2,
            },
            &mut SplitMix64::new(0),
        )
        .unwrap();
        for (row, label) in x.iter().zip(labels) {
            assert_eq!(tree.predict_class(row).unwrap(), label, "row {row:?}");
        }
        assert_eq!(tree.depth(), 2);
    }

    #[test]
    fn depth_limit_is_respected() {
        let x = rows(&[&[0.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]]);
        let labels = [0, 1, 1, 0];
        let tree = fit_tree(
            &x,
            classes(&labels),
            &TreeParams {
                max_depth: 1,
                min_samples_split: 2,
            },
            &mut SplitMix64::new(0),
        )
        .unwrap();
        assert!(tree.depth() <= 1);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let x = rows(&[&[1.0], &[2.0]]);
        let labels = [0, 1, 0];
        let err = fit_tree(
            &x,
            classes(&labels),
            &TreeParams::default(),
            &mut SplitMix64::new(0),
        );
        assert!(matches!(err, Err(ModelError::DimensionMismatch(_))));
    }

    #[test]
    fn single_tree_forest_reduces_to_fit_tree() {
        let x = rows(&[&[1.0, 5.0], &[2.0, 4.0], &[3.0, 3.0], &[4.0, 2.0], &[5.0, 1.0]]);
        let labels = [0, 0, 1, 1, 1];
        let params = ForestParams {
            n_trees: 1,
            mtry: Some(2),
            bootstrap: false,
            seed: 9,
            tree: TreeParams::default(),
        };
        let forest = fit_forest(&x, classes(&labels), &params).unwrap();
        let tree = fit_tree(
            &x,
            classes(&labels),
            &TreeParams::default(),
            &mut SplitMix64::new(splitmix64(9)),
        )
        .unwrap();
        for row in &x {
            assert_eq!(
                forest.predict_class(row).unwrap().class,
                tree.predict_class(row).unwrap()
            );
        }
    }

    #[test]
    fn same_seed_gives_bit_identical_forests() {
        let x = rows(&[&[1.0, 2.0], &[2.0, 1.0], &[3.0, 5.0], &[4.0, 3.0], &[5.0, 0.0]]);
        let labels = [0, 1, 0, 1, 1];
        let params = ForestParams {
            n_trees: 20,
            seed: 1234,
            ..ForestParams::default()
        };
        let f1 = fit_forest(&x, classes(&labels), &params).unwrap();
        let f2 = fit_forest(&x, classes(&labels), &params).unwrap();
        assert_eq!(f1.to_json(), f2.to_json());
    }

    #[test]
    fn mtry_larger_than_p_is_a_configuration_error() {
        let x = rows(&[&[1.0], &[2.0]]);
        let labels = [0, 1];
        let params = ForestParams {
            mtry: Some(2),
            ..ForestParams::default()
        };
        let err = fit_forest(&x, classes(&labels), &params);
        assert!(matches!(err, Err(ModelError::BadParams(_))));
    }

    #[test]
    fn regression_predicts_leaf_means() {
        let x = rows(&[&[1.0], &[2.0], &[3.0], &[4.0]]);
        let values = [0.1, 0.1, 0.3, 0.3];
        let params = ForestParams {
            n_trees: 2,
            bootstrap: false,
            mtry: Some(1),
            seed: 0,
            tree: TreeParams::default(),
        };
        let forest = fit_forest(&x, TrainingTargets::Values(&values), &params).unwrap();
        // Identical trees, each predicting the leaf mean exactly.
        assert_eq!(forest.predict_value(&[1.5]).unwrap(), 0.1);
        assert_eq!(forest.predict_value(&[3.5]).unwrap(), 0.3);
    }

    #[test]
    fn regression_output_is_clamped_to_unit_interval() {
        let x = rows(&[&[1.0], &[2.0]]);
        let values = [1.4, 1.4];
        let params = ForestParams {
            n_trees: 3,
            bootstrap: false,
            mtry: Some(1),
            seed: 0,
            tree: TreeParams::default(),
        };
        let forest = fit_forest(&x, TrainingTargets::Values(&values), &params).unwrap();
        let raw = forest.predict_value_raw(&[1.0]).unwrap();
        assert!((raw - 1.4).abs() < 1e-12, "raw {raw}");
        assert_eq!(forest.predict_value(&[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn regression_forest_averages_tree_means() {
        let forest = Forest {
            task: Task::Regression,
            params: ForestParams {
                n_trees: 2,
                ..ForestParams::default()
            },
            n_features: 1,
            n_classes: None,
            tree_seeds: vec![0, 1],
            trees: vec![
                Tree {
                    nodes: vec![Node::ValueLeaf { value: 0.1 }],
                },
                Tree {
                    nodes: vec![Node::ValueLeaf { value: 0.3 }],
                },
            ],
        };
        assert_eq!(forest.predict_value(&[0.0]).unwrap(), 0.2);
    }

    #[test]
    fn class_vote_tie_resolves_to_index_zero() {
        // Two constant-leaf trees voting for different classes.
        let forest = Forest {
            task: Task::Classification,
            params: ForestParams {
                n_trees: 2,
                ..ForestParams::default()
            },
            n_features: 1,
            n_classes: Some(2),
            tree_seeds: vec![0, 1],
            trees: vec![
                Tree {
                    nodes: vec![Node::ClassLeaf { counts: vec![3, 0] }],
                },
                Tree {
                    nodes: vec![Node::ClassLeaf { counts: vec![0, 3] }],
                },
            ],
        };
        let prediction = forest.predict_class(&[0.0]).unwrap();
        assert_eq!(prediction.class, 0);
        assert_eq!(prediction.probability, 0.5);
    }

    #[test]
    fn single_leaf_forest_predicts_a_constant() {
        let x = rows(&[&[1.0], &[2.0]]);
        let labels = [1, 1];
        let forest = fit_forest(&x, classes(&labels), &ForestParams::default()).unwrap();
        assert_eq!(forest.predict_class(&[-10.0]).unwrap().class, 1);
        assert_eq!(forest.predict_class(&[10.0]).unwrap().probability, 1.0);
    }

    #[test]
    fn forest_json_round_trips() {
        let x = rows(&[&[1.0, 0.0], &[2.0, 1.0], &[3.0, 0.0], &[4.0, 1.0]]);
        let labels = [0, 0, 1, 1];
        let forest = fit_forest(&x, classes(&labels), &ForestParams::default()).unwrap();
        let json = forest.to_json();
        let restored: Forest<f64> = Forest::from_json(&json).unwrap();
        assert_eq!(forest, restored);
        assert_eq!(json, restored.to_json());
    }

    #[test]
    fn unsupported_version_is_rejected() {
        let x = rows(&[&[1.0], &[2.0]]);
        let labels = [0, 1];
        let forest = fit_forest(&x, classes(&labels), &ForestParams::default()).unwrap();
        let json = forest.to_json().replace("\"version\":1", "\"version\":99");
        let err = Forest::<f64>::from_json(&json);
        assert!(matches!(err, Err(ModelError::BadVersion(99))));
    }

    #[test]
    fn adjacent_float_values_still_split_cleanly() {
        // (a + b) / 2 rounds up to b for this pair; the threshold must
        // back off to a so neither child is empty.
        let a = 0.999_999_999_999_999_9_f64;
        let b = 1.0_f64;
        assert!(a < b && (a + b) / 2.0 >= b);
        let x = rows(&[&[a], &[b]]);
        let values = [0.2, 0.8];
        let params = ForestParams {
            n_trees: 4,
            bootstrap: false,
            mtry: Some(1),
            seed: 0,
            tree: TreeParams::default(),
        };
        let forest = fit_forest(&x, TrainingTargets::Values(&values), &params).unwrap();
        assert_eq!(forest.predict_value(&[a]).unwrap(), 0.2);
        assert_eq!(forest.predict_value(&[b]).unwrap(), 0.8);

        let tree = fit_tree(
            &x,
            classes(&[0, 1]),
            &TreeParams::default(),
            &mut SplitMix64::new(0),
        )
        .unwrap();
        assert_eq!(tree.predict_class(&[a]).unwrap(), 0);
        assert_eq!(tree.predict_class(&[b]).unwrap(), 1);
    }

    #[test]
    fn last_baseline_returns_the_final_element() {
        assert_eq!(last_baseline(&[0.1, 0.3]).unwrap(), 0.3);
        assert_eq!(last_baseline(&["APositive"]).unwrap(), "APositive");
        assert_eq!(last_baseline(&[7, 7, 7]).unwrap(), 7);
        assert!(matches!(
            last_baseline::<f64>(&[]),
            Err(ModelError::EmptyHistory)
        ));
    }

    #[test]
    fn f32_forests_work_through_the_same_kernel() {
        let x: Vec<Vec<f32>> = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        let values: Vec<f32> = vec![0.0, 0.0, 1.0, 1.0];
        let params = ForestParams {
            n_trees: 5,
            ..ForestParams::default()
        };
        let forest = fit_forest(&x, TrainingTargets::Values(&values), &params).unwrap();
        let p = forest.predict_value(&[3.9f32]).unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}
