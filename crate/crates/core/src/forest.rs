//! Bagged decision forests built from scratch: axis-aligned threshold
//! splits, Gini impurity for classification and variance for regression,
//! best-first growth under a leaf cap, bootstrap resampling, per-split
//! feature subsampling, and mean-decrease-in-impurity feature importances.
//!
//! Determinism: every tree draws from its own ChaCha stream keyed by
//! (seed, tree index); candidate features are drawn in heap-pop order, so a
//! fixed (data, config, seed) triple reproduces the model bit for bit.
//! Ties break toward the lowest feature index, then the lowest threshold;
//! classification votes break toward `false`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema;

/// How many candidate features each split examines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureRule {
    /// round(sqrt(n_features)), the classification default.
    Sqrt,
    /// max(1, n_features / 3), the regression default.
    Third,
    /// All features at every split.
    All,
    /// A fixed fraction of the features (rounded up).
    Fraction(f64),
    /// An explicit candidate count.
    Count(usize),
}

impl FeatureRule {
    pub fn candidates(&self, n_features: usize) -> usize {
        let k = match self {
            FeatureRule::Sqrt => (n_features as f64).sqrt().round() as usize,
            FeatureRule::Third => n_features / 3,
            FeatureRule::All => n_features,
            FeatureRule::Fraction(f) => (n_features as f64 * f).ceil() as usize,
            FeatureRule::Count(k) => *k,
        };
        k.clamp(1, n_features)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Per-tree leaf cap under best-first growth.
    pub max_leaves: usize,
    pub feature_rule: FeatureRule,
    pub bootstrap: bool,
    pub seed: u64,
}

impl ForestConfig {
    pub fn classifier(seed: u64) -> Self {
        Self { n_trees: 100, max_leaves: 2000, feature_rule: FeatureRule::Sqrt, bootstrap: true, seed }
    }

    pub fn regressor(seed: u64) -> Self {
        Self { n_trees: 100, max_leaves: 2000, feature_rule: FeatureRule::Third, bootstrap: true, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::InvalidConfig("forest needs at least one tree".into()));
        }
        if self.max_leaves < 2 {
            return Err(Error::InvalidConfig("leaf cap must be at least 2".into()));
        }
        if let FeatureRule::Fraction(f) = self.feature_rule {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "feature fraction must lie in (0, 1], got {f}"
                )));
            }
        }
        Ok(())
    }
}

/// One tree node. Leaf payloads are `[count_false, count_true]` for
/// classifiers and `[mean]` for regressors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { payload: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Index of the leaf a row lands in. Routing: `value <= threshold` goes
    /// left.
    pub fn leaf_for(&self, row: &[f64]) -> usize {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { .. } => return at,
            }
        }
    }

    fn leaf_payload(&self, row: &[f64]) -> &[f64] {
        match &self.nodes[self.leaf_for(row)] {
            Node::Leaf { payload } => payload,
            Node::Split { .. } => unreachable!("leaf_for returns a leaf"),
        }
    }

    fn vote(&self, row: &[f64]) -> bool {
        let p = self.leaf_payload(row);
        p[1] > p[0] // tie toward false
    }

    fn mean(&self, row: &[f64]) -> f64 {
        self.leaf_payload(row)[0]
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Classifier,
    Regressor,
}

/// A fitted forest with its feature names and normalized importances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub schema_version: String,
    pub kind: TaskKind,
    pub config: ForestConfig,
    pub feature_names: Vec<String>,
    /// Mean decrease in impurity per feature; sums to 1, or all zero for a
    /// stump-only forest.
    pub importances: Vec<f64>,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn check_width(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features() {
            return Err(Error::SchemaMismatch(format!(
                "prediction row has {} features, model expects {}",
                row.len(),
                self.n_features()
            )));
        }
        Ok(())
    }

    /// Majority vote over trees; an exact tie predicts `false`.
    pub fn predict_class(&self, row: &[f64]) -> Result<bool> {
        self.check_width(row)?;
        let votes_true = self.trees.iter().filter(|t| t.vote(row)).count();
        Ok(2 * votes_true > self.trees.len())
    }

    /// Average of per-tree leaf means.
    pub fn predict_value(&self, row: &[f64]) -> Result<f64> {
        self.check_width(row)?;
        let sum: f64 = self.trees.iter().map(|t| t.mean(row)).sum();
        Ok(sum / self.trees.len() as f64)
    }

    /// Vote with model feature `f` read from `row[map[f]]`. Used by the
    /// certification evaluator, which keeps one full-schema row and projects
    /// per model; `map` must come from [`crate::schema::projection`].
    pub fn predict_class_mapped(&self, row: &[f64], map: &[usize]) -> bool {
        let votes_true = self
            .trees
            .iter()
            .filter(|t| {
                let p = leaf_payload_mapped(t, row, map);
                p[1] > p[0]
            })
            .count();
        2 * votes_true > self.trees.len()
    }

    /// Mapped-row counterpart of [`ForestModel::predict_value`].
    pub fn predict_value_mapped(&self, row: &[f64], map: &[usize]) -> f64 {
        let sum: f64 = self
            .trees
            .iter()
            .map(|t| leaf_payload_mapped(t, row, map)[0])
            .sum();
        sum / self.trees.len() as f64
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let model = serde_json::from_reader(std::io::BufReader::new(file))?;
        Ok(model)
    }
}

fn leaf_payload_mapped<'t>(tree: &'t Tree, row: &[f64], map: &[usize]) -> &'t [f64] {
    let mut at = 0usize;
    loop {
        match &tree.nodes[at] {
            Node::Split { feature, threshold, left, right } => {
                at = if row[map[*feature]] <= *threshold { *left } else { *right };
            }
            Node::Leaf { payload } => return payload,
        }
    }
}

// ── Tree growing ────────────────────────────────────────────────────────

#[derive(Clone, Copy)]
enum Targets<'a> {
    Class(&'a [bool]),
    Reg(&'a [f64]),
}

impl Targets<'_> {
    fn payload(&self, samples: &[usize]) -> Vec<f64> {
        match self {
            Targets::Class(y) => {
                let n_true = samples.iter().filter(|i| y[**i]).count();
                vec![(samples.len() - n_true) as f64, n_true as f64]
            }
            Targets::Reg(y) => {
                let sum: f64 = samples.iter().map(|i| y[*i]).sum();
                vec![sum / samples.len() as f64]
            }
        }
    }

    fn impurity(&self, samples: &[usize]) -> f64 {
        match self {
            Targets::Class(y) => {
                let n_true = samples.iter().filter(|i| y[**i]).count();
                gini(n_true, samples.len())
            }
            Targets::Reg(y) => {
                let n = samples.len() as f64;
                let sum: f64 = samples.iter().map(|i| y[*i]).sum();
                let sumsq: f64 = samples.iter().map(|i| y[*i] * y[*i]).sum();
                (sumsq / n - (sum / n) * (sum / n)).max(0.0)
            }
        }
    }

    fn is_pure(&self, samples: &[usize]) -> bool {
        match self {
            Targets::Class(y) => {
                let first = y[samples[0]];
                samples.iter().all(|i| y[*i] == first)
            }
            Targets::Reg(y) => {
                let first = y[samples[0]];
                samples.iter().all(|i| y[*i] == first)
            }
        }
    }
}

fn gini(n_true: usize, n: usize) -> f64 {
    let p = n_true as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

/// Midpoint threshold strictly between two adjacent sorted values, or None
/// when rounding collapses it onto either value.
fn midpoint(lo: f64, hi: f64) -> Option<f64> {
    let m = lo + (hi - lo) / 2.0;
    (lo < m && m < hi).then_some(m)
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    /// Node-local impurity decrease.
    gain: f64,
}

/// Pending best-first expansion of one leaf. Priority is the size-weighted
/// impurity decrease of the node's best split; ties pop in insertion order.
struct PendingSplit {
    priority: f64,
    order: usize,
    node: usize,
    feature: usize,
    threshold: f64,
    samples: Vec<usize>,
}

impl PartialEq for PendingSplit {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for PendingSplit {}
impl PartialOrd for PendingSplit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PendingSplit {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.order.cmp(&self.order))
    }
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    targets: Targets<'a>,
    n_features: usize,
    n_candidates: usize,
    max_leaves: usize,
    n_root: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    heap: BinaryHeap<PendingSplit>,
    next_order: usize,
    n_leaves: usize,
}

impl<'a> TreeBuilder<'a> {
    fn grow(mut self, root_samples: Vec<usize>) -> (Tree, Vec<f64>) {
        self.n_root = root_samples.len();
        self.nodes.push(Node::Leaf { payload: self.targets.payload(&root_samples) });
        self.n_leaves = 1;
        self.consider(0, root_samples);
        while self.n_leaves < self.max_leaves {
            let Some(pending) = self.heap.pop() else { break };
            self.materialize(pending);
        }
        (Tree { nodes: self.nodes }, self.importance)
    }

    /// Finds the node's best split over a fresh candidate-feature subset and
    /// queues it; leaves that are too small, pure or unsplittable stay leaves.
    fn consider(&mut self, node: usize, samples: Vec<usize>) {
        if samples.len() < 2 || self.targets.is_pure(&samples) {
            return;
        }
        let subset = self.draw_features();
        let parent_impurity = self.targets.impurity(&samples);
        let mut best: Option<SplitChoice> = None;
        for &feature in &subset {
            if let Some(choice) = self.best_split_on(feature, &samples, parent_impurity) {
                let better = match &best {
                    None => true,
                    Some(b) => choice.gain > b.gain,
                };
                if better {
                    best = Some(choice);
                }
            }
        }
        if let Some(choice) = best {
            let weighted = samples.len() as f64 / self.n_root as f64 * choice.gain;
            self.heap.push(PendingSplit {
                priority: weighted,
                order: self.next_order,
                node,
                feature: choice.feature,
                threshold: choice.threshold,
                samples,
            });
            self.next_order += 1;
        }
    }

    fn materialize(&mut self, pending: PendingSplit) {
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for i in pending.samples {
            if self.x[i][pending.feature] <= pending.threshold {
                left.push(i);
            } else {
                right.push(i);
            }
        }
        debug_assert!(!left.is_empty() && !right.is_empty());
        self.importance[pending.feature] += pending.priority;
        let left_id = self.nodes.len();
        self.nodes.push(Node::Leaf { payload: self.targets.payload(&left) });
        let right_id = self.nodes.len();
        self.nodes.push(Node::Leaf { payload: self.targets.payload(&right) });
        self.nodes[pending.node] = Node::Split {
            feature: pending.feature,
            threshold: pending.threshold,
            left: left_id,
            right: right_id,
        };
        self.n_leaves += 1;
        self.consider(left_id, left);
        self.consider(right_id, right);
    }

    /// Candidate features in ascending order, so equal gains resolve to the
    /// lowest feature index.
    fn draw_features(&mut self) -> Vec<usize> {
        let m = self.n_features;
        let k = self.n_candidates;
        if k >= m {
            return (0..m).collect();
        }
        let mut pool: Vec<usize> = (0..m).collect();
        for i in 0..k {
            let j = self.rng.random_range(i..m);
            pool.swap(i, j);
        }
        let mut subset = pool[..k].to_vec();
        subset.sort_unstable();
        subset
    }

    /// Scans sorted feature values; thresholds ascend so equal gains resolve
    /// to the lowest threshold. Zero-gain splits are allowed (the leaf cap is
    /// the sole capacity control).
    fn best_split_on(
        &self,
        feature: usize,
        samples: &[usize],
        parent_impurity: f64,
    ) -> Option<SplitChoice> {
        match self.targets {
            Targets::Class(y) => {
                let mut pairs: Vec<(f64, bool)> =
                    samples.iter().map(|i| (self.x[*i][feature], y[*i])).collect();
                pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
                let n = pairs.len();
                let total_true = pairs.iter().filter(|p| p.1).count();
                let mut left_true = 0usize;
                let mut best: Option<SplitChoice> = None;
                for i in 1..n {
                    left_true += pairs[i - 1].1 as usize;
                    if pairs[i].0 <= pairs[i - 1].0 {
                        continue;
                    }
                    let Some(threshold) = midpoint(pairs[i - 1].0, pairs[i].0) else { continue };
                    let (nl, nr) = (i, n - i);
                    let child = (nl as f64 * gini(left_true, nl)
                        + nr as f64 * gini(total_true - left_true, nr))
                        / n as f64;
                    let gain = parent_impurity - child;
                    if best.as_ref().map_or(true, |b| gain > b.gain) {
                        best = Some(SplitChoice { feature, threshold, gain });
                    }
                }
                best
            }
            Targets::Reg(y) => {
                let mut pairs: Vec<(f64, f64)> =
                    samples.iter().map(|i| (self.x[*i][feature], y[*i])).collect();
                pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
                let n = pairs.len();
                let total_sum: f64 = pairs.iter().map(|p| p.1).sum();
                let total_sumsq: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
                let mut left_sum = 0.0;
                let mut left_sumsq = 0.0;
                let mut best: Option<SplitChoice> = None;
                for i in 1..n {
                    left_sum += pairs[i - 1].1;
                    left_sumsq += pairs[i - 1].1 * pairs[i - 1].1;
                    if pairs[i].0 <= pairs[i - 1].0 {
                        continue;
                    }
                    let Some(threshold) = midpoint(pairs[i - 1].0, pairs[i].0) else { continue };
                    let (nl, nr) = (i as f64, (n - i) as f64);
                    let var_l = (left_sumsq / nl - (left_sum / nl) * (left_sum / nl)).max(0.0);
                    let rs = total_sum - left_sum;
                    let rss = total_sumsq - left_sumsq;
                    let var_r = (rss / nr - (rs / nr) * (rs / nr)).max(0.0);
                    let child = (nl * var_l + nr * var_r) / n as f64;
                    let gain = parent_impurity - child;
                    if best.as_ref().map_or(true, |b| gain > b.gain) {
                        best = Some(SplitChoice { feature, threshold, gain });
                    }
                }
                best
            }
        }
    }
}

fn validate_matrix(x: &[Vec<f64>], n_targets: usize) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::InvalidConfig("training data is empty".into()));
    }
    let width = x[0].len();
    if width == 0 {
        return Err(Error::InvalidConfig("training rows have no features".into()));
    }
    if x.iter().any(|row| row.len() != width) {
        return Err(Error::SchemaMismatch("inconsistent feature-row widths".into()));
    }
    if n_targets != x.len() {
        return Err(Error::SchemaMismatch(format!(
            "{} rows but {} targets",
            x.len(),
            n_targets
        )));
    }
    Ok(width)
}

fn fit(
    x: &[Vec<f64>],
    targets: Targets<'_>,
    feature_names: &[String],
    cfg: &ForestConfig,
    kind: TaskKind,
) -> Result<ForestModel> {
    cfg.validate()?;
    let n_targets = match targets {
        Targets::Class(y) => y.len(),
        Targets::Reg(y) => y.len(),
    };
    let width = validate_matrix(x, n_targets)?;
    if feature_names.len() != width {
        return Err(Error::SchemaMismatch(format!(
            "{} feature names for width {width}",
            feature_names.len()
        )));
    }
    let n = x.len();
    let n_candidates = cfg.feature_rule.candidates(width);

    let grown: Vec<(Tree, Vec<f64>)> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(t as u64);
            let root_samples: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let builder = TreeBuilder {
                x,
                targets,
                n_features: width,
                n_candidates,
                max_leaves: cfg.max_leaves,
                n_root: n,
                rng,
                nodes: Vec::new(),
                importance: vec![0.0; width],
                heap: BinaryHeap::new(),
                next_order: 0,
                n_leaves: 0,
            };
            builder.grow(root_samples)
        })
        .collect();

    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut importances = vec![0.0f64; width];
    for (tree, imp) in grown {
        trees.push(tree);
        for (total, v) in importances.iter_mut().zip(imp.iter()) {
            *total += v;
        }
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        for v in importances.iter_mut() {
            *v /= total;
        }
    }
    Ok(ForestModel {
        schema_version: schema::SCHEMA_VERSION.to_string(),
        kind,
        config: *cfg,
        feature_names: feature_names.to_vec(),
        importances,
        trees,
    })
}

/// Fits a bagged Gini classifier. Single-class training data yields a valid
/// constant model with all-zero importances.
pub fn fit_classifier(
    x: &[Vec<f64>],
    y: &[bool],
    feature_names: &[String],
    cfg: &ForestConfig,
) -> Result<ForestModel> {
    fit(x, Targets::Class(y), feature_names, cfg, TaskKind::Classifier)
}

/// Fits a bagged variance-impurity regressor with leaf means.
pub fn fit_regressor(
    x: &[Vec<f64>],
    y: &[f64],
    feature_names: &[String],
    cfg: &ForestConfig,
) -> Result<ForestModel> {
    fit(x, Targets::Reg(y), feature_names, cfg, TaskKind::Regressor)
}

/// Normalized per-feature importances of a fitted model.
pub fn feature_importances(model: &ForestModel) -> &[f64] {
    &model.importances
}

// ── Train/test splitting and evaluation ─────────────────────────────────

/// Disjoint row partition by seeded shuffle; sizes within one row of the
/// exact fractions.
pub fn split_train_test(
    n_rows: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n_test = (n_rows as f64 * test_fraction).round() as usize;
    if n_test == 0 || n_test >= n_rows {
        return Err(Error::EmptyPartition { rows: n_rows, fraction: test_fraction });
    }
    let mut indices: Vec<usize> = (0..n_rows).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let test = indices.split_off(n_rows - n_test);
    Ok((indices, test))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierMetrics {
    pub accuracy: f64,
    pub precision_true: f64,
    pub recall_true: f64,
    pub precision_false: f64,
    pub recall_false: f64,
    /// Counts indexed `[actual][predicted]` with 0 = false, 1 = true.
    pub confusion: [[usize; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressorMetrics {
    pub rmse: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metrics {
    Classifier(ClassifierMetrics),
    Regressor(RegressorMetrics),
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn evaluate_classifier(
    model: &ForestModel,
    x: &[Vec<f64>],
    y: &[bool],
) -> Result<ClassifierMetrics> {
    if model.kind != TaskKind::Classifier {
        return Err(Error::SchemaMismatch("model is not a classifier".into()));
    }
    let mut confusion = [[0usize; 2]; 2];
    for (row, actual) in x.iter().zip(y.iter()) {
        let predicted = model.predict_class(row)?;
        confusion[*actual as usize][predicted as usize] += 1;
    }
    let correct = confusion[0][0] + confusion[1][1];
    Ok(ClassifierMetrics {
        accuracy: ratio(correct, y.len()),
        precision_true: ratio(confusion[1][1], confusion[0][1] + confusion[1][1]),
        recall_true: ratio(confusion[1][1], confusion[1][0] + confusion[1][1]),
        precision_false: ratio(confusion[0][0], confusion[0][0] + confusion[1][0]),
        recall_false: ratio(confusion[0][0], confusion[0][0] + confusion[0][1]),
        confusion,
    })
}

/// RMSE and R^2 on a test set. A zero-variance target scores R^2 = 1 when
/// residuals are (numerically) zero and 0 otherwise.
pub fn evaluate_regressor(model: &ForestModel, x: &[Vec<f64>], y: &[f64]) -> Result<RegressorMetrics> {
    if model.kind != TaskKind::Regressor {
        return Err(Error::SchemaMismatch("model is not a regressor".into()));
    }
    if y.is_empty() {
        return Err(Error::InvalidConfig("empty evaluation set".into()));
    }
    let n = y.len() as f64;
    let mean_y: f64 = y.iter().sum::<f64>() / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (row, actual) in x.iter().zip(y.iter()) {
        let predicted = model.predict_value(row)?;
        ss_res += (actual - predicted) * (actual - predicted);
        ss_tot += (actual - mean_y) * (actual - mean_y);
    }
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res <= 1e-12 {
        1.0
    } else {
        0.0
    };
    Ok(RegressorMetrics { rmse: (ss_res / n).sqrt(), r2 })
}
