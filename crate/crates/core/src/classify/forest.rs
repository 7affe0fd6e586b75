//! Random forest of unpruned CART trees with Gini splits.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{FeatureVector, Vocabulary};
use super::{class_indices, ClassifyError};
use crate::dataset::Sample;

/// How many candidate features to examine at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt() as usize,
            MaxFeatures::All => n_features,
            MaxFeatures::Count(k) => k.min(n_features),
        };
        m.max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            min_samples_split: 2,
            min_samples_leaf: 1,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        impurity: f64,
        n_samples: usize,
    },
    Leaf {
        class: usize,
        impurity: f64,
        n_samples: usize,
    },
}

impl Node {
    pub fn impurity(&self) -> f64 {
        match *self {
            Node::Split { impurity, .. } | Node::Leaf { impurity, .. } => impurity,
        }
    }

    pub fn n_samples(&self) -> usize {
        match *self {
            Node::Split { n_samples, .. } | Node::Leaf { n_samples, .. } => n_samples,
        }
    }
}

/// Flat node arena; node 0 is the root. Samples with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    /// Index of the leaf reached by `x`.
    pub fn leaf_index(&self, x: &FeatureVector) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { .. } => return at,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    at = if x.get(feature) <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> usize {
        match self.nodes[self.leaf_index(x)] {
            Node::Leaf { class, .. } => class,
            Node::Split { .. } => unreachable!("leaf_index stops at leaves"),
        }
    }

    /// Grows a tree over `samples` (indices into `xs`, repeats allowed).
    pub fn grow(
        xs: &[FeatureVector],
        labels: &[usize],
        n_classes: usize,
        samples: Vec<usize>,
        params: &ForestParams,
        rng: &mut ChaCha8Rng,
    ) -> DecisionTree {
        let dim = xs.first().map_or(0, FeatureVector::dim);
        let max_features = params.max_features.resolve(dim);
        let mut nodes: Vec<Node> = Vec::new();
        // (node slot, samples at node)
        let mut stack = vec![(0usize, samples)];
        nodes.push(placeholder());
        while let Some((slot, node_samples)) = stack.pop() {
            let counts = class_counts(labels, &node_samples, n_classes);
            let n = node_samples.len();
            let impurity = gini(&counts, n);
            let splittable = n >= params.min_samples_split
                && n >= 2 * params.min_samples_leaf
                && impurity > 1e-12;
            let split = if splittable {
                best_split(
                    xs,
                    labels,
                    n_classes,
                    &node_samples,
                    max_features,
                    params,
                    rng,
                )
            } else {
                None
            };
            match split {
                Some(s) => {
                    let (left, right): (Vec<usize>, Vec<usize>) = node_samples
                        .iter()
                        .partition(|&&i| xs[i].get(s.feature) <= s.threshold);
                    let left_slot = nodes.len();
                    nodes.push(placeholder());
                    let right_slot = nodes.len();
                    nodes.push(placeholder());
                    nodes[slot] = Node::Split {
                        feature: s.feature,
                        threshold: s.threshold,
                        left: left_slot,
                        right: right_slot,
                        impurity,
                        n_samples: n,
                    };
                    stack.push((right_slot, right));
                    stack.push((left_slot, left));
                }
                None => {
                    nodes[slot] = Node::Leaf {
                        class: majority(&counts),
                        impurity,
                        n_samples: n,
                    };
                }
            }
        }
        DecisionTree { nodes }
    }
}

fn placeholder() -> Node {
    Node::Leaf {
        class: 0,
        impurity: 0.0,
        n_samples: 0,
    }
}

fn class_counts(labels: &[usize], samples: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &i in samples {
        counts[labels[i]] += 1;
    }
    counts
}

/// `1 − Σ p_k²`
pub fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let sum_sq: usize = counts.iter().map(|c| c * c).sum();
    1.0 - sum_sq as f64 / (n * n) as f64
}

/// Most frequent class; ties go to the lowest index.
fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
}

/// Draws candidate features in random order from those non-zero somewhere
/// in the node (all others are constant), skips constant ones, and stops
/// after `max_features` non-constant candidates have been evaluated.
fn best_split(
    xs: &[FeatureVector],
    labels: &[usize],
    n_classes: usize,
    samples: &[usize],
    max_features: usize,
    params: &ForestParams,
    rng: &mut ChaCha8Rng,
) -> Option<SplitChoice> {
    let mut pool: Vec<usize> = samples
        .iter()
        .flat_map(|&i| xs[i].entries().iter().map(|&(j, _)| j))
        .collect();
    pool.sort_unstable();
    pool.dedup();
    pool.shuffle(rng);

    let n = samples.len();
    let min_leaf = params.min_samples_leaf;
    let mut best: Option<(f64, SplitChoice)> = None;
    let mut evaluated = 0;
    let mut values: Vec<(f64, usize)> = Vec::with_capacity(n);
    for feature in pool {
        if evaluated == max_features {
            break;
        }
        values.clear();
        values.extend(samples.iter().map(|&i| (xs[i].get(feature), labels[i])));
        values.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if values[0].0 == values[n - 1].0 {
            continue;
        }
        evaluated += 1;

        let mut right = vec![0usize; n_classes];
        for &(_, k) in &values {
            right[k] += 1;
        }
        let mut left = vec![0usize; n_classes];
        let mut left_sq = 0usize;
        let mut right_sq: usize = right.iter().map(|c| c * c).sum();
        for pos in 0..n - 1 {
            let k = values[pos].1;
            left_sq += 2 * left[k] + 1;
            left[k] += 1;
            right_sq -= 2 * right[k] - 1;
            right[k] -= 1;
            let (v, next) = (values[pos].0, values[pos + 1].0);
            if v == next {
                continue;
            }
            let n_left = pos + 1;
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let gini_left = 1.0 - left_sq as f64 / (n_left * n_left) as f64;
            let gini_right = 1.0 - right_sq as f64 / (n_right * n_right) as f64;
            let weighted = (n_left as f64 * gini_left + n_right as f64 * gini_right) / n as f64;
            if best.as_ref().is_none_or(|(b, _)| weighted < *b) {
                let mut threshold = v + (next - v) / 2.0;
                if threshold >= next {
                    threshold = v;
                }
                best = Some((weighted, SplitChoice { feature, threshold }));
            }
        }
    }
    best.map(|(_, s)| s)
}

/// `n` indices drawn uniformly with replacement.
pub fn bootstrap_indices<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

/// Independent stream per tree so results do not depend on scheduling.
pub fn tree_rng(seed: u64, tree_index: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&tree_index.to_le_bytes());
    bytes[16..24].copy_from_slice(b"rforest\0");
    ChaCha8Rng::from_seed(bytes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub classes: Vec<String>,
    pub vocabulary: Vocabulary,
    pub trees: Vec<DecisionTree>,
    pub params: ForestParams,
}

impl ForestModel {
    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    /// Per-class vote counts.
    pub fn votes(&self, x: &FeatureVector) -> Result<Vec<usize>, ClassifyError> {
        if x.dim() != self.dim() {
            return Err(ClassifyError::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        let mut votes = vec![0; self.classes.len()];
        for tree in &self.trees {
            votes[tree.predict(x)] += 1;
        }
        Ok(votes)
    }

    /// Plurality vote; ties go to the lexicographically smallest label.
    pub fn predict(&self, x: &FeatureVector) -> Result<&str, ClassifyError> {
        let votes = self.votes(x)?;
        let mut best = 0;
        for k in 1..votes.len() {
            if votes[k] > votes[best]
                || (votes[k] == votes[best] && self.classes[k] < self.classes[best])
            {
                best = k;
            }
        }
        Ok(&self.classes[best])
    }

    pub fn predict_query(&self, query: &str) -> &str {
        let x = self.vocabulary.featurize(query);
        self.predict(&x)
            .expect("vocabulary and trees share a dimension")
    }
}

pub fn predict_forest<'m>(
    model: &'m ForestModel,
    x: &FeatureVector,
) -> Result<&'m str, ClassifyError> {
    model.predict(x)
}

pub fn train_forest(train: &[Sample], params: ForestParams) -> Result<ForestModel, ClassifyError> {
    let (classes, labels) = class_indices(train)?;
    let vocabulary = Vocabulary::fit(train.iter().map(|s| s.query.as_str()))?;
    let xs: Vec<FeatureVector> = train
        .iter()
        .map(|s| vocabulary.featurize(&s.query))
        .collect();
    let trees = fit_trees(&xs, &labels, classes.len(), &params);
    Ok(ForestModel {
        classes,
        vocabulary,
        trees,
        params,
    })
}

/// Trees are grown in parallel; each uses its own RNG stream, so the result
/// is identical for any thread count.
pub fn fit_trees(
    xs: &[FeatureVector],
    labels: &[usize],
    n_classes: usize,
    params: &ForestParams,
) -> Vec<DecisionTree> {
    (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(params.seed, t as u64);
            let samples = if params.bootstrap {
                bootstrap_indices(xs.len(), &mut rng)
            } else {
                (0..xs.len()).collect()
            };
            DecisionTree::grow(xs, labels, n_classes, samples, params, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::features::Vocabulary;

    fn stub_model(trees: Vec<DecisionTree>, classes: &[&str]) -> ForestModel {
        ForestModel {
            classes: classes.iter().map(|s| s.to_string()).collect(),
            vocabulary: Vocabulary::from_parts(vec!["a".into(), "b".into()], vec![1.0, 1.0]),
            trees,
            params: ForestParams::default(),
        }
    }

    fn leaf(class: usize) -> DecisionTree {
        DecisionTree {
            nodes: vec![Node::Leaf {
                class,
                impurity: 0.0,
                n_samples: 1,
            }],
        }
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[2, 0], 2), 0.0);
        assert_eq!(gini(&[1, 1], 2), 0.5);
        assert!((gini(&[1, 1, 1], 3) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_samples_one_split() {
        // x0 = (1, 0) class 0, x1 = (0, 1) class 1. Root gini 0.5; either
        // feature separates perfectly at threshold 0.5.
        let xs = vec![
            FeatureVector::from_entries(2, [(0, 1.0)]),
            FeatureVector::from_entries(2, [(1, 1.0)]),
        ];
        let params = ForestParams {
            n_trees: 1,
            max_features: MaxFeatures::All,
            bootstrap: false,
            ..ForestParams::default()
        };
        let trees = fit_trees(&xs, &[0, 1], 2, &params);
        let tree = &trees[0];
        assert_eq!(tree.nodes.len(), 3);
        match tree.nodes[0] {
            Node::Split {
                threshold,
                impurity,
                n_samples,
                ..
            } => {
                assert_eq!(threshold, 0.5);
                assert_eq!(impurity, 0.5);
                assert_eq!(n_samples, 2);
            }
            _ => panic!("root should split"),
        }
        assert_eq!(tree.predict(&xs[0]), 0);
        assert_eq!(tree.predict(&xs[1]), 1);
    }

    #[test]
    fn single_tree_forest_returns_its_leaf() {
        let m = stub_model(vec![leaf(1)], &["AddLayer", "AddMarker"]);
        assert_eq!(m.predict(&FeatureVector::zeros(2)).unwrap(), "AddMarker");
    }

    #[test]
    fn vote_ties_go_to_smallest_label() {
        let m = stub_model(vec![leaf(1), leaf(0)], &["AddMarker", "AddLayer"]);
        assert_eq!(m.predict(&FeatureVector::zeros(2)).unwrap(), "AddLayer");
        let votes = m.votes(&FeatureVector::zeros(2)).unwrap();
        assert_eq!(votes.iter().sum::<usize>(), 2);
    }

    #[test]
    fn dimension_is_checked() {
        let m = stub_model(vec![leaf(0)], &["A", "B"]);
        assert!(matches!(
            m.predict(&FeatureVector::zeros(7)),
            Err(ClassifyError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn identical_samples_become_a_leaf() {
        let xs = vec![FeatureVector::from_entries(1, [(0, 1.0)]); 3];
        let params = ForestParams {
            bootstrap: false,
            ..ForestParams::default()
        };
        let mut rng = tree_rng(0, 0);
        let tree = DecisionTree::grow(&xs, &[1, 0, 1], 2, vec![0, 1, 2], &params, &mut rng);
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.predict(&xs[0]), 1);
    }

    #[test]
    fn max_features_rule() {
        assert_eq!(MaxFeatures::Sqrt.resolve(3000), 54);
        assert_eq!(MaxFeatures::Sqrt.resolve(1), 1);
        assert_eq!(MaxFeatures::All.resolve(10), 10);
        assert_eq!(MaxFeatures::Count(50).resolve(10), 10);
    }
}
