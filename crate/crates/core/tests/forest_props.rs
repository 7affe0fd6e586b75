use geocmd_core::classify::forest::{bootstrap_indices, fit_trees, tree_rng, DecisionTree, Node};
use geocmd_core::classify::{train_forest, FeatureVector, ForestParams, Vocabulary};
use geocmd_core::dataset::generate;
use std::collections::BTreeMap;

fn corpus() -> (Vec<FeatureVector>, Vec<usize>, usize) {
    let data = generate(11, 25).unwrap();
    let vocab = Vocabulary::fit(data.iter().map(|s| s.query.as_str())).unwrap();
    let mut classes: Vec<&str> = data.iter().map(|s| s.function.as_str()).collect();
    classes.sort();
    classes.dedup();
    let labels = data
        .iter()
        .map(|s| classes.binary_search(&s.function.as_str()).unwrap())
        .collect();
    (
        data.iter().map(|s| vocab.featurize(&s.query)).collect(),
        labels,
        classes.len(),
    )
}

/// Label histogram at every node, found by routing each training sample
/// from the root independently of the grower.
fn node_histograms(
    tree: &DecisionTree,
    xs: &[FeatureVector],
    labels: &[usize],
    samples: &[usize],
) -> BTreeMap<usize, BTreeMap<usize, usize>> {
    let mut hist: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for &i in samples {
        let mut at = 0;
        loop {
            *hist.entry(at).or_default().entry(labels[i]).or_default() += 1;
            match tree.nodes[at] {
                Node::Leaf { .. } => break,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    let v = xs[i]
                        .entries()
                        .iter()
                        .find(|e| e.0 == feature)
                        .map_or(0.0, |e| e.1);
                    at = if v <= threshold { left } else { right };
                }
            }
        }
    }
    hist
}

#[test]
fn stored_impurity_is_gini_of_node_samples() {
    let (xs, labels, k) = corpus();
    let params = ForestParams {
        n_trees: 8,
        seed: 3,
        ..ForestParams::default()
    };
    let trees = fit_trees(&xs, &labels, k, &params);
    for (t, tree) in trees.iter().enumerate() {
        let samples = bootstrap_indices(xs.len(), &mut tree_rng(params.seed, t as u64));
        let hist = node_histograms(tree, &xs, &labels, &samples);
        for (at, node) in tree.nodes.iter().enumerate() {
            let h = &hist[&at];
            let n: usize = h.values().sum();
            let expected = 1.0
                - h.values()
                    .map(|&c| (c as f64 / n as f64).powi(2))
                    .sum::<f64>();
            let (impurity, n_samples) = match *node {
                Node::Split {
                    impurity,
                    n_samples,
                    ..
                }
                | Node::Leaf {
                    impurity,
                    n_samples,
                    ..
                } => (impurity, n_samples),
            };
            assert_eq!(n_samples, n, "tree {t} node {at}");
            assert!((impurity - expected).abs() < 1e-12, "tree {t} node {at}");
            if let Node::Split { left, right, .. } = *node {
                // Children partition the parent.
                let child_n =
                    hist[&left].values().sum::<usize>() + hist[&right].values().sum::<usize>();
                assert_eq!(child_n, n);
            }
        }
    }
}

#[test]
fn unrestricted_trees_fit_their_bootstrap() {
    // Leaves are pure unless every sample there has identical features.
    let (xs, labels, k) = corpus();
    let params = ForestParams {
        n_trees: 4,
        ..ForestParams::default()
    };
    for (t, tree) in fit_trees(&xs, &labels, k, &params).iter().enumerate() {
        let samples = bootstrap_indices(xs.len(), &mut tree_rng(params.seed, t as u64));
        for &i in &samples {
            let leaf = tree.leaf_index(&xs[i]);
            if let Node::Leaf {
                impurity, class, ..
            } = tree.nodes[leaf]
            {
                if impurity == 0.0 {
                    assert_eq!(class, labels[i]);
                }
            }
        }
    }
}

#[test]
fn bootstrap_covers_about_63_percent() {
    let n = 1600;
    let expected = 1.0 - (-1.0f64).exp();
    let mut total = 0.0;
    for t in 0..100 {
        let mut idx = bootstrap_indices(n, &mut tree_rng(0, t));
        assert_eq!(idx.len(), n);
        idx.sort_unstable();
        idx.dedup();
        let fraction = idx.len() as f64 / n as f64;
        assert!((fraction - expected).abs() < 0.05, "tree {t}: {fraction}");
        total += fraction;
    }
    assert!((total / 100.0 - expected).abs() < 0.01);
}

#[test]
fn thread_count_does_not_change_the_forest() {
    let data = generate(2, 30).unwrap();
    let params = ForestParams {
        n_trees: 12,
        seed: 5,
        ..ForestParams::default()
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| train_forest(&data, params).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
}

#[test]
fn votes_sum_to_tree_count() {
    let data = generate(8, 15).unwrap();
    let model = train_forest(
        &data,
        ForestParams {
            n_trees: 9,
            ..ForestParams::default()
        },
    )
    .unwrap();
    for q in [
        "zoom in 3",
        "random words here",
        "",
        "add marker 'x' at 1, 2",
    ] {
        let votes = model.votes(&model.vocabulary.featurize(q)).unwrap();
        assert_eq!(votes.iter().sum::<usize>(), 9);
    }
}
