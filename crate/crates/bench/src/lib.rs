//! Shared fixtures for the throughput benchmarks.

use geocmd_core::classify::{train_forest, train_svm, ForestParams, Model, SvmParams};
use geocmd_core::dataset::{generate, split, Sample, SplitSpec};

/// Train and test portions of the default seed-1 corpus.
pub fn corpus() -> (Vec<Sample>, Vec<Sample>) {
    let parts = split(
        &generate(1, 200).expect("templates suffice"),
        &SplitSpec::new(1),
    )
    .expect("non-empty corpus");
    (parts.train, parts.test)
}

pub fn trained_models(train: &[Sample]) -> (Model, Model) {
    let svm = train_svm(train, SvmParams::default()).expect("ten classes");
    let rf = train_forest(train, ForestParams::default()).expect("ten classes");
    (Model::Svm(svm), Model::Forest(rf))
}
