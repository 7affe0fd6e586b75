//! Intent classification: TF-IDF features, a one-vs-rest linear SVM and a
//! random forest, plus the model file format shared by both.

pub mod features;
pub mod forest;
pub mod persist;
pub mod svm;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::dataset::Sample;

pub use features::{FeatureVector, Vocabulary};
pub use forest::{predict_forest, train_forest, ForestModel, ForestParams, MaxFeatures};
pub use persist::{load_model, save_model, Model, ModelKind, MODEL_FORMAT_VERSION};
pub use svm::{predict_svm, train_svm, SvmModel, SvmParams};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training corpus yields an empty vocabulary")]
    EmptyVocabulary,
    #[error("training data must contain at least two classes")]
    SingleClassTraining,
    #[error("feature vector has dimension {found}, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported model format version {found} (expected {expected})")]
    VersionMismatch { found: u64, expected: u64 },
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sorted class labels and each sample's index into them.
pub(crate) fn class_indices(train: &[Sample]) -> Result<(Vec<String>, Vec<usize>), ClassifyError> {
    let classes: Vec<String> = train
        .iter()
        .map(|s| s.function.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if classes.len() < 2 {
        return Err(ClassifyError::SingleClassTraining);
    }
    let labels = train
        .iter()
        .map(|s| {
            classes
                .binary_search(&s.function)
                .expect("label collected above")
        })
        .collect();
    Ok((classes, labels))
}
