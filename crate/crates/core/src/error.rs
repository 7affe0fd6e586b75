use thiserror::Error;

use crate::classify::ClassifyError;
use crate::command::ParseError;
use crate::dataset::DatasetError;
use crate::harness::HarnessError;
use crate::llm::LlmError;
use crate::metrics::MetricError;
use crate::rules::{NoMatch, RulesError};

/// Union of the per-module errors, for callers that drive several stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Rules(#[from] RulesError),
    #[error(transparent)]
    NoMatch(#[from] NoMatch),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name of the failure.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(e) => match e {
                ParseError::UnknownFunction(_) => "UnknownFunction",
                ParseError::ArityMismatch { .. } => "ArityMismatch",
                ParseError::TypeMismatch { .. } => "TypeMismatch",
                ParseError::Syntax { .. } => "SyntaxError",
            },
            Error::Dataset(e) => match e {
                DatasetError::TemplateExhaustion { .. } => "TemplateExhaustion",
                DatasetError::MalformedRecord { .. } => "MalformedRecord",
                DatasetError::InvalidCall { .. } => "InvalidCall",
                DatasetError::InvalidArgument(_) => "InvalidArgument",
                DatasetError::Io(_) => "IoError",
            },
            Error::Classify(e) => match e {
                ClassifyError::EmptyVocabulary => "EmptyVocabulary",
                ClassifyError::SingleClassTraining => "SingleClassTraining",
                ClassifyError::DimensionMismatch { .. } => "DimensionMismatch",
                ClassifyError::VersionMismatch { .. } => "VersionMismatch",
                ClassifyError::CorruptModel(_) => "CorruptModel",
                ClassifyError::Io(_) => "IoError",
            },
            Error::Metric(e) => match e {
                MetricError::EmptyInput => "EmptyInput",
                MetricError::UnknownLabel(_) => "UnknownLabel",
            },
            Error::Llm(e) => match e {
                LlmError::AuthError(_) => "AuthError",
                LlmError::RateLimited => "RateLimited",
                LlmError::Timeout => "Timeout",
                LlmError::TransportError(_) => "TransportError",
                LlmError::EmptyCompletion => "EmptyCompletion",
                LlmError::Rejected { .. } => "Rejected",
                LlmError::Persist(_) => "IoError",
            },
            Error::Rules(e) => match e {
                RulesError::VersionMismatch(_) => "VersionMismatch",
                RulesError::Io(_) => "IoError",
                _ => "InvalidRules",
            },
            Error::NoMatch(_) => "NoMatch",
            Error::Harness(e) => match e {
                HarnessError::MixedKinds { .. } => "MixedKinds",
                HarnessError::EmptySystem => "EmptySystem",
                HarnessError::UnnamedSystem { .. } => "UnnamedSystem",
                HarnessError::DuplicateId { .. } => "DuplicateId",
                HarnessError::MalformedRecord { .. } => "MalformedRecord",
                HarnessError::MalformedReport(_) => "MalformedReport",
                HarnessError::Io(_) => "IoError",
            },
            Error::Io(_) => "IoError",
        }
    }
}
