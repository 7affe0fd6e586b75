//! Translation of natural-language map requests into canonical GIS function
//! calls, with a synthetic corpus generator, two intent classifiers, a rule
//! translator, a few-shot LLM client and the metrics that compare them.

pub mod classify;
pub mod command;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod llm;
pub mod metrics;
pub mod rules;

pub use classify::{
    load_model, save_model, train_forest, train_svm, ClassifyError, FeatureVector, ForestModel,
    ForestParams, MaxFeatures, Model, ModelKind, SvmModel, SvmParams, Vocabulary,
};
pub use command::{
    parse_call, serialize_call, Arg, CartoProperty, DrawShape, GeometryKind, GisCall, GisFunction,
    NumberLiteral, ParseError,
};
pub use dataset::{
    generate, load_jsonl, save_jsonl, split, DatasetError, Sample, Split, SplitSpec,
};
pub use error::Error;
pub use harness::{
    evaluate, load_predictions, predict_classifier, predict_rules, report, save_predictions,
    HarnessError, MetricReport, PredictionKind, PredictionRecord, ReportFormat,
};
pub use llm::{
    batch_translate, build_prompt, extract_call, HttpTransport, LlmClient, LlmConfig, LlmError,
    LlmResponse, Transport,
};
pub use metrics::{
    classification_report, exact_match_accuracy, levenshtein, levenshtein_similarity, rouge1,
    rouge_l, MetricError,
};
pub use rules::{translate_rules, NoMatch, RuleSet, RulesError};
