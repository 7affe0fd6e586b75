//! Versioned JSON model files.
//!
//! ```text
//! {"format_version":1,"kind":"svm"|"rf","classes":[..],
//!  "vocabulary":{"terms":[..],"idf":[..]},"hyperparameters":{..},"body":{..}}
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::features::{FeatureVector, Vocabulary};
use super::forest::{DecisionTree, ForestModel, ForestParams, Node};
use super::svm::{SvmModel, SvmParams};
use super::ClassifyError;

pub const MODEL_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "svm")]
    Svm,
    #[serde(rename = "rf")]
    Forest,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Svm(SvmModel),
    Forest(ForestModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Svm(_) => ModelKind::Svm,
            Model::Forest(_) => ModelKind::Forest,
        }
    }

    pub fn classes(&self) -> &[String] {
        match self {
            Model::Svm(m) => &m.classes,
            Model::Forest(m) => &m.classes,
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        match self {
            Model::Svm(m) => &m.vocabulary,
            Model::Forest(m) => &m.vocabulary,
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<&str, ClassifyError> {
        match self {
            Model::Svm(m) => m.predict(x),
            Model::Forest(m) => m.predict(x),
        }
    }

    pub fn predict_query(&self, query: &str) -> &str {
        match self {
            Model::Svm(m) => m.predict_query(query),
            Model::Forest(m) => m.predict_query(query),
        }
    }

    pub fn to_json(&self) -> String {
        let vocabulary = VocabularyFile {
            terms: self.vocabulary().terms().to_vec(),
            idf: self.vocabulary().idf().to_vec(),
        };
        let (hyperparameters, body) = match self {
            Model::Svm(m) => (
                serde_json::to_value(m.params),
                serde_json::to_value(SvmBody {
                    weights: m.weights.clone(),
                    biases: m.biases.clone(),
                }),
            ),
            Model::Forest(m) => (
                serde_json::to_value(m.params),
                serde_json::to_value(ForestBody {
                    trees: m.trees.clone(),
                }),
            ),
        };
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            kind: self.kind(),
            classes: self.classes().to_vec(),
            vocabulary,
            hyperparameters: hyperparameters.expect("plain data serializes"),
            body: body.expect("plain data serializes"),
        };
        let mut text = serde_json::to_string(&file).expect("plain data serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Model, ClassifyError> {
        let raw: Value = serde_json::from_str(text).map_err(corrupt)?;
        let version = raw
            .get("format_version")
            .ok_or_else(|| ClassifyError::CorruptModel("missing format_version".into()))?
            .as_u64()
            .ok_or_else(|| {
                ClassifyError::CorruptModel("format_version is not an integer".into())
            })?;
        if version != MODEL_FORMAT_VERSION {
            return Err(ClassifyError::VersionMismatch {
                found: version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let file: ModelFile = serde_json::from_value(raw).map_err(corrupt)?;
        if file.vocabulary.terms.len() != file.vocabulary.idf.len() {
            return Err(ClassifyError::CorruptModel(
                "vocabulary terms and idf differ in length".into(),
            ));
        }
        if file.classes.len() < 2 {
            return Err(ClassifyError::CorruptModel("fewer than two classes".into()));
        }
        let dim = file.vocabulary.terms.len();
        let n_classes = file.classes.len();
        let vocabulary = Vocabulary::from_parts(file.vocabulary.terms, file.vocabulary.idf);
        let model = match file.kind {
            ModelKind::Svm => {
                let params: SvmParams =
                    serde_json::from_value(file.hyperparameters).map_err(corrupt)?;
                let body: SvmBody = serde_json::from_value(file.body).map_err(corrupt)?;
                if body.weights.len() != n_classes
                    || body.biases.len() != n_classes
                    || body.weights.iter().any(|w| w.len() != dim)
                {
                    return Err(ClassifyError::CorruptModel(
                        "weight matrix does not match classes × vocabulary".into(),
                    ));
                }
                Model::Svm(SvmModel {
                    classes: file.classes,
                    vocabulary,
                    weights: body.weights,
                    biases: body.biases,
                    params,
                })
            }
            ModelKind::Forest => {
                let params: ForestParams =
                    serde_json::from_value(file.hyperparameters).map_err(corrupt)?;
                let body: ForestBody = serde_json::from_value(file.body).map_err(corrupt)?;
                for (t, tree) in body.trees.iter().enumerate() {
                    validate_tree(tree, dim, n_classes)
                        .map_err(|m| ClassifyError::CorruptModel(format!("tree {t}: {m}")))?;
                }
                Model::Forest(ForestModel {
                    classes: file.classes,
                    vocabulary,
                    trees: body.trees,
                    params,
                })
            }
        };
        Ok(model)
    }
}

fn corrupt(e: serde_json::Error) -> ClassifyError {
    ClassifyError::CorruptModel(e.to_string())
}

/// Every child index points forward, feature indices are in range and leaf
/// classes exist, so traversal always terminates at a valid leaf.
fn validate_tree(tree: &DecisionTree, dim: usize, n_classes: usize) -> Result<(), String> {
    if tree.nodes.is_empty() {
        return Err("no nodes".into());
    }
    for (i, node) in tree.nodes.iter().enumerate() {
        match *node {
            Node::Split {
                feature,
                left,
                right,
                ..
            } => {
                if feature >= dim {
                    return Err(format!("node {i}: feature {feature} out of range"));
                }
                for child in [left, right] {
                    if child <= i || child >= tree.nodes.len() {
                        return Err(format!("node {i}: bad child {child}"));
                    }
                }
            }
            Node::Leaf { class, .. } => {
                if class >= n_classes {
                    return Err(format!("node {i}: class {class} out of range"));
                }
            }
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u64,
    kind: ModelKind,
    classes: Vec<String>,
    vocabulary: VocabularyFile,
    hyperparameters: Value,
    body: Value,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    terms: Vec<String>,
    idf: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SvmBody {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ForestBody {
    trees: Vec<DecisionTree>,
}

pub fn save_model(model: &Model, path: &Path) -> Result<(), ClassifyError> {
    fs::write(path, model.to_json())?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Model, ClassifyError> {
    Model::from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{train_forest, train_svm, ForestParams, SvmParams};
    use crate::dataset::generate;

    fn small_models() -> (Model, Model) {
        let data = generate(4, 12).unwrap();
        let svm = train_svm(&data, SvmParams::default()).unwrap();
        let rf = train_forest(
            &data,
            ForestParams {
                n_trees: 5,
                ..ForestParams::default()
            },
        )
        .unwrap();
        (Model::Svm(svm), Model::Forest(rf))
    }

    #[test]
    fn round_trip_preserves_models_exactly() {
        let (svm, rf) = small_models();
        for m in [svm, rf] {
            let back = Model::from_json(&m.to_json()).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.to_json(), m.to_json());
        }
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let (svm, rf) = small_models();
        for m in [svm, rf] {
            let text = m.to_json();
            let cut = &text[..text.len() / 2];
            assert!(matches!(
                Model::from_json(cut),
                Err(ClassifyError::CorruptModel(_))
            ));
        }
    }

    #[test]
    fn wrong_version_is_rejected() {
        let (svm, _) = small_models();
        let text = svm
            .to_json()
            .replacen("\"format_version\":1", "\"format_version\":2", 1);
        assert!(matches!(
            Model::from_json(&text),
            Err(ClassifyError::VersionMismatch { found: 2, .. })
        ));
    }

    #[test]
    fn structural_damage_is_corrupt() {
        let (svm, rf) = small_models();
        let mut v: Value = serde_json::from_str(&svm.to_json()).unwrap();
        v["body"]["biases"].as_array_mut().unwrap().pop();
        assert!(matches!(
            Model::from_json(&v.to_string()),
            Err(ClassifyError::CorruptModel(_))
        ));

        let mut v: Value = serde_json::from_str(&rf.to_json()).unwrap();
        v["body"]["trees"][0]["nodes"][0] = serde_json::json!({"type": "split", "feature": 1_000_000, "threshold": 0.5,
                               "left": 1, "right": 2, "impurity": 0.5, "n_samples": 2});
        assert!(matches!(
            Model::from_json(&v.to_string()),
            Err(ClassifyError::CorruptModel(_))
        ));
    }

    #[test]
    fn header_fields_are_present() {
        let (svm, rf) = small_models();
        let v: Value = serde_json::from_str(&svm.to_json()).unwrap();
        assert_eq!(v["kind"], "svm");
        assert_eq!(v["hyperparameters"]["c"], 1.0);
        assert_eq!(v["hyperparameters"]["max_iter"], 1000);
        let v: Value = serde_json::from_str(&rf.to_json()).unwrap();
        assert_eq!(v["kind"], "rf");
        assert_eq!(v["hyperparameters"]["max_features"], "sqrt");
        assert_eq!(v["classes"].as_array().unwrap().len(), 10);
    }
}
