//! One-vs-rest linear SVM trained on the primal squared-hinge objective
//!
//! ```text
//! ½‖w‖² + C · Σᵢ max(0, 1 − yᵢ(w·xᵢ + b))²
//! ```
//!
//! with an unregularized bias. The optimizer is cyclic coordinate descent
//! with a Newton step and backtracking line search per coordinate; each
//! accepted step strictly decreases the objective, so the per-epoch trace is
//! non-increasing.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{FeatureVector, Vocabulary};
use super::{class_indices, ClassifyError};
use crate::dataset::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            tol: 1e-4,
            max_iter: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub classes: Vec<String>,
    pub vocabulary: Vocabulary,
    /// One weight vector per class, each of the vocabulary's dimension.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub params: SvmParams,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn decision_values(&self, x: &FeatureVector) -> Result<Vec<f64>, ClassifyError> {
        if x.dim() != self.dim() {
            return Err(ClassifyError::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| x.dot(w) + b)
            .collect())
    }

    /// Highest decision value wins; ties go to the earliest class.
    pub fn predict(&self, x: &FeatureVector) -> Result<&str, ClassifyError> {
        let scores = self.decision_values(x)?;
        let mut best = 0;
        for (k, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = k;
            }
        }
        Ok(&self.classes[best])
    }

    pub fn predict_query(&self, query: &str) -> &str {
        let x = self.vocabulary.featurize(query);
        self.predict(&x)
            .expect("vocabulary and weights share a dimension")
    }
}

/// Free-function form of [`SvmModel::predict`].
pub fn predict_svm<'m>(model: &'m SvmModel, x: &FeatureVector) -> Result<&'m str, ClassifyError> {
    model.predict(x)
}

/// Per-class objective values recorded during training: the initial value
/// followed by one entry per completed epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmTrace {
    pub objectives: Vec<Vec<f64>>,
}

/// Fits the vocabulary on the training queries and trains one binary
/// separator per class.
pub fn train_svm(train: &[Sample], params: SvmParams) -> Result<SvmModel, ClassifyError> {
    train_svm_traced(train, params).map(|(m, _)| m)
}

pub fn train_svm_traced(
    train: &[Sample],
    params: SvmParams,
) -> Result<(SvmModel, SvmTrace), ClassifyError> {
    let (classes, labels) = class_indices(train)?;
    let vocabulary = Vocabulary::fit(train.iter().map(|s| s.query.as_str()))?;
    let xs: Vec<FeatureVector> = train
        .iter()
        .map(|s| vocabulary.featurize(&s.query))
        .collect();
    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    let mut objectives = Vec::with_capacity(classes.len());
    for k in 0..classes.len() {
        let y: Vec<f64> = labels
            .iter()
            .map(|&l| if l == k { 1.0 } else { -1.0 })
            .collect();
        let mut rng = class_rng(params.seed, k as u64);
        let fit = fit_binary(&xs, &y, vocabulary.len(), &params, &mut rng);
        weights.push(fit.w);
        biases.push(fit.b);
        objectives.push(fit.trace);
    }
    let model = SvmModel {
        classes,
        vocabulary,
        weights,
        biases,
        params,
    };
    Ok((model, SvmTrace { objectives }))
}

fn class_rng(seed: u64, class: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(class);
    rng
}

/// Squared-hinge objective for one binary problem with labels in {−1, +1}.
pub fn binary_objective(xs: &[FeatureVector], y: &[f64], w: &[f64], b: f64, c: f64) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let loss: f64 = xs
        .iter()
        .zip(y)
        .map(|(x, &yi)| {
            let slack = (1.0 - yi * (x.dot(w) + b)).max(0.0);
            slack * slack
        })
        .sum();
    reg + c * loss
}

/// Analytic gradient of [`binary_objective`] with respect to `(w, b)`.
pub fn binary_gradient(
    xs: &[FeatureVector],
    y: &[f64],
    w: &[f64],
    b: f64,
    c: f64,
) -> (Vec<f64>, f64) {
    let mut gw = w.to_vec();
    let mut gb = 0.0;
    for (x, &yi) in xs.iter().zip(y) {
        let slack = 1.0 - yi * (x.dot(w) + b);
        if slack > 0.0 {
            let scale = -2.0 * c * yi * slack;
            for &(j, v) in x.entries() {
                gw[j] += scale * v;
            }
            gb += scale;
        }
    }
    (gw, gb)
}

pub struct BinaryFit {
    pub w: Vec<f64>,
    pub b: f64,
    pub trace: Vec<f64>,
    pub epochs: usize,
}

const SIGMA: f64 = 0.01;
const MAX_LINE_SEARCH: usize = 30;

/// Coordinate descent on one binary problem. Coordinate `dim` is the bias.
pub fn fit_binary(
    xs: &[FeatureVector],
    y: &[f64],
    dim: usize,
    params: &SvmParams,
    rng: &mut ChaCha8Rng,
) -> BinaryFit {
    let c = params.c;
    // Column view: for each feature, (sample, value) pairs.
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    for (i, x) in xs.iter().enumerate() {
        for &(j, v) in x.entries() {
            columns[j].push((i, v));
        }
    }
    let mut coords: Vec<usize> = (0..dim).filter(|&j| !columns[j].is_empty()).collect();
    coords.push(dim);

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    // margins[i] = yᵢ(w·xᵢ + b)
    let mut margins = vec![0.0; xs.len()];
    let mut trace = vec![binary_objective(xs, y, &w, b, c)];
    let mut epochs = 0;

    for _ in 0..params.max_iter {
        coords.shuffle(rng);
        for &j in &coords {
            if j == dim {
                step_bias(y, &mut margins, &mut b, c);
            } else {
                step_weight(&columns[j], y, &mut margins, &mut w[j], c);
            }
        }
        epochs += 1;
        let prev = *trace.last().expect("initial objective recorded");
        let cur = binary_objective(xs, y, &w, b, c);
        trace.push(cur);
        if prev <= 0.0 || (prev - cur).abs() / prev < params.tol {
            break;
        }
    }
    BinaryFit {
        w,
        b,
        trace,
        epochs,
    }
}

fn sq_slack(margin: f64) -> f64 {
    let s = (1.0 - margin).max(0.0);
    s * s
}

fn step_weight(column: &[(usize, f64)], y: &[f64], margins: &mut [f64], wj: &mut f64, c: f64) {
    let mut grad = *wj;
    let mut hess = 1.0;
    for &(i, v) in column {
        let slack = 1.0 - margins[i];
        if slack > 0.0 {
            grad -= 2.0 * c * y[i] * v * slack;
            hess += 2.0 * c * v * v;
        }
    }
    if grad.abs() < 1e-12 {
        return;
    }
    let d = -grad / hess;
    let mut lambda = 1.0;
    for _ in 0..MAX_LINE_SEARCH {
        let z = lambda * d;
        let reg_delta = 0.5 * ((*wj + z).powi(2) - wj.powi(2));
        let loss_delta: f64 = column
            .iter()
            .map(|&(i, v)| sq_slack(margins[i] + y[i] * v * z) - sq_slack(margins[i]))
            .sum();
        if reg_delta + c * loss_delta <= -SIGMA * z * z {
            *wj += z;
            for &(i, v) in column {
                margins[i] += y[i] * v * z;
            }
            return;
        }
        lambda *= 0.5;
    }
}

fn step_bias(y: &[f64], margins: &mut [f64], b: &mut f64, c: f64) {
    let mut grad = 0.0;
    let mut hess = 0.0;
    for (i, &m) in margins.iter().enumerate() {
        let slack = 1.0 - m;
        if slack > 0.0 {
            grad -= 2.0 * c * y[i] * slack;
            hess += 2.0 * c;
        }
    }
    if hess == 0.0 || grad.abs() < 1e-12 {
        return;
    }
    let d = -grad / hess;
    let mut lambda = 1.0;
    for _ in 0..MAX_LINE_SEARCH {
        let z = lambda * d;
        let delta: f64 = margins
            .iter()
            .zip(y)
            .map(|(&m, &yi)| sq_slack(m + yi * z) - sq_slack(m))
            .sum();
        if c * delta <= -SIGMA * z * z {
            *b += z;
            for (m, &yi) in margins.iter_mut().zip(y) {
                *m += yi * z;
            }
            return;
        }
        lambda *= 0.5;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_model(weights: Vec<Vec<f64>>, biases: Vec<f64>) -> SvmModel {
        let dim = weights[0].len();
        let vocabulary =
            Vocabulary::from_parts((0..dim).map(|i| format!("t{i}")).collect(), vec![1.0; dim]);
        SvmModel {
            classes: (0..weights.len()).map(|k| format!("C{k}")).collect(),
            vocabulary,
            weights,
            biases,
            params: SvmParams::default(),
        }
    }

    #[test]
    fn zero_model_picks_first_class() {
        let m = hand_model(vec![vec![0.0; 3]; 4], vec![0.0; 4]);
        let x = FeatureVector::from_entries(3, [(0, 0.6), (2, 0.8)]);
        assert_eq!(m.predict(&x).unwrap(), "C0");
    }

    #[test]
    fn argmax_of_decision_values() {
        // x = (1, 0): class 1 scores 0.5 + 0.4 = 0.9, class 2 scores -0.1 - 0.2 = -0.3
        let m = hand_model(
            vec![vec![0.0, 1.0], vec![0.5, 0.0], vec![-0.1, 3.0]],
            vec![-1.0, 0.4, -0.2],
        );
        let x = FeatureVector::from_entries(2, [(0, 1.0)]);
        let scores = m.decision_values(&x).unwrap();
        assert!((scores[1] - 0.9).abs() < 1e-12);
        assert!((scores[2] + 0.3).abs() < 1e-12);
        assert_eq!(m.predict(&x).unwrap(), "C1");
    }

    #[test]
    fn dimension_mismatch() {
        let m = hand_model(vec![vec![0.0; 3]; 2], vec![0.0; 2]);
        assert!(matches!(
            m.predict(&FeatureVector::zeros(4)),
            Err(ClassifyError::DimensionMismatch {
                expected: 3,
                found: 4
            })
        ));
    }

    #[test]
    fn separable_points_are_classified() {
        let xs = vec![
            FeatureVector::from_entries(2, [(0, 1.0)]),
            FeatureVector::from_entries(2, [(1, 1.0)]),
        ];
        let y = vec![1.0, -1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let fit = fit_binary(&xs, &y, 2, &SvmParams::default(), &mut rng);
        assert!(xs[0].dot(&fit.w) + fit.b > 0.0);
        assert!(xs[1].dot(&fit.w) + fit.b < 0.0);
    }

    #[test]
    fn trace_is_non_increasing() {
        let xs: Vec<FeatureVector> = (0..30)
            .map(|i| FeatureVector::from_entries(5, [(i % 5, 1.0), ((i * 3 + 1) % 5, 0.5)]))
            .collect();
        let y: Vec<f64> = (0..30)
            .map(|i| if i % 3 == 0 { 1.0 } else { -1.0 })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = SvmParams {
            tol: 0.0,
            max_iter: 50,
            ..SvmParams::default()
        };
        let fit = fit_binary(&xs, &y, 5, &params, &mut rng);
        assert_eq!(fit.trace.len(), 51);
        for pair in fit.trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9, "{pair:?}");
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let train = vec![Sample {
            id: 0,
            function: "ZoomIn".into(),
            query: "zoom in".into(),
            call: "ZoomIn(1)".into(),
        }];
        assert!(matches!(
            train_svm(&train, SvmParams::default()),
            Err(ClassifyError::SingleClassTraining)
        ));
    }
}
