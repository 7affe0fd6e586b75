//! Evaluation metrics: exact match, Levenshtein similarity, ROUGE-1/ROUGE-L
//! and confusion-matrix classification scores.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("metric requires at least one pair")]
    EmptyInput,
    #[error("label `{0}` is not in the declared class set")]
    UnknownLabel(String),
}

/// Fraction of pairs whose prediction equals the reference after trimming
/// surrounding whitespace. Pairs are `(reference, prediction)`.
pub fn exact_match_accuracy<R, P>(pairs: &[(R, P)]) -> Result<f64, MetricError>
where
    R: AsRef<str>,
    P: AsRef<str>,
{
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let hits = pairs
        .iter()
        .filter(|(r, p)| r.as_ref().trim() == p.as_ref().trim())
        .count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Character-level edit distance with unit costs.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_seq(&a, &b)
}

pub fn levenshtein_seq<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - D(s1, s2) / max(|s1|, |s2|)`, with two empty strings scoring 1.
pub fn levenshtein_similarity(s1: &str, s2: &str) -> f64 {
    let len = s1.chars().count().max(s2.chars().count());
    if len == 0 {
        return 1.0;
    }
    1.0 - levenshtein(s1, s2) as f64 / len as f64
}

/// Metric tokenizer: pads each of `( ) [ ] , '` with spaces and splits on
/// whitespace runs.
pub fn tokenize_for_rouge(s: &str) -> Vec<String> {
    let mut padded = String::with_capacity(s.len() * 2);
    for c in s.chars() {
        if matches!(c, '(' | ')' | '[' | ']' | ',' | '\'') {
            padded.push(' ');
            padded.push(c);
            padded.push(' ');
        } else {
            padded.push(c);
        }
    }
    padded.split_whitespace().map(str::to_string).collect()
}

fn reference_normalized(overlap: usize, ref_len: usize, cand_len: usize) -> f64 {
    match (ref_len, cand_len) {
        (0, 0) => 1.0,
        (0, _) => 0.0,
        _ => overlap as f64 / ref_len as f64,
    }
}

/// Clipped unigram recall against the reference.
pub fn rouge1(reference: &str, candidate: &str) -> f64 {
    let r = tokenize_for_rouge(reference);
    let c = tokenize_for_rouge(candidate);
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &r {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let mut overlap = 0;
    for t in &c {
        if let Some(n) = counts.get_mut(t.as_str()) {
            if *n > 0 {
                *n -= 1;
                overlap += 1;
            }
        }
    }
    reference_normalized(overlap, r.len(), c.len())
}

/// Token-level LCS length.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS length over reference length.
pub fn rouge_l(reference: &str, candidate: &str) -> f64 {
    let r = tokenize_for_rouge(reference);
    let c = tokenize_for_rouge(candidate);
    reference_normalized(lcs_len(&r, &c), r.len(), c.len())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub label: String,
    pub counts: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
}

/// Per-class scores plus unweighted (macro) means and global accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub per_class: Vec<ClassScores>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Correct predictions over all samples.
    pub accuracy: f64,
    pub n: usize,
}

/// Scores `(true_label, predicted_label)` pairs over a declared class set.
pub fn classification_report<T, P, C>(
    pairs: &[(T, P)],
    classes: &[C],
) -> Result<ClassificationReport, MetricError>
where
    T: AsRef<str>,
    P: AsRef<str>,
    C: AsRef<str>,
{
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let index: BTreeMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_ref(), i))
        .collect();
    let lookup = |label: &str| {
        index
            .get(label)
            .copied()
            .ok_or_else(|| MetricError::UnknownLabel(label.to_string()))
    };
    let mut counts = vec![ConfusionCounts::default(); classes.len()];
    let mut correct = 0;
    for (t, p) in pairs {
        let (ti, pi) = (lookup(t.as_ref())?, lookup(p.as_ref())?);
        if ti == pi {
            counts[ti].tp += 1;
            correct += 1;
        } else {
            counts[ti].fn_ += 1;
            counts[pi].fp += 1;
        }
    }
    let n = pairs.len();
    for c in &mut counts {
        c.tn = n - c.tp - c.fp - c.fn_;
    }
    let per_class: Vec<ClassScores> = classes
        .iter()
        .zip(&counts)
        .map(|(label, c)| ClassScores {
            label: label.as_ref().to_string(),
            counts: *c,
            precision: c.precision(),
            recall: c.recall(),
            accuracy: c.accuracy(),
            f1: c.f1(),
        })
        .collect();
    let k = per_class.len().max(1) as f64;
    let mean = |f: fn(&ClassScores) -> f64| per_class.iter().map(f).sum::<f64>() / k;
    Ok(ClassificationReport {
        macro_precision: mean(|c| c.precision),
        macro_recall: mean(|c| c.recall),
        macro_f1: mean(|c| c.f1),
        accuracy: correct as f64 / n as f64,
        n,
        per_class,
    })
}
