//! TF-IDF featurization over unigrams and adjacent bigrams.

use std::collections::{BTreeMap, HashMap};

use super::ClassifyError;

pub const NUM_TOKEN: &str = "<num>";

/// Lowercases, splits on non-alphanumeric runs and maps all-digit tokens to
/// [`NUM_TOKEN`].
pub fn tokenize(query: &str) -> Vec<String> {
    query
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| {
            if t.chars().all(|c| c.is_ascii_digit()) {
                NUM_TOKEN.to_string()
            } else {
                t.to_lowercase()
            }
        })
        .collect()
}

/// Unigrams followed by space-joined adjacent bigrams.
pub fn terms(tokens: &[String]) -> Vec<String> {
    let mut out = tokens.to_vec();
    out.extend(tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    out
}

/// Sparse vector: `(index, weight)` pairs sorted by index.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    /// Builds a vector from arbitrary entries; duplicates are summed.
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, v) in entries {
            assert!(
                i < dim,
                "feature index {i} out of range for dimension {dim}"
            );
            *acc.entry(i).or_default() += v;
        }
        FeatureVector {
            dim,
            entries: acc.into_iter().filter(|&(_, v)| v != 0.0).collect(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        FeatureVector {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0.0, |pos| self.entries[pos].1)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }
}

/// Term index and smoothed idf, fit on training queries only.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    idf: Vec<f64>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Indices follow lexicographic term order;
    /// `idf = ln((1 + N) / (1 + df)) + 1`.
    pub fn fit<'a, I>(queries: I) -> Result<Self, ClassifyError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut n_docs = 0usize;
        for q in queries {
            n_docs += 1;
            let mut doc_terms = terms(&tokenize(q));
            doc_terms.sort_unstable();
            doc_terms.dedup();
            for t in doc_terms {
                *df.entry(t).or_default() += 1;
            }
        }
        if df.is_empty() {
            return Err(ClassifyError::EmptyVocabulary);
        }
        let n = n_docs as f64;
        let (terms, idf) = df
            .into_iter()
            .map(|(t, d)| (t, ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0))
            .unzip();
        Ok(Self::from_parts(terms, idf))
    }

    /// Rebuilds a vocabulary from stored terms and idf weights.
    pub fn from_parts(terms: Vec<String>, idf: Vec<f64>) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { terms, idf, index }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    /// Raw term counts times idf, L2-normalized. Unseen terms are dropped;
    /// a query with no known terms maps to the zero vector.
    pub fn featurize(&self, query: &str) -> FeatureVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in terms(&tokenize(query)) {
            if let Some(i) = self.index_of(&t) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(i, tf)| (i, tf * self.idf[i]))
            .collect();
        let norm = entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut entries {
                e.1 /= norm;
            }
        }
        FeatureVector {
            dim: self.len(),
            entries,
        }
    }
}
