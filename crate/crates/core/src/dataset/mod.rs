//! Paired (query, reference call, label) records, the seeded corpus
//! generator, the train/val/test split and JSONL persistence.

mod templates;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::command::{parse_call, GisFunction};

pub use templates::{generate, template_count, TEMPLATE_MIN_PER_FUNCTION};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("could not produce {requested} unique queries for {function} (got {produced})")]
    TemplateExhaustion {
        function: GisFunction,
        requested: usize,
        produced: usize,
    },
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("line {line}: invalid call `{call}`: {message}")]
    InvalidCall {
        line: usize,
        call: String,
        message: String,
    },
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One labeled example.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sample {
    pub id: u64,
    pub function: String,
    pub query: String,
    pub call: String,
}

impl Sample {
    /// Checks that the call parses and its function matches the label.
    pub fn validate_call(&self) -> Result<(), String> {
        let call = parse_call(&self.call).map_err(|e| e.to_string())?;
        if call.function_name() != self.function {
            return Err(format!(
                "label `{}` does not match call function `{}`",
                self.function,
                call.function_name()
            ));
        }
        Ok(())
    }
}

/// An exact ratio `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u32,
    pub den: u32,
}

impl Fraction {
    pub const fn new(num: u32, den: u32) -> Self {
        Fraction { num, den }
    }

    /// `floor(n * num / den)`
    pub fn of(self, n: usize) -> usize {
        (n as u128 * self.num as u128 / self.den as u128) as usize
    }

    fn in_open_unit_interval(self) -> bool {
        self.den > 0 && self.num > 0 && self.num < self.den
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train_fraction: Fraction,
    pub val_fraction_of_test: Fraction,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        SplitSpec {
            seed,
            train_fraction: Fraction::new(4, 5),
            val_fraction_of_test: Fraction::new(1, 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
}

/// Seeded shuffle, then the first `train_fraction` goes to train and the
/// remainder is divided into validation and test.
pub fn split(samples: &[Sample], spec: &SplitSpec) -> Result<Split, DatasetError> {
    if samples.is_empty() {
        return Err(DatasetError::InvalidArgument(
            "cannot split an empty dataset".into(),
        ));
    }
    for f in [spec.train_fraction, spec.val_fraction_of_test] {
        if !f.in_open_unit_interval() {
            return Err(DatasetError::InvalidArgument(format!(
                "split fraction {}/{} is outside (0, 1)",
                f.num, f.den
            )));
        }
    }
    let mut shuffled = samples.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    shuffled.shuffle(&mut rng);

    let n_train = spec.train_fraction.of(shuffled.len());
    let rest = shuffled.split_off(n_train);
    let n_val = spec.val_fraction_of_test.of(rest.len());
    let (val, test) = rest.split_at(n_val);
    Ok(Split {
        train: shuffled,
        val: val.to_vec(),
        test: test.to_vec(),
    })
}

pub fn save_jsonl(samples: &[Sample], path: &Path) -> Result<(), DatasetError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_jsonl(samples, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_jsonl<W: Write>(samples: &[Sample], out: &mut W) -> Result<(), DatasetError> {
    for s in samples {
        serde_json::to_writer(&mut *out, s).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_jsonl(path: &Path) -> Result<Vec<Sample>, DatasetError> {
    read_jsonl(BufReader::new(File::open(path)?))
}

/// Reads and validates records: every call must parse with a matching label
/// and queries must be non-empty and unique.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<Sample>, DatasetError> {
    let mut samples = Vec::new();
    let mut seen_queries = HashSet::new();
    let mut seen_ids = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: Sample =
            serde_json::from_str(&line).map_err(|e| DatasetError::MalformedRecord {
                line: line_no,
                message: e.to_string(),
            })?;
        let query = sample.query.trim();
        if query.is_empty() {
            return Err(DatasetError::MalformedRecord {
                line: line_no,
                message: "empty query".into(),
            });
        }
        if !seen_queries.insert(query.to_string()) {
            return Err(DatasetError::MalformedRecord {
                line: line_no,
                message: format!("duplicate query `{query}`"),
            });
        }
        if !seen_ids.insert(sample.id) {
            return Err(DatasetError::MalformedRecord {
                line: line_no,
                message: format!("duplicate id {}", sample.id),
            });
        }
        sample
            .validate_call()
            .map_err(|message| DatasetError::InvalidCall {
                line: line_no,
                call: sample.call.clone(),
                message,
            })?;
        samples.push(sample);
    }
    Ok(samples)
}
