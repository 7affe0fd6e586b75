//! Prediction records, per-system scoring and report rendering.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::Model;
use crate::dataset::Sample;
use crate::metrics::{
    classification_report, exact_match_accuracy, levenshtein_similarity, rouge1, rouge_l,
};
use crate::rules::RuleSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionKind {
    /// Full call strings, scored with EMA, LS and ROUGE.
    Generation,
    /// Function labels, scored with precision, recall, F1 and accuracy.
    Classification,
}

impl PredictionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PredictionKind::Generation => "generation",
            PredictionKind::Classification => "classification",
        }
    }
}

/// One line of a predictions file. For classification records `reference`
/// holds the true function label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub id: u64,
    pub system: String,
    pub kind: PredictionKind,
    pub query: String,
    pub reference: String,
    pub prediction: String,
    #[serde(default)]
    pub failed: bool,
}

/// Scores for one system. Metrics outside the system's family are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub system: String,
    pub kind: PredictionKind,
    pub n: usize,
    pub ema: Option<f64>,
    pub ls: Option<f64>,
    pub rouge1: Option<f64>,
    #[serde(rename = "rougeL")]
    pub rouge_l: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("system `{system}` mixes generation and classification records")]
    MixedKinds { system: String },
    #[error("no prediction records to evaluate")]
    EmptySystem,
    #[error("record with id {id} has an empty system name")]
    UnnamedSystem { id: u64 },
    #[error("system `{system}` has more than one record for id {id}")]
    DuplicateId { system: String, id: u64 },
    #[error("predictions line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("report: {0}")]
    MalformedReport(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Runs the rule translator over `samples`. Queries with no matching rule
/// become failed records with an empty prediction.
pub fn predict_rules(rules: &RuleSet, samples: &[Sample], system: &str) -> Vec<PredictionRecord> {
    samples
        .iter()
        .map(|s| {
            let (prediction, failed) = match rules.translate(&s.query) {
                Ok(call) => (call.to_string(), false),
                Err(_) => (String::new(), true),
            };
            PredictionRecord {
                id: s.id,
                system: system.to_string(),
                kind: PredictionKind::Generation,
                query: s.query.clone(),
                reference: s.call.clone(),
                prediction,
                failed,
            }
        })
        .collect()
}

/// Labels each sample with `model`; records carry the true label as reference.
pub fn predict_classifier(
    model: &Model,
    samples: &[Sample],
    system: &str,
) -> Vec<PredictionRecord> {
    samples
        .iter()
        .map(|s| PredictionRecord {
            id: s.id,
            system: system.to_string(),
            kind: PredictionKind::Classification,
            query: s.query.clone(),
            reference: s.function.clone(),
            prediction: model.predict_query(&s.query).to_string(),
            failed: false,
        })
        .collect()
}

/// One report per system, in order of first appearance. Within a system
/// records are scored in id order; failed records score as empty
/// predictions.
pub fn evaluate(records: &[PredictionRecord]) -> Result<Vec<MetricReport>, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::EmptySystem);
    }
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<&PredictionRecord>> = HashMap::new();
    for r in records {
        if r.system.is_empty() {
            return Err(HarnessError::UnnamedSystem { id: r.id });
        }
        groups
            .entry(&r.system)
            .or_insert_with(|| {
                order.push(&r.system);
                Vec::new()
            })
            .push(r);
    }
    order
        .into_iter()
        .map(|system| {
            let mut group = groups.remove(system).expect("grouped above");
            group.sort_by_key(|r| r.id);
            score_system(system, &group)
        })
        .collect()
}

fn score_system(system: &str, records: &[&PredictionRecord]) -> Result<MetricReport, HarnessError> {
    let kind = records[0].kind;
    if records.iter().any(|r| r.kind != kind) {
        return Err(HarnessError::MixedKinds {
            system: system.to_string(),
        });
    }
    let mut ids = HashSet::new();
    if let Some(r) = records.iter().find(|r| !ids.insert(r.id)) {
        return Err(HarnessError::DuplicateId {
            system: system.to_string(),
            id: r.id,
        });
    }
    let pairs: Vec<(&str, &str)> = records
        .iter()
        .map(|r| {
            let prediction = if r.failed { "" } else { r.prediction.as_str() };
            (r.reference.as_str(), prediction)
        })
        .collect();
    let n = pairs.len();
    let mean =
        |f: &dyn Fn(&str, &str) -> f64| pairs.iter().map(|(r, p)| f(r, p)).sum::<f64>() / n as f64;
    let mut report = MetricReport {
        system: system.to_string(),
        kind,
        n,
        ema: None,
        ls: None,
        rouge1: None,
        rouge_l: None,
        precision: None,
        recall: None,
        f1: None,
        accuracy: None,
    };
    match kind {
        PredictionKind::Generation => {
            report.ema = Some(exact_match_accuracy(&pairs).expect("non-empty group"));
            report.ls = Some(mean(&|r, p| levenshtein_similarity(r, p)));
            report.rouge1 = Some(mean(&|r, p| rouge1(r, p)));
            report.rouge_l = Some(mean(&|r, p| rouge_l(r, p)));
        }
        PredictionKind::Classification => {
            let (precision, recall, f1, accuracy) = classification_scores(&pairs);
            report.precision = Some(precision);
            report.recall = Some(recall);
            report.f1 = Some(f1);
            report.accuracy = Some(accuracy);
        }
    }
    Ok(report)
}

/// Macro precision/recall/F1 over every label seen as truth or prediction,
/// plus global accuracy. An empty prediction is a miss for its true class
/// and a false positive for no class.
fn classification_scores(pairs: &[(&str, &str)]) -> (f64, f64, f64, f64) {
    let labels: BTreeSet<&str> = pairs
        .iter()
        .flat_map(|&(t, p)| [t, p])
        .filter(|l| !l.is_empty())
        .collect();
    let mut classes: Vec<&str> = labels.into_iter().collect();
    let real = classes.len();
    classes.push("");
    let report = classification_report(pairs, &classes).expect("classes cover every label");
    let rows = &report.per_class[..real];
    let k = real.max(1) as f64;
    let mean = |f: fn(&crate::metrics::ClassScores) -> f64| rows.iter().map(f).sum::<f64>() / k;
    (
        mean(|c| c.precision),
        mean(|c| c.recall),
        mean(|c| c.f1),
        report.accuracy,
    )
}

pub fn write_predictions<W: Write>(
    records: &[PredictionRecord],
    out: &mut W,
) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_predictions(records: &[PredictionRecord], path: &Path) -> Result<(), HarnessError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_predictions(records, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<PredictionRecord>, HarnessError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| HarnessError::MalformedRecord {
                line: i + 1,
                message: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>, HarnessError> {
    read_predictions(BufReader::new(File::open(path)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

pub const CSV_HEADER: [&str; 11] = [
    "system",
    "kind",
    "n",
    "ema",
    "ls",
    "rouge1",
    "rougeL",
    "precision",
    "recall",
    "f1",
    "accuracy",
];

const DASH: &str = "-";

impl MetricReport {
    fn metric_cells(&self) -> [Option<f64>; 8] {
        [
            self.ema,
            self.ls,
            self.rouge1,
            self.rouge_l,
            self.precision,
            self.recall,
            self.f1,
            self.accuracy,
        ]
    }
}

pub fn report(reports: &[MetricReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => report_csv(reports),
        ReportFormat::Markdown => report_markdown(reports),
    }
}

/// Full-precision CSV: floats use the shortest representation that parses
/// back to the same value.
pub fn report_csv(reports: &[MetricReport]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in reports {
        let mut row = vec![
            r.system.clone(),
            r.kind.as_str().to_string(),
            r.n.to_string(),
        ];
        row.extend(
            r.metric_cells()
                .iter()
                .map(|c| c.map_or_else(|| DASH.to_string(), |v| v.to_string())),
        );
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of utf-8 fields")
}

pub fn parse_report_csv(text: &str) -> Result<Vec<MetricReport>, HarnessError> {
    let bad = |m: String| HarnessError::MalformedReport(m);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut reports = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let line = i + 2;
        let kind = match &row[1] {
            "generation" => PredictionKind::Generation,
            "classification" => PredictionKind::Classification,
            other => return Err(bad(format!("line {line}: unknown kind `{other}`"))),
        };
        let n = row[2]
            .parse()
            .map_err(|_| bad(format!("line {line}: bad n `{}`", &row[2])))?;
        let mut cells = [None; 8];
        for (cell, text) in cells.iter_mut().zip(row.iter().skip(3)) {
            if text != DASH {
                let v: f64 = text
                    .parse()
                    .map_err(|_| bad(format!("line {line}: bad number `{text}`")))?;
                *cell = Some(v);
            }
        }
        let [ema, ls, rouge1, rouge_l, precision, recall, f1, accuracy] = cells;
        reports.push(MetricReport {
            system: row[0].to_string(),
            kind,
            n,
            ema,
            ls,
            rouge1,
            rouge_l,
            precision,
            recall,
            f1,
            accuracy,
        });
    }
    Ok(reports)
}

/// Comparison table with two-decimal cells and "-" for metrics outside a
/// system's family.
pub fn report_markdown(reports: &[MetricReport]) -> String {
    let mut out = String::new();
    out.push_str(
        "| System | Type | N | EMA | LS | ROUGE-1 | ROUGE-L | Recall | Precision | F1 Score | Accuracy |\n",
    );
    out.push_str("|---|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
    for r in reports {
        let kind = match r.kind {
            PredictionKind::Generation => "Text-Summarization",
            PredictionKind::Classification => "Classification",
        };
        let cells = [
            r.ema,
            r.ls,
            r.rouge1,
            r.rouge_l,
            r.recall,
            r.precision,
            r.f1,
            r.accuracy,
        ];
        let _ = write!(out, "| {} | {} | {} |", r.system, kind, r.n);
        for c in cells {
            match c {
                Some(v) => {
                    let _ = write!(out, " {v:.2} |");
                }
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    out.push_str("\nPrecision, recall and F1 are macro averages over function classes.\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(id: u64, system: &str, reference: &str, prediction: &str) -> PredictionRecord {
        PredictionRecord {
            id,
            system: system.into(),
            kind: PredictionKind::Generation,
            query: format!("q{id}"),
            reference: reference.into(),
            prediction: prediction.into(),
            failed: false,
        }
    }

    fn cls(id: u64, system: &str, truth: &str, predicted: &str) -> PredictionRecord {
        PredictionRecord {
            kind: PredictionKind::Classification,
            ..gen(id, system, truth, predicted)
        }
    }

    #[test]
    fn echo_system_is_perfect() {
        let recs: Vec<_> = (0..5)
            .map(|i| gen(i, "llm", "ZoomIn(2)", "ZoomIn(2)"))
            .collect();
        let r = &evaluate(&recs).unwrap()[0];
        assert_eq!(
            (r.ema, r.ls, r.rouge1, r.rouge_l),
            (Some(1.0), Some(1.0), Some(1.0), Some(1.0))
        );
        assert_eq!(
            (r.precision, r.recall, r.f1, r.accuracy),
            (None, None, None, None)
        );
    }

    #[test]
    fn one_garbled_in_ten() {
        let mut recs: Vec<_> = (0..10)
            .map(|i| gen(i, "x", "Draw('Line')", "Draw('Line')"))
            .collect();
        recs[3].prediction = "Draw('Lime')".into();
        assert_eq!(evaluate(&recs).unwrap()[0].ema, Some(0.9));
    }

    #[test]
    fn perfect_classifier() {
        let recs = vec![
            cls(0, "svm", "ZoomIn", "ZoomIn"),
            cls(1, "svm", "ZoomOut", "ZoomOut"),
            cls(2, "svm", "Draw", "Draw"),
        ];
        let r = &evaluate(&recs).unwrap()[0];
        assert_eq!(
            (r.precision, r.recall, r.f1, r.accuracy),
            (Some(1.0), Some(1.0), Some(1.0), Some(1.0))
        );
        assert_eq!(r.ema, None);
    }

    #[test]
    fn failed_records_score_as_empty() {
        let mut a = gen(0, "s", "ZoomIn(2)", "ZoomIn(2)");
        a.failed = true;
        let b = gen(1, "s", "ZoomIn(2)", "ZoomIn(2)");
        let r = &evaluate(&[a, b]).unwrap()[0];
        assert_eq!(r.ema, Some(0.5));
        assert_eq!(r.ls, Some(0.5));

        let mut c = cls(0, "c", "A", "A");
        c.failed = true;
        let r = &evaluate(&[c, cls(1, "c", "B", "B")]).unwrap()[0];
        assert_eq!(r.accuracy, Some(0.5));
        // A: p 0/0 -> 0, r 0; B: p 1, r 1.
        assert_eq!(r.precision, Some(0.5));
        assert_eq!(r.recall, Some(0.5));
    }

    #[test]
    fn hand_confusion_matrix() {
        let recs = vec![
            cls(0, "c", "A", "A"),
            cls(1, "c", "A", "B"),
            cls(2, "c", "B", "B"),
        ];
        let r = &evaluate(&recs).unwrap()[0];
        assert!((r.f1.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.precision.unwrap() - 0.75).abs() < 1e-12);
        assert!((r.recall.unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(evaluate(&[]), Err(HarnessError::EmptySystem)));
        let recs = vec![gen(0, "s", "a", "a"), cls(1, "s", "A", "A")];
        assert!(matches!(
            evaluate(&recs),
            Err(HarnessError::MixedKinds { .. })
        ));
        let recs = vec![gen(0, "s", "a", "a"), gen(0, "s", "a", "b")];
        assert!(matches!(
            evaluate(&recs),
            Err(HarnessError::DuplicateId { id: 0, .. })
        ));
    }

    #[test]
    fn systems_keep_first_appearance_order() {
        let recs = vec![
            gen(1, "b", "x", "x"),
            cls(0, "a", "A", "A"),
            gen(0, "b", "x", "y"),
        ];
        let reports = evaluate(&recs).unwrap();
        let names: Vec<_> = reports.iter().map(|r| r.system.as_str()).collect();
        assert_eq!(names, ["b", "a"]);
    }

    #[test]
    fn csv_round_trip_and_dashes() {
        let recs = vec![
            gen(0, "llm", "ZoomIn(2)", "ZoomIn(3)"),
            gen(1, "llm", "Draw('Line')", "Draw('Line')"),
            cls(0, "svm", "A", "B"),
            cls(1, "svm", "B", "B"),
        ];
        let reports = evaluate(&recs).unwrap();
        let text = report_csv(&reports);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert!(lines[1].ends_with(",-,-,-,-"));
        assert!(lines[2].starts_with("svm,classification,2,-,-,-,-,"));
        assert_eq!(parse_report_csv(&text).unwrap(), reports);
    }

    #[test]
    fn markdown_layout() {
        let recs = vec![
            gen(0, "rules", "ZoomIn(2)", "ZoomIn(2)"),
            cls(0, "rf", "A", "A"),
        ];
        let md = report_markdown(&evaluate(&recs).unwrap());
        let rows: Vec<_> = md.lines().collect();
        assert_eq!(
            rows[2],
            "| rules | Text-Summarization | 1 | 1.00 | 1.00 | 1.00 | 1.00 | - | - | - | - |"
        );
        assert_eq!(
            rows[3],
            "| rf | Classification | 1 | - | - | - | - | 1.00 | 1.00 | 1.00 | 1.00 |"
        );
        assert!(md.contains("macro"));
    }

    #[test]
    fn predictions_jsonl_round_trip() {
        let recs = vec![
            gen(3, "rules", "ZoomIn(2)", ""),
            cls(4, "svm", "Draw", "Draw"),
        ];
        let mut buf = Vec::new();
        write_predictions(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text
            .lines()
            .next()
            .unwrap()
            .starts_with(r#"{"id":3,"system":"rules","kind":"generation""#));
        assert_eq!(read_predictions(text.as_bytes()).unwrap(), recs);
        assert!(matches!(
            read_predictions("{\"id\":1}\n".as_bytes()),
            Err(HarnessError::MalformedRecord { line: 1, .. })
        ));
    }
}
