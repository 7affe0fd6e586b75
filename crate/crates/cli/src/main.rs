use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use geocmd_core::classify::{
    load_model, save_model, train_forest, train_svm, ForestParams, Model, ModelKind, SvmParams,
};
use geocmd_core::dataset::{generate, load_jsonl, save_jsonl, split, SplitSpec};
use geocmd_core::harness::{
    evaluate, load_predictions, parse_report_csv, predict_classifier, predict_rules, report_csv,
    report_markdown, save_predictions, PredictionRecord,
};
use geocmd_core::llm::{batch_translate, HttpTransport, LlmClient, LlmConfig};
use geocmd_core::rules::RuleSet;
use geocmd_core::Error;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "geocmd",
    version,
    about = "Translate map requests into GIS calls and score the translators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled query corpus as JSONL.
    Generate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        per_function: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shuffle a corpus into train.jsonl, val.jsonl and test.jsonl.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train an intent classifier.
    Train {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Forest size; ignored for the SVM.
        #[arg(long, default_value_t = 100)]
        trees: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one system over a dataset and write predictions JSONL.
    Predict {
        /// One of rules, svm, rf or llm.
        #[arg(long)]
        system: String,
        /// Classifier model file (svm, rf).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Rules file; the built-in set is used when omitted.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Chat endpoint URL (llm). The key is read from GEOCMD_API_KEY.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long, default_value = "command-r-08-2024")]
        llm_model: String,
        /// Minimum milliseconds between LLM requests.
        #[arg(long, default_value_t = 0)]
        min_interval_ms: u64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score prediction files into a CSV report.
    Evaluate {
        #[arg(long, num_args = 1.., required = true)]
        preds: Vec<PathBuf>,
        /// Written to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a CSV report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Md)]
        format: FormatArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Svm,
    Rf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Md,
    Csv,
}

enum Failure {
    Core(Error),
    Usage(String),
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Core(e.into())
    }
}

impl Failure {
    fn to_json(&self) -> serde_json::Value {
        match self {
            Failure::Core(e) => json!({"error": e.kind(), "message": e.to_string()}),
            Failure::Usage(m) => json!({"error": "UsageError", "message": m}),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Generate {
            seed,
            per_function,
            out,
        } => {
            let samples = generate(seed, per_function)?;
            save_jsonl(&samples, &out)?;
        }
        Command::Split {
            input,
            seed,
            out_dir,
        } => {
            let parts = split(&load_jsonl(&input)?, &SplitSpec::new(seed))?;
            fs::create_dir_all(&out_dir).map_err(Error::from)?;
            save_jsonl(&parts.train, &out_dir.join("train.jsonl"))?;
            save_jsonl(&parts.val, &out_dir.join("val.jsonl"))?;
            save_jsonl(&parts.test, &out_dir.join("test.jsonl"))?;
        }
        Command::Train {
            model,
            input,
            seed,
            trees,
            out,
        } => {
            let train = load_jsonl(&input)?;
            let trained = match model {
                ModelArg::Svm => Model::Svm(train_svm(
                    &train,
                    SvmParams {
                        seed,
                        ..SvmParams::default()
                    },
                )?),
                ModelArg::Rf => Model::Forest(train_forest(
                    &train,
                    ForestParams {
                        n_trees: trees,
                        seed,
                        ..ForestParams::default()
                    },
                )?),
            };
            save_model(&trained, &out)?;
        }
        Command::Predict {
            system,
            model,
            rules,
            endpoint,
            llm_model,
            min_interval_ms,
            input,
            out,
        } => {
            let samples = load_jsonl(&input)?;
            let records = match system.as_str() {
                "rules" => {
                    let set = match rules {
                        Some(path) => RuleSet::load(&path)?,
                        None => RuleSet::builtin(),
                    };
                    predict_rules(&set, &samples, &system)
                }
                "svm" | "rf" => {
                    let path = model.ok_or_else(|| {
                        Failure::Usage(format!("--system {system} needs --model"))
                    })?;
                    let loaded = load_model(&path)?;
                    let expected = if system == "svm" {
                        ModelKind::Svm
                    } else {
                        ModelKind::Forest
                    };
                    if loaded.kind() != expected {
                        return Err(Failure::Usage(format!(
                            "{} holds a {:?} model, not {system}",
                            path.display(),
                            loaded.kind()
                        )));
                    }
                    predict_classifier(&loaded, &samples, &system)
                }
                "llm" => {
                    let endpoint = endpoint
                        .ok_or_else(|| Failure::Usage("--system llm needs --endpoint".into()))?;
                    let mut config = LlmConfig::from_env(endpoint, llm_model)?;
                    config.min_interval_ms = min_interval_ms;
                    let client = LlmClient::new(config, HttpTransport::new()?);
                    // The output file doubles as the resume log.
                    let records = batch_translate(&client, &system, &samples, Some(&out))?;
                    write_sorted(&records, &out)?;
                    return Ok(());
                }
                other => {
                    return Err(Failure::Usage(format!(
                        "unknown system `{other}` (expected rules, svm, rf or llm)"
                    )))
                }
            };
            save_predictions(&records, &out)?;
        }
        Command::Evaluate { preds, out } => {
            let mut records = Vec::new();
            for path in &preds {
                records.extend(load_predictions(path)?);
            }
            let text = report_csv(&evaluate(&records)?);
            match out {
                Some(path) => fs::write(path, text).map_err(Error::from)?,
                None => print!("{text}"),
            }
        }
        Command::Report { input, format } => {
            let text = fs::read_to_string(&input).map_err(Error::from)?;
            let reports = parse_report_csv(&text)?;
            match format {
                FormatArg::Md => print!("{}", report_markdown(&reports)),
                FormatArg::Csv => print!("{}", report_csv(&reports)),
            }
        }
    }
    Ok(())
}

/// Replaces the append-order resume log with the id-sorted records.
fn write_sorted(records: &[PredictionRecord], out: &Path) -> Result<(), Failure> {
    let tmp = out.with_extension("jsonl.tmp");
    save_predictions(records, &tmp)?;
    fs::rename(&tmp, out).map_err(Error::from)?;
    Ok(())
}
