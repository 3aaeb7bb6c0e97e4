//! `nlid`: train, apply and evaluate SVM-ensemble native language
//! identification models.
//!
//! Exit codes: 0 success, 1 usage, 2 data, 3 model. Every failure prints one
//! line of the form `error[E_CODE]: message` on stderr.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlid_core::{Error, ErrorKind};

use crate::config::RefitOn;

#[derive(Debug, Parser)]
#[command(name = "nlid", version, about = "SVM-ensemble native language identification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cross-validate every view, keep the good ones, write a model file.
    Train(Box<TrainArgs>),
    /// Label documents with a trained model.
    Predict(PredictArgs),
    /// Score a predictions file against gold labels.
    Evaluate(EvaluateArgs),
    /// McNemar's test between two prediction files.
    Compare(CompareArgs),
    /// Most informative features of one view.
    ReportFeatures(ReportArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// TOML file with any of the settings below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    essays: Option<PathBuf>,
    #[arg(long)]
    transcripts: Option<PathBuf>,
    #[arg(long)]
    ivectors: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    dev_essays: Option<PathBuf>,
    #[arg(long)]
    dev_transcripts: Option<PathBuf>,
    #[arg(long)]
    dev_ivectors: Option<PathBuf>,
    #[arg(long)]
    dev_labels: Option<PathBuf>,
    /// Comma-separated views such as `char8:essay,word2:transcript`, or `default`.
    #[arg(long, value_delimiter = ',')]
    specs: Option<Vec<String>>,
    /// Cross-validated accuracy a view must strictly exceed to be kept.
    #[arg(long)]
    threshold: Option<f64>,
    /// Comma-separated candidate values of C.
    #[arg(long, value_delimiter = ',')]
    c_grid: Option<Vec<f64>>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Add the dense iVector view (exempt from the threshold).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    with_ivectors: Option<bool>,
    #[arg(long, value_enum)]
    refit_on: Option<RefitOn>,
    /// Solver stopping tolerance on the projected gradient.
    #[arg(long)]
    tol: Option<f64>,
    /// Solver epoch limit.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Worker threads for view training.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Training log (TSV); also echoed to stderr.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// TOML file; its `model`, `predictions` and `[test]` entries are used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    essays: Option<PathBuf>,
    #[arg(long)]
    transcripts: Option<PathBuf>,
    #[arg(long)]
    ivectors: Option<PathBuf>,
    /// Output TSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    predictions: PathBuf,
    /// `id<TAB>label` file.
    #[arg(long)]
    gold: PathBuf,
    /// Machine-readable `key<TAB>value` report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Exact binomial p-value instead of the chi-squared approximation.
    #[arg(long)]
    exact: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    model: PathBuf,
    /// View to inspect, e.g. `char8:essay`.
    #[arg(long)]
    view: String,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Only this class; all classes when omitted.
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Model => 3,
    }
}

fn fail(code: &str, message: &str) -> String {
    let flat: Vec<&str> = message.split_whitespace().collect();
    format!("error[{code}]: {}", flat.join(" "))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Train(a) => commands::train(*a),
        Command::Predict(a) => commands::predict(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Compare(a) => commands::compare(a),
        Command::ReportFeatures(a) => commands::report_features(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", fail("E_USAGE", first));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", fail(e.code(), &e.to_string()));
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
