mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Args, Parser, Subcommand};

use error::{CliError, Kind};

/// Screen clinical-trial narratives for dosing errors.
#[derive(Debug, Parser)]
#[command(name = "dosescreen", version)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus with a planted signal.
    Synth(SynthArgs),
    /// Corpus utilities.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
    /// Build the feature matrix and its registry from a corpus.
    Extract(ExtractArgs),
    /// Stratified k-fold training with out-of-fold predictions.
    Train(TrainArgs),
    /// Hyperparameter search, or `tune replay` for a single config.
    #[command(subcommand_negates_reqs = true, args_conflicts_with_subcommands = true)]
    Tune(TuneArgs),
    /// Ensemble probabilities from trained fold models.
    Predict(PredictArgs),
    /// Metrics at a threshold, an F1-optimized threshold, or a sweep.
    Evaluate(EvaluateArgs),
    /// Drop one feature category at a time and retrain.
    Ablate(AblateArgs),
    /// Retrain on the top-K columns by baseline importance.
    SelectTopk(TopkArgs),
    /// Aggregate gain importance across fold models.
    Importance(ImportanceArgs),
}

#[derive(Debug, Subcommand)]
enum CorpusAction {
    /// Counts, positive rate and length quantiles.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
    },
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.046)]
    rate: f64,
    #[arg(long, default_value_t = 1.0)]
    strength: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Dense sentence-embedding block (FMX1 with registry sidecar).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Precomputed classifier score columns (FMX1 with registry sidecar).
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Reuse vectorizers fitted by an earlier `extract`.
    #[arg(long)]
    vectorizers: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    word_max_features: usize,
    #[arg(long, default_value_t = 1000)]
    char_max_features: usize,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Feature matrix (FMX1).
    #[arg(long)]
    features: PathBuf,
    /// Corpus JSONL whose labels align with the matrix rows.
    #[arg(long)]
    labels_from: PathBuf,
}

#[derive(Debug, Args)]
struct TrainingArgs {
    /// TrainConfig JSON; unspecified fields take the tuned defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(2..))]
    folds: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Override the negatives/positives ratio computed from the labels.
    #[arg(long)]
    scale_pos_weight: Option<f64>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[command(subcommand)]
    action: Option<TuneAction>,
    #[command(flatten)]
    data: Option<DataArgs>,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value = "tpe")]
    sampler: String,
    /// JSONL history; an existing file is resumed.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum TuneAction {
    /// Evaluate exactly one configuration with k-fold CV.
    Replay {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        training: TrainingArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Directory with model_fold{k}.json files.
    #[arg(long)]
    models: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Corpus whose ids label the output rows.
    #[arg(long)]
    ids_from: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    probs: PathBuf,
    #[arg(long)]
    labels_from: PathBuf,
    #[arg(long, conflicts_with = "optimize_f1")]
    threshold: Option<f64>,
    #[arg(long)]
    optimize_f1: bool,
    /// Comma-separated thresholds for a sweep table.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<f64>>,
    /// Write the sweep as CSV here instead of stdout.
    #[arg(long)]
    sweep_out: Option<PathBuf>,
    /// Write the report JSON here as well as stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AblateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    training: TrainingArgs,
    /// Categories to drop; defaults to every category present.
    #[arg(long, value_delimiter = ',')]
    drop: Option<Vec<String>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TopkArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long, value_delimiter = ',', default_value = "10,25,50,100,200,500,1000,2000,3000")]
    ks: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ImportanceArgs {
    #[arg(long)]
    models: PathBuf,
    /// Matrix whose registry sidecar names the model columns.
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn clap_failure(e: clap::Error) -> ExitCode {
    if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
        let _ = e.print();
        return ExitCode::SUCCESS;
    }
    let flag = match e.get(ContextKind::InvalidArg) {
        Some(ContextValue::String(s)) => Some(s.split_whitespace().next().unwrap_or(s).to_string()),
        Some(ContextValue::Strings(v)) => v.first().map(|s| s.split_whitespace().next().unwrap_or(s).to_string()),
        _ => None,
    };
    let message = e.render().to_string();
    let message = message.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
    let err = CliError { kind: Kind::Usage, message, flag };
    eprintln!("{}", err.to_json());
    Kind::Usage.exit_code()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => return clap_failure(e),
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.kind.exit_code()
        }
    }
}
