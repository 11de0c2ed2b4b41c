//! `tsrep`: train time-series encoders and evaluate their representations.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "tsrep", version, about = "Unsupervised representations for time series")]
struct Cli {
    /// Run configuration of `key = value` lines
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Seed for every random choice
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Maximum number of worker threads
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Log more (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct TrainArgs {
    /// Negative samples per anchor; a comma list trains one encoder per value
    #[arg(long, value_name = "K[,K...]")]
    k: Option<String>,

    /// Optimizer steps per encoder
    #[arg(long)]
    steps: Option<usize>,

    /// Anchors per mini-batch
    #[arg(long)]
    batch: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Classifier {
    Svm,
    Knn1,
    Dtw,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train encoders on a dataset and save them
    Train {
        /// Training dataset (UCR table or .ts file)
        data: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
        /// Model file; several K values add a `-k<K>` suffix per model
        #[arg(long)]
        out: Option<PathBuf>,
        /// Loss trace CSV (defaults to the model path with `.trace.csv`)
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Write one representation row per series
    Encode {
        /// Model files; several models concatenate their columns
        #[arg(long = "model", required = true)]
        models: Vec<PathBuf>,
        data: Option<PathBuf>,
        /// Dataset whose statistics normalize the input (defaults to the input itself)
        #[arg(long, value_name = "DATASET")]
        norm_from: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a test set and print a report line
    Eval {
        train: Option<PathBuf>,
        test: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "svm")]
        classifier: Classifier,
        /// Encode both sets with these models (otherwise raw values are used)
        #[arg(long = "model")]
        models: Vec<PathBuf>,
        /// Precomputed training representations
        #[arg(long, requires = "test_repr")]
        train_repr: Option<PathBuf>,
        /// Precomputed test representations
        #[arg(long, requires = "train_repr")]
        test_repr: Option<PathBuf>,
        /// Train the classifier on this stratified fraction of the labels
        #[arg(long)]
        label_fraction: Option<f64>,
        /// Variant name in the report
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster sliding-window representations of a long series
    Cluster {
        #[arg(long = "model", required = true)]
        models: Vec<PathBuf>,
        series: PathBuf,
        /// `day`, `quarter`, or a width in steps
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        clusters: Option<usize>,
        /// Step between window starts (defaults to the width)
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare linear probes on representations and on raw windows
    Regress {
        #[arg(long = "model", required = true)]
        models: Vec<PathBuf>,
        series: PathBuf,
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        stride: Option<usize>,
        /// Length of the training prefix
        #[arg(long)]
        train_len: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train, encode and classify a train/test pair in one go
    Benchmark {
        train: Option<PathBuf>,
        test: Option<PathBuf>,
        #[command(flatten)]
        train_args: TrainArgs,
        #[arg(long, value_enum, default_value = "svm")]
        classifier: Classifier,
        #[arg(long)]
        label_fraction: Option<f64>,
        /// Also report the DTW nearest-neighbour baseline
        #[arg(long)]
        dtw: bool,
        /// Report CSV (standard output when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
