//! Command-line entry point: experiment batches, offline learning curves,
//! the collision-math calculator, and dictionary tooling.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use monolab::cli::{self, AnalyzeArgs, OfflineArgs};

#[derive(Parser)]
#[command(name = "monolab", version, about = "Stereo-supervised monocular disparity learning lab")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Run all (scheme x seed) experiments from a JSON config.
    Sim(SimArgs),
    /// Train regressors on growing dataset prefixes and emit learning curves.
    Offline(OfflineCliArgs),
    /// Evaluate collision/spurious-turn math and frame-log metrics.
    Analyze(AnalyzeCliArgs),
    /// Texton dictionary tooling.
    #[command(subcommand)]
    Dict(DictCommand),
}

#[derive(Args)]
struct SimArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides config and MONOLAB_OUTPUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OfflineCliArgs {
    #[arg(long)]
    config: PathBuf,
    /// Existing dataset directory (PGM frames plus labels.csv).
    #[arg(long, conflicts_with = "synthesize")]
    dataset: Option<PathBuf>,
    /// Synthesize a dataset of this many frames instead.
    #[arg(long)]
    synthesize: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Learning-curve checkpoints (training-prefix sizes).
    #[arg(long, value_delimiter = ',', default_values_t = [250usize, 500, 1000, 2000, 4000])]
    checkpoints: Vec<usize>,
    /// Seed for dataset synthesis and feature sampling.
    #[arg(long, default_value_t = 77)]
    dataset_seed: u64,
    /// TPR at which to report the ROC operating point.
    #[arg(long, default_value_t = 0.96)]
    target_tpr: f64,
}

#[derive(Args)]
struct AnalyzeCliArgs {
    /// True positive rate in [0, 1].
    #[arg(long)]
    tpr: Option<f64>,
    /// False positive rate in [0, 1].
    #[arg(long)]
    fpr: Option<f64>,
    /// Consecutive samples that must all be misclassified.
    #[arg(long)]
    s: Option<u32>,
    /// Frame rate in Hz (default 30).
    #[arg(long)]
    fps: Option<f64>,
    /// Forward speed in m/s (default 0.5).
    #[arg(long)]
    speed: Option<f64>,
    /// Probability that a classification repeats the previous one.
    #[arg(long)]
    p_ident: Option<f64>,
    /// Frame-log CSV from `sim` to score.
    #[arg(long)]
    frames: Option<PathBuf>,
    /// Disparity threshold for frame-log classification.
    #[arg(long)]
    threshold: Option<f64>,
    /// Write the frame-log ROC curve to this CSV.
    #[arg(long)]
    roc_csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DictCommand {
    /// Train a dictionary from the config's warmup flight.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print shape and centroid spread of a saved dictionary.
    Inspect { path: PathBuf },
}

fn run() -> monolab::Result<()> {
    match Cli::parse().command {
        CliCommand::Sim(args) => {
            let summary = cli::cmd_sim(&args.config, args.out.as_deref())?;
            for agg in &summary.aggregates {
                println!(
                    "{:<16} runs {:>3}  overrides {:>6.1} (sd {:>5.1})  turns {:>6.1} (sd {:>5.1})",
                    agg.scheme.label(),
                    agg.runs,
                    agg.overrides_test.mean,
                    agg.overrides_test.std,
                    agg.turns_test.mean,
                    agg.turns_test.std,
                );
            }
            for c in &summary.comparisons {
                println!(
                    "{}: {} ({:.2}) vs {} ({:.2})  p = {:.4}",
                    c.metric,
                    c.scheme_a.label(),
                    c.mean_a,
                    c.scheme_b.label(),
                    c.mean_b,
                    c.p_value
                );
            }
            Ok(())
        }
        CliCommand::Offline(args) => {
            let synthesize = match (&args.dataset, args.synthesize) {
                (Some(_), _) => None,
                (None, explicit) => explicit.or(Some(5000)),
            };
            let report = cli::cmd_offline(&OfflineArgs {
                config_path: args.config,
                dataset_dir: args.dataset,
                synthesize,
                out_override: args.out,
                checkpoints: args.checkpoints,
                dataset_seed: args.dataset_seed,
                target_tpr: args.target_tpr,
            })?;
            println!(
                "knn test: mse {:.4}, auc {:.4} (train pool {}, holdout {})",
                report.knn_test_mse, report.knn_test_auc, report.train_pool, report.holdout
            );
            println!("linear test mse {:.4}", report.linear_test_mse);
            let (thr, fpr, tpr) = report.operating_point;
            println!(
                "operating point nearest tpr {}: threshold {:.3}, fpr {:.3}, tpr {:.3}",
                report.requested_tpr, thr, fpr, tpr
            );
            Ok(())
        }
        CliCommand::Analyze(args) => {
            let value = cli::cmd_analyze(&AnalyzeArgs {
                tpr: args.tpr,
                fpr: args.fpr,
                s: args.s,
                fps: args.fps,
                speed: args.speed,
                p_ident: args.p_ident,
                frames: args.frames,
                threshold: args.threshold,
                roc_csv: args.roc_csv,
            })?;
            println!("{}", serde_json::to_string_pretty(&value).expect("valid json"));
            Ok(())
        }
        CliCommand::Dict(DictCommand::Train { config, out }) => {
            cli::cmd_dict_train(&config, &out)?;
            println!("dictionary written to {}", out.display());
            Ok(())
        }
        CliCommand::Dict(DictCommand::Inspect { path }) => {
            let info = cli::cmd_dict_inspect(&path)?;
            println!("{}", serde_json::to_string_pretty(&info).expect("valid json"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
