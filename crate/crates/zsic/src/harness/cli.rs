//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage error (including a failed gradcheck),
//! 2 data/runtime error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::{build_config, ConfigOverrides};
use super::experiment::{run_eval, run_experiment, run_train};
use super::gradcheck::{run_gradcheck, GRADCHECK_TOLERANCE};
use super::report::render_table;
use super::synth::{synth_corpus, write_synth_files, DirectionScheme, SynthDesign};
use super::HarnessError;

#[derive(Parser)]
#[command(name = "zsic", about = "Zero-shot intent classification", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and save the checkpoint.
    Train(RunArgs),
    /// Evaluate a saved checkpoint.
    Eval(EvalArgs),
    /// Train and evaluate in one pass, writing checkpoint and reports.
    Experiment(RunArgs),
    /// Generate a synthetic corpus (corpus.tsv, labels.tsv, embeddings.txt).
    Synth(SynthArgs),
    /// Check analytic gradients against central finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Task: standard | generalized.
    #[arg(long)]
    task: Option<String>,
    /// Comma-separated components to ablate: gw,cw,ds,mlp,meta-adapt.
    #[arg(long)]
    ablate: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Generalized-task fallback threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Corpus file (text<TAB>label lines).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Labels file (label<TAB>seen|unseen<TAB>description lines).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Embedding file (word2vec text format).
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint produced by `train` or `experiment`.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 8)]
    classes: usize,
    #[arg(long, default_value_t = 6)]
    seen: usize,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Class-direction layout: pairs | basis.
    #[arg(long, default_value = "pairs")]
    scheme: String,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl RunArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            task: self.task.clone(),
            data: self.data.clone(),
            labels: self.labels.clone(),
            embeddings: self.embeddings.clone(),
            out: self.out.clone(),
            seed: self.seed,
            threshold: self.threshold,
            ablate: self.ablate.clone(),
        }
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders --help/--version through the error path too
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help { 0 } else { 1 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Experiment(args) => {
            let cfg = build_config(args.config.as_deref(), &args.overrides())?;
            let outcome = run_experiment(&cfg)?;
            println!(
                "trained {} episode(s){}",
                outcome.summary.episodes_run,
                if outcome.summary.early_stopped {
                    " (early stop)"
                } else {
                    ""
                }
            );
            if let Some(acc) = outcome.summary.best_val_accuracy {
                println!("best holdout accuracy: {acc:.4}");
            }
            print!(
                "{}",
                render_table(&outcome.report, &format!("task: {}", cfg.task.name()))
            );
            println!("checkpoint: {}", outcome.checkpoint_path.display());
            println!("report: {}", outcome.report_csv_path.display());
            Ok(0)
        }
        Command::Train(args) => {
            let cfg = build_config(args.config.as_deref(), &args.overrides())?;
            let (summary, ckpt) = run_train(&cfg)?;
            println!(
                "trained {} episode(s){}",
                summary.episodes_run,
                if summary.early_stopped {
                    " (early stop)"
                } else {
                    ""
                }
            );
            println!("checkpoint: {}", ckpt.display());
            Ok(0)
        }
        Command::Eval(args) => {
            let cfg = build_config(args.run.config.as_deref(), &args.run.overrides())?;
            let (report, csv, _) = run_eval(&cfg, &args.model)?;
            print!(
                "{}",
                render_table(&report, &format!("task: {}", cfg.task.name()))
            );
            println!("report: {}", csv.display());
            Ok(0)
        }
        Command::Synth(args) => {
            let scheme = match args.scheme.as_str() {
                "pairs" => DirectionScheme::SignedPairs,
                "basis" => DirectionScheme::OrthogonalBasis,
                other => {
                    return Err(HarnessError::Usage(format!(
                        "unknown scheme `{other}` (pairs|basis)"
                    )))
                }
            };
            let design = SynthDesign {
                scheme,
                ..SynthDesign::default()
            };
            let (corpus, table) =
                synth_corpus(args.classes, args.seen, args.samples, &design, args.seed)?;
            write_synth_files(&args.out, &corpus, &table)?;
            println!(
                "wrote {} utterances over {} classes to {}",
                corpus.utterances.len(),
                corpus.labels.len(),
                args.out.display()
            );
            Ok(0)
        }
        Command::Gradcheck(args) => {
            let checks = run_gradcheck(args.seed)?;
            let mut failed = false;
            for c in &checks {
                println!(
                    "{:<18} max_rel_err {:>12.3e}  ({} entries)  {}",
                    c.group,
                    c.max_rel_err,
                    c.entries_checked,
                    if c.passed() { "ok" } else { "FAIL" }
                );
                failed |= !c.passed();
            }
            if failed {
                eprintln!("gradcheck FAILED (tolerance {GRADCHECK_TOLERANCE:e})");
                Ok(1)
            } else {
                println!("gradcheck passed (tolerance {GRADCHECK_TOLERANCE:e})");
                Ok(0)
            }
        }
    }
}
