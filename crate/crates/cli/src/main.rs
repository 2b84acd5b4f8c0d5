use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;

use sda_core::config::{Mode, PipelineConfig};
use sda_core::pipeline;
use sda_core::{Result, SdaError};

/// snoRNA-disease association prediction with boosted-tree features and an RBF SVM.
#[derive(Parser)]
#[command(name = "sda", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuse similarities and build the cluster-balanced training set.
    Prepare(Common),
    /// Cross-validate and write metrics and curve points.
    Evaluate(Common),
    /// Fit on all balanced pairs and rank unknown pairs per disease.
    Rank(Common),
    /// Prepare, evaluate and rank in one go.
    RunAll(Common),
    /// Hide some known associations and measure how well they are recovered.
    Holdout(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    PaperFaithful,
    StrictFolds,
}

#[derive(Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Treat id mismatches between input files as errors.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(k) = self.top_k {
            cfg.top_k = k;
        }
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::PaperFaithful => Mode::PaperFaithful,
                ModeArg::StrictFolds => Mode::StrictFolds,
            };
        }
        if self.strict {
            cfg.strict = true;
        }
        if let Some(o) = &self.output_dir {
            cfg.output_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare(c) => {
            let p = pipeline::cmd_prepare(&c.config()?)?;
            println!(
                "{}: {} snoRNAs, {} diseases, {} known; k = {}, {} balanced pairs",
                p.descriptor.name,
                p.descriptor.n_snornas,
                p.descriptor.n_diseases,
                p.descriptor.n_known,
                p.k,
                p.balanced.len()
            );
        }
        Command::Evaluate(c) => {
            let r = pipeline::cmd_evaluate(&c.config()?)?;
            print_metrics(&r);
        }
        Command::Rank(c) => {
            let cfg = c.config()?;
            let r = pipeline::cmd_rank(&cfg)?;
            print_ranking(&r, &cfg);
        }
        Command::RunAll(c) => {
            let cfg = c.config()?;
            match pipeline::cmd_run_all(&cfg) {
                Ok(all) => {
                    print_metrics(&all.report);
                    print_ranking(&all.ranking, &cfg);
                }
                Err(e) => {
                    error!("{e}");
                    return Err(e.error);
                }
            }
        }
        Command::Holdout(c) => {
            let r = pipeline::cmd_holdout(&c.config()?)?;
            println!(
                "held out {}, evaluated {}: mean percentile {:.2}, {:.1}% within top {}",
                r.n_held_out,
                r.n_evaluated,
                r.mean_percentile,
                100.0 * r.fraction_in_top_k,
                r.top_k
            );
        }
    }
    Ok(())
}

fn print_metrics(r: &sda_core::eval::MetricsReport) {
    println!(
        "{} {}-fold: AUROC {:.4}  AUPRC {:.4}  accuracy {:.4}  F1 {:.4}",
        r.mode, r.n_folds, r.mean_roc_auc, r.mean_auprc, r.mean_accuracy, r.mean_f1
    );
}

fn print_ranking(r: &pipeline::Ranking, cfg: &PipelineConfig) {
    println!(
        "ranked {} candidates into {}",
        r.rows.len(),
        cfg.output_dir.join("ranking.csv").display()
    );
    if !r.exhausted_diseases.is_empty() {
        println!(
            "{} diseases have no unknown pairs left to rank",
            r.exhausted_diseases.len()
        );
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &SdaError) -> u8 {
    e.exit_code() as u8
}
