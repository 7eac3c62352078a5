//! `esr`: generate benchmark data, run seeded learner comparisons, parse
//! click logs, and evaluate saved policies.
//!
//! Every failure exits nonzero after printing a machine-readable
//! `{"error": ...}` object to stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use esr_cli::harness::{run_bench, run_eval, run_gen, run_parse, ExperimentConfig};
use esr_cli::ingest::PairSpec;

#[derive(Parser)]
#[command(
    name = "esr",
    about = "Benchmark decision policies trained with soft-regret and regression losses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config file (JSON; see README for the schema)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset (plus counterfactuals and truth sidecar)
    Gen(ConfigArgs),
    /// Run the replicated learner comparison and write result tables
    Bench(ConfigArgs),
    /// Parse click-log files into a binary-action dataset
    Parse {
        /// Log files in the line grammar documented in the README
        inputs: Vec<PathBuf>,
        /// Two article ids as `a,b`; omitted = draw a random pair
        #[arg(long)]
        pair: Option<String>,
        /// Seed for the random pair draw
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a saved policy on a dataset
    Eval {
        /// Policy checkpoint (JSON)
        #[arg(long)]
        policy: PathBuf,
        /// Logged dataset (CSV or JSON-lines)
        #[arg(long)]
        dataset: PathBuf,
        /// Counterfactual CSV; when given, reports exact regret instead of
        /// the off-policy value
        #[arg(long)]
        counterfactuals: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Gen(args) => {
            let cfg = ExperimentConfig::from_file(&args.config)?;
            run_gen(&cfg, &args.out)?;
            println!("wrote dataset files to {}", args.out.display());
        }
        Command::Bench(args) => {
            let cfg = ExperimentConfig::from_file(&args.config)?;
            let out = run_bench(&cfg, &args.out)?;
            println!("{}", out.to_csv());
        }
        Command::Parse {
            inputs,
            pair,
            seed,
            out,
        } => {
            if inputs.is_empty() {
                return Err("no input files".into());
            }
            let spec = match pair {
                Some(text) => {
                    let (a, b) = text
                        .split_once(',')
                        .ok_or("expected --pair as two ids `a,b`")?;
                    PairSpec::Explicit(a.to_string(), b.to_string())
                }
                None => PairSpec::Random,
            };
            let summary = run_parse(&inputs, &spec, seed, &out)?;
            println!(
                "read {} kept {} errors {} pair {},{}",
                summary.events_read,
                summary.kept,
                summary.parse_errors,
                summary.pair[0],
                summary.pair[1]
            );
        }
        Command::Eval {
            policy,
            dataset,
            counterfactuals,
        } => {
            let out = run_eval(&policy, &dataset, counterfactuals.as_deref())?;
            println!("{}", serde_json::to_string(&out)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let obj = serde_json::json!({ "error": e.to_string() });
            eprintln!("{obj}");
            ExitCode::FAILURE
        }
    }
}
