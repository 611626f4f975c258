//! `shocknet`: command-line driver for the hybrid DG/FV solver and its
//! neural shock indicators — corpus generation, training, evaluation,
//! ab-initio simulation, offline indication, and refinement planning.

mod commands;
mod config;
mod error;

use clap::{Parser, Subcommand};

use commands::{describe, eval, gen_data, indicate, refine_plan, simulate, train};
use config::ConfigMap;
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "shocknet",
    version,
    about = "Hybrid DG/FV compressible-flow solver with neural shock indicators",
    after_help = "Every long option can also be given as a 'name=value' line in the file \
                  passed via --config; command-line flags win."
)]
struct Cli {
    /// Flat key=value defaults file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<std::path::PathBuf>,
    /// Worker threads for data generation (1 = determinism reference)
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Generate synthetic training and validation corpora
    GenData(gen_data::GenDataArgs),
    /// Train the edge network on generated corpora
    Train(train::TrainArgs),
    /// Score a trained checkpoint against a stored corpus
    Eval(eval::EvalArgs),
    /// Integrate a flow case from t=0 and write snapshots
    Simulate(simulate::SimulateArgs),
    /// Run indicators offline on a stored snapshot
    Indicate(indicate::IndicateArgs),
    /// Build an anisotropic refinement plan from a snapshot
    RefinePlan(refine_plan::RefinePlanArgs),
    /// Print details of cases, checkpoints, corpora, and defaults
    Describe(describe::DescribeArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version arrive here too; they exit 0
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = ConfigMap::load(cli.config.as_deref())?;
    if let Some(threads) = cfg.resolve(cli.threads, "threads")? {
        if threads == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::runtime(format!("cannot configure the thread pool: {e}")))?;
    }
    match cli.cmd {
        Cmd::GenData(args) => gen_data::run(args, &cfg),
        Cmd::Train(args) => train::run(args, &cfg),
        Cmd::Eval(args) => eval::run(args, &cfg),
        Cmd::Simulate(args) => simulate::run(args, &cfg),
        Cmd::Indicate(args) => indicate::run(args, &cfg),
        Cmd::RefinePlan(args) => refine_plan::run(args, &cfg),
        Cmd::Describe(args) => describe::run(args, &cfg),
    }
}
