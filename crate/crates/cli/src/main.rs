//! `icb`: command-line driver for the incentive compatible broadcast simulator.
//!
//! Exit codes: 0 success, 1 property failure, 2 usage or input error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use icb_core::{AllocationRule, Mechanism};

#[derive(Debug, Parser)]
#[command(
    name = "icb",
    version,
    about = "Incentive compatible broadcast simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reproduce the four-node worked example and check its payments.
    Demo {
        #[arg(long)]
        json: bool,
    },
    /// Run one mechanism on a network file and an announced cost profile.
    Run {
        #[arg(long, value_name = "FILE")]
        graph: PathBuf,
        /// Comma-separated announced costs, one per node.
        #[arg(long, value_name = "LIST", value_delimiter = ',', num_args = 1..)]
        announce: Vec<f64>,
        #[arg(long, default_value = "bicb")]
        mechanism: Mechanism,
        #[arg(long, default_value = "lcp-tree")]
        allocation: AllocationRule,
        #[arg(long)]
        json: bool,
        /// Also execute the mediator tables and print the forwarding trace.
        #[arg(long)]
        trace: bool,
    },
    /// Check mechanism properties on a network file or a random instance.
    Verify {
        #[arg(
            long,
            value_name = "FILE",
            conflicts_with = "random",
            required_unless_present = "random"
        )]
        graph: Option<PathBuf>,
        /// Node count of a random instance with discrete priors.
        #[arg(long, value_name = "N")]
        random: Option<usize>,
        /// Comma-separated subset of bb, nonrouter, ir, bic, dsic.
        #[arg(long, value_delimiter = ',', default_value = "bb,nonrouter,ir")]
        checks: Vec<String>,
        #[arg(long, env = "ICB_SEED", default_value_t = 0)]
        seed: u64,
        /// Check a single announced profile instead of the prior's profiles.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        announce: Option<Vec<f64>>,
        #[arg(long, default_value = "exact-optimal")]
        allocation: AllocationRule,
        #[arg(long)]
        json: bool,
    },
    /// Run the Monte Carlo comparison and write CSV/JSON results.
    Experiment {
        /// JSON experiment configuration; inline flags override it.
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        #[arg(long, value_name = "LIST", value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long, env = "ICB_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        density: Option<f64>,
        #[arg(long)]
        allocation: Option<AllocationRule>,
        /// Output directory for records.csv, summary.csv and summary.json.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Exit 1 unless BIC-B is lower than DSIC-B on both metrics at every n.
        #[arg(long)]
        strict: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Demo { json } => commands::demo(json),
        Command::Run {
            graph,
            announce,
            mechanism,
            allocation,
            json,
            trace,
        } => commands::run(&graph, announce, mechanism, allocation, json, trace),
        Command::Verify {
            graph,
            random,
            checks,
            seed,
            announce,
            allocation,
            json,
        } => commands::verify(commands::VerifyArgs {
            graph,
            random,
            checks,
            seed,
            announce,
            allocation,
            json,
        }),
        Command::Experiment {
            config,
            n_list,
            instances,
            seed,
            density,
            allocation,
            out,
            strict,
        } => commands::experiment(commands::ExperimentArgs {
            config,
            n_list,
            instances,
            seed,
            density,
            allocation,
            out,
            strict,
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
