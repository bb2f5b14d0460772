//! `hetrel`: relevance computation on heterogeneous graphs.
//!
//! Subcommands: `train` fits the relevance model, `measure` scores node
//! pairs with any supported measure, `search` ranks neighbors of a query
//! node, `cluster` partitions nodes by spectral clustering of a relevance
//! matrix, and `verify` checks the model's structural guarantees against
//! brute-force oracles on random graphs.

mod commands;
mod config;
mod error;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "hetrel", version, about = "Relevance measures on heterogeneous graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the relevance model on a labeled graph.
    Train(commands::train::TrainArgs),
    /// Score node pairs with a relevance measure.
    Measure(commands::measure::MeasureArgs),
    /// Rank the nodes most relevant to a query node.
    Search(commands::search::SearchArgs),
    /// Partition nodes by spectral clustering of pairwise relevance.
    Cluster(commands::cluster::ClusterArgs),
    /// Check a structural guarantee against a brute-force oracle.
    Verify(commands::verify::VerifyArgs),
}

fn main() {
    if let Err(e) = configure_threads() {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(args) => commands::train::run(args),
        Command::Measure(args) => commands::measure::run(args),
        Command::Search(args) => commands::search::run(args),
        Command::Cluster(args) => commands::cluster::run(args),
        Command::Verify(args) => commands::verify::run(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}

/// Honor `HETREL_THREADS` as a cap on worker threads.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("HETREL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("HETREL_THREADS must be a positive integer, got '{raw}'")))?;
    if n == 0 {
        return Err(CliError::usage("HETREL_THREADS must be a positive integer, got '0'"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("failed to configure thread pool: {e}")))
}
