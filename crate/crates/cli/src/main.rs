//! `blindcent`: simulate graph signals, estimate eigenvector centrality from
//! them, benchmark the estimators, and run the pipeline on real panels.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use blind_centrality::Method;
use clap::{Args, Parser, Subcommand};

use crate::config::{resolve, Command, Overrides};

#[derive(Parser, Debug)]
#[command(name = "blindcent", version, about = "Blind eigenvector centrality estimation from filtered graph signals")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Sample a graph, influence matrix and latents; write Y, Z, B, the graph and its true centrality.
    Simulate,
    /// Estimate centrality from Y.csv and Z.csv.
    Estimate,
    /// Run the Monte-Carlo error-rate benchmark over the k grid.
    Bench,
    /// Rank entities of a real returns/drivers panel.
    Real,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration merged over the defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Experiment preset: fig1a, fig1b or fig1c.
    #[arg(long, global = true, value_parser = ["fig1a", "fig1b", "fig1c"])]
    preset: Option<String>,
    /// Comma-separated estimators: pca, robust, robust-quantized (alias robust-q).
    #[arg(long, global = true, value_delimiter = ',')]
    method: Option<Vec<Method>>,
    /// Monte-Carlo trials per k.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Samples per trial.
    #[arg(long, global = true)]
    m: Option<usize>,
    /// Keep the quantized estimate.
    #[arg(long, global = true, action = clap::ArgAction::Set)]
    quantize: Option<bool>,
    /// Latent dimension for `simulate`.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Directory with Y.csv and Z.csv for `estimate`; defaults to --out.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Returns CSV (`date,<entity...>`) for `real`.
    #[arg(long, global = true)]
    returns: Option<PathBuf>,
    /// Drivers CSV (`date,<driver...>`) for `real`.
    #[arg(long, global = true)]
    drivers: Option<PathBuf>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let command = match cli.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::Estimate => Command::Estimate,
        Cmd::Bench => Command::Bench,
        Cmd::Real => Command::Real,
    };
    let c = cli.common;
    let flags = Overrides {
        seed: c.seed,
        output_dir: c.out,
        preset: c.preset,
        methods: c.method,
        trials: c.trials,
        m: c.m,
        quantize: c.quantize,
        k: c.k,
        input_dir: c.input,
        returns: c.returns,
        drivers: c.drivers,
    };
    let cfg = resolve(command, c.config.as_deref(), &flags)?;
    match command {
        Command::Simulate => commands::simulate(&cfg),
        Command::Estimate => commands::estimate(&cfg),
        Command::Bench => commands::bench(&cfg),
        Command::Real => commands::real(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
