//! `qflow`: the command-line front end of the pipeline.
//!
//! Subcommands cover the full workflow: `synth` fabricates a count file,
//! `ingest` classifies and aggregates it into a panel, `train` fits the
//! generative model, `sample` draws synthetic days, `simulate` measures
//! bicycle pre-adding interventions, and `opploss` imputes rentals lost to
//! empty ports. Every command echoes its fully resolved configuration and
//! writes deterministic, plot-ready tables.

mod commands;
mod config;
mod panel_csv;

use clap::{Parser, Subcommand};
use qflow::ErrorCategory;

#[derive(Parser)]
#[command(
    name = "qflow",
    version,
    about = "Generative modeling of shared-bicycle stock levels",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic commuter-pattern count file.
    Synth(commands::synth::SynthArgs),
    /// Classify ports into groups and aggregate counts into a panel.
    Ingest(commands::ingest::IngestArgs),
    /// Fit the generative model to a panel.
    Train(commands::train::TrainArgs),
    /// Sample synthetic days from a trained model.
    Sample(commands::sample::SampleArgs),
    /// Simulate pre-adding bicycles to a group.
    Simulate(commands::simulate::SimulateArgs),
    /// Estimate opportunity losses hidden by empty ports.
    Opploss(commands::opploss::OpplossArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(args) => commands::synth::run(args),
        Command::Ingest(args) => commands::ingest::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Sample(args) => commands::sample::run(args),
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Opploss(args) => commands::opploss::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(match err.category() {
            ErrorCategory::Config => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Numerical => 4,
        });
    }
}
