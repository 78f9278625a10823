//! `qflow train`: fit the generative model to a panel.

use std::path::PathBuf;

use clap::Args;
use qflow::data::save_model;
use qflow::encode::BinningStrategy;
use qflow::model::{train, AlphaMatrix, ShotsMode, TrainConfig, TrainingData};
use qflow::{Error, Result};

use super::write_text;
use crate::config::{resolve, resolve_required, show_path, ConfigEcho, ConfigMap};
use crate::panel_csv;

const KEYS: &[&str] = &[
    "panel",
    "out-model",
    "out-history",
    "states",
    "ancillas",
    "layers",
    "alpha",
    "learning-rate",
    "iterations",
    "shots",
    "seed",
];

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Input panel CSV, one series per group (from `ingest`).
    #[arg(long)]
    panel: Option<PathBuf>,
    /// Destination model file.
    #[arg(long)]
    out_model: Option<PathBuf>,
    /// Destination cost-history CSV (iter,term1,term2,total).
    #[arg(long)]
    out_history: Option<PathBuf>,
    /// Symbols per series; must be a power of two [default: 2].
    #[arg(long)]
    states: Option<usize>,
    /// Ancilla qubits enlarging the ansatz [default: 1].
    #[arg(long)]
    ancillas: Option<usize>,
    /// Entangling layers in the basis-change circuit [default: 1].
    #[arg(long)]
    layers: Option<usize>,
    /// Weight of the correlation-matching cost term [default: 1].
    #[arg(long)]
    alpha: Option<f64>,
    /// Adam step size [default: 0.1].
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Optimizer iterations [default: 300].
    #[arg(long)]
    iterations: Option<usize>,
    /// "exact" for statevector probabilities, or a shot count [default: exact].
    #[arg(long)]
    shots: Option<String>,
    /// Seed for shot noise; unused in exact mode [default: 7].
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file; keys mirror the long flag names.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let file = ConfigMap::load(args.config.as_deref(), KEYS)?;
    let panel_path = resolve_required(args.panel.clone(), file.get_path("panel")?, "panel")?;
    let out_model =
        resolve_required(args.out_model.clone(), file.get_path("out-model")?, "out-model")?;
    let out_history = args.out_history.clone().or(file.get_path("out-history")?);
    let states = resolve(args.states, file.get_usize("states")?, 2);
    let ancillas = resolve(args.ancillas, file.get_usize("ancillas")?, 1);
    let layers = resolve(args.layers, file.get_usize("layers")?, 1);
    let alpha = resolve(args.alpha, file.get_f64("alpha")?, 1.0);
    let learning_rate = resolve(args.learning_rate, file.get_f64("learning-rate")?, 0.1);
    let iterations = resolve(args.iterations, file.get_usize("iterations")?, 300);
    // The config file may give the shot count as a bare number.
    let file_shots = match file.get_u64("shots") {
        Ok(n) => n.map(|v| v.to_string()),
        Err(_) => file.get_string("shots")?,
    };
    let shots_text = resolve(args.shots.clone(), file_shots, "exact".to_string());
    let shots = parse_shots(&shots_text)?;
    let seed = resolve(args.seed, file.get_u64("seed")?, 7);

    let mut echo = ConfigEcho::new();
    echo.add("panel", show_path(&panel_path))
        .add("out-model", show_path(&out_model));
    echo.add_opt("out-history", out_history.as_deref().map(show_path));
    echo.add("states", states)
        .add("ancillas", ancillas)
        .add("layers", layers)
        .add("alpha", alpha)
        .add("learning-rate", learning_rate)
        .add("iterations", iterations)
        .add("shots", &shots_text)
        .add("seed", seed);
    echo.print("train");

    let panel = panel_csv::load_panel(&panel_path)?;
    let data = TrainingData::from_panel(&panel, states, ancillas, BinningStrategy::EqualFrequency)?;
    let mut config = TrainConfig::new(AlphaMatrix::uniform(panel.num_ports(), alpha)?);
    config.learning_rate = learning_rate;
    config.iterations = iterations;
    config.num_layers = layers;
    config.shots = shots;
    config.seed = seed;

    let model = train(&data, &config)?;
    save_model(&model, &out_model)?;
    if let Some(path) = &out_history {
        let mut text = echo.header_comments("train");
        text.push_str("iter,term1,term2,total\n");
        for (iter, cb) in model.cost_history.iter().enumerate() {
            text.push_str(&format!("{iter},{},{},{}\n", cb.term1, cb.term2, cb.total));
        }
        write_text(path, &text)?;
    }

    let first = &model.cost_history[0];
    let last = model.final_cost();
    println!(
        "cost {} -> {} over {iterations} iterations (term1 {}, term2 {})",
        first.total, last.total, last.term1, last.term2
    );
    println!("model written to {}", show_path(&out_model));
    Ok(())
}

fn parse_shots(text: &str) -> Result<ShotsMode> {
    if text == "exact" {
        return Ok(ShotsMode::Exact);
    }
    match text.parse::<u64>() {
        Ok(n) if n > 0 => Ok(ShotsMode::Sampled { shots: n }),
        _ => Err(Error::Config(format!(
            "--shots must be \"exact\" or a positive shot count, got {text:?}"
        ))),
    }
}
