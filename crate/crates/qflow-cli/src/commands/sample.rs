//! `qflow sample`: draw an ensemble of synthetic days from a trained model
//! and summarize it as plot-ready tables.

use std::path::PathBuf;

use clap::Args;
use qflow::data::{load_model, GRID_START_HOUR};
use qflow::encode::CorrelationTable;
use qflow::generate::{ensemble_statistics, generate_ensemble, GenerationMode};
use qflow::model::{model_correlation, EvalContext, TrainingData};
use qflow::{Error, Result};

use super::{blank_when_none, write_text};
use crate::config::{resolve, resolve_required, show_path, ConfigEcho, ConfigMap};

const KEYS: &[&str] = &["model", "out-curves", "out-correlations", "n-paths", "mode", "seed"];

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Trained model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Destination per-series mean/std curve CSV.
    #[arg(long)]
    out_curves: Option<PathBuf>,
    /// Destination ensemble-vs-model correlation CSV.
    #[arg(long)]
    out_correlations: Option<PathBuf>,
    /// Number of sampled days [default: 1000].
    #[arg(long)]
    n_paths: Option<usize>,
    /// Path generation: "reinjection" or "from-origin" [default: reinjection].
    #[arg(long)]
    mode: Option<String>,
    /// Ensemble seed [default: 7].
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file; keys mirror the long flag names.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run(args: &SampleArgs) -> Result<()> {
    let file = ConfigMap::load(args.config.as_deref(), KEYS)?;
    let model_path = resolve_required(args.model.clone(), file.get_path("model")?, "model")?;
    let out_curves = args.out_curves.clone().or(file.get_path("out-curves")?);
    let out_correlations = args
        .out_correlations
        .clone()
        .or(file.get_path("out-correlations")?);
    if out_curves.is_none() && out_correlations.is_none() {
        return Err(Error::Config(
            "nothing to write: give --out-curves and/or --out-correlations".into(),
        ));
    }
    let n_paths = resolve(args.n_paths, file.get_usize("n-paths")?, 1000);
    let mode_text = resolve(args.mode.clone(), file.get_string("mode")?, "reinjection".into());
    let mode: GenerationMode = mode_text.parse()?;
    let seed = resolve(args.seed, file.get_u64("seed")?, 7);

    let mut echo = ConfigEcho::new();
    echo.add("model", show_path(&model_path));
    echo.add_opt("out-curves", out_curves.as_deref().map(show_path));
    echo.add_opt("out-correlations", out_correlations.as_deref().map(show_path));
    echo.add("n-paths", n_paths)
        .add("mode", mode.as_str())
        .add("seed", seed);
    echo.print("sample");

    let model = load_model(&model_path)?;
    let ensemble = generate_ensemble(&model, mode, &model.origin_means, n_paths, seed)?;
    let stats = ensemble_statistics(&ensemble, &model.codebook)?;
    if stats.degenerate {
        eprintln!("warning: fewer than two paths; spread estimates are zero");
    }
    if stats.all_identical {
        eprintln!("warning: every sampled path is identical; the model may have collapsed");
    }

    if let Some(path) = &out_curves {
        let mut text = echo.header_comments("sample");
        text.push_str(&format!(
            "# degenerate: {}\n# all-identical: {}\n",
            stats.degenerate, stats.all_identical
        ));
        text.push_str("series,t,hour,mean,std\n");
        for (d, name) in stats.port_names.iter().enumerate() {
            for t in 0..stats.num_grid_points {
                let hour = GRID_START_HOUR as usize + t;
                text.push_str(&format!(
                    "{name},{t},{hour},{},{}\n",
                    stats.mean[d][t], stats.std[d][t]
                ));
            }
        }
        write_text(path, &text)?;
        println!(
            "curves: {} series x {} grid points written to {}",
            stats.port_names.len(),
            stats.num_grid_points,
            show_path(path)
        );
    }

    if let Some(path) = &out_correlations {
        // The analytic model correlations need the full data bundle shape;
        // rebuild it around the trained artifacts with an all-undefined
        // empirical table (which nothing here reads).
        let ports = model.layout.num_ports();
        let data = TrainingData {
            layout: model.layout.clone(),
            codebook: model.codebook.clone(),
            transitions: model.transitions.clone(),
            correlations: CorrelationTable::undefined(ports, model.codebook.num_steps()),
            initial_states: model.initial_states.clone(),
            origin_means: model.origin_means.clone(),
            port_names: model.port_names.clone(),
        };
        let mut ctx = EvalContext::exact();
        let mut text = echo.header_comments("sample");
        text.push_str("t,series_a,series_b,rho_ensemble,rho_model\n");
        for t in model.transitions.horizons() {
            for d in 0..ports {
                for dp in (d + 1)..ports {
                    let rho_e = stats.correlations.get(d, dp, t);
                    let rho_m = model_correlation(&model.params, &data, t, d, dp, &mut ctx)?;
                    text.push_str(&format!(
                        "{t},{},{},{},{}\n",
                        model.port_names[d],
                        model.port_names[dp],
                        blank_when_none(rho_e),
                        blank_when_none(rho_m)
                    ));
                }
            }
        }
        write_text(path, &text)?;
        println!("correlations written to {}", show_path(path));
    }
    Ok(())
}
