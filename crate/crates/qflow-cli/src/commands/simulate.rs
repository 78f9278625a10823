//! `qflow simulate`: measure the effect of pre-adding bicycles to one group
//! before the day starts.

use std::path::PathBuf;

use clap::Args;
use qflow::data::{load_model, PortGroup, GRID_START_HOUR};
use qflow::scenario::{effect_report, simulate_addition, RoutingConfig};
use qflow::{Error, Result};

use super::write_text;
use crate::config::{resolve, resolve_required, show_path, ConfigEcho, ConfigMap};

const KEYS: &[&str] = &[
    "model",
    "out-report",
    "out-curves",
    "add",
    "target",
    "lag",
    "routing",
    "n-paths",
    "seed",
    "decimals",
];

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Trained model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Destination effect-report CSV (label,mean).
    #[arg(long)]
    out_report: Option<PathBuf>,
    /// Destination before/after mean-curve CSV.
    #[arg(long)]
    out_curves: Option<PathBuf>,
    /// Bicycles pre-added to the target group [default: 100].
    #[arg(long)]
    add: Option<f64>,
    /// Receiving group: residential, office, or others [default: residential].
    #[arg(long)]
    target: Option<String>,
    /// Steps between a rental at the target and its arrival downstream;
    /// overrides the routing file [default: 2].
    #[arg(long)]
    lag: Option<usize>,
    /// JSON routing config: {"lag": 2, "routes": {"residential": [["office", 0.9], ["others", 0.1]]}}.
    #[arg(long)]
    routing: Option<PathBuf>,
    /// Number of sampled days [default: 1000].
    #[arg(long)]
    n_paths: Option<usize>,
    /// Ensemble seed [default: 7].
    #[arg(long)]
    seed: Option<u64>,
    /// Decimal places in the effect report [default: 1].
    #[arg(long)]
    decimals: Option<u32>,
    /// JSON config file; keys mirror the long flag names.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let file = ConfigMap::load(args.config.as_deref(), KEYS)?;
    let model_path = resolve_required(args.model.clone(), file.get_path("model")?, "model")?;
    let out_report = args.out_report.clone().or(file.get_path("out-report")?);
    let out_curves = args.out_curves.clone().or(file.get_path("out-curves")?);
    let add = resolve(args.add, file.get_f64("add")?, 100.0);
    let target_text = resolve(args.target.clone(), file.get_string("target")?, "residential".into());
    let target: PortGroup = target_text.parse()?;
    let routing_path = args.routing.clone().or(file.get_path("routing")?);
    let lag = args.lag.or(file.get_usize("lag")?);
    let n_paths = resolve(args.n_paths, file.get_usize("n-paths")?, 1000);
    let seed = resolve(args.seed, file.get_u64("seed")?, 7);
    let decimals = resolve(args.decimals, file.get_u32("decimals")?, 1);

    let mut routing = match &routing_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read routing {}: {e}", path.display())))?;
            serde_json::from_str::<RoutingConfig>(&text)
                .map_err(|e| Error::Config(format!("routing {}: {e}", path.display())))?
        }
        None => RoutingConfig::default(),
    };
    if let Some(lag) = lag {
        routing.lag = lag;
    }

    let mut echo = ConfigEcho::new();
    echo.add("model", show_path(&model_path));
    echo.add_opt("out-report", out_report.as_deref().map(show_path));
    echo.add_opt("out-curves", out_curves.as_deref().map(show_path));
    echo.add("add", add).add("target", target);
    echo.add_opt("routing", routing_path.as_deref().map(show_path));
    echo.add("lag", routing.lag)
        .add("n-paths", n_paths)
        .add("seed", seed)
        .add("decimals", decimals);
    echo.print("simulate");

    let model = load_model(&model_path)?;
    let result = simulate_addition(&model, add, target, &routing, n_paths, seed)?;
    let rows = effect_report(&result, Some(decimals));

    println!("mean additional rentals from adding {add} bicycles to {target}:");
    for row in &rows {
        println!("  {} = {}", row.label, row.mean);
    }

    if let Some(path) = &out_report {
        let mut text = echo.header_comments("simulate");
        text.push_str("label,mean\n");
        for row in &rows {
            text.push_str(&format!("{},{}\n", row.label, row.mean));
        }
        write_text(path, &text)?;
    }

    if let Some(path) = &out_curves {
        let mut text = echo.header_comments("simulate");
        text.push_str("series,t,hour,before,after\n");
        for (d, name) in result.port_names.iter().enumerate() {
            for t in 0..result.before_mean[d].len() {
                let hour = GRID_START_HOUR as usize + t;
                text.push_str(&format!(
                    "{name},{t},{hour},{},{}\n",
                    result.before_mean[d][t], result.after_mean[d][t]
                ));
            }
        }
        write_text(path, &text)?;
        println!("curves written to {}", show_path(path));
    }
    Ok(())
}
