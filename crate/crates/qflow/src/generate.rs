//! Sampling synthetic day paths from a trained model.
//!
//! A path starts from an opening symbol drawn from the model's recorded
//! opening-state distribution, then walks the time grid by repeatedly
//! evolving, measuring, and (in reinjection mode) re-preparing the measured
//! joint state. Counts are reconstructed by accumulating each step's stored
//! representative increment onto the per-port origin.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encode::{empirical_correlations, CorrelationTable, Panel, SaxCodebook, StatePanel};
use crate::model::TrainedModel;
use crate::qsim::joint_outcome_distribution;
use crate::{Error, Result};

/// RNG stream for path k is `PATH_STREAM_BASE + k`, keeping paths independent
/// of each other and of the training-time streams.
const PATH_STREAM_BASE: u64 = 65536;

/// How each step's evolution is anchored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenerationMode {
    /// Re-prepare the measured state and evolve it with the next step's
    /// absolute time index.
    #[default]
    Reinjection,
    /// Evolve the day's opening state directly to each time index, mirroring
    /// how the transition rows were fitted.
    FromOrigin,
}

impl GenerationMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            GenerationMode::Reinjection => "reinjection",
            GenerationMode::FromOrigin => "from-origin",
        }
    }
}

impl std::str::FromStr for GenerationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reinjection" => Ok(GenerationMode::Reinjection),
            "from-origin" => Ok(GenerationMode::FromOrigin),
            other => Err(Error::Config(format!(
                "unknown generation mode '{other}' (expected 'reinjection' or 'from-origin')"
            ))),
        }
    }
}

/// One synthetic day: symbols and reconstructed counts on the full grid.
///
/// Both tables are `[port][grid point]` with `num_steps + 1` grid points.
/// The final symbol is measured by the last step but feeds no further
/// increment, so the count invariant
/// `counts[d][t+1] - counts[d][t] == representative(d, t, states[d][t])`
/// covers `t` up to `num_steps - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub states: Vec<Vec<usize>>,
    pub counts: Vec<Vec<f64>>,
}

impl SamplePath {
    pub fn num_ports(&self) -> usize {
        self.states.len()
    }

    pub fn num_grid_points(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }
}

/// A batch of independently sampled paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub mode: GenerationMode,
    pub seed: u64,
    pub port_names: Vec<String>,
    /// Number of increment steps; paths have one more grid point.
    pub num_steps: usize,
    pub paths: Vec<SamplePath>,
}

impl Ensemble {
    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn num_ports(&self) -> usize {
        self.port_names.len()
    }
}

/// Evolves `from` with `U(θ, t_next)` and samples one joint outcome.
pub fn step(
    model: &TrainedModel,
    from: &[usize],
    t_next: usize,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    let steps = model.codebook.num_steps();
    if t_next == 0 || t_next > steps {
        return Err(Error::Contract(format!(
            "step index {t_next} outside 1..={steps}"
        )));
    }
    let dist = joint_outcome_distribution(&model.layout, &model.params, from, t_next as f64)?;
    dist.sample_one(rng)
}

/// Samples one day path starting from per-port opening counts `x0`.
pub fn generate_path(
    model: &TrainedModel,
    mode: GenerationMode,
    x0: &[f64],
    rng: &mut impl Rng,
) -> Result<SamplePath> {
    let ports = model.layout.num_ports();
    if x0.len() != ports {
        return Err(Error::Contract(format!(
            "expected {ports} opening counts, got {}",
            x0.len()
        )));
    }
    if let Some(bad) = x0.iter().find(|v| !v.is_finite()) {
        return Err(Error::Contract(format!("opening count {bad} is not finite")));
    }
    let steps = model.codebook.num_steps();

    let origin = model.initial_states.sample(rng);
    let mut states = vec![vec![0usize; steps + 1]; ports];
    for d in 0..ports {
        states[d][0] = origin[d];
    }
    let mut current = origin.clone();
    for t_next in 1..=steps {
        let from = match mode {
            GenerationMode::Reinjection => &current,
            GenerationMode::FromOrigin => &origin,
        };
        let next = step(model, from, t_next, rng)?;
        for d in 0..ports {
            states[d][t_next] = next[d];
        }
        current = next;
    }

    let mut counts = vec![vec![0.0; steps + 1]; ports];
    for d in 0..ports {
        counts[d][0] = x0[d];
        for t in 0..steps {
            counts[d][t + 1] = counts[d][t] + model.codebook.representative(d, t, states[d][t]);
        }
    }

    Ok(SamplePath { states, counts })
}

/// Samples `n_paths` independent paths, one RNG stream per path.
pub fn generate_ensemble(
    model: &TrainedModel,
    mode: GenerationMode,
    x0: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<Ensemble> {
    if n_paths == 0 {
        return Err(Error::Contract("ensemble needs at least one path".into()));
    }
    let mut paths = Vec::with_capacity(n_paths);
    for k in 0..n_paths {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(PATH_STREAM_BASE + k as u64);
        paths.push(generate_path(model, mode, x0, &mut rng)?);
    }
    Ok(Ensemble {
        mode,
        seed,
        port_names: model.port_names.clone(),
        num_steps: model.codebook.num_steps(),
        paths,
    })
}

/// Reassembles an ensemble into a counts panel (one day per path).
pub fn ensemble_to_panel(ensemble: &Ensemble) -> Result<Panel> {
    let ports = ensemble.num_ports();
    let grid = ensemble.num_steps + 1;
    let mut values = Vec::with_capacity(ensemble.num_paths() * ports * grid);
    for path in &ensemble.paths {
        if path.num_ports() != ports || path.num_grid_points() != grid {
            return Err(Error::Contract(
                "ensemble contains paths with mismatched dimensions".into(),
            ));
        }
        for d in 0..ports {
            values.extend_from_slice(&path.counts[d]);
        }
    }
    let day_labels = (0..ensemble.num_paths())
        .map(|k| format!("path-{k:05}"))
        .collect();
    Panel::new(ensemble.port_names.clone(), day_labels, grid, values)
}

/// The symbol table of an ensemble (one day per path), dropping each path's
/// final measured-but-unreconstructed symbol.
pub fn ensemble_state_panel(ensemble: &Ensemble, num_states: usize) -> Result<StatePanel> {
    let ports = ensemble.num_ports();
    let steps = ensemble.num_steps;
    let mut symbols = Vec::with_capacity(ensemble.num_paths() * ports * steps);
    for path in &ensemble.paths {
        if path.num_ports() != ports || path.num_grid_points() != steps + 1 {
            return Err(Error::Contract(
                "ensemble contains paths with mismatched dimensions".into(),
            ));
        }
        for d in 0..ports {
            symbols.extend_from_slice(&path.states[d][..steps]);
        }
    }
    StatePanel::new(ensemble.num_paths(), ports, steps, num_states, symbols)
}

/// Validation summaries of an ensemble: mean and spread of the count curves,
/// plus across-path increment correlations in the same convention as the
/// empirical tables (centered on the codebook's cell means).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStatistics {
    pub port_names: Vec<String>,
    pub num_grid_points: usize,
    /// Mean count per `[port][grid point]`.
    pub mean: Vec<Vec<f64>>,
    /// Sample standard deviation per `[port][grid point]`; zero when fewer
    /// than two paths exist (see `degenerate`).
    pub std: Vec<Vec<f64>>,
    /// Across-path correlations of per-step increments.
    pub correlations: CorrelationTable,
    /// True when every path is identical, a sign of a collapsed generator.
    pub all_identical: bool,
    /// True when the ensemble is too small for spread estimates.
    pub degenerate: bool,
}

/// Computes ensemble summaries against the codebook that generated the paths.
pub fn ensemble_statistics(
    ensemble: &Ensemble,
    codebook: &SaxCodebook,
) -> Result<EnsembleStatistics> {
    if ensemble.paths.is_empty() {
        return Err(Error::Contract("ensemble has no paths".into()));
    }
    let panel = ensemble_to_panel(ensemble)?;
    let ports = panel.num_ports();
    let grid = panel.num_times();
    let n = panel.num_days() as f64;

    let mut mean = vec![vec![0.0; grid]; ports];
    let mut std = vec![vec![0.0; grid]; ports];
    for d in 0..ports {
        for t in 0..grid {
            let mut total = 0.0;
            for day in 0..panel.num_days() {
                total += panel.get(day, d, t);
            }
            mean[d][t] = total / n;
        }
    }
    let degenerate = panel.num_days() < 2;
    if !degenerate {
        for d in 0..ports {
            for t in 0..grid {
                let mut ss = 0.0;
                for day in 0..panel.num_days() {
                    let dev = panel.get(day, d, t) - mean[d][t];
                    ss += dev * dev;
                }
                std[d][t] = (ss / (n - 1.0)).sqrt();
            }
        }
    }

    let correlations = empirical_correlations(&panel.increments()?, codebook)?;
    let all_identical = ensemble
        .paths
        .iter()
        .all(|p| p.states == ensemble.paths[0].states);

    Ok(EnsembleStatistics {
        port_names: ensemble.port_names.clone(),
        num_grid_points: grid,
        mean,
        std,
        correlations,
        all_identical,
        degenerate,
    })
}
