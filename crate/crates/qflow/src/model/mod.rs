//! Fitting the circuit to encoded panel statistics.
//!
//! [`TrainingData`] bundles everything the objective needs: the register
//! layout, the fitted codebook, day-anchored transition rows, empirical
//! cross-port correlations, and the opening-state distribution. [`cost`]
//! scores a parameter set against that bundle, [`cost_gradient`] differentiates
//! it with parameter-shift rules, and [`train`] runs Adam over both.

mod cost;
mod gradient;
mod train;

pub use cost::{
    cost, kl_divergence, model_conditional, model_correlation, CostBreakdown, EvalContext,
};
pub use gradient::{cost_gradient, finite_difference_gradient};
pub use train::{train, AdamState, TrainConfig, TrainedModel};

use serde::{Deserialize, Serialize};

use crate::encode::{
    build_transitions, discretize_panel, empirical_correlations, fit_codebook,
    initial_state_distribution, BinningStrategy, CorrelationTable, InitialStateDistribution,
    Panel, SaxCodebook, TransitionTensor,
};
use crate::qsim::CircuitLayout;
use crate::{Error, Result};

/// Symmetric per-pair weights for the correlation penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaMatrix {
    num_ports: usize,
    values: Vec<f64>,
}

impl AlphaMatrix {
    /// All pairs share one weight (the diagonal is unused and kept zero).
    pub fn uniform(num_ports: usize, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::Config(format!(
                "correlation weight must be finite and non-negative, got {alpha}"
            )));
        }
        let mut values = vec![alpha; num_ports * num_ports];
        for d in 0..num_ports {
            values[d * num_ports + d] = 0.0;
        }
        Ok(AlphaMatrix { num_ports, values })
    }

    /// No correlation penalty at all.
    pub fn zeros(num_ports: usize) -> Self {
        AlphaMatrix {
            num_ports,
            values: vec![0.0; num_ports * num_ports],
        }
    }

    /// Explicit symmetric weights; the diagonal must be zero.
    pub fn new(num_ports: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_ports * num_ports {
            return Err(Error::Config(format!(
                "alpha matrix for {num_ports} ports needs {} entries, got {}",
                num_ports * num_ports,
                values.len()
            )));
        }
        for d in 0..num_ports {
            for dp in 0..num_ports {
                let v = values[d * num_ports + dp];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Config(format!(
                        "alpha[{d}][{dp}] = {v} must be finite and non-negative"
                    )));
                }
                if (v - values[dp * num_ports + d]).abs() > 1e-12 {
                    return Err(Error::Config(format!(
                        "alpha matrix must be symmetric; differs at ({d}, {dp})"
                    )));
                }
            }
            if values[d * num_ports + d] != 0.0 {
                return Err(Error::Config("alpha diagonal must be zero".into()));
            }
        }
        Ok(AlphaMatrix { num_ports, values })
    }

    pub fn num_ports(&self) -> usize {
        self.num_ports
    }

    pub fn get(&self, d: usize, dp: usize) -> f64 {
        self.values[d * self.num_ports + dp]
    }

    /// True when every weight is zero (the penalty can be skipped).
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// How measurement statistics are extracted from the simulated state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShotsMode {
    /// Probabilities read directly off the statevector.
    Exact,
    /// Finite-shot frequency estimates (smoothed), emulating a device run.
    Sampled { shots: u64 },
}

/// Everything the objective consumes, derived from one panel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingData {
    pub layout: CircuitLayout,
    pub codebook: SaxCodebook,
    pub transitions: TransitionTensor,
    pub correlations: CorrelationTable,
    pub initial_states: InitialStateDistribution,
    /// Mean opening-hour count per port; the default origin for generation.
    pub origin_means: Vec<f64>,
    /// Display names of the ports (group names for aggregated panels).
    pub port_names: Vec<String>,
}

impl TrainingData {
    /// Runs the full encoding pipeline on a panel.
    pub fn from_panel(
        panel: &Panel,
        num_states: usize,
        num_ancillas: usize,
        strategy: BinningStrategy,
    ) -> Result<Self> {
        let layout = CircuitLayout::new(panel.num_ports(), num_states, num_ancillas)?;
        let increments = panel.increments()?;
        let codebook = fit_codebook(&increments, num_states, strategy)?;
        let states = discretize_panel(&increments, &codebook)?;
        let transitions = build_transitions(&states)?;
        let correlations = empirical_correlations(&increments, &codebook)?;
        let initial_states = initial_state_distribution(&states)?;
        let origin_means = (0..panel.num_ports())
            .map(|port| {
                (0..panel.num_days())
                    .map(|day| panel.get(day, port, 0))
                    .sum::<f64>()
                    / panel.num_days() as f64
            })
            .collect();
        Ok(TrainingData {
            layout,
            codebook,
            transitions,
            correlations,
            initial_states,
            origin_means,
            port_names: panel.port_names().to_vec(),
        })
    }

    /// Cross-checks the bundle's dimensions; called by consumers that accept
    /// externally assembled bundles.
    pub fn validate(&self) -> Result<()> {
        let ports = self.layout.num_ports();
        let states = self.layout.states_per_port();
        if self.codebook.num_ports() != ports
            || self.transitions.num_ports() != ports
            || self.correlations.num_ports() != ports
            || self.initial_states.num_ports() != ports
            || self.origin_means.len() != ports
            || self.port_names.len() != ports
        {
            return Err(Error::Contract(
                "training data components disagree on the number of ports".into(),
            ));
        }
        if self.codebook.num_states() != states
            || self.transitions.num_states() != states
            || self.initial_states.num_states() != states
        {
            return Err(Error::Contract(
                "training data components disagree on the alphabet size".into(),
            ));
        }
        if self.transitions.num_horizons() + 1 != self.codebook.num_steps()
            || self.correlations.num_steps() != self.codebook.num_steps()
        {
            return Err(Error::Contract(
                "training data components disagree on the step grid".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod test_fixtures {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::encode::{BinningStrategy, Panel};

    use super::TrainingData;

    /// A panel of integer random walks, the generic shape most tests want.
    pub fn walk_panel(days: usize, ports: usize, times: usize, seed: u64) -> Panel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let port_names = (0..ports).map(|p| format!("P{p}")).collect();
        let day_labels = (0..days).map(|d| format!("2024-04-{:02}", d + 1)).collect();
        let mut panel = Panel::zeros(port_names, day_labels, times);
        for day in 0..days {
            for port in 0..ports {
                let mut level = rng.gen_range(5..15) as f64;
                panel.set(day, port, 0, level);
                for time in 1..times {
                    level += rng.gen_range(-3i64..=3) as f64;
                    panel.set(day, port, time, level);
                }
            }
        }
        panel
    }

    /// Two ports, two symbols, one ancilla, five time points (four steps,
    /// three horizons): big enough to exercise every term, small enough to
    /// keep exhaustive oracles fast.
    pub fn small_bundle(seed: u64) -> TrainingData {
        TrainingData::from_panel(
            &walk_panel(6, 2, 5, seed),
            2,
            1,
            BinningStrategy::EqualFrequency,
        )
        .unwrap()
    }
}
