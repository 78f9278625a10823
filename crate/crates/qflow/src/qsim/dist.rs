//! Measurement statistics over the port registers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ansatz::AnsatzParams;
use super::layout::CircuitLayout;
use super::state::{prepare_from_state, StateVector};
use crate::{Error, Result};

/// Tolerance on the total mass of a distribution passed to samplers.
const NORMALIZATION_TOL: f64 = 1e-6;

/// Probability table over joint port outcomes (ancillas traced out), indexed
/// in the same port-major order as [`CircuitLayout::joint_index`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    num_ports: usize,
    states_per_port: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    /// Builds a table from raw probabilities (length must be
    /// `states_per_port^num_ports`). No normalization is enforced here;
    /// samplers check it at the point of use.
    pub fn new(num_ports: usize, states_per_port: usize, probs: Vec<f64>) -> Result<Self> {
        let expected = states_per_port.pow(num_ports as u32);
        if probs.len() != expected {
            return Err(Error::Contract(format!(
                "expected {expected} joint probabilities, got {}",
                probs.len()
            )));
        }
        Ok(JointDistribution {
            num_ports,
            states_per_port,
            probs,
        })
    }

    pub fn num_ports(&self) -> usize {
        self.num_ports
    }

    pub fn states_per_port(&self) -> usize {
        self.states_per_port
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of one joint outcome.
    pub fn prob(&self, state: &[usize]) -> f64 {
        self.probs[self.flat_index(state)]
    }

    fn flat_index(&self, state: &[usize]) -> usize {
        debug_assert_eq!(state.len(), self.num_ports);
        state
            .iter()
            .fold(0, |acc, &s| acc * self.states_per_port + s)
    }

    /// Decodes a flat index back into a joint outcome.
    pub fn outcome(&self, mut index: usize) -> Vec<usize> {
        let mut state = vec![0; self.num_ports];
        for slot in state.iter_mut().rev() {
            *slot = index % self.states_per_port;
            index /= self.states_per_port;
        }
        state
    }

    /// Marginal distribution of a single port.
    pub fn port_marginal(&self, port: usize) -> Vec<f64> {
        debug_assert!(port < self.num_ports);
        let mut marginal = vec![0.0; self.states_per_port];
        // Stride of the port's digit in the flat index.
        let stride = self
            .states_per_port
            .pow((self.num_ports - 1 - port) as u32);
        for (index, &p) in self.probs.iter().enumerate() {
            marginal[(index / stride) % self.states_per_port] += p;
        }
        marginal
    }

    /// Joint marginal over an ordered pair of distinct ports, as a row-major
    /// `states_per_port × states_per_port` table (row = `port_a` outcome).
    pub fn bivariate_marginal(&self, port_a: usize, port_b: usize) -> Vec<f64> {
        debug_assert!(port_a != port_b);
        let n = self.states_per_port;
        let stride_a = n.pow((self.num_ports - 1 - port_a) as u32);
        let stride_b = n.pow((self.num_ports - 1 - port_b) as u32);
        let mut table = vec![0.0; n * n];
        for (index, &p) in self.probs.iter().enumerate() {
            let a = (index / stride_a) % n;
            let b = (index / stride_b) % n;
            table[a * n + b] += p;
        }
        table
    }

    fn check_normalized(&self) -> Result<()> {
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Contract(format!(
                "distribution mass {total} deviates from 1 by more than {NORMALIZATION_TOL}"
            )));
        }
        if self.probs.iter().any(|&p| p < 0.0) {
            return Err(Error::Contract(
                "distribution contains negative probabilities".into(),
            ));
        }
        Ok(())
    }

    /// Draws a single joint outcome.
    pub fn sample_one(&self, rng: &mut impl Rng) -> Result<Vec<usize>> {
        self.check_normalized()?;
        Ok(self.outcome(self.sample_index_unchecked(rng)))
    }

    fn sample_index_unchecked(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen::<f64>();
        let mut acc = 0.0;
        for (index, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return index;
            }
        }
        // Rounding can leave acc marginally below 1; attribute the leftover
        // mass to the last outcome with nonzero probability.
        self.probs
            .iter()
            .rposition(|&p| p > 0.0)
            .unwrap_or(self.probs.len() - 1)
    }
}

/// Draws `shots` joint outcomes and returns per-outcome counts aligned with
/// the distribution's flat indexing.
pub fn sample_outcomes(
    dist: &JointDistribution,
    shots: u64,
    rng: &mut impl Rng,
) -> Result<Vec<u64>> {
    dist.check_normalized()?;
    let mut counts = vec![0u64; dist.probabilities().len()];
    for _ in 0..shots {
        counts[dist.sample_index_unchecked(rng)] += 1;
    }
    Ok(counts)
}

/// Exact joint outcome distribution after evolving the basis state `from`
/// under `U(θ, t)` and tracing out the ancillas.
pub fn joint_outcome_distribution(
    layout: &CircuitLayout,
    params: &AnsatzParams,
    from: &[usize],
    t: f64,
) -> Result<JointDistribution> {
    if params.num_qubits() != layout.total_qubits() {
        return Err(Error::Contract(format!(
            "parameters sized for {} qubits, layout has {}",
            params.num_qubits(),
            layout.total_qubits()
        )));
    }
    let mut state = prepare_from_state(layout, from)?;
    params.evolve_with(&mut state, &params.diag_angles(t), None);
    Ok(trace_ancillas(layout, &state))
}

/// Sums squared amplitudes over ancilla configurations to obtain the joint
/// port outcome table.
pub fn trace_ancillas(layout: &CircuitLayout, state: &StateVector) -> JointDistribution {
    debug_assert_eq!(state.num_qubits(), layout.total_qubits());
    let ancilla_dim = 1usize << layout.num_ancillas();
    let num_joint = layout.num_joint_states();
    let amps = state.amplitudes();
    let mut probs = vec![0.0; num_joint];
    for (joint, slot) in probs.iter_mut().enumerate() {
        let base = joint * ancilla_dim;
        let mut total = 0.0;
        for anc in 0..ancilla_dim {
            total += amps[base + anc].norm_sqr();
        }
        // Clamp the tiny negative dust that cancellation can leave behind.
        *slot = total.max(0.0);
    }
    JointDistribution {
        num_ports: layout.num_ports(),
        states_per_port: layout.states_per_port(),
        probs,
    }
}
