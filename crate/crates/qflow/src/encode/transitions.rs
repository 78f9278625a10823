//! Day-anchored transition statistics of symbol paths.
//!
//! For every port and horizon `t ≥ 1`, the tensor tallies how often a day
//! that opened in symbol `i` (at step 0) sits in symbol `j` at step `t`.
//! These anchored rows — rather than step-to-step transitions — are what the
//! circuit's time-parameterized evolution is fitted against.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::panel::StatePanel;
use crate::{Error, Result};

/// Additive smoothing applied when normalizing tally rows, so fitted targets
/// never contain exact zeros (which would blow up the divergence).
pub const TRANSITION_SMOOTHING: f64 = 1e-6;

/// Smoothed transition probabilities `T[port][t][i][j]` for horizons
/// `t = 1 … num_steps − 1`, together with the raw tallies they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionTensor {
    num_ports: usize,
    num_states: usize,
    /// Number of fitted horizons; horizon index `h` corresponds to target
    /// step `t = h + 1`.
    num_horizons: usize,
    probs: Vec<f64>,
    tallies: Vec<u64>,
    /// Rows with zero observations (filled uniformly by smoothing).
    empty_rows: Vec<bool>,
}

impl TransitionTensor {
    /// Horizons covered, as target step values `1..=num_horizons`.
    pub fn horizons(&self) -> impl Iterator<Item = usize> + Clone {
        1..=self.num_horizons
    }

    pub fn num_horizons(&self) -> usize {
        self.num_horizons
    }

    pub fn num_ports(&self) -> usize {
        self.num_ports
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    #[inline]
    fn row_base(&self, port: usize, t: usize, from: usize) -> usize {
        debug_assert!(port < self.num_ports);
        debug_assert!(t >= 1 && t <= self.num_horizons, "horizon {t} out of range");
        debug_assert!(from < self.num_states);
        (((port * self.num_horizons) + (t - 1)) * self.num_states + from) * self.num_states
    }

    /// Smoothed probability row `T(· | from)` at (port, t).
    pub fn row(&self, port: usize, t: usize, from: usize) -> &[f64] {
        let base = self.row_base(port, t, from);
        &self.probs[base..base + self.num_states]
    }

    /// Raw tally row underlying [`row`](Self::row).
    pub fn tally_row(&self, port: usize, t: usize, from: usize) -> &[u64] {
        let base = self.row_base(port, t, from);
        &self.tallies[base..base + self.num_states]
    }

    /// Whether a row had no observations (its probabilities are uniform).
    pub fn is_empty_row(&self, port: usize, t: usize, from: usize) -> bool {
        let row_index = ((port * self.num_horizons) + (t - 1)) * self.num_states + from;
        self.empty_rows[row_index]
    }

    /// Number of unobserved rows across the tensor.
    pub fn empty_row_count(&self) -> usize {
        self.empty_rows.iter().filter(|&&e| e).count()
    }

    /// Builds a tensor directly from probability rows (no tallies), mainly
    /// for tests and self-consistency studies. Rows must be normalized and
    /// strictly positive-summed.
    pub fn from_probabilities(
        num_ports: usize,
        num_states: usize,
        num_horizons: usize,
        probs: Vec<f64>,
    ) -> Result<Self> {
        let expected = num_ports * num_horizons * num_states * num_states;
        if probs.len() != expected {
            return Err(Error::Contract(format!(
                "expected {expected} transition probabilities, got {}",
                probs.len()
            )));
        }
        for row in probs.chunks(num_states) {
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 || row.iter().any(|&p| p < 0.0) {
                return Err(Error::Contract(format!(
                    "transition row {row:?} is not a probability distribution"
                )));
            }
        }
        Ok(TransitionTensor {
            num_ports,
            num_states,
            num_horizons,
            tallies: vec![0; probs.len()],
            empty_rows: vec![false; num_ports * num_horizons * num_states],
            probs,
        })
    }
}

/// Tallies day-anchored transitions over a state panel and normalizes them
/// with additive smoothing. Rows without observations come out uniform and
/// are flagged.
pub fn build_transitions(states: &StatePanel) -> Result<TransitionTensor> {
    if states.num_steps() < 2 {
        return Err(Error::Contract(
            "transition fitting needs at least two steps per day".into(),
        ));
    }
    let num_ports = states.num_ports();
    let num_states = states.num_states();
    let num_horizons = states.num_steps() - 1;
    let row_count = num_ports * num_horizons * num_states;
    let mut tallies = vec![0u64; row_count * num_states];

    for day in 0..states.num_days() {
        for port in 0..num_ports {
            let origin = states.get(day, port, 0);
            for t in 1..=num_horizons {
                let target = states.get(day, port, t);
                let row = ((port * num_horizons) + (t - 1)) * num_states + origin;
                tallies[row * num_states + target] += 1;
            }
        }
    }

    let mut probs = vec![0.0; tallies.len()];
    let mut empty_rows = vec![false; row_count];
    for row in 0..row_count {
        let base = row * num_states;
        let total: u64 = tallies[base..base + num_states].iter().sum();
        empty_rows[row] = total == 0;
        let denom = total as f64 + num_states as f64 * TRANSITION_SMOOTHING;
        for j in 0..num_states {
            probs[base + j] = (tallies[base + j] as f64 + TRANSITION_SMOOTHING) / denom;
        }
    }

    Ok(TransitionTensor {
        num_ports,
        num_states,
        num_horizons,
        probs,
        tallies,
        empty_rows,
    })
}

/// Empirical distribution of the joint opening symbol (step 0) across days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialStateDistribution {
    num_ports: usize,
    num_states: usize,
    /// Observed joint states with their empirical weights, ordered by
    /// port-major joint index. Weights sum to 1.
    support: Vec<(Vec<usize>, f64)>,
}

impl InitialStateDistribution {
    /// Builds a distribution from explicit joint states and weights.
    pub fn from_weights(
        num_ports: usize,
        num_states: usize,
        support: Vec<(Vec<usize>, f64)>,
    ) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::Contract(
                "initial-state support must not be empty".into(),
            ));
        }
        let mut total = 0.0;
        for (state, w) in &support {
            if state.len() != num_ports {
                return Err(Error::Contract(format!(
                    "initial state {state:?} has {} ports, expected {num_ports}",
                    state.len()
                )));
            }
            if state.iter().any(|&s| s >= num_states) {
                return Err(Error::Contract(format!(
                    "initial state {state:?} uses symbols outside 0..{num_states}"
                )));
            }
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::Contract(format!(
                    "initial-state weight {w} must be finite and non-negative"
                )));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Contract(format!(
                "initial-state weights sum to {total}, expected 1"
            )));
        }
        Ok(InitialStateDistribution {
            num_ports,
            num_states,
            support,
        })
    }

    pub fn num_ports(&self) -> usize {
        self.num_ports
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Observed joint states and weights, heaviest-index order fixed.
    pub fn support(&self) -> &[(Vec<usize>, f64)] {
        &self.support
    }

    /// Draws one opening joint state.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<usize> {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (state, w) in &self.support {
            acc += w;
            if u < acc {
                return state.clone();
            }
        }
        self.support
            .last()
            .expect("support is never empty")
            .0
            .clone()
    }
}

/// Tabulates the joint opening-symbol distribution of a state panel.
pub fn initial_state_distribution(states: &StatePanel) -> Result<InitialStateDistribution> {
    if states.num_days() == 0 {
        return Err(Error::Contract(
            "initial-state distribution needs at least one day".into(),
        ));
    }
    let mut counts: std::collections::BTreeMap<Vec<usize>, usize> = Default::default();
    for day in 0..states.num_days() {
        *counts.entry(states.joint_at(day, 0)).or_insert(0) += 1;
    }
    let total = states.num_days() as f64;
    Ok(InitialStateDistribution {
        num_ports: states.num_ports(),
        num_states: states.num_states(),
        support: counts
            .into_iter()
            .map(|(state, count)| (state, count as f64 / total))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn panel_of(states: Vec<usize>, days: usize, ports: usize, steps: usize) -> StatePanel {
        StatePanel::new(days, ports, steps, 2, states).unwrap()
    }

    #[test]
    fn single_day_rows_are_point_masses() {
        // One day, one port, symbols 0 1 1 0 over four steps.
        let states = panel_of(vec![0, 1, 1, 0], 1, 1, 4);
        let tensor = build_transitions(&states).unwrap();
        assert_eq!(tensor.num_horizons(), 3);

        // Row from symbol 0: lands on 1 at t=1 and t=2, back on 0 at t=3.
        for (t, target) in [(1, 1), (2, 1), (3, 0)] {
            let row = tensor.row(0, t, 0);
            assert!(row[target] > 0.999_99);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(!tensor.is_empty_row(0, t, 0));
        }

        // No day opened in symbol 1: rows are uniform and flagged.
        for t in 1..=3 {
            let row = tensor.row(0, t, 1);
            assert!((row[0] - 0.5).abs() < 1e-12);
            assert!((row[1] - 0.5).abs() < 1e-12);
            assert!(tensor.is_empty_row(0, t, 1));
        }
        assert_eq!(tensor.empty_row_count(), 3);
    }

    #[test]
    fn two_days_split_evenly() {
        // Two days both opening in 0, one landing on 0 and one on 1 at t=1:
        // smoothing cancels and the row is exactly (1/2, 1/2).
        let states = panel_of(vec![0, 0, 0, 1], 2, 1, 2);
        let tensor = build_transitions(&states).unwrap();
        let row = tensor.row(0, 1, 0);
        assert_eq!(row[0], 0.5);
        assert_eq!(row[1], 0.5);
        assert_eq!(tensor.tally_row(0, 1, 0), &[1, 1]);
    }

    #[test]
    fn from_probabilities_validates_rows() {
        assert!(TransitionTensor::from_probabilities(1, 2, 1, vec![0.3, 0.7, 0.5, 0.5]).is_ok());
        assert!(TransitionTensor::from_probabilities(1, 2, 1, vec![0.3, 0.6, 0.5, 0.5]).is_err());
        assert!(TransitionTensor::from_probabilities(1, 2, 1, vec![0.3, 0.7]).is_err());
    }

    #[test]
    fn initial_distribution_counts_opening_states() {
        // Three days over two ports: openings (0,1), (0,1), (1,0).
        let states = StatePanel::new(
            3,
            2,
            2,
            2,
            vec![
                0, 0, 1, 1, // day 0: port0 = [0,0], port1 = [1,1]
                0, 1, 1, 0, // day 1
                1, 1, 0, 0, // day 2
            ],
        )
        .unwrap();
        let dist = initial_state_distribution(&states).unwrap();
        let support = dist.support();
        assert_eq!(support.len(), 2);
        assert_eq!(support[0].0, vec![0, 1]);
        assert!((support[0].1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(support[1].0, vec![1, 0]);
        assert!((support[1].1 - 1.0 / 3.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let draws: Vec<Vec<usize>> = (0..2000).map(|_| dist.sample(&mut rng)).collect();
        let heavy = draws.iter().filter(|s| *s == &vec![0, 1]).count();
        assert!((heavy as f64 / 2000.0 - 2.0 / 3.0).abs() < 0.05);
    }

    proptest! {
        /// Tallies match a naive recount, and each row's total equals the
        /// number of days opening in that symbol.
        #[test]
        fn tallies_match_naive_recount(
            raw in proptest::collection::vec(0usize..2, 24..72),
        ) {
            let steps = 4;
            let ports = 2;
            let cell = ports * steps;
            let days = raw.len() / cell;
            let states = StatePanel::new(days, ports, steps, 2, raw[..days * cell].to_vec()).unwrap();
            let tensor = build_transitions(&states).unwrap();

            for port in 0..ports {
                // Days opening in each symbol, counted independently.
                let mut openings = [0u64; 2];
                for day in 0..days {
                    openings[states.get(day, port, 0)] += 1;
                }
                for t in 1..steps {
                    for i in 0..2 {
                        for j in 0..2 {
                            let naive = (0..days)
                                .filter(|&day| {
                                    states.get(day, port, 0) == i
                                        && states.get(day, port, t) == j
                                })
                                .count() as u64;
                            prop_assert_eq!(tensor.tally_row(port, t, i)[j], naive);
                        }
                        let total: u64 = tensor.tally_row(port, t, i).iter().sum();
                        prop_assert_eq!(total, openings[i]);
                        let prob_total: f64 = tensor.row(port, t, i).iter().sum();
                        prop_assert!((prob_total - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
