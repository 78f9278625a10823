//! Symbolic aggregate approximation of hourly increments.
//!
//! Each (port, step) cell gets its own breakpoints fitted across days, so
//! "large morning outflow" and "large evening inflow" discretize into the
//! same small alphabet even though their raw magnitudes differ. Alongside
//! breakpoints, the codebook stores per-symbol representative increments (the
//! within-bin means) used to reconstruct counts from symbol paths, and the
//! per-cell mean increment used as the centering constant for correlations.

use serde::{Deserialize, Serialize};

use super::panel::{IncrementPanel, StatePanel};
use crate::{Error, Result};

/// How breakpoints are placed within each cell's cross-day sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinningStrategy {
    /// Quantile breakpoints: bins hold (nearly) equal numbers of
    /// observations. The default.
    EqualFrequency,
    /// Breakpoints evenly spaced between the cell's min and max.
    EqualWidth,
}

impl Default for BinningStrategy {
    fn default() -> Self {
        BinningStrategy::EqualFrequency
    }
}

/// Per-cell discretization tables fitted on an increment panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaxCodebook {
    num_ports: usize,
    num_steps: usize,
    num_states: usize,
    strategy: BinningStrategy,
    /// `[port][step][num_states - 1]`, strictly ascending per cell.
    breakpoints: Vec<f64>,
    /// `[port][step][num_states]`: representative increment per symbol.
    representatives: Vec<f64>,
    /// `[port][step]`: mean increment of the cell.
    means: Vec<f64>,
    /// `[port][step]`: cells whose sample had fewer distinct values than
    /// symbols, leaving some bins empty.
    degenerate: Vec<bool>,
}

impl SaxCodebook {
    pub fn num_ports(&self) -> usize {
        self.num_ports
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn strategy(&self) -> BinningStrategy {
        self.strategy
    }

    #[inline]
    fn cell(&self, port: usize, step: usize) -> usize {
        debug_assert!(port < self.num_ports && step < self.num_steps);
        port * self.num_steps + step
    }

    /// Ascending breakpoints of one cell.
    pub fn breakpoints(&self, port: usize, step: usize) -> &[f64] {
        let base = self.cell(port, step) * (self.num_states - 1);
        &self.breakpoints[base..base + self.num_states - 1]
    }

    /// Representative increment for `symbol` in one cell.
    pub fn representative(&self, port: usize, step: usize, symbol: usize) -> f64 {
        debug_assert!(symbol < self.num_states);
        self.representatives[self.cell(port, step) * self.num_states + symbol]
    }

    /// Mean increment of one cell.
    pub fn mean(&self, port: usize, step: usize) -> f64 {
        self.means[self.cell(port, step)]
    }

    /// Whether the cell's sample could not fill every bin.
    pub fn is_degenerate(&self, port: usize, step: usize) -> bool {
        self.degenerate[self.cell(port, step)]
    }

    /// Number of degenerate cells (reported by frontends as a warning).
    pub fn degenerate_cells(&self) -> usize {
        self.degenerate.iter().filter(|&&d| d).count()
    }

    /// Maps a value to its symbol: the number of breakpoints at or below it,
    /// so a value sitting exactly on a breakpoint joins the upper bin.
    pub fn discretize(&self, port: usize, step: usize, value: f64) -> usize {
        self.breakpoints(port, step)
            .partition_point(|&b| b <= value)
    }
}

/// Fits per-cell breakpoints, representatives, and means on an increment
/// panel. `num_states` is the symbol alphabet size (≥ 2; the circuit layer
/// additionally requires a power of two when states map onto qubits).
pub fn fit_codebook(
    increments: &IncrementPanel,
    num_states: usize,
    strategy: BinningStrategy,
) -> Result<SaxCodebook> {
    if num_states < 2 {
        return Err(Error::Config(format!(
            "symbol alphabet needs at least two states, got {num_states}"
        )));
    }
    let (ports, steps, days) = (
        increments.num_ports(),
        increments.num_steps(),
        increments.num_days(),
    );
    if days == 0 || steps == 0 {
        return Err(Error::Contract("cannot fit a codebook on an empty panel".into()));
    }

    let mut breakpoints = Vec::with_capacity(ports * steps * (num_states - 1));
    let mut representatives = Vec::with_capacity(ports * steps * num_states);
    let mut means = Vec::with_capacity(ports * steps);
    let mut degenerate = Vec::with_capacity(ports * steps);

    for port in 0..ports {
        for step in 0..steps {
            let values = increments.cell_values(port, step);
            let mut sorted = values.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("panel values are finite"));

            let mut cell_bps = match strategy {
                BinningStrategy::EqualFrequency => equal_frequency_breakpoints(&sorted, num_states),
                BinningStrategy::EqualWidth => equal_width_breakpoints(&sorted, num_states),
            };
            enforce_ascending(&mut cell_bps);

            // Assign each observation to its bin and average per bin.
            let mut sums = vec![0.0; num_states];
            let mut counts = vec![0usize; num_states];
            for &v in &values {
                let symbol = cell_bps.partition_point(|&b| b <= v);
                sums[symbol] += v;
                counts[symbol] += 1;
            }
            let reps = fill_representatives(&sums, &counts);

            let distinct = count_distinct(&sorted);
            degenerate.push(distinct < num_states);
            means.push(values.iter().sum::<f64>() / days as f64);
            breakpoints.extend_from_slice(&cell_bps);
            representatives.extend_from_slice(&reps);
        }
    }

    Ok(SaxCodebook {
        num_ports: ports,
        num_steps: steps,
        num_states,
        strategy,
        breakpoints,
        representatives,
        means,
        degenerate,
    })
}

/// Discretizes every increment against the fitted codebook.
pub fn discretize_panel(increments: &IncrementPanel, codebook: &SaxCodebook) -> Result<StatePanel> {
    if increments.num_ports() != codebook.num_ports()
        || increments.num_steps() != codebook.num_steps()
    {
        return Err(Error::Contract(format!(
            "increment panel is {}×{} (ports × steps) but codebook was fitted on {}×{}",
            increments.num_ports(),
            increments.num_steps(),
            codebook.num_ports(),
            codebook.num_steps()
        )));
    }
    let mut states =
        Vec::with_capacity(increments.num_days() * increments.num_ports() * increments.num_steps());
    for day in 0..increments.num_days() {
        for port in 0..increments.num_ports() {
            for step in 0..increments.num_steps() {
                states.push(codebook.discretize(port, step, increments.get(day, port, step)));
            }
        }
    }
    StatePanel::new(
        increments.num_days(),
        increments.num_ports(),
        increments.num_steps(),
        codebook.num_states(),
        states,
    )
}

/// Quantile breakpoints over a sorted sample. Each boundary falls midway
/// between the order statistics flanking the split rank; when the split lands
/// inside a run of ties the boundary moves just past the run, so tied values
/// always fall in the lower bin (and an all-constant sample maps to symbol 0).
fn equal_frequency_breakpoints(sorted: &[f64], num_states: usize) -> Vec<f64> {
    let n = sorted.len();
    (1..num_states)
        .map(|k| {
            let split = (k * n / num_states).clamp(1, n.saturating_sub(1).max(1));
            let lo = sorted[split - 1];
            let hi = sorted[split.min(n - 1)];
            if lo < hi {
                0.5 * (lo + hi)
            } else {
                match sorted[split - 1..].iter().find(|&&v| v > lo) {
                    Some(&next) => 0.5 * (lo + next),
                    None => lo + 1.0,
                }
            }
        })
        .collect()
}

/// Evenly spaced breakpoints between the sample's min and max. A zero-width
/// sample falls back to boundaries above the constant, matching the
/// equal-frequency convention that constants map to symbol 0.
fn equal_width_breakpoints(sorted: &[f64], num_states: usize) -> Vec<f64> {
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    if max > min {
        let width = (max - min) / num_states as f64;
        (1..num_states).map(|k| min + width * k as f64).collect()
    } else {
        (1..num_states).map(|k| min + k as f64).collect()
    }
}

/// Nudges any non-increasing boundary upward so breakpoints stay strictly
/// ascending; only engages when several splits land in one tie run.
fn enforce_ascending(bps: &mut [f64]) {
    for i in 1..bps.len() {
        if bps[i] <= bps[i - 1] {
            let nudge = (bps[i - 1].abs() * 1e-12).max(1e-12);
            bps[i] = bps[i - 1] + nudge;
        }
    }
}

/// Per-bin means, with empty bins interpolated from their nearest occupied
/// neighbors (average of both sides, or the single available side).
fn fill_representatives(sums: &[f64], counts: &[usize]) -> Vec<f64> {
    let num_states = sums.len();
    let direct: Vec<Option<f64>> = sums
        .iter()
        .zip(counts)
        .map(|(&s, &c)| if c > 0 { Some(s / c as f64) } else { None })
        .collect();
    (0..num_states)
        .map(|j| {
            if let Some(v) = direct[j] {
                return v;
            }
            let below = direct[..j].iter().rev().flatten().next();
            let above = direct[j + 1..].iter().flatten().next();
            match (below, above) {
                (Some(&b), Some(&a)) => 0.5 * (b + a),
                (Some(&b), None) => b,
                (None, Some(&a)) => a,
                (None, None) => unreachable!("every sample occupies at least one bin"),
            }
        })
        .collect()
}

fn count_distinct(sorted: &[f64]) -> usize {
    let mut distinct = 1;
    for w in sorted.windows(2) {
        if w[1] > w[0] {
            distinct += 1;
        }
    }
    distinct
}
