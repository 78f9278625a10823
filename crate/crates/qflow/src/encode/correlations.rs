//! Cross-port correlation of hourly increments.

use serde::{Deserialize, Serialize};

use super::codebook::SaxCodebook;
use super::panel::IncrementPanel;
use crate::{Error, Result};

/// Variance threshold below which a correlation is treated as undefined.
const VARIANCE_FLOOR: f64 = 1e-12;

/// Pearson correlations `rho[d][d'][step]` of increments across days, with a
/// defined-flag per entry (constant cells have no correlation; they are
/// stored as 0 and flagged).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    num_ports: usize,
    num_steps: usize,
    rho: Vec<f64>,
    defined: Vec<bool>,
}

impl CorrelationTable {
    /// A table with every entry undefined; useful when the correlation
    /// penalty is disabled and no empirical table exists.
    pub fn undefined(num_ports: usize, num_steps: usize) -> Self {
        CorrelationTable {
            num_ports,
            num_steps,
            rho: vec![0.0; num_ports * num_ports * num_steps],
            defined: vec![false; num_ports * num_ports * num_steps],
        }
    }

    /// Overwrites one symmetric entry (both orderings) with a defined value.
    pub fn set_pair(&mut self, d: usize, dp: usize, step: usize, value: f64) {
        let idx = self.index(d, dp, step);
        self.rho[idx] = value;
        self.defined[idx] = true;
        let idx = self.index(dp, d, step);
        self.rho[idx] = value;
        self.defined[idx] = true;
    }

    pub fn num_ports(&self) -> usize {
        self.num_ports
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    #[inline]
    fn index(&self, d: usize, dp: usize, step: usize) -> usize {
        debug_assert!(d < self.num_ports && dp < self.num_ports && step < self.num_steps);
        (d * self.num_ports + dp) * self.num_steps + step
    }

    /// The correlation at (d, d', step), or `None` when undefined.
    pub fn get(&self, d: usize, dp: usize, step: usize) -> Option<f64> {
        let idx = self.index(d, dp, step);
        self.defined[idx].then(|| self.rho[idx])
    }

    /// Stored value with undefined entries reported as 0.
    pub fn value_or_zero(&self, d: usize, dp: usize, step: usize) -> f64 {
        self.rho[self.index(d, dp, step)]
    }
}

/// Computes per-step cross-day Pearson correlations between every ordered
/// pair of distinct ports, centering each cell on the codebook's stored mean
/// increment.
pub fn empirical_correlations(
    increments: &IncrementPanel,
    codebook: &SaxCodebook,
) -> Result<CorrelationTable> {
    if increments.num_ports() != codebook.num_ports()
        || increments.num_steps() != codebook.num_steps()
    {
        return Err(Error::Contract(
            "increment panel and codebook disagree on ports or steps".into(),
        ));
    }
    let ports = increments.num_ports();
    let steps = increments.num_steps();
    let days = increments.num_days();

    let mut rho = vec![0.0; ports * ports * steps];
    let mut defined = vec![false; ports * ports * steps];

    for d in 0..ports {
        for dp in (d + 1)..ports {
            for step in 0..steps {
                let mean_d = codebook.mean(d, step);
                let mean_dp = codebook.mean(dp, step);
                let mut cov = 0.0;
                let mut var_d = 0.0;
                let mut var_dp = 0.0;
                for day in 0..days {
                    let x = increments.get(day, d, step) - mean_d;
                    let y = increments.get(day, dp, step) - mean_dp;
                    cov += x * y;
                    var_d += x * x;
                    var_dp += y * y;
                }
                let idx_a = (d * ports + dp) * steps + step;
                let idx_b = (dp * ports + d) * steps + step;
                if var_d > VARIANCE_FLOOR && var_dp > VARIANCE_FLOOR {
                    let r = cov / (var_d * var_dp).sqrt();
                    rho[idx_a] = r;
                    rho[idx_b] = r;
                    defined[idx_a] = true;
                    defined[idx_b] = true;
                }
            }
        }
    }

    Ok(CorrelationTable {
        num_ports: ports,
        num_steps: steps,
        rho,
        defined,
    })
}
