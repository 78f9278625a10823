//! Rectangular day × port × time panels and their hourly increments.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A rectangular panel of stock levels: `values[day][port][time]`.
///
/// Raw ingested panels hold non-negative integers (stored as `f64`), while
/// opportunity-loss-adjusted panels hold real values that may dip below
/// zero; both share this type. Time is an hourly grid whose first slot is
/// anchored at the configured opening hour (06:00 by default).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    num_days: usize,
    num_ports: usize,
    num_times: usize,
    port_names: Vec<String>,
    day_labels: Vec<String>,
    values: Vec<f64>,
}

impl Panel {
    /// Builds a panel from row-major `[day][port][time]` values.
    pub fn new(
        port_names: Vec<String>,
        day_labels: Vec<String>,
        num_times: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        let num_days = day_labels.len();
        let num_ports = port_names.len();
        if num_days == 0 || num_ports == 0 || num_times == 0 {
            return Err(Error::Contract("panel dimensions must be positive".into()));
        }
        if values.len() != num_days * num_ports * num_times {
            return Err(Error::Contract(format!(
                "panel expects {} values ({num_days} days × {num_ports} ports × {num_times} times), got {}",
                num_days * num_ports * num_times,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("panel contains non-finite value {bad}")));
        }
        Ok(Panel {
            num_days,
            num_ports,
            num_times,
            port_names,
            day_labels,
            values,
        })
    }

    /// Zero-filled panel, for incremental construction.
    pub fn zeros(port_names: Vec<String>, day_labels: Vec<String>, num_times: usize) -> Self {
        let values = vec![0.0; port_names.len() * day_labels.len() * num_times];
        Panel::new(port_names, day_labels, num_times, values)
            .expect("zero panel dimensions are valid")
    }

    pub fn num_days(&self) -> usize {
        self.num_days
    }

    pub fn num_ports(&self) -> usize {
        self.num_ports
    }

    pub fn num_times(&self) -> usize {
        self.num_times
    }

    pub fn port_names(&self) -> &[String] {
        &self.port_names
    }

    pub fn day_labels(&self) -> &[String] {
        &self.day_labels
    }

    #[inline]
    fn index(&self, day: usize, port: usize, time: usize) -> usize {
        debug_assert!(day < self.num_days && port < self.num_ports && time < self.num_times);
        (day * self.num_ports + port) * self.num_times + time
    }

    pub fn get(&self, day: usize, port: usize, time: usize) -> f64 {
        self.values[self.index(day, port, time)]
    }

    pub fn set(&mut self, day: usize, port: usize, time: usize, value: f64) {
        let idx = self.index(day, port, time);
        self.values[idx] = value;
    }

    /// The full time series of one port on one day.
    pub fn series(&self, day: usize, port: usize) -> &[f64] {
        let start = self.index(day, port, 0);
        &self.values[start..start + self.num_times]
    }

    /// Hourly forward differences: `Δ[day][port][t] = X[t+1] − X[t]`.
    ///
    /// Requires at least two time slots; the increment grid is one slot
    /// shorter than the panel's.
    pub fn increments(&self) -> Result<IncrementPanel> {
        if self.num_times < 2 {
            return Err(Error::Contract(
                "increments need a panel with at least two time slots".into(),
            ));
        }
        let num_steps = self.num_times - 1;
        let mut deltas = Vec::with_capacity(self.num_days * self.num_ports * num_steps);
        for day in 0..self.num_days {
            for port in 0..self.num_ports {
                let series = self.series(day, port);
                for t in 0..num_steps {
                    deltas.push(series[t + 1] - series[t]);
                }
            }
        }
        Ok(IncrementPanel {
            num_days: self.num_days,
            num_ports: self.num_ports,
            num_steps,
            deltas,
        })
    }
}

/// Hourly increments of a [`Panel`]: `deltas[day][port][step]`, one slot
/// shorter in time than the panel it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementPanel {
    num_days: usize,
    num_ports: usize,
    num_steps: usize,
    deltas: Vec<f64>,
}

impl IncrementPanel {
    pub fn num_days(&self) -> usize {
        self.num_days
    }

    pub fn num_ports(&self) -> usize {
        self.num_ports
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    #[inline]
    fn index(&self, day: usize, port: usize, step: usize) -> usize {
        debug_assert!(day < self.num_days && port < self.num_ports && step < self.num_steps);
        (day * self.num_ports + port) * self.num_steps + step
    }

    pub fn get(&self, day: usize, port: usize, step: usize) -> f64 {
        self.deltas[self.index(day, port, step)]
    }

    /// Cross-day sample at one (port, step) cell, in day order. This is the
    /// population each SAX cell is fitted on.
    pub fn cell_values(&self, port: usize, step: usize) -> Vec<f64> {
        (0..self.num_days)
            .map(|day| self.get(day, port, step))
            .collect()
    }
}

/// Discretized increments: `states[day][port][step]` holding symbols in
/// `0..num_states`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePanel {
    num_days: usize,
    num_ports: usize,
    num_steps: usize,
    num_states: usize,
    states: Vec<usize>,
}

impl StatePanel {
    /// Row-major `[day][port][step]` symbols, each below `num_states`.
    pub fn new(
        num_days: usize,
        num_ports: usize,
        num_steps: usize,
        num_states: usize,
        states: Vec<usize>,
    ) -> Result<Self> {
        if states.len() != num_days * num_ports * num_steps {
            return Err(Error::Contract(format!(
                "state panel needs {} entries, got {}",
                num_days * num_ports * num_steps,
                states.len()
            )));
        }
        if let Some(&bad) = states.iter().find(|&&s| s >= num_states) {
            return Err(Error::Contract(format!(
                "state symbol {bad} out of range for alphabet of {num_states}"
            )));
        }
        Ok(StatePanel {
            num_days,
            num_ports,
            num_steps,
            num_states,
            states,
        })
    }

    pub fn num_days(&self) -> usize {
        self.num_days
    }

    pub fn num_ports(&self) -> usize {
        self.num_ports
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn get(&self, day: usize, port: usize, step: usize) -> usize {
        debug_assert!(day < self.num_days && port < self.num_ports && step < self.num_steps);
        self.states[(day * self.num_ports + port) * self.num_steps + step]
    }

    /// The joint state across all ports at one (day, step).
    pub fn joint_at(&self, day: usize, step: usize) -> Vec<usize> {
        (0..self.num_ports)
            .map(|port| self.get(day, port, step))
            .collect()
    }
}
