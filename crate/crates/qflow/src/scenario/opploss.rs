//! Rental opportunity losses at depleted ports.
//!
//! Hourly boundary counts hide demand that arrived while a port was empty.
//! This module replays each day as a discrete-event sequence — arrivals and
//! evenly spaced rentals per interval, reproducing the observed boundary
//! counts exactly — and imputes additional rentals at a given demand rate
//! whenever the simulated stock sits at zero. Each imputed rental is an
//! opportunity loss; subtracting cumulative losses yields an adjusted count
//! path that may dip below zero, representing demand rather than stock.

use serde::{Deserialize, Serialize};

use crate::encode::Panel;
use crate::{Error, Result};

/// Slack when deciding whether the accumulated demand integral has crossed
/// a whole rental, so exact-rate constructions land on the intended side.
const CROSSING_EPSILON: f64 = 1e-9;
/// Tolerance for treating boundary counts and realized-rental balances as
/// whole numbers.
const INTEGER_TOLERANCE: f64 = 1e-9;

/// One port-day of evidence for the loss estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OppLossInput {
    /// Counts at the interval boundaries, `num_intervals + 1` whole numbers.
    pub observed: Vec<f64>,
    /// Arrival timestamps per interval; a timestamp for interval `i` must
    /// lie within `[i, i + 1]`.
    pub arrivals: Vec<Vec<f64>>,
    /// Imputed demand in rentals per hour during zero-stock spans, one rate
    /// per interval.
    pub demand_rate: Vec<f64>,
}

impl OppLossInput {
    /// Reconstructs the minimal event evidence visible in hourly counts:
    /// every net increase becomes that many evenly spaced arrivals, every
    /// net decrease that many rentals (implied later by the boundary
    /// balance), so no interval mixes the two.
    pub fn from_day_counts(observed: &[f64], demand_rate: &[f64]) -> Result<OppLossInput> {
        let input = OppLossInput {
            observed: observed.to_vec(),
            arrivals: Vec::new(),
            demand_rate: demand_rate.to_vec(),
        };
        // Validate the boundary counts first so the net differences below
        // are meaningful.
        if observed.len() < 2 {
            return Err(Error::Contract(
                "a day needs at least two boundary counts".into(),
            ));
        }
        let mut arrivals = Vec::with_capacity(observed.len() - 1);
        for i in 0..observed.len() - 1 {
            let net = observed[i + 1] - observed[i];
            let m = if net > 0.0 { net.round() as usize } else { 0 };
            arrivals.push(evenly_spaced(i, m));
        }
        let input = OppLossInput { arrivals, ..input };
        input.validate()?;
        Ok(input)
    }

    pub fn num_intervals(&self) -> usize {
        self.observed.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.observed.len() < 2 {
            return Err(Error::Contract(
                "a day needs at least two boundary counts".into(),
            ));
        }
        let n = self.num_intervals();
        if self.arrivals.len() != n || self.demand_rate.len() != n {
            return Err(Error::Contract(format!(
                "{} boundary counts imply {n} intervals, but there are {} arrival lists and {} demand rates",
                self.observed.len(),
                self.arrivals.len(),
                self.demand_rate.len()
            )));
        }
        for (t, &value) in self.observed.iter().enumerate() {
            if !value.is_finite() || (value - value.round()).abs() > INTEGER_TOLERANCE {
                return Err(Error::Data(format!(
                    "boundary count at t = {t} must be a whole number, got {value}"
                )));
            }
            if value < 0.0 {
                return Err(Error::Data(format!(
                    "boundary count at t = {t} is negative: {value}"
                )));
            }
        }
        for (i, list) in self.arrivals.iter().enumerate() {
            for &time in list {
                if !time.is_finite() || time < i as f64 || time > (i + 1) as f64 {
                    return Err(Error::Data(format!(
                        "arrival at {time} lies outside interval {i} (t = {i} to {})",
                        i + 1
                    )));
                }
            }
        }
        for (i, &rate) in self.demand_rate.iter().enumerate() {
            if !rate.is_finite() || rate < 0.0 {
                return Err(Error::Data(format!(
                    "demand rate for interval {i} must be finite and non-negative, got {rate}"
                )));
            }
        }
        Ok(())
    }
}

/// Replay outcome for one port-day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OppLossResult {
    /// Times of every rental that actually executed (deferred ones at the
    /// arrival that served them). Replaying arrivals and these rentals
    /// reproduces the observed boundary counts exactly.
    pub virtual_rentals: Vec<f64>,
    /// Times at which the zero-stock demand integral completed one rental.
    pub loss_times: Vec<f64>,
    /// Losses bucketed by the interval their completion time falls in.
    pub losses_per_interval: Vec<u32>,
    /// Observed counts minus cumulative losses; dips below zero where
    /// demand went unmet.
    pub adjusted_path: Vec<f64>,
}

impl OppLossResult {
    pub fn total_losses(&self) -> u32 {
        self.losses_per_interval.iter().sum()
    }
}

/// Rental (or arrival) times spread evenly through interval `i`, at
/// `i + (j + 1) / (m + 1)`.
fn evenly_spaced(i: usize, m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| i as f64 + (j + 1) as f64 / (m + 1) as f64)
        .collect()
}

/// The interval whose half-open span `(i, i + 1]` contains time `t`; exact
/// boundary hits belong to the interval they close.
fn interval_of(t: f64, num_intervals: usize) -> usize {
    let idx = (t - CROSSING_EPSILON).floor().max(0.0) as usize;
    idx.min(num_intervals - 1)
}

#[derive(Clone, Copy, PartialEq)]
enum EventKind {
    // Order matters: at equal times an arrival restocks before a rental
    // draws, so a same-instant pair nets out without touching zero.
    Arrival,
    Rental,
}

/// Tracks the demand integral through the current zero-stock span. Residual
/// demand below one whole rental is discarded when the span closes.
struct LossMeter {
    /// Demand accumulated since the span opened, `None` while stock is
    /// positive.
    accumulated: Option<f64>,
    emitted_in_span: u32,
}

impl LossMeter {
    fn new() -> Self {
        LossMeter {
            accumulated: None,
            emitted_in_span: 0,
        }
    }

    fn open(&mut self) {
        if self.accumulated.is_none() {
            self.accumulated = Some(0.0);
            self.emitted_in_span = 0;
        }
    }

    fn close(&mut self) {
        self.accumulated = None;
        self.emitted_in_span = 0;
    }

    /// Integrates demand from `from` to `to` at the given constant rate,
    /// appending a loss at each whole-rental crossing.
    fn advance(&mut self, from: f64, to: f64, rate: f64, losses: &mut Vec<f64>) {
        let Some(start) = self.accumulated else {
            return;
        };
        if rate <= 0.0 || to <= from {
            return;
        }
        let end = start + rate * (to - from);
        while end + CROSSING_EPSILON >= (self.emitted_in_span + 1) as f64 {
            let threshold = (self.emitted_in_span + 1) as f64;
            let crossing = (from + (threshold - start) / rate).clamp(from, to);
            losses.push(crossing);
            self.emitted_in_span += 1;
        }
        self.accumulated = Some(end);
    }
}

/// Replays one port-day and imputes the rentals lost to empty racks.
///
/// Per interval, the realized rentals `r = b(t₁) + |arrivals| − b(t₂)` are
/// spread evenly and merged with the arrivals in time order. Rentals that
/// meet an empty rack wait for the next arrival (the boundary counts
/// guarantee one comes in the same interval). Whenever the stock sits at
/// zero, demand accrues at `demand_rate` and every completed whole rental
/// is recorded as a loss; partial demand left when stock returns (or the
/// day ends) is discarded.
pub fn estimate_opportunity_losses(input: &OppLossInput) -> Result<OppLossResult> {
    input.validate()?;
    let n = input.num_intervals();
    let bounds: Vec<i64> = input.observed.iter().map(|v| v.round() as i64).collect();

    let mut stock = bounds[0];
    let mut deferred: i64 = 0;
    let mut meter = LossMeter::new();
    if stock == 0 {
        meter.open();
    }

    let mut virtual_rentals = Vec::new();
    let mut loss_times = Vec::new();

    for i in 0..n {
        let m = input.arrivals[i].len() as i64;
        let realized = bounds[i] + m - bounds[i + 1];
        if realized < 0 {
            return Err(Error::Data(format!(
                "interval {i} (t = {i} to {}) implies {realized} rentals: \
                 more arrivals than the boundary counts allow",
                i + 1
            )));
        }

        let mut events: Vec<(f64, EventKind)> = input.arrivals[i]
            .iter()
            .map(|&t| (t, EventKind::Arrival))
            .chain(
                evenly_spaced(i, realized as usize)
                    .into_iter()
                    .map(|t| (t, EventKind::Rental)),
            )
            .collect();
        events.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("event times validated finite")
                .then_with(|| (a.1 == EventKind::Rental).cmp(&(b.1 == EventKind::Rental)))
        });

        let rate = input.demand_rate[i];
        let mut cursor = i as f64;
        for (time, kind) in events {
            meter.advance(cursor, time, rate, &mut loss_times);
            cursor = time;
            match kind {
                EventKind::Rental => {
                    if stock > 0 {
                        stock -= 1;
                        virtual_rentals.push(time);
                        if stock == 0 {
                            meter.open();
                        }
                    } else {
                        deferred += 1;
                    }
                }
                EventKind::Arrival => {
                    if deferred > 0 {
                        // The arrival is consumed by a waiting rental;
                        // stock stays at zero and the span stays open.
                        deferred -= 1;
                        virtual_rentals.push(time);
                    } else {
                        stock += 1;
                        meter.close();
                    }
                }
            }
        }
        meter.advance(cursor, (i + 1) as f64, rate, &mut loss_times);
    }

    // The boundary counts are non-negative, so every deferred rental finds
    // an arrival within its own interval and the replay lands exactly on
    // the observed counts.
    assert_eq!(deferred, 0, "rental deferred past its interval");
    assert_eq!(stock, bounds[n], "replay diverged from the boundary counts");

    let mut losses_per_interval = vec![0u32; n];
    for &t in &loss_times {
        losses_per_interval[interval_of(t, n)] += 1;
    }
    let mut adjusted_path = Vec::with_capacity(n + 1);
    let mut cumulative = 0u32;
    adjusted_path.push(input.observed[0]);
    for i in 0..n {
        cumulative += losses_per_interval[i];
        adjusted_path.push(input.observed[i + 1] - cumulative as f64);
    }

    Ok(OppLossResult {
        virtual_rentals,
        loss_times,
        losses_per_interval,
        adjusted_path,
    })
}

/// Default zero-stock demand rates for every port of a panel: for each
/// interval, the mean observed rentals (net decrease, floored at zero) over
/// the days that entered the interval with stock on hand. Intervals that
/// never start with stock get rate zero.
pub fn mean_demand_rates(panel: &Panel) -> Vec<Vec<f64>> {
    let n = panel.num_times() - 1;
    (0..panel.num_ports())
        .map(|port| {
            (0..n)
                .map(|i| {
                    let mut sum = 0.0;
                    let mut days = 0usize;
                    for day in 0..panel.num_days() {
                        if panel.get(day, port, i) > 0.0 {
                            sum += (panel.get(day, port, i) - panel.get(day, port, i + 1)).max(0.0);
                            days += 1;
                        }
                    }
                    if days == 0 {
                        0.0
                    } else {
                        sum / days as f64
                    }
                })
                .collect()
        })
        .collect()
}

/// Runs the estimator over every (day, port) series of a panel.
/// `demand_rate[port][interval]` supplies the imputation rates.
pub fn estimate_panel_losses(
    panel: &Panel,
    demand_rate: &[Vec<f64>],
) -> Result<Vec<Vec<OppLossResult>>> {
    if demand_rate.len() != panel.num_ports() {
        return Err(Error::Contract(format!(
            "demand rates cover {} ports but the panel has {}",
            demand_rate.len(),
            panel.num_ports()
        )));
    }
    (0..panel.num_days())
        .map(|day| {
            (0..panel.num_ports())
                .map(|port| {
                    OppLossInput::from_day_counts(panel.series(day, port), &demand_rate[port])
                        .and_then(|input| estimate_opportunity_losses(&input))
                        .map_err(|e| {
                            Error::Data(format!(
                                "port {} on {}: {e}",
                                panel.port_names()[port],
                                panel.day_labels()[day]
                            ))
                        })
                })
                .collect()
        })
        .collect()
}

/// Rebuilds a panel from adjusted paths. `results[day][port]` must cover
/// the panel exactly.
pub fn adjust_panel(panel: &Panel, results: &[Vec<OppLossResult>]) -> Result<Panel> {
    if results.len() != panel.num_days()
        || results.iter().any(|row| row.len() != panel.num_ports())
    {
        return Err(Error::Contract(format!(
            "adjustment results must cover all {} days × {} ports of the panel",
            panel.num_days(),
            panel.num_ports()
        )));
    }
    let mut values = Vec::with_capacity(panel.num_days() * panel.num_ports() * panel.num_times());
    for (day, row) in results.iter().enumerate() {
        for (port, result) in row.iter().enumerate() {
            if result.adjusted_path.len() != panel.num_times() {
                return Err(Error::Contract(format!(
                    "adjusted path for port {} on {} has {} points, panel has {}",
                    panel.port_names()[port],
                    panel.day_labels()[day],
                    result.adjusted_path.len(),
                    panel.num_times()
                )));
            }
            values.extend_from_slice(&result.adjusted_path);
        }
    }
    Panel::new(
        panel.port_names().to_vec(),
        panel.day_labels().to_vec(),
        panel.num_times(),
        values,
    )
}
