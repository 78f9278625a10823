//! Synthetic commuter-pattern count data.
//!
//! Stands in for real fleet data: residential ports lose bicycles during the
//! morning commute (often running dry), office ports receive them, and the
//! flow reverses in the evening. A shared day-level demand factor makes
//! residential and office group increments anti-correlated (≈ −0.6), and
//! per-port jitter keeps individual series rough. All movement is conserved
//! bike-by-bike, so with zero noise the group increments cancel exactly.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::classify::{is_weekday, PortGroup};
use super::csv_io::{PortRecord, GRID_HOURS};
use crate::{Error, Result};

/// Shape of the generated fleet and its demand pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub residential_ports: usize,
    pub office_ports: usize,
    pub others_ports: usize,
    /// Total racks per group, spread as evenly as possible over its ports.
    pub residential_racks: u32,
    pub office_racks: u32,
    pub others_racks: u32,
    /// Number of weekdays to generate, starting at `start_date`.
    pub num_days: usize,
    pub start_date: NaiveDate,
    /// Morning demand per residential port per flow hour, in bicycles. The
    /// default exceeds the typical opening stock so ports run dry and real
    /// opportunity losses exist downstream.
    pub morning_flow: f64,
    /// Scales both the shared day-level demand factor and per-port jitter;
    /// 0 gives a fully deterministic pattern.
    pub noise: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            residential_ports: 50,
            office_ports: 36,
            others_ports: 48,
            residential_racks: 453,
            office_racks: 391,
            others_racks: 431,
            num_days: 21,
            start_date: NaiveDate::from_ymd_opt(2024, 4, 1).unwrap(),
            morning_flow: 2.5,
            noise: 1.0,
        }
    }
}

/// Steps (grid transitions) carrying the morning residential → office flow.
const MORNING_STEPS: [usize; 2] = [1, 2];
/// Steps carrying the evening return flow.
const EVENING_STEPS: [usize; 3] = [11, 12, 13];
/// Standard deviation of the shared day-level flow factor (bikes per hour at
/// group level) at `noise = 1`; sized against the per-port jitter so that
/// residential–office group increments correlate at about −0.6.
const COMMON_FLOW_SIGMA: f64 = 5.7;
/// Probability of a ±1 per-port jitter step (each direction) at `noise = 1`.
const JITTER_RATE: f64 = 0.25;

/// Opening stock per port at 6:00, cycling over a small range so only part
/// of the residential group runs completely dry.
fn opening_stock(group: PortGroup, index: usize) -> u32 {
    match group {
        PortGroup::Residential => 4 + (index % 3) as u32,
        PortGroup::Office => 2 + (index % 2) as u32,
        PortGroup::Others => 5 + (index % 3) as u32,
    }
}

fn group_prefix(group: PortGroup) -> &'static str {
    match group {
        PortGroup::Residential => "R",
        PortGroup::Office => "O",
        PortGroup::Others => "X",
    }
}

/// The generating group of a synthetic port id (by its prefix letter).
pub fn intended_group(port_id: &str) -> Option<PortGroup> {
    match port_id.chars().next() {
        Some('R') => Some(PortGroup::Residential),
        Some('O') => Some(PortGroup::Office),
        Some('X') => Some(PortGroup::Others),
        _ => None,
    }
}

/// Spreads `total` racks over `n` ports, earlier ports taking the remainder.
fn rack_split(total: u32, n: usize) -> Vec<u32> {
    let base = total / n as u32;
    let extra = (total % n as u32) as usize;
    (0..n)
        .map(|i| if i < extra { base + 1 } else { base })
        .collect()
}

/// Internal per-port state during generation.
struct Port {
    id: String,
    group: PortGroup,
    /// Index within the port's own group; drives the opening-stock cycle.
    slot: usize,
    rack: u32,
    stock: u32,
}

/// Moves up to `amount` bikes out of the given group, one per pass over its
/// ports starting at `offset`, and returns how many were actually available.
fn take_from_group(ports: &mut [Port], group: PortGroup, amount: u32, offset: usize) -> u32 {
    let members: Vec<usize> = (0..ports.len()).filter(|&p| ports[p].group == group).collect();
    let mut moved = 0;
    while moved < amount {
        let before = moved;
        for k in 0..members.len() {
            if moved == amount {
                break;
            }
            let port = &mut ports[members[(offset + k) % members.len()]];
            if port.stock > 0 {
                port.stock -= 1;
                moved += 1;
            }
        }
        if moved == before {
            break; // group is empty
        }
    }
    moved
}

/// Deposits `amount` bikes into the group, capped at each port's rack.
fn give_to_group(ports: &mut [Port], group: PortGroup, amount: u32, offset: usize) {
    let members: Vec<usize> = (0..ports.len()).filter(|&p| ports[p].group == group).collect();
    let mut left = amount;
    while left > 0 {
        let before = left;
        for k in 0..members.len() {
            if left == 0 {
                break;
            }
            let port = &mut ports[members[(offset + k) % members.len()]];
            if port.stock < port.rack {
                port.stock += 1;
                left -= 1;
            }
        }
        if left == before {
            break; // every rack is full; surplus bikes leave the system
        }
    }
}

/// Generates a reproducible synthetic fleet history.
pub fn synth_generate(spec: &SynthSpec, seed: u64) -> Result<Vec<PortRecord>> {
    if spec.residential_ports == 0 || spec.office_ports == 0 || spec.others_ports == 0 {
        return Err(Error::Config("every group needs at least one port".into()));
    }
    if spec.num_days == 0 {
        return Err(Error::Config("need at least one day".into()));
    }
    if !(spec.morning_flow.is_finite() && spec.morning_flow >= 0.0)
        || !(spec.noise.is_finite() && spec.noise >= 0.0)
    {
        return Err(Error::Config("flow and noise must be finite and non-negative".into()));
    }

    let mut dates = Vec::with_capacity(spec.num_days);
    let mut cursor = spec.start_date;
    while dates.len() < spec.num_days {
        if is_weekday(cursor, &[]) {
            dates.push(cursor);
        }
        cursor = cursor
            .succ_opt()
            .ok_or_else(|| Error::Config("date range overflows the calendar".into()))?;
    }

    let mut ports = Vec::new();
    for (group, n, racks) in [
        (PortGroup::Residential, spec.residential_ports, spec.residential_racks),
        (PortGroup::Office, spec.office_ports, spec.office_racks),
        (PortGroup::Others, spec.others_ports, spec.others_racks),
    ] {
        let split = rack_split(racks, n);
        for i in 0..n {
            ports.push(Port {
                id: format!("{}{:03}", group_prefix(group), i + 1),
                group,
                slot: i,
                rack: split[i].max(opening_stock(group, i)),
                stock: 0,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let morning_total = spec.morning_flow * spec.residential_ports as f64;
    // The evening window is one step longer, so returning the same volume
    // needs two thirds of the morning rate.
    let evening_total = morning_total * MORNING_STEPS.len() as f64 / EVENING_STEPS.len() as f64;

    let mut histories: Vec<Vec<Vec<u32>>> = vec![Vec::with_capacity(spec.num_days); ports.len()];
    for day in 0..spec.num_days {
        for (p, port) in ports.iter_mut().enumerate() {
            port.stock = opening_stock(port.group, port.slot);
            histories[p].push(Vec::with_capacity(GRID_HOURS));
            histories[p][day].push(port.stock);
        }
        for step in 0..GRID_HOURS - 1 {
            // Shared commute flow: positive moves residential → office.
            let base = if MORNING_STEPS.contains(&step) {
                morning_total
            } else if EVENING_STEPS.contains(&step) {
                -evening_total
            } else {
                0.0
            };
            let shared: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal)
                * COMMON_FLOW_SIGMA
                * spec.noise;
            let flow = (base + shared).round() as i64;
            let offset = day * 31 + step * 7;
            if flow > 0 {
                let moved =
                    take_from_group(&mut ports, PortGroup::Residential, flow as u32, offset);
                give_to_group(&mut ports, PortGroup::Office, moved, offset);
            } else if flow < 0 {
                let moved =
                    take_from_group(&mut ports, PortGroup::Office, (-flow) as u32, offset);
                give_to_group(&mut ports, PortGroup::Residential, moved, offset);
            }

            // Independent per-port jitter.
            let jitter = (JITTER_RATE * spec.noise).min(0.45);
            for port in ports.iter_mut() {
                let u: f64 = rng.gen();
                if u < jitter {
                    port.stock = (port.stock + 1).min(port.rack);
                } else if u < 2.0 * jitter && port.stock > 0 {
                    port.stock -= 1;
                }
            }

            for (p, port) in ports.iter().enumerate() {
                histories[p][day].push(port.stock);
            }
        }
    }

    Ok(ports
        .iter()
        .enumerate()
        .map(|(p, port)| PortRecord {
            port_id: port.id.clone(),
            rack_count: Some(port.rack),
            dates: dates.clone(),
            counts: histories[p].clone(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use chrono::Datelike;

    use super::super::classify::classify_ports;
    use super::*;
    use crate::encode::{empirical_correlations, fit_codebook, BinningStrategy};

    fn group_series(records: &[PortRecord], group: PortGroup) -> Vec<Vec<f64>> {
        let days = records[0].num_days();
        let mut series = vec![vec![0.0; GRID_HOURS]; days];
        for r in records {
            if intended_group(&r.port_id) == Some(group) {
                for day in 0..days {
                    for t in 0..GRID_HOURS {
                        series[day][t] += r.counts[day][t] as f64;
                    }
                }
            }
        }
        series
    }

    #[test]
    fn fixed_seed_reproduces_the_fleet_exactly() {
        let spec = SynthSpec::default();
        let a = synth_generate(&spec, 5).unwrap();
        let b = synth_generate(&spec, 5).unwrap();
        assert_eq!(a, b);
        let c = synth_generate(&spec, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn dates_are_consecutive_weekdays() {
        let records = synth_generate(&SynthSpec::default(), 1).unwrap();
        let dates = &records[0].dates;
        assert_eq!(dates.len(), 21);
        assert_eq!(dates[0], NaiveDate::from_ymd_opt(2024, 4, 1).unwrap());
        assert!(dates.iter().all(|d| !matches!(
            d.weekday(),
            chrono::Weekday::Sat | chrono::Weekday::Sun
        )));
        assert!(dates.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn fleet_shape_matches_the_spec() {
        let spec = SynthSpec::default();
        let records = synth_generate(&spec, 2).unwrap();
        assert_eq!(records.len(), 134);
        let racks = |g| {
            records
                .iter()
                .filter(|r| intended_group(&r.port_id) == Some(g))
                .map(|r| r.rack_count.unwrap())
                .sum::<u32>()
        };
        assert_eq!(racks(PortGroup::Residential), 453);
        assert_eq!(racks(PortGroup::Office), 391);
        assert_eq!(racks(PortGroup::Others), 431);
        for r in &records {
            let rack = r.rack_count.unwrap();
            for day in &r.counts {
                assert_eq!(day.len(), GRID_HOURS);
                assert!(day.iter().all(|&c| c <= rack));
            }
        }
    }

    #[test]
    fn zero_noise_flows_cancel_exactly_between_groups() {
        let spec = SynthSpec {
            noise: 0.0,
            ..SynthSpec::default()
        };
        let records = synth_generate(&spec, 3).unwrap();
        let res = group_series(&records, PortGroup::Residential);
        let office = group_series(&records, PortGroup::Office);
        let others = group_series(&records, PortGroup::Others);
        for day in 0..spec.num_days {
            for t in 0..GRID_HOURS - 1 {
                let dr = res[day][t + 1] - res[day][t];
                let do_ = office[day][t + 1] - office[day][t];
                let dx = others[day][t + 1] - others[day][t];
                assert_eq!(dr, -do_, "day {day}, step {t}");
                assert_eq!(dx, 0.0, "day {day}, step {t}");
            }
            // The commute signature is present: bikes leave in the morning.
            assert!(res[day][3] < res[day][1]);
            assert!(office[day][3] > office[day][1]);
        }
    }

    #[test]
    fn morning_depletion_creates_dry_residential_ports() {
        let records = synth_generate(&SynthSpec::default(), 4).unwrap();
        let mut dry_port_days = 0;
        let mut total_port_days = 0;
        for r in &records {
            if intended_group(&r.port_id) != Some(PortGroup::Residential) {
                continue;
            }
            for day in &r.counts {
                total_port_days += 1;
                if day[3..11].iter().any(|&c| c == 0) {
                    dry_port_days += 1;
                }
            }
        }
        let ratio = dry_port_days as f64 / total_port_days as f64;
        assert!(
            ratio > 0.3,
            "expected widespread midday depletion, got {ratio:.2}"
        );
    }

    #[test]
    fn classification_recovers_the_generating_groups() {
        let records = synth_generate(&SynthSpec::default(), 7).unwrap();
        let assignment = classify_ports(&records, &[]).unwrap();
        let correct = records
            .iter()
            .filter(|r| assignment.group_of(&r.port_id) == intended_group(&r.port_id))
            .count();
        let rate = correct as f64 / records.len() as f64;
        assert!(rate >= 0.95, "recovery rate {rate:.3}");
    }

    #[test]
    fn group_increments_are_anticorrelated_around_minus_point_six() {
        let records = synth_generate(&SynthSpec::default(), 8).unwrap();
        let assignment = classify_ports(&records, &[]).unwrap();
        let panel = super::super::classify::aggregate_groups(&records, &assignment).unwrap();
        let res = panel.port_names().iter().position(|n| n == "Residential").unwrap();
        let off = panel.port_names().iter().position(|n| n == "Office").unwrap();
        let increments = panel.increments().unwrap();
        let codebook = fit_codebook(&increments, 2, BinningStrategy::EqualFrequency).unwrap();
        let table = empirical_correlations(&increments, &codebook).unwrap();

        let mut defined = 0;
        let mut negative = 0;
        let mut sum = 0.0;
        for t in 0..GRID_HOURS - 1 {
            if let Some(rho) = table.get(res, off, t) {
                defined += 1;
                sum += rho;
                if rho < 0.0 {
                    negative += 1;
                }
            }
        }
        assert!(defined >= 14, "defined steps: {defined}");
        let mean = sum / defined as f64;
        assert!(
            (-0.75..=-0.45).contains(&mean),
            "mean residential–office correlation {mean:.3}"
        );
        assert!(
            negative as f64 >= 0.8 * defined as f64,
            "negative at {negative}/{defined} steps"
        );
    }
}
