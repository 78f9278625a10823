//! Behavioral port classification and group aggregation.
//!
//! Ports are grouped by their weekday morning commute signature: the mean
//! change in bicycle count from 7:00 to 9:00. Ports losing two or more
//! bicycles are residential (morning outflow), ports gaining two or more are
//! office (morning inflow), everything else is "others". Group totals then
//! form a three-port panel that the model trains on.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::csv_io::{PortRecord, GRID_HOURS, GRID_START_HOUR};
use crate::encode::Panel;
use crate::{Error, Result};

/// Mean 9:00 − 7:00 weekday change at or below which a port is residential,
/// and at or above whose negation it is an office port (boundary inclusive).
pub const CLASSIFY_THRESHOLD: f64 = 2.0;

const HOUR_7_INDEX: usize = (7 - GRID_START_HOUR) as usize;
const HOUR_9_INDEX: usize = (9 - GRID_START_HOUR) as usize;

/// The three behavioral groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PortGroup {
    /// Morning outflow: bicycles leave with commuters.
    Residential,
    /// Morning inflow: commuters arrive.
    Office,
    /// No strong commute signature.
    Others,
}

impl PortGroup {
    pub const ALL: [PortGroup; 3] = [PortGroup::Residential, PortGroup::Office, PortGroup::Others];

    pub fn as_str(&self) -> &'static str {
        match self {
            PortGroup::Residential => "Residential",
            PortGroup::Office => "Office",
            PortGroup::Others => "Others",
        }
    }
}

impl fmt::Display for PortGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PortGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "residential" => Ok(PortGroup::Residential),
            "office" => Ok(PortGroup::Office),
            "others" => Ok(PortGroup::Others),
            other => Err(Error::Config(format!(
                "unknown group '{other}' (expected residential, office, or others)"
            ))),
        }
    }
}

/// A partition of ports into groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAssignment {
    assignments: BTreeMap<String, PortGroup>,
}

/// One row of a Table-style group summary.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub group: PortGroup,
    pub num_ports: usize,
    /// Total racks over ports that report a rack count.
    pub num_racks: u32,
}

impl GroupAssignment {
    pub fn group_of(&self, port_id: &str) -> Option<PortGroup> {
        self.assignments.get(port_id).copied()
    }

    pub fn num_ports(&self) -> usize {
        self.assignments.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, PortGroup)> {
        self.assignments.iter().map(|(id, &g)| (id.as_str(), g))
    }

    /// Port and rack totals per group, in fixed group order.
    pub fn summary(&self, records: &[PortRecord]) -> Vec<GroupSummary> {
        PortGroup::ALL
            .iter()
            .map(|&group| {
                let mut num_ports = 0;
                let mut num_racks = 0;
                for record in records {
                    if self.group_of(&record.port_id) == Some(group) {
                        num_ports += 1;
                        num_racks += record.rack_count.unwrap_or(0);
                    }
                }
                GroupSummary {
                    group,
                    num_ports,
                    num_racks,
                }
            })
            .collect()
    }
}

/// Whether a date counts as a working weekday.
pub fn is_weekday(date: NaiveDate, holidays: &[NaiveDate]) -> bool {
    !matches!(date.weekday(), Weekday::Sat | Weekday::Sun) && !holidays.contains(&date)
}

/// Per-port mean weekday 9:00 − 7:00 count change.
fn mean_morning_delta(record: &PortRecord, holidays: &[NaiveDate]) -> Result<f64> {
    let mut total = 0.0;
    let mut days = 0usize;
    for (day, &date) in record.dates.iter().enumerate() {
        if is_weekday(date, holidays) {
            total +=
                record.counts[day][HOUR_9_INDEX] as f64 - record.counts[day][HOUR_7_INDEX] as f64;
            days += 1;
        }
    }
    if days == 0 {
        return Err(Error::Data(format!(
            "port {} has no weekday observations to classify",
            record.port_id
        )));
    }
    Ok(total / days as f64)
}

/// Assigns every record to a group by its morning commute signature.
pub fn classify_ports(records: &[PortRecord], holidays: &[NaiveDate]) -> Result<GroupAssignment> {
    let mut assignments = BTreeMap::new();
    for record in records {
        let delta = mean_morning_delta(record, holidays)?;
        let group = if delta <= -CLASSIFY_THRESHOLD {
            PortGroup::Residential
        } else if delta >= CLASSIFY_THRESHOLD {
            PortGroup::Office
        } else {
            PortGroup::Others
        };
        assignments.insert(record.port_id.clone(), group);
    }
    Ok(GroupAssignment { assignments })
}

/// Copies of the records restricted to working weekdays.
pub fn filter_weekdays(records: &[PortRecord], holidays: &[NaiveDate]) -> Vec<PortRecord> {
    records
        .iter()
        .map(|record| {
            let keep: Vec<usize> = (0..record.num_days())
                .filter(|&d| is_weekday(record.dates[d], holidays))
                .collect();
            PortRecord {
                port_id: record.port_id.clone(),
                rack_count: record.rack_count,
                dates: keep.iter().map(|&d| record.dates[d]).collect(),
                counts: keep.iter().map(|&d| record.counts[d].clone()).collect(),
            }
        })
        .collect()
}

/// Sums counts per group into a panel (groups as ports, dates as days).
///
/// Groups with no member port are omitted. All records must cover the same
/// dates and be covered by the assignment.
pub fn aggregate_groups(records: &[PortRecord], assignment: &GroupAssignment) -> Result<Panel> {
    let Some(first) = records.first() else {
        return Err(Error::Data("no records to aggregate".into()));
    };
    let dates = &first.dates;
    for record in records {
        if &record.dates != dates {
            return Err(Error::Data(format!(
                "port {} covers different dates than port {}; aggregate needs aligned days",
                record.port_id, first.port_id
            )));
        }
        if assignment.group_of(&record.port_id).is_none() {
            return Err(Error::Data(format!(
                "port {} is missing from the group assignment",
                record.port_id
            )));
        }
    }

    let groups: Vec<PortGroup> = PortGroup::ALL
        .into_iter()
        .filter(|&g| records.iter().any(|r| assignment.group_of(&r.port_id) == Some(g)))
        .collect();
    let num_days = dates.len();
    let mut values = vec![0.0; num_days * groups.len() * GRID_HOURS];
    for record in records {
        let group = assignment.group_of(&record.port_id).unwrap();
        let port = groups.iter().position(|&g| g == group).unwrap();
        for day in 0..num_days {
            for t in 0..GRID_HOURS {
                values[(day * groups.len() + port) * GRID_HOURS + t] +=
                    record.counts[day][t] as f64;
            }
        }
    }

    Panel::new(
        groups.iter().map(|g| g.to_string()).collect(),
        dates.iter().map(|d| d.format("%Y-%m-%d").to_string()).collect(),
        GRID_HOURS,
        values,
    )
}

/// A per-port panel (ports as series, ISO dates as day labels), without any
/// grouping. All records must cover the same dates.
pub fn port_panel(records: &[PortRecord]) -> Result<Panel> {
    let Some(first) = records.first() else {
        return Err(Error::Data("no records to panel".into()));
    };
    let dates = &first.dates;
    for record in records {
        if &record.dates != dates {
            return Err(Error::Data(format!(
                "port {} covers different dates than port {}; a panel needs aligned days",
                record.port_id, first.port_id
            )));
        }
    }
    let mut values = Vec::with_capacity(dates.len() * records.len() * GRID_HOURS);
    for day in 0..dates.len() {
        for record in records {
            values.extend(record.counts[day].iter().map(|&c| c as f64));
        }
    }
    Panel::new(
        records.iter().map(|r| r.port_id.clone()).collect(),
        dates.iter().map(|d| d.format("%Y-%m-%d").to_string()).collect(),
        GRID_HOURS,
        values,
    )
}

/// Sums a per-port panel's series by group, preserving day labels. Unlike
/// [`aggregate_groups`] this works on real-valued panels, so it can aggregate
/// demand-adjusted series that dip below zero.
pub fn aggregate_panel(panel: &Panel, assignment: &GroupAssignment) -> Result<Panel> {
    let memberships: Vec<PortGroup> = panel
        .port_names()
        .iter()
        .map(|id| {
            assignment
                .group_of(id)
                .ok_or_else(|| Error::Data(format!("port {id} is missing from the group assignment")))
        })
        .collect::<Result<_>>()?;
    let groups: Vec<PortGroup> = PortGroup::ALL
        .into_iter()
        .filter(|g| memberships.contains(g))
        .collect();
    let mut values = vec![0.0; panel.num_days() * groups.len() * panel.num_times()];
    for day in 0..panel.num_days() {
        for (port, &group) in memberships.iter().enumerate() {
            let g = groups.iter().position(|&x| x == group).unwrap();
            for t in 0..panel.num_times() {
                values[(day * groups.len() + g) * panel.num_times() + t] +=
                    panel.get(day, port, t);
            }
        }
    }
    Panel::new(
        groups.iter().map(|g| g.to_string()).collect(),
        panel.day_labels().to_vec(),
        panel.num_times(),
        values,
    )
}
