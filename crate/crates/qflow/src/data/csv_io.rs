//! Reading and writing hourly count records in the `CountCsv` layout.
//!
//! The file is a plain CSV with header `port_id,date,hour,count` and an
//! optional trailing `rack_count` column. Hours are 24h local time; only the
//! operating grid 6:00–22:00 is loaded, giving 17 samples per (port, day).
//! Rows outside that window are skipped. Every (port, day) present in the
//! file must cover the full grid.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;

use crate::{Error, Result};

/// First hour of the daily grid (6:00).
pub const GRID_START_HOUR: u32 = 6;
/// Last hour of the daily grid (22:00), inclusive.
pub const GRID_END_HOUR: u32 = 22;
/// Number of hourly grid points per day.
pub const GRID_HOURS: usize = (GRID_END_HOUR - GRID_START_HOUR + 1) as usize;

const DATE_FORMAT: &str = "%Y-%m-%d";

/// One port's full count history on the hourly grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortRecord {
    pub port_id: String,
    /// Rack capacity when the file provides one.
    pub rack_count: Option<u32>,
    /// Observed days, ascending.
    pub dates: Vec<NaiveDate>,
    /// Counts per `[day][grid hour]`, aligned with `dates`.
    pub counts: Vec<Vec<u32>>,
}

impl PortRecord {
    pub fn num_days(&self) -> usize {
        self.dates.len()
    }

    /// Count at a day index and grid position (0 ↔ 6:00).
    pub fn count(&self, day: usize, grid_index: usize) -> u32 {
        self.counts[day][grid_index]
    }
}

/// A parsed count file: records sorted by port id, plus non-fatal findings.
#[derive(Debug, Clone, Default)]
pub struct CountCsv {
    pub records: Vec<PortRecord>,
    /// Human-readable notes (e.g. counts exceeding rack capacity), which are
    /// reported but do not fail the load.
    pub warnings: Vec<String>,
}

/// Loads a count file from disk.
pub fn load_counts(path: &Path) -> Result<CountCsv> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    read_counts(&text, &path.display().to_string())
}

/// Parses count CSV text; `source` labels error locations.
pub fn read_counts(text: &str, source: &str) -> Result<CountCsv> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, format!("unreadable header: {e}")))?
        .clone();
    let expected = ["port_id", "date", "hour", "count"];
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    if names.len() < expected.len() || names[..4] != expected {
        return Err(parse_err(
            1,
            format!(
                "header must start with `port_id,date,hour,count`, got `{}`",
                names.join(",")
            ),
        ));
    }
    let has_rack = match names.len() {
        4 => false,
        5 if names[4] == "rack_count" => true,
        _ => {
            return Err(parse_err(
                1,
                format!("unexpected trailing columns after `count`: `{}`", names[4..].join(",")),
            ))
        }
    };

    // (port → day → partially filled grid), plus rack bookkeeping.
    let mut grids: BTreeMap<String, BTreeMap<NaiveDate, Vec<Option<u32>>>> = BTreeMap::new();
    let mut racks: BTreeMap<String, (u32, u64)> = BTreeMap::new();
    let mut warnings = Vec::new();

    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, csv::Position::line);
            parse_err(line, format!("malformed row: {e}"))
        })?;
        let line = row.position().map_or(0, csv::Position::line);
        let field = |i: usize| row.get(i).unwrap_or("").trim();

        if row.len() < 4 || (0..4).any(|i| field(i).is_empty()) {
            return Err(parse_err(
                line,
                "row needs non-empty port_id, date, hour, and count".into(),
            ));
        }
        let port_id = field(0).to_string();
        let date = NaiveDate::parse_from_str(field(1), DATE_FORMAT)
            .map_err(|e| parse_err(line, format!("bad date `{}`: {e}", field(1))))?;
        let hour: u32 = field(2)
            .parse()
            .map_err(|_| parse_err(line, format!("bad hour `{}`", field(2))))?;
        let count: u32 = field(3)
            .parse()
            .map_err(|_| parse_err(line, format!("non-integer count `{}`", field(3))))?;
        let rack: Option<u32> = match row.get(4).map(str::trim) {
            Some("") | None => None,
            Some(raw) if has_rack => Some(
                raw.parse()
                    .map_err(|_| parse_err(line, format!("non-integer rack_count `{raw}`")))?,
            ),
            Some(raw) => {
                return Err(parse_err(line, format!("unexpected extra field `{raw}`")));
            }
        };

        if let Some(r) = rack {
            match racks.get(&port_id) {
                Some(&(prev, prev_line)) if prev != r => {
                    return Err(parse_err(
                        line,
                        format!(
                            "rack_count {r} for port {port_id} conflicts with {prev} on line {prev_line}"
                        ),
                    ));
                }
                Some(_) => {}
                None => {
                    racks.insert(port_id.clone(), (r, line));
                }
            }
            if count > r {
                warnings.push(format!(
                    "{source}:{line}: port {port_id} {date} hour {hour}: count {count} exceeds rack capacity {r}"
                ));
            }
        }

        if !(GRID_START_HOUR..=GRID_END_HOUR).contains(&hour) {
            continue;
        }
        let slot = &mut grids
            .entry(port_id.clone())
            .or_default()
            .entry(date)
            .or_insert_with(|| vec![None; GRID_HOURS])[(hour - GRID_START_HOUR) as usize];
        if slot.is_some() {
            return Err(parse_err(
                line,
                format!("duplicate entry for port {port_id}, {date}, hour {hour}"),
            ));
        }
        *slot = Some(count);
    }

    let mut records = Vec::with_capacity(grids.len());
    for (port_id, days) in grids {
        let mut dates = Vec::with_capacity(days.len());
        let mut counts = Vec::with_capacity(days.len());
        for (date, grid) in days {
            if let Some(missing) = grid.iter().position(Option::is_none) {
                return Err(Error::Data(format!(
                    "{source}: port {port_id} on {date} is missing hour {}",
                    GRID_START_HOUR + missing as u32
                )));
            }
            dates.push(date);
            counts.push(grid.into_iter().map(Option::unwrap).collect());
        }
        let rack_count = racks.get(&port_id).map(|&(r, _)| r);
        records.push(PortRecord {
            port_id,
            rack_count,
            dates,
            counts,
        });
    }

    Ok(CountCsv { records, warnings })
}

/// Writes records in the same layout `load_counts` reads.
pub fn write_counts(path: &Path, records: &[PortRecord]) -> Result<()> {
    let mut out = String::new();
    render_counts(&mut out, records);
    std::fs::write(path, out)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Renders records as CountCsv text (stable row order: port, date, hour).
pub fn render_counts(out: &mut String, records: &[PortRecord]) {
    out.push_str("port_id,date,hour,count,rack_count\n");
    for record in records {
        let rack = record
            .rack_count
            .map(|r| r.to_string())
            .unwrap_or_default();
        for (day, date) in record.dates.iter().enumerate() {
            for (i, count) in record.counts[day].iter().enumerate() {
                let hour = GRID_START_HOUR + i as u32;
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    record.port_id,
                    date.format(DATE_FORMAT),
                    hour,
                    count,
                    rack
                ));
            }
        }
    }
}

/// `write_counts` convenience for arbitrary writers.
pub fn write_counts_to(writer: &mut impl Write, records: &[PortRecord]) -> Result<()> {
    let mut out = String::new();
    render_counts(&mut out, records);
    writer.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, DATE_FORMAT).unwrap()
    }

    fn sample_records() -> Vec<PortRecord> {
        let mk = |port: &str, rack, base: u32| PortRecord {
            port_id: port.to_string(),
            rack_count: rack,
            dates: vec![date("2024-04-01"), date("2024-04-02")],
            counts: (0..2)
                .map(|d| (0..GRID_HOURS as u32).map(|h| base + d + h % 3).collect())
                .collect(),
        };
        vec![mk("A01", Some(9), 2), mk("B07", None, 5)]
    }

    #[test]
    fn writer_and_loader_round_trip() {
        let records = sample_records();
        let mut text = String::new();
        render_counts(&mut text, &records);
        let loaded = read_counts(&text, "mem").unwrap();
        assert_eq!(loaded.records, records);
        assert!(loaded.warnings.is_empty());
    }

    #[test]
    fn empty_body_yields_no_records() {
        let loaded = read_counts("port_id,date,hour,count\n", "mem").unwrap();
        assert!(loaded.records.is_empty());
    }

    #[test]
    fn four_column_files_load_without_racks() {
        let mut text = String::from("port_id,date,hour,count\n");
        for h in GRID_START_HOUR..=GRID_END_HOUR {
            text.push_str(&format!("P,2024-04-01,{h},3\n"));
        }
        let loaded = read_counts(&text, "mem").unwrap();
        assert_eq!(loaded.records.len(), 1);
        assert_eq!(loaded.records[0].rack_count, None);
        assert_eq!(loaded.records[0].counts[0], vec![3; GRID_HOURS]);
    }

    #[test]
    fn non_integer_count_names_the_line() {
        let text = "port_id,date,hour,count\nP,2024-04-01,6,3\nP,2024-04-01,7,abc\n";
        match read_counts(text, "mem") {
            Err(Error::Parse { path, line, message }) => {
                assert_eq!(path, "mem");
                assert_eq!(line, 3);
                assert!(message.contains("non-integer count"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_cell_names_the_line() {
        let text = "port_id,date,hour,count\nP,2024-04-01,6,3\nP,2024-04-01,6,4\n";
        match read_counts(text, "mem") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("duplicate"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_header_is_rejected() {
        let err = read_counts("port,day,hour,count\n", "mem").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn incomplete_grid_names_port_day_and_hour() {
        let mut text = String::from("port_id,date,hour,count\n");
        for h in GRID_START_HOUR..=GRID_END_HOUR {
            if h != 13 {
                text.push_str(&format!("P,2024-04-01,{h},3\n"));
            }
        }
        match read_counts(&text, "mem") {
            Err(Error::Data(message)) => {
                assert!(message.contains("P") && message.contains("2024-04-01"), "{message}");
                assert!(message.contains("hour 13"), "{message}");
            }
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_grid_hours_are_skipped() {
        let mut text = String::from("port_id,date,hour,count\nP,2024-04-01,3,1\n");
        for h in GRID_START_HOUR..=GRID_END_HOUR {
            text.push_str(&format!("P,2024-04-01,{h},3\n"));
        }
        text.push_str("P,2024-04-01,23,1\n");
        let loaded = read_counts(&text, "mem").unwrap();
        assert_eq!(loaded.records[0].counts[0].len(), GRID_HOURS);
    }

    #[test]
    fn rack_violations_warn_but_load() {
        let mut text = String::from("port_id,date,hour,count,rack_count\n");
        for h in GRID_START_HOUR..=GRID_END_HOUR {
            let count = if h == 9 { 12 } else { 3 };
            text.push_str(&format!("P,2024-04-01,{h},{count},9\n"));
        }
        let loaded = read_counts(&text, "mem").unwrap();
        assert_eq!(loaded.records.len(), 1);
        assert_eq!(loaded.warnings.len(), 1);
        assert!(loaded.warnings[0].contains("exceeds rack capacity 9"));
    }

    #[test]
    fn conflicting_rack_counts_are_rejected() {
        let text = "port_id,date,hour,count,rack_count\nP,2024-04-01,6,3,9\nP,2024-04-01,7,3,8\n";
        match read_counts(text, "mem") {
            Err(Error::Parse { line: 3, message, .. }) => {
                assert!(message.contains("conflicts"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_error_names_the_path() {
        let err = load_counts(Path::new("/nonexistent/counts.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/counts.csv"), "{err}");
    }
}
