//! On-disk panel format: one row per (series, day, hour) with a real-valued
//! column, so the same file carries raw group counts and demand-adjusted
//! (possibly negative) series. Lines starting with `#` are header comments
//! and are ignored on read.

use std::path::Path;

use qflow::data::GRID_START_HOUR;
use qflow::encode::Panel;
use qflow::{Error, Result};

pub const PANEL_HEADER: &str = "series,day,hour,value";

/// Renders a panel with the given comment block (may be empty).
pub fn render_panel(panel: &Panel, comments: &str) -> String {
    let mut out = String::from(comments);
    out.push_str(PANEL_HEADER);
    out.push('\n');
    for (port, series) in panel.port_names().iter().enumerate() {
        for (day, label) in panel.day_labels().iter().enumerate() {
            for t in 0..panel.num_times() {
                let hour = GRID_START_HOUR as usize + t;
                let value = panel.get(day, port, t);
                out.push_str(&format!("{series},{label},{hour},{value}\n"));
            }
        }
    }
    out
}

pub fn write_panel(panel: &Panel, comments: &str, path: &Path) -> Result<()> {
    std::fs::write(path, render_panel(panel, comments))
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
}

/// Parses a panel file, preserving the series and day order of first
/// appearance. Every (series, day) pair must cover the same contiguous hour
/// range.
pub fn read_panel(text: &str, source: &str) -> Result<Panel> {
    let mut series_order: Vec<String> = Vec::new();
    let mut day_order: Vec<String> = Vec::new();
    let mut rows: Vec<(usize, usize, usize, f64)> = Vec::new();
    let mut min_hour = usize::MAX;
    let mut max_hour = 0usize;

    let mut saw_header = false;
    for (idx, line) in text.lines().enumerate() {
        let line_no = (idx + 1) as u64;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if line.trim() != PANEL_HEADER {
                return Err(Error::Parse {
                    path: source.to_string(),
                    line: line_no,
                    message: format!("expected header {PANEL_HEADER:?}, found {line:?}"),
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                path: source.to_string(),
                line: line_no,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let series = fields[0].trim();
        let day = fields[1].trim();
        let hour: usize = fields[2].trim().parse().map_err(|_| Error::Parse {
            path: source.to_string(),
            line: line_no,
            message: format!("hour {:?} is not an integer", fields[2]),
        })?;
        let value: f64 = fields[3].trim().parse().map_err(|_| Error::Parse {
            path: source.to_string(),
            line: line_no,
            message: format!("value {:?} is not a number", fields[3]),
        })?;
        let s = position_or_push(&mut series_order, series);
        let d = position_or_push(&mut day_order, day);
        min_hour = min_hour.min(hour);
        max_hour = max_hour.max(hour);
        rows.push((s, d, hour, value));
    }
    if !saw_header || rows.is_empty() {
        return Err(Error::Data(format!("{source} contains no panel rows")));
    }

    let num_times = max_hour - min_hour + 1;
    let mut values = vec![f64::NAN; series_order.len() * day_order.len() * num_times];
    let mut filled = vec![false; values.len()];
    for (s, d, hour, value) in rows {
        let t = hour - min_hour;
        let idx = (d * series_order.len() + s) * num_times + t;
        if filled[idx] {
            return Err(Error::Data(format!(
                "{source}: duplicate entry for {} on {} at hour {hour}",
                series_order[s], day_order[d]
            )));
        }
        filled[idx] = true;
        values[idx] = value;
    }
    if let Some(missing) = filled.iter().position(|&f| !f) {
        let t = missing % num_times;
        let s = (missing / num_times) % series_order.len();
        let d = missing / (num_times * series_order.len());
        return Err(Error::Data(format!(
            "{source}: missing entry for {} on {} at hour {}",
            series_order[s],
            day_order[d],
            min_hour + t
        )));
    }
    Panel::new(series_order, day_order, num_times, values)
}

pub fn load_panel(path: &Path) -> Result<Panel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    read_panel(&text, &path.display().to_string())
}

fn position_or_push(order: &mut Vec<String>, name: &str) -> usize {
    match order.iter().position(|existing| existing == name) {
        Some(pos) => pos,
        None => {
            order.push(name.to_string());
            order.len() - 1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_panel() -> Panel {
        Panel::new(
            vec!["Residential".into(), "Office".into()],
            vec!["2024-04-01".into(), "2024-04-02".into()],
            3,
            vec![5.0, 4.5, -1.25, 8.0, 9.0, 10.0, 6.0, 5.0, 4.0, 7.0, 8.0, 9.5],
        )
        .unwrap()
    }

    #[test]
    fn panels_round_trip_exactly() {
        let panel = sample_panel();
        let text = render_panel(&panel, "# qflow test\n");
        let back = read_panel(&text, "test").unwrap();
        assert_eq!(back.port_names(), panel.port_names());
        assert_eq!(back.day_labels(), panel.day_labels());
        for day in 0..2 {
            for port in 0..2 {
                for t in 0..3 {
                    assert_eq!(back.get(day, port, t), panel.get(day, port, t));
                }
            }
        }
    }

    #[test]
    fn order_of_first_appearance_is_preserved() {
        let text = "series,day,hour,value\nB,d1,6,1\nA,d1,6,2\nB,d1,7,3\nA,d1,7,4\n";
        let panel = read_panel(text, "test").unwrap();
        assert_eq!(panel.port_names(), ["B", "A"]);
        assert_eq!(panel.get(0, 0, 0), 1.0);
        assert_eq!(panel.get(0, 1, 1), 4.0);
    }

    #[test]
    fn holes_and_duplicates_are_rejected() {
        let text = "series,day,hour,value\nA,d1,6,1\nA,d1,8,3\n";
        let err = read_panel(text, "test").unwrap_err();
        assert!(err.to_string().contains("missing entry"), "{err}");

        let text = "series,day,hour,value\nA,d1,6,1\nA,d1,6,2\n";
        let err = read_panel(text, "test").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn header_and_field_errors_name_the_line() {
        let err = read_panel("wrong,header\n", "p.csv").unwrap_err();
        assert!(err.to_string().contains("p.csv:1:"), "{err}");

        let text = "series,day,hour,value\nA,d1,six,1\n";
        let err = read_panel(text, "p.csv").unwrap_err();
        assert!(err.to_string().contains("p.csv:2:"), "{err}");
    }
}
