//! One module per subcommand. Each `run` resolves its settings from flags,
//! an optional config file, and built-in defaults, echoes the resolved
//! configuration, and writes plain tabular outputs whose headers repeat that
//! configuration, so any run can be reproduced from its artifacts alone.

pub mod ingest;
pub mod opploss;
pub mod sample;
pub mod simulate;
pub mod synth;
pub mod train;

use std::path::Path;

use chrono::NaiveDate;
use qflow::{Error, Result};

/// Writes a finished tabular output, naming the destination on failure.
fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
}

/// Reads a holiday list: one YYYY-MM-DD date per line, `#` comments and
/// blank lines allowed. No file means no holidays.
fn read_holidays(path: Option<&Path>) -> Result<Vec<NaiveDate>> {
    let Some(path) = path else {
        return Ok(Vec::new());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut dates = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let date = line.parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: (idx + 1) as u64,
            message: format!("{line:?} is not a YYYY-MM-DD date"),
        })?;
        dates.push(date);
    }
    Ok(dates)
}

/// Renders an optional value, leaving the field blank when undefined.
fn blank_when_none(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}
