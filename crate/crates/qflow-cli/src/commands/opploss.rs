//! `qflow opploss`: replay each port-day against a demand rate to impute
//! rentals lost while the port sat empty, and emit demand-adjusted series.

use std::path::{Path, PathBuf};

use clap::Args;
use qflow::data::{aggregate_panel, classify_ports, filter_weekdays, load_counts, port_panel,
    GRID_START_HOUR};
use qflow::encode::Panel;
use qflow::scenario::{adjust_panel, estimate_panel_losses, mean_demand_rates, OppLossResult};
use qflow::{Error, Result};

use super::{read_holidays, write_text};
use crate::config::{resolve_required, show_path, ConfigEcho, ConfigMap};
use crate::panel_csv;

const KEYS: &[&str] = &[
    "counts",
    "rates",
    "holidays",
    "weekdays-only",
    "out-losses",
    "out-adjusted",
    "out-panel",
];

#[derive(Debug, Args)]
pub struct OpplossArgs {
    /// Input hourly count CSV.
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Demand-rate CSV (port_id,hour,rate): rentals per hour during [hour, hour+1).
    /// Unlisted intervals default to 0. Without this flag, each port's mean
    /// observed rental rate per interval is used.
    #[arg(long)]
    rates: Option<PathBuf>,
    /// File of holiday dates to exclude with --weekdays-only.
    #[arg(long)]
    holidays: Option<PathBuf>,
    /// Analyze weekday days only.
    #[arg(long)]
    weekdays_only: bool,
    /// Destination per-port loss table.
    #[arg(long)]
    out_losses: Option<PathBuf>,
    /// Destination demand-adjusted per-port panel CSV.
    #[arg(long)]
    out_adjusted: Option<PathBuf>,
    /// Destination demand-adjusted per-group panel CSV.
    #[arg(long)]
    out_panel: Option<PathBuf>,
    /// JSON config file; keys mirror the long flag names.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run(args: &OpplossArgs) -> Result<()> {
    let file = ConfigMap::load(args.config.as_deref(), KEYS)?;
    let counts_path = resolve_required(args.counts.clone(), file.get_path("counts")?, "counts")?;
    let rates_path = args.rates.clone().or(file.get_path("rates")?);
    let holidays_path = args.holidays.clone().or(file.get_path("holidays")?);
    let weekdays_only = args.weekdays_only || file.get_bool("weekdays-only")?.unwrap_or(false);
    let out_losses = args.out_losses.clone().or(file.get_path("out-losses")?);
    let out_adjusted = args.out_adjusted.clone().or(file.get_path("out-adjusted")?);
    let out_panel = args.out_panel.clone().or(file.get_path("out-panel")?);
    if out_losses.is_none() && out_adjusted.is_none() && out_panel.is_none() {
        return Err(Error::Config(
            "nothing to write: give --out-losses, --out-adjusted and/or --out-panel".into(),
        ));
    }

    let mut echo = ConfigEcho::new();
    echo.add("counts", show_path(&counts_path));
    echo.add_opt("rates", rates_path.as_deref().map(show_path));
    echo.add_opt("holidays", holidays_path.as_deref().map(show_path));
    echo.add("weekdays-only", weekdays_only);
    echo.add_opt("out-losses", out_losses.as_deref().map(show_path));
    echo.add_opt("out-adjusted", out_adjusted.as_deref().map(show_path));
    echo.add_opt("out-panel", out_panel.as_deref().map(show_path));
    echo.print("opploss");

    let holidays = read_holidays(holidays_path.as_deref())?;
    let loaded = load_counts(&counts_path)?;
    for warning in &loaded.warnings {
        eprintln!("warning: {warning}");
    }
    let records = if weekdays_only {
        filter_weekdays(&loaded.records, &holidays)
    } else {
        loaded.records.clone()
    };
    let panel = port_panel(&records)?;

    let rates = match &rates_path {
        Some(path) => read_rates(path, &panel)?,
        None => {
            eprintln!(
                "warning: no --rates given; using each port's mean observed rental rate per hour"
            );
            mean_demand_rates(&panel)
        }
    };

    let results = estimate_panel_losses(&panel, &rates)?;
    let total: u32 = results
        .iter()
        .flatten()
        .map(OppLossResult::total_losses)
        .sum();
    println!(
        "total opportunity losses: {total} over {} ports x {} days",
        panel.num_ports(),
        panel.num_days()
    );

    if let Some(path) = &out_losses {
        let mut text = echo.header_comments("opploss");
        text.push_str(&format!("# total-losses: {total}\n"));
        text.push_str("port_id,day,t,hour,losses\n");
        for (day, per_port) in results.iter().enumerate() {
            for (port, result) in per_port.iter().enumerate() {
                for (t, &losses) in result.losses_per_interval.iter().enumerate() {
                    if losses > 0 {
                        text.push_str(&format!(
                            "{},{},{t},{},{losses}\n",
                            panel.port_names()[port],
                            panel.day_labels()[day],
                            GRID_START_HOUR as usize + t,
                        ));
                    }
                }
            }
        }
        write_text(path, &text)?;
    }

    if out_adjusted.is_some() || out_panel.is_some() {
        let adjusted = adjust_panel(&panel, &results)?;
        if let Some(path) = &out_adjusted {
            panel_csv::write_panel(&adjusted, &echo.header_comments("opploss"), path)?;
        }
        if let Some(path) = &out_panel {
            let assignment = classify_ports(&loaded.records, &holidays)?;
            let groups = aggregate_panel(&adjusted, &assignment)?;
            panel_csv::write_panel(&groups, &echo.header_comments("opploss"), path)?;
        }
    }
    Ok(())
}

/// Parses a demand-rate table into a dense `[port][interval]` matrix.
fn read_rates(path: &Path, panel: &Panel) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let source = path.display().to_string();
    let num_intervals = panel.num_times() - 1;
    let mut rates = vec![vec![0.0; num_intervals]; panel.num_ports()];

    let mut saw_header = false;
    for (idx, line) in text.lines().enumerate() {
        let line_no = (idx + 1) as u64;
        let parse_err = |message: String| Error::Parse {
            path: source.clone(),
            line: line_no,
            message,
        };
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if line.trim() != "port_id,hour,rate" {
                return Err(parse_err(format!(
                    "expected header \"port_id,hour,rate\", found {line:?}"
                )));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 fields, found {}", fields.len())));
        }
        let port_id = fields[0].trim();
        let port = panel
            .port_names()
            .iter()
            .position(|name| name == port_id)
            .ok_or_else(|| parse_err(format!("unknown port {port_id:?}")))?;
        let hour: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("hour {:?} is not an integer", fields[1])))?;
        let first = GRID_START_HOUR as usize;
        if hour < first || hour >= first + num_intervals {
            return Err(parse_err(format!(
                "hour {hour} outside the rate grid {first}..{}",
                first + num_intervals - 1
            )));
        }
        let rate: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("rate {:?} is not a number", fields[2])))?;
        rates[port][hour - first] = rate;
    }
    if !saw_header {
        return Err(Error::Data(format!("{source} contains no rate rows")));
    }
    Ok(rates)
}
