//! `qflow ingest`: classify ports into groups and aggregate their counts
//! into the panel the model trains on.

use std::path::PathBuf;

use clap::Args;
use qflow::data::{
    aggregate_groups, classify_ports, filter_weekdays, load_counts, GroupAssignment, GroupSummary,
};
use qflow::{Error, Result};

use super::{read_holidays, write_text};
use crate::config::{resolve_required, show_path, ConfigEcho, ConfigMap};
use crate::panel_csv;

const KEYS: &[&str] = &["counts", "out-panel", "out-groups", "holidays", "weekdays-only"];

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Input hourly count CSV (port_id,date,hour,count[,rack_count]).
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Destination CSV of per-group hourly totals.
    #[arg(long)]
    out_panel: Option<PathBuf>,
    /// Destination CSV of per-port group assignments, with a summary header.
    #[arg(long)]
    out_groups: Option<PathBuf>,
    /// File of holiday dates to treat as non-working days (one per line).
    #[arg(long)]
    holidays: Option<PathBuf>,
    /// Drop weekend and holiday days from the aggregated panel.
    #[arg(long)]
    weekdays_only: bool,
    /// JSON config file; keys mirror the long flag names.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run(args: &IngestArgs) -> Result<()> {
    let file = ConfigMap::load(args.config.as_deref(), KEYS)?;
    let counts_path = resolve_required(args.counts.clone(), file.get_path("counts")?, "counts")?;
    let out_panel = args.out_panel.clone().or(file.get_path("out-panel")?);
    let out_groups = args.out_groups.clone().or(file.get_path("out-groups")?);
    let holidays_path = args.holidays.clone().or(file.get_path("holidays")?);
    let weekdays_only = args.weekdays_only || file.get_bool("weekdays-only")?.unwrap_or(false);
    if out_panel.is_none() && out_groups.is_none() {
        return Err(Error::Config(
            "nothing to write: give --out-panel and/or --out-groups".into(),
        ));
    }

    let mut echo = ConfigEcho::new();
    echo.add("counts", show_path(&counts_path));
    echo.add_opt("out-panel", out_panel.as_deref().map(show_path));
    echo.add_opt("out-groups", out_groups.as_deref().map(show_path));
    echo.add_opt("holidays", holidays_path.as_deref().map(show_path));
    echo.add("weekdays-only", weekdays_only);
    echo.print("ingest");

    let holidays = read_holidays(holidays_path.as_deref())?;
    let loaded = load_counts(&counts_path)?;
    for warning in &loaded.warnings {
        eprintln!("warning: {warning}");
    }

    let assignment = classify_ports(&loaded.records, &holidays)?;
    let summaries = assignment.summary(&loaded.records);
    println!("classification summary:");
    for line in summary_lines(&summaries) {
        println!("  {line}");
    }

    if let Some(path) = &out_groups {
        let mut text = echo.header_comments("ingest");
        for line in summary_lines(&summaries) {
            text.push_str(&format!("# {line}\n"));
        }
        text.push_str(&render_assignments(&assignment));
        write_text(path, &text)?;
    }

    if let Some(path) = &out_panel {
        let records = if weekdays_only {
            filter_weekdays(&loaded.records, &holidays)
        } else {
            loaded.records.clone()
        };
        let panel = aggregate_groups(&records, &assignment)?;
        panel_csv::write_panel(&panel, &echo.header_comments("ingest"), path)?;
        println!(
            "panel: {} series x {} days written to {}",
            panel.num_ports(),
            panel.num_days(),
            show_path(path)
        );
    }
    Ok(())
}

/// The per-group port and rack totals, with percentage shares.
fn summary_lines(summaries: &[GroupSummary]) -> Vec<String> {
    let total_ports: usize = summaries.iter().map(|s| s.num_ports).sum();
    let total_racks: u32 = summaries.iter().map(|s| s.num_racks).sum();
    let pct = |part: f64, whole: f64| if whole > 0.0 { 100.0 * part / whole } else { 0.0 };
    let mut lines = vec!["group,ports,ports_pct,racks,racks_pct".to_string()];
    for s in summaries {
        lines.push(format!(
            "{},{},{:.1},{},{:.1}",
            s.group,
            s.num_ports,
            pct(s.num_ports as f64, total_ports as f64),
            s.num_racks,
            pct(s.num_racks as f64, total_racks as f64),
        ));
    }
    lines.push(format!(
        "total,{},{:.1},{},{:.1}",
        total_ports,
        pct(total_ports as f64, total_ports as f64),
        total_racks,
        pct(total_racks as f64, total_racks as f64),
    ));
    lines
}

fn render_assignments(assignment: &GroupAssignment) -> String {
    let mut text = String::from("port_id,group\n");
    for (port_id, group) in assignment.iter() {
        text.push_str(&format!("{port_id},{group}\n"));
    }
    text
}
