//! `qflow synth`: fabricate a commuter-pattern count file.

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::Args;
use qflow::data::{synth_generate, write_counts, SynthSpec};
use qflow::Result;

use crate::config::{resolve, resolve_required, show_path, ConfigEcho, ConfigMap};

const KEYS: &[&str] = &[
    "out",
    "seed",
    "days",
    "start-date",
    "noise",
    "morning-flow",
    "residential-ports",
    "office-ports",
    "others-ports",
    "residential-racks",
    "office-racks",
    "others-racks",
];

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Destination count CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Generator seed [default: 7].
    #[arg(long)]
    seed: Option<u64>,
    /// Number of weekdays to generate [default: 21].
    #[arg(long)]
    days: Option<usize>,
    /// First calendar date, YYYY-MM-DD; weekends are skipped [default: 2024-04-01].
    #[arg(long)]
    start_date: Option<NaiveDate>,
    /// Demand noise scale; 0 gives a fully deterministic pattern [default: 1].
    #[arg(long)]
    noise: Option<f64>,
    /// Morning rentals per residential port per flow hour [default: 2.5].
    #[arg(long)]
    morning_flow: Option<f64>,
    /// Residential ports [default: 50].
    #[arg(long)]
    residential_ports: Option<usize>,
    /// Office ports [default: 36].
    #[arg(long)]
    office_ports: Option<usize>,
    /// Other ports [default: 48].
    #[arg(long)]
    others_ports: Option<usize>,
    /// Total residential racks [default: 453].
    #[arg(long)]
    residential_racks: Option<u32>,
    /// Total office racks [default: 391].
    #[arg(long)]
    office_racks: Option<u32>,
    /// Total other racks [default: 431].
    #[arg(long)]
    others_racks: Option<u32>,
    /// JSON config file; keys mirror the long flag names.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let file = ConfigMap::load(args.config.as_deref(), KEYS)?;
    let defaults = SynthSpec::default();
    let out = resolve_required(args.out.clone(), file.get_path("out")?, "out")?;
    let seed = resolve(args.seed, file.get_u64("seed")?, 7);
    let start_date = match (args.start_date, file.get_string("start-date")?) {
        (Some(date), _) => date,
        (None, Some(text)) => text.parse().map_err(|_| {
            qflow::Error::Config(format!("config key \"start-date\": {text:?} is not a date"))
        })?,
        (None, None) => defaults.start_date,
    };
    let spec = SynthSpec {
        residential_ports: resolve(
            args.residential_ports,
            file.get_usize("residential-ports")?,
            defaults.residential_ports,
        ),
        office_ports: resolve(
            args.office_ports,
            file.get_usize("office-ports")?,
            defaults.office_ports,
        ),
        others_ports: resolve(
            args.others_ports,
            file.get_usize("others-ports")?,
            defaults.others_ports,
        ),
        residential_racks: resolve(
            args.residential_racks,
            file.get_u32("residential-racks")?,
            defaults.residential_racks,
        ),
        office_racks: resolve(
            args.office_racks,
            file.get_u32("office-racks")?,
            defaults.office_racks,
        ),
        others_racks: resolve(
            args.others_racks,
            file.get_u32("others-racks")?,
            defaults.others_racks,
        ),
        num_days: resolve(args.days, file.get_usize("days")?, defaults.num_days),
        start_date,
        morning_flow: resolve(
            args.morning_flow,
            file.get_f64("morning-flow")?,
            defaults.morning_flow,
        ),
        noise: resolve(args.noise, file.get_f64("noise")?, defaults.noise),
    };

    let mut echo = ConfigEcho::new();
    echo.add("out", show_path(&out))
        .add("seed", seed)
        .add("days", spec.num_days)
        .add("start-date", spec.start_date)
        .add("noise", spec.noise)
        .add("morning-flow", spec.morning_flow)
        .add("residential-ports", spec.residential_ports)
        .add("office-ports", spec.office_ports)
        .add("others-ports", spec.others_ports)
        .add("residential-racks", spec.residential_racks)
        .add("office-racks", spec.office_racks)
        .add("others-racks", spec.others_racks);
    echo.print("synth");

    let records = synth_generate(&spec, seed)?;
    write_counts(&out, &records)?;
    println!(
        "wrote {} ports x {} days to {}",
        records.len(),
        spec.num_days,
        show_path(&out)
    );
    Ok(())
}
