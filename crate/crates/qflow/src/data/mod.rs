//! Fleet data handling: count CSV files, port classification, group
//! aggregation, synthetic data generation, and model persistence.
//!
//! The on-disk unit is an hourly count table over a fixed daily grid
//! (6:00–22:00). [`read_counts`] parses and validates it into per-port
//! records; [`classify_ports`] sorts ports into commuter groups by their
//! weekday morning behavior; [`aggregate_groups`] sums each group into one
//! series per group, producing the panel the model trains on.
//! [`synth_generate`] fabricates a plausible fleet when no real data is at
//! hand, and [`save_model`]/[`load_model`] give trained models a stable,
//! checksummed file format.

mod classify;
mod csv_io;
mod persist;
mod synth;

pub use classify::{
    aggregate_groups, aggregate_panel, classify_ports, filter_weekdays, is_weekday, port_panel,
    GroupAssignment, GroupSummary, PortGroup, CLASSIFY_THRESHOLD,
};
pub use csv_io::{
    load_counts, read_counts, render_counts, write_counts, write_counts_to, CountCsv, PortRecord,
    GRID_END_HOUR, GRID_HOURS, GRID_START_HOUR,
};
pub use persist::{
    deserialize_model, load_model, save_model, serialize_model, MODEL_FORMAT, MODEL_VERSION,
};
pub use synth::{intended_group, synth_generate, SynthSpec};
