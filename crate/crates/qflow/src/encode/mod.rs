//! Discretization pipeline: panels → increments → symbols → statistics.
//!
//! A [`Panel`] of hourly stock levels is differenced into an
//! [`IncrementPanel`], discretized per (port, step) cell by a fitted
//! [`SaxCodebook`], and summarized into the three statistics the model is
//! trained on: day-anchored [`TransitionTensor`] rows, cross-port
//! [`CorrelationTable`] entries, and the [`InitialStateDistribution`] of
//! opening symbols.

mod codebook;
mod correlations;
mod panel;
mod transitions;

pub use codebook::{discretize_panel, fit_codebook, BinningStrategy, SaxCodebook};
pub use correlations::{empirical_correlations, CorrelationTable};
pub use panel::{IncrementPanel, Panel, StatePanel};
pub use transitions::{
    build_transitions, initial_state_distribution, InitialStateDistribution, TransitionTensor,
    TRANSITION_SMOOTHING,
};
