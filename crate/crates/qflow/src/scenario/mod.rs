//! Counterfactual analysis: opportunity losses at empty ports and what-if
//! simulation of pre-adding bicycles.
//!
//! [`estimate_opportunity_losses`] replays a port-day as a discrete-event
//! sequence and imputes the rentals lost while the rack sat empty; the
//! resulting demand-adjusted panels are what models should train on, since
//! raw counts flatten out at zero and hide the morning demand peak.
//! [`simulate_addition`] then asks what a trained model expects to happen
//! when bicycles are staged at a group before the day begins: rentals
//! gained on site (primary effect) and rentals gained downstream where the
//! ridden bicycles arrive (secondary effect).

mod intervention;
mod opploss;

pub use intervention::{
    departure_staircase, effect_report, path_depth, primary_effect, simulate_addition, EffectRow,
    InterventionResult, RoutingConfig,
};
pub use opploss::{
    adjust_panel, estimate_opportunity_losses, estimate_panel_losses, mean_demand_rates,
    OppLossInput, OppLossResult,
};
