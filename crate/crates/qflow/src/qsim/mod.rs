//! Classical statevector simulation of the time-parameterized ansatz.
//!
//! The register assigns each port a block of qubits plus optional ancillas
//! ([`CircuitLayout`]); [`AnsatzParams`] holds the angles of the circuit
//! `U(θ, t) = V · D(θ_φ·t) · V†`, and [`joint_outcome_distribution`] turns an
//! initial joint state and an evolution time into exact measurement
//! statistics over the ports.

mod ansatz;
mod dist;
mod layout;
mod state;

pub use ansatz::{evolve, AngleShift, AngleSide, AnsatzParams, EntanglePattern};
pub use dist::{
    joint_outcome_distribution, sample_outcomes, trace_ancillas, JointDistribution,
};
pub use layout::{CircuitLayout, MAX_ANCILLAS, MAX_QUBITS};
pub use state::{prepare_from_state, StateVector};
