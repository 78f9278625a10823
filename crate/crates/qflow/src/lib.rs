//! Generative modeling of shared-bicycle stock levels with a parameterized
//! quantum circuit simulated on a classical statevector backend.
//!
//! The pipeline turns hourly bicycle counts at rental ports into a discrete
//! stochastic model and back into applications:
//!
//! 1. [`data`] loads hourly count records, classifies ports into behavioral
//!    groups (residential / office / others), and aggregates them into a
//!    rectangular panel. A synthetic commuter-pattern generator doubles as a
//!    test fixture and demo data source.
//! 2. [`encode`] discretizes hourly stock increments into a small symbol
//!    alphabet (equal-frequency binning), tabulates time-indexed transition
//!    matrices, and measures cross-port increment correlations.
//! 3. [`qsim`] provides the circuit machinery: an ansatz of the form
//!    `V · D(t) · V†` acting on one qubit register per port plus optional
//!    ancillas, simulated exactly as a statevector.
//! 4. [`model`] fits the circuit so that its measurement statistics reproduce
//!    the transition matrices while matching observed cross-port correlations,
//!    using parameter-shift gradients and Adam.
//! 5. [`generate`] draws whole synthetic days from a trained model.
//! 6. [`scenario`] estimates opportunity losses hidden by empty ports and
//!    simulates the effect of pre-adding bicycles to a group of ports.
//!
//! Circuit evaluation is exact by default (probabilities read off the
//! statevector); finite-shot estimation is available where measurement noise
//! matters. All randomness flows through explicitly seeded generators so every
//! run is reproducible.

pub mod data;
pub mod encode;
mod error;
pub mod generate;
pub mod model;
pub mod qsim;
pub mod scenario;

pub use error::{Error, ErrorCategory, Result};
