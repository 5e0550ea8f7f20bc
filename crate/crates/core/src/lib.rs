//! Simulation and analysis of two-color urns with nonlinear feedback and fitness.
//!
//! A `(beta, r, x0)` urn adds one ball per step; color 1 is drawn with probability
//! `r x1^beta / (r x1^beta + x2^beta)`. The crate samples the chain, couples
//! runs, embeds it in continuous time, computes exact small-horizon
//! distributions and evaluates the asymptotic theory of tie durations and
//! intensities.

pub mod coupling;
pub mod embedding;
pub mod error;
pub mod observables;
pub mod oracle;
pub mod seed;
pub mod stats;
pub mod theory;
pub mod urn;

pub use error::{Result, UrnError};
pub use seed::derive_seed;
pub use urn::{
    simulate, simulate_batch, simulate_range, transition_probabilities, Color, Leader, TieSummary, UrnParams,
    UrnState, CONTESTED_RHO,
};
