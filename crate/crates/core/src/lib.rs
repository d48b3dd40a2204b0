//! Simulation and analysis of time- and wavelength-multiplexed time-bin
//! entanglement distribution.

// `!(x > 0.0)` is used on purpose to reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod io;
pub mod ledger;
pub mod oracle;
pub mod quantum;
pub mod rng;
pub mod sim;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
