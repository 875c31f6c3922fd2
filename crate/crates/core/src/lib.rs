//! Simulation and analytic toolkit for LoRa livestock-collar networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: path loss, SNR, packet-success curves and the two-regime fitter
//! - [`energy`]: duty-cycled current, battery lifetime and LoRa airtime
//! - [`reliability`]: slotted collision probabilities and loss budgets
//! - [`engine`]: the deterministic discrete-event simulator, sweeps and calibration
//! - [`analytics`]: alert rules, clustering, outlier scoring and ROC analysis
//! - [`cli`]: the `agrotrack` command-line front end

// `!(x > 0.0)` style guards are intentional: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod bundled;
pub mod channel;
pub mod cli;
pub mod energy;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod io;
pub mod reliability;
pub mod rng;

pub use error::{Error, Result};
