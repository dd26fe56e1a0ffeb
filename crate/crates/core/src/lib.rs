//! Information-theoretic matrix completion laboratory.
//!
//! A k×n matrix is drawn from a stochastic column model, passed entry by
//! entry through an optional discrete memoryless channel and then an erasure
//! channel with observation rate `p`, and finally reconstructed. The crate
//! computes the completion capacity `C` of the model (the largest number of
//! entries one observation can resolve, so that reliable recovery needs
//! `p > 1/C`), exact finite-n information quantities, and Monte Carlo
//! estimates of the reconstruction error as `p` sweeps across the
//! predicted threshold.
//!
//! Modules, bottom up:
//!
//! - [`source_models`]: i.i.d. and Markov column processes, sampling, log-probabilities.
//! - [`channels`]: DMC noise and erasures.
//! - [`info_measures`]: entropies, entropy-rate bounds, exact finite-n tables.
//! - [`capacity`]: completion capacity, achievability regions, the finite-n upper bound.
//! - [`decoders`]: MAP (dynamic programming and exhaustive) and typicality decoding.
//! - [`harness`]: experiment configs, trials, sweeps, transition location, reports.

pub mod capacity;
pub mod channels;
pub mod decoders;
mod error;
pub mod harness;
pub mod info_measures;
pub mod numeric;
pub mod source_models;

pub use error::{Error, GridSide, Result};

use serde::{Deserialize, Serialize};

/// Explicit limits on exhaustive computations. Anything that would exceed
/// a cap is refused with [`Error::WorkCap`] instead of being truncated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkCaps {
    /// Operation budget for exact finite-n tables and exact error sums.
    pub enumeration: f64,
    /// Operation budget for entropy-rate sandwich bounds.
    pub horizon_work: f64,
    /// Largest candidate set an exhaustive decoder may enumerate.
    pub candidates: f64,
}

impl Default for WorkCaps {
    fn default() -> Self {
        Self {
            enumeration: 2e8,
            horizon_work: 5e7,
            candidates: 1_048_576.0,
        }
    }
}
