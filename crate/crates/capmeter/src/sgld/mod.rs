//! Stochastic gradient Langevin dynamics estimators of `U` and `C`.
//!
//! Chains sample the Gibbs posterior `p(w; N) ∝ φ(w) exp(-N Ĥ(w))` while the
//! sample size grows along a schedule. The energy readout is the mean
//! held-out probability complement `1 - p_w(y|x)`, not an NLL, so curves from
//! this module carry [`EnergyScale::ProbabilityComplement`](crate::protocol::EnergyScale).

mod chain;
mod quadratic;

pub use chain::{run_incremental_protocol, sgld_avg_energy, sgld_capacity, sgld_step, IncrementalRun, SgldConfig};
pub use quadratic::{oracle_capacity_fd, oracle_probability_complement, QuadraticTestEnergy};

use thiserror::Error;

/// A training energy `Ĥ(w)` that can be restricted to a subset of rows.
///
/// `value` and `gradient` are the mean negative log-likelihood over `rows`
/// and its weight-space gradient. Energies without data (the quadratic test
/// energy) ignore `rows`.
pub trait DifferentiableEnergy: Send + Sync {
    /// Weight-space dimension `p`.
    fn dim(&self) -> usize;

    /// Number of rows in the underlying data; zero for data-free energies.
    fn data_len(&self) -> usize;

    fn value(&self, w: &[f64], rows: &[usize]) -> f64;

    /// Writes `∇_w value(w, rows)` into `out`.
    fn gradient(&self, w: &[f64], rows: &[usize], out: &mut [f64]);

    /// `p_w(y_row | x_row)`.
    fn per_example_prob(&self, w: &[f64], row: usize) -> f64;

    /// Deterministic starting point for chains.
    fn initial_weights(&self, seed: u64) -> Vec<f64>;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SgldError {
    #[error("invalid SGLD configuration: {0}")]
    Config(String),
    #[error("chain state became non-finite at step {step}")]
    NonFiniteState { step: usize },
    #[error("held-out set is empty")]
    EmptyHeldout,
    #[error("sample window is empty")]
    EmptyWindow,
    #[error("schedule needs {needed} rows but the data has {available}")]
    ScheduleExhaustsData { needed: usize, available: usize },
    #[error("{failed} of {chains} chains failed; at least half must survive (first failure: {first})")]
    MajorityChainFailure { failed: usize, chains: usize, first: String },
}
