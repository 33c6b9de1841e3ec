//! Exact and semi-analytic reference computations.
//!
//! Everything here is a closed form (or a plain Monte-Carlo count) that the
//! rest of the crate can be checked against: log-partition functions and
//! learning capacities of quadratic energies, the PAC-Bayes effective
//! dimension and analytic bound, and a volume-ratio estimate of the real
//! log-canonical threshold.

mod pacbayes;
mod quadratic;
mod rlct;
mod spectrum;

pub use pacbayes::{pacbayes_bound, pacbayes_effective_dim, pacbayes_epsilon_default, EpsilonChoice, EPSILON_FLOOR};
pub use quadratic::{avg_energy_from_logz, quad_capacity_exact, quad_capacity_hm, quad_log_z};
pub use rlct::{rlct_volume_estimate, PriorSampler, RlctEstimate, UniformBox, MIN_LOW_LEVEL_HITS};
pub use spectrum::{HessianSpectrum, PriorKind};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("partition function diverges: uniform prior needs every eigenvalue > 0 (found {0})")]
    DivergentPartition(f64),
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("only {hits} prior samples fell below the lower level (need at least {needed})")]
    InsufficientHits { hits: usize, needed: usize },
    #[error("spectrum file, line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("spectrum file has no `epsilon=` header")]
    MissingEpsilon,
    #[error("log-partition evaluation failed at N={n}: {reason}")]
    Evaluation { n: u64, reason: String },
}
