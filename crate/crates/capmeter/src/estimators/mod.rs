//! Capacity estimates from an energy curve.
//!
//! Two independent readouts of `C(N) = -N² ∂_N Ū`:
//!
//! * [`fit_monotone_polynomial`]: a degree-7 least-squares polynomial in
//!   `log N`, constrained so that `Ū` decreases and `C` increases, then
//!   differentiated analytically;
//! * [`fit_sigmoid_capacity`]: the four-parameter sigmoid capacity model,
//!   fitted through its integrated energy by Levenberg–Marquardt.
//!
//! Plus the model-selection statistics used to compare architectures.

mod nnls;
mod polynomial;
mod sigmoid;
mod stats;

pub use nnls::nnls;
pub use polynomial::{capacity_from_polynomial, fit_monotone_polynomial, PolynomialEnergyModel, DEFAULT_DEGREE};
pub use sigmoid::{
    energy_from_sigmoid, fit_sigmoid_capacity, freezing_threshold, sigmoid_initializations, FreezingThreshold,
    Guidance, SigmoidCapacityModel, SigmoidParams,
};
pub use stats::{capacity_loss_regression, kendall_tau, Regression};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::QuadratureError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapacityMethod {
    Polynomial,
    Sigmoid,
    Sgld,
    Analytic,
}

/// A learning-capacity value at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub value: f64,
    pub stderr: f64,
    pub at_n: usize,
    pub method: CapacityMethod,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("need at least {needed} curve points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("constrained least squares failed: {0}")]
    SolverFailure(String),
    #[error("N={n} is outside the fitted range [{lo}, {hi}]")]
    OutOfRange { n: f64, lo: f64, hi: f64 },
    #[error("sigmoid fit diverged from every start: {0}")]
    FitDiverged(String),
    #[error("degenerate curve: {points} points, the 4-parameter sigmoid needs at least 5")]
    DegenerateCurve { points: usize },
    #[error(transparent)]
    QuadratureFailure(#[from] QuadratureError),
    #[error("capacity is flat (c = {c:e}); no freezing threshold")]
    UndefinedThreshold { c: f64 },
    #[error("inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("every pair is tied; rank correlation undefined")]
    AllTied,
    #[error("regression design is degenerate: {0}")]
    DegenerateDesign(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Weights `1/stderr²`, or all ones when any stderr is non-positive.
pub(crate) fn curve_weights(stderrs: &[f64]) -> Vec<f64> {
    if stderrs.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        vec![1.0; stderrs.len()]
    } else {
        stderrs.iter().map(|s| 1.0 / (s * s)).collect()
    }
}
