//! # capmeter
//!
//! Estimates the learning capacity `C(N) = -N² ∂U/∂N` and the average
//! held-out energy `U(N)` of predictive models, treating the training-set
//! size `N` as an inverse temperature.
//!
//! The crate is organised around the pipeline:
//!
//! - [`learners`]: desk-scale reference learners and synthetic data.
//! - [`protocol`]: bootstrap × fold × seed experiments that turn a learner
//!   into held-out [`protocol::EnergyRecord`]s and an averaged
//!   [`protocol::EnergyCurve`].
//! - [`estimators`]: capacity estimates from an energy curve, either a
//!   monotone polynomial fit or a sigmoid capacity model fitted by
//!   Levenberg–Marquardt, plus model-selection statistics.
//! - [`sgld`]: a Langevin-dynamics route to the same quantities.
//! - [`oracle`]: exact closed forms for quadratic energies, PAC-Bayes
//!   effective dimension, and a volume-ratio RLCT estimator. These double
//!   as test oracles for everything above.
//! - [`cli`]: the `capmeter` command-line front end.
//!
//! Runnable walkthroughs for each capability live in the crate's
//! `examples/` directory (`cargo run --release --example <name>`).

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod estimators;
pub mod learners;
pub mod oracle;
pub mod protocol;
pub mod quadrature;
pub mod rng;
pub mod sgld;

pub use estimators::{CapacityEstimate, CapacityMethod, SigmoidCapacityModel};
pub use oracle::{HessianSpectrum, PriorKind};
pub use protocol::{EnergyCurve, EnergyRecord, ProtocolConfig};
