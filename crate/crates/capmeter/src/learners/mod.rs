//! Reference learners and data sources.
//!
//! Every learner is deterministic given `(rows, seed)` and returns a
//! [`PredictiveModel`] whose class log-probabilities exponentiate to one.

mod dataset;
mod knn;
mod logistic;
mod mlp;
mod ridge;
mod synthetic;
mod tabular;

pub use dataset::{Dataset, Label, Standardizer, Targets};
pub use knn::{knn_learner, KnnLearner};
pub use logistic::{logistic_learner, LogisticEnergy, LogisticLearner};
pub use mlp::{mlp_learner, MlpEnergy, MlpLearner};
pub use ridge::{ridge_learner, RidgeLearner, DEFAULT_SIGMA};
pub use synthetic::{gen_synthetic, SyntheticConfig};
pub use tabular::{load_tabular, parse_tabular, LabelKind};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("loss became non-finite at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },
    #[error("{learner} does not support {target} targets")]
    UnsupportedTarget { learner: String, target: &'static str },
    #[error("invalid learner configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("tabular file, row {row}, column {column}: {reason}")]
    Parse { row: usize, column: usize, reason: String },
    #[error("tabular file: label column mixes numeric and non-numeric values (first conflict at row {row})")]
    MixedTypes { row: usize },
}

/// A fitted model. Immutable after fitting; safe to share across threads.
pub trait PredictiveModel: Send + Sync {
    /// `log p(y | x)`.
    fn log_prob(&self, x: &[f64], y: Label) -> f64;

    /// Log-probabilities of every class, for classifiers.
    fn class_log_probs(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

pub trait Learner: Send + Sync {
    /// Short identifier recorded in reports.
    fn name(&self) -> String;

    /// Fits on `data` restricted to `rows` (duplicates allowed).
    fn fit(&self, data: &Dataset, rows: &[usize], seed: u64) -> Result<Box<dyn PredictiveModel>, LearnerError>;
}

pub(crate) fn log_softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    for z in logits.iter_mut() {
        *z -= lse;
    }
}

pub(crate) fn gaussian_log_density(residual: f64, sigma: f64) -> f64 {
    -residual * residual / (2.0 * sigma * sigma) - (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln()
}

pub(crate) fn expect_classes<'a>(data: &'a Dataset, learner: &str) -> Result<(&'a [usize], usize), LearnerError> {
    match data.targets() {
        Targets::Classes { labels, m } => Ok((labels.as_slice(), *m)),
        Targets::Regression(_) => {
            Err(LearnerError::UnsupportedTarget { learner: learner.into(), target: "regression" })
        }
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    /// `Σ_y exp(log_prob(x, y))` for a classifier.
    pub fn total_probability(model: &dyn PredictiveModel, x: &[f64], m: usize) -> f64 {
        (0..m).map(|y| model.log_prob(x, Label::Class(y)).exp()).sum()
    }

    /// Central finite differences of a scalar function of the weights.
    pub fn numeric_gradient(f: impl Fn(&[f64]) -> f64, w: &[f64], h: f64) -> Vec<f64> {
        let mut probe = w.to_vec();
        (0..w.len())
            .map(|i| {
                probe[i] = w[i] + h;
                let up = f(&probe);
                probe[i] = w[i] - h;
                let down = f(&probe);
                probe[i] = w[i];
                (up - down) / (2.0 * h)
            })
            .collect()
    }
}
