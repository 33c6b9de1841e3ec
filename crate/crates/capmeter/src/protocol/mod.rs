//! Monte-Carlo estimation of the average held-out energy `Ū(N)`.
//!
//! For each sample size `N`: draw `n` bootstrap samples of `N` rows, split
//! each into `k` folds, train `m` seeds per fold on the other `k - 1` folds
//! and record the summed held-out negative log-likelihood. Averaging those
//! sums per `(bootstrap, seed)` replicate and then over replicates gives
//! `Ū(N)` with the `1/(n m N)` normalisation, independent of `k`.

mod aggregate;
mod curve;
mod loocv;
mod plan;
mod records;
mod run;

pub use aggregate::{estimate_avg_energy, estimate_avg_energy_at, estimate_avg_energy_by_dataset};
pub use curve::{CurvePoint, EnergyCurve, EnergyScale};
pub use loocv::loocv_avg_energy;
pub use plan::{log_grid, parse_grid, plan_experiment, plan_folds, Job, ProtocolConfig};
pub use records::{ingest_records, parse_records, write_records, RecordFile, RECORD_HEADER};
pub use run::{example_nll, run_jobs, run_protocol, ProtocolRun, NLL_CLAMP_MAX};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::LearnerError;

/// One held-out loss measurement: the summed NLL of one trained model over
/// its held-out fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub dataset_id: String,
    pub sample_size: usize,
    pub boot_index: usize,
    pub fold_index: usize,
    pub seed_index: usize,
    pub nll_sum: f64,
    pub heldout_count: usize,
}

impl EnergyRecord {
    /// `(dataset, N, boot, fold, seed)`; unique within a complete experiment.
    pub fn key(&self) -> (&str, usize, usize, usize, usize) {
        (&self.dataset_id, self.sample_size, self.boot_index, self.fold_index, self.seed_index)
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no records for N={0}")]
    EmptyGroup(usize),
    #[error("non-finite nll_sum in record for N={n} (boot {boot}, fold {fold}, seed {seed})")]
    NonFinite { n: usize, boot: usize, fold: usize, seed: usize },
    #[error("records mix datasets {0:?}; aggregate them separately")]
    MixedDatasets(Vec<String>),
    #[error("training failed for N={n} boot {boot} fold {fold} seed {seed}: {source}")]
    TrainingFailure {
        n: usize,
        boot: usize,
        fold: usize,
        seed: usize,
        #[source]
        source: LearnerError,
    },
    #[error("leave-one-out training failed without row {index}: {source}")]
    LoocvFailure {
        index: usize,
        #[source]
        source: LearnerError,
    },
    #[error("record file, line {line}, column {column}: {reason}")]
    Parse { line: usize, column: usize, reason: String },
    #[error("record file, line {line}: {reason}")]
    InvariantViolation { line: usize, reason: String },
    #[error(
        "record file, line {line}: duplicate key (dataset {dataset_id}, N={n}, boot {boot}, fold {fold}, seed {seed})"
    )]
    DuplicateKey { line: usize, dataset_id: String, n: usize, boot: usize, fold: usize, seed: usize },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}
