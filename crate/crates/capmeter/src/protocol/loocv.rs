use rayon::prelude::*;

use super::{example_nll, ProtocolError};
use crate::learners::{Dataset, Learner};

/// Leave-one-out estimate of the average held-out energy: row `i` is scored
/// by a model trained on every other row. Costs `N` trainings, all with seed 0.
pub fn loocv_avg_energy(learner: &dyn Learner, dataset: &Dataset) -> Result<f64, ProtocolError> {
    let n = dataset.len();
    if n < 2 {
        return Err(ProtocolError::Config(format!("leave-one-out needs at least 2 rows, got {n}")));
    }
    let nlls: Vec<Result<f64, ProtocolError>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let rows: Vec<usize> = (0..n).filter(|&r| r != i).collect();
            let model =
                learner.fit(dataset, &rows, 0).map_err(|source| ProtocolError::LoocvFailure { index: i, source })?;
            Ok(example_nll(model.as_ref(), dataset, i).0)
        })
        .collect();
    let mut total = 0.0;
    for v in nlls {
        total += v?;
    }
    Ok(total / n as f64)
}
