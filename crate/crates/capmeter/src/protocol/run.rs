use rayon::prelude::*;

use super::{plan_experiment, EnergyRecord, Job, ProtocolConfig, ProtocolError};
use crate::learners::{Dataset, Label, Learner, PredictiveModel};

/// Upper clamp on a single example's NLL; guards `-log 0`.
pub const NLL_CLAMP_MAX: f64 = 50.0;

/// Clamped negative log-likelihood of one row. Classification NLL is kept in
/// `[0, NLL_CLAMP_MAX]`; regression NLL is a density and only capped above.
/// The flag reports whether the clamp changed the value.
pub fn example_nll(model: &dyn PredictiveModel, data: &Dataset, row: usize) -> (f64, bool) {
    let label = data.label(row);
    let raw = -model.log_prob(data.row(row), label);
    let lower = match label {
        Label::Class(_) => 0.0,
        Label::Value(_) => f64::NEG_INFINITY,
    };
    if raw.is_nan() {
        return (NLL_CLAMP_MAX, true);
    }
    let clamped = raw.clamp(lower, NLL_CLAMP_MAX);
    (clamped, clamped != raw)
}

/// Records from one protocol execution, in job order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    pub records: Vec<EnergyRecord>,
    /// Per-example NLL values that hit the clamp.
    pub clamp_events: usize,
}

/// Trains and scores each job. `threads = 0` uses rayon's default pool size.
/// Output is independent of the thread count.
pub fn run_jobs(
    dataset: &Dataset,
    dataset_id: &str,
    learner: &dyn Learner,
    jobs: &[Job],
    threads: usize,
) -> Result<ProtocolRun, ProtocolError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ProtocolError::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<(EnergyRecord, usize), ProtocolError>> =
        pool.install(|| jobs.par_iter().map(|job| run_one(dataset, dataset_id, learner, job)).collect());
    let mut records = Vec::with_capacity(jobs.len());
    let mut clamp_events = 0;
    for r in results {
        let (record, clamps) = r?;
        records.push(record);
        clamp_events += clamps;
    }
    Ok(ProtocolRun { records, clamp_events })
}

/// Plans, trains and scores the whole experiment.
pub fn run_protocol(
    dataset: &Dataset,
    dataset_id: &str,
    learner: &dyn Learner,
    config: &ProtocolConfig,
    threads: usize,
) -> Result<ProtocolRun, ProtocolError> {
    let jobs = plan_experiment(config, dataset.len())?;
    run_jobs(dataset, dataset_id, learner, &jobs, threads)
}

fn run_one(
    dataset: &Dataset,
    dataset_id: &str,
    learner: &dyn Learner,
    job: &Job,
) -> Result<(EnergyRecord, usize), ProtocolError> {
    let model = learner.fit(dataset, &job.train, job.seed).map_err(|source| ProtocolError::TrainingFailure {
        n: job.n,
        boot: job.boot_index,
        fold: job.fold_index,
        seed: job.seed_index,
        source,
    })?;
    let mut nll_sum = 0.0;
    let mut clamps = 0;
    for &row in job.heldout.iter() {
        let (nll, clamped) = example_nll(model.as_ref(), dataset, row);
        nll_sum += nll;
        clamps += clamped as usize;
    }
    let record = EnergyRecord {
        dataset_id: dataset_id.to_string(),
        sample_size: job.n,
        boot_index: job.boot_index,
        fold_index: job.fold_index,
        seed_index: job.seed_index,
        nll_sum,
        heldout_count: job.heldout.len(),
    };
    Ok((record, clamps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{gen_synthetic, knn_learner, logistic_learner, LearnerError, SyntheticConfig};
    use crate::protocol::estimate_avg_energy;

    struct Constant;
    impl PredictiveModel for Constant {
        fn log_prob(&self, _x: &[f64], _y: Label) -> f64 {
            0.5f64.ln()
        }
    }
    struct ConstantLearner;
    impl Learner for ConstantLearner {
        fn name(&self) -> String {
            "constant".into()
        }
        fn fit(&self, _d: &Dataset, _r: &[usize], _s: u64) -> Result<Box<dyn PredictiveModel>, LearnerError> {
            Ok(Box::new(Constant))
        }
    }

    struct Certain;
    impl PredictiveModel for Certain {
        fn log_prob(&self, _x: &[f64], y: Label) -> f64 {
            if y == Label::Class(0) {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        }
    }

    fn data() -> Dataset {
        gen_synthetic(&SyntheticConfig { teacher_hidden: 16, ..SyntheticConfig::new(3, 1.0, 2) }, 120).unwrap()
    }

    #[test]
    fn uniform_predictor_gives_log_two_everywhere() {
        let cfg = ProtocolConfig { n_boots: 2, k_folds: 3, m_seeds: 2, n_grid: vec![12, 30], master_seed: 1 };
        let run = run_protocol(&data(), "syn", &ConstantLearner, &cfg, 2).unwrap();
        assert_eq!(run.records.len(), 2 * 2 * 3 * 2);
        for p in estimate_avg_energy(&run.records).unwrap().points {
            assert!((p.u_mean - 2f64.ln()).abs() < 1e-12);
            assert!(p.u_stderr < 1e-12);
        }
    }

    #[test]
    fn impossible_labels_are_clamped_and_counted() {
        let d = Dataset::classification(vec![0.0, 1.0], 1, vec![0, 1], 2).unwrap();
        assert_eq!(example_nll(&Certain, &d, 0), (0.0, false));
        assert_eq!(example_nll(&Certain, &d, 1), (NLL_CLAMP_MAX, true));
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let cfg = ProtocolConfig { n_boots: 2, k_folds: 4, m_seeds: 2, n_grid: vec![20, 60], master_seed: 9 };
        let learner = logistic_learner(1e-3, 50, 0.5).unwrap();
        let a = run_protocol(&data(), "syn", &learner, &cfg, 1).unwrap();
        let b = run_protocol(&data(), "syn", &learner, &cfg, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.records.iter().map(|r| r.nll_sum.to_bits()).collect::<Vec<_>>(),
            b.records.iter().map(|r| r.nll_sum.to_bits()).collect::<Vec<_>>()
        );
        let knn = knn_learner(3, 1.0).unwrap();
        assert_eq!(
            run_protocol(&data(), "syn", &knn, &cfg, 3).unwrap(),
            run_protocol(&data(), "syn", &knn, &cfg, 1).unwrap()
        );
    }
}
