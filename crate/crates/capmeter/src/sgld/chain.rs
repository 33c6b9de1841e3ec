use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{DifferentiableEnergy, SgldError};
use crate::estimators::{CapacityEstimate, CapacityMethod};
use crate::oracle::PriorKind;
use crate::protocol::{estimate_avg_energy, EnergyCurve, EnergyRecord, EnergyScale};
use crate::rng::{self, tag};

/// Incremental-sample SGLD run.
#[derive(Debug, Clone, PartialEq)]
pub struct SgldConfig {
    pub step_size: f64,
    pub chains: usize,
    pub equilibration_epochs: usize,
    /// Samples per chain at each schedule point, one per epoch.
    pub samples_per_window: usize,
    pub n_schedule: Vec<usize>,
    pub seed: u64,
    pub prior: PriorKind,
    pub batch_size: usize,
    /// Lower bound on Langevin steps per epoch; data-free energies have no
    /// rows to define an epoch, so this sets its length.
    pub min_steps_per_epoch: usize,
}

impl Default for SgldConfig {
    fn default() -> Self {
        Self {
            step_size: 1e-3,
            chains: 10,
            equilibration_epochs: 20,
            samples_per_window: 10,
            n_schedule: Vec::new(),
            seed: 0,
            prior: PriorKind::GaussianIsotropic(1.0),
            batch_size: 64,
            min_steps_per_epoch: 1,
        }
    }
}

impl SgldConfig {
    fn validate(&self, data_len: usize) -> Result<(), SgldError> {
        let fail = |m: String| Err(SgldError::Config(m));
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return fail(format!("step size must be > 0, got {}", self.step_size));
        }
        if self.chains == 0 || self.samples_per_window == 0 || self.batch_size == 0 {
            return fail("chains, samples per window and batch size must be >= 1".into());
        }
        if self.n_schedule.is_empty() {
            return fail("schedule is empty".into());
        }
        if self.n_schedule.windows(2).any(|w| w[0] >= w[1]) || self.n_schedule[0] == 0 {
            return fail(format!("schedule must be positive and strictly increasing: {:?}", self.n_schedule));
        }
        self.prior.validate().map_err(|e| SgldError::Config(e.to_string()))?;
        if data_len > 0 {
            if self.chains < 2 {
                return fail("data energies need at least 2 chains (each holds out its own fold)".into());
            }
            if self.n_schedule[0] < self.chains {
                return fail(format!("every scheduled N must be >= chains ({})", self.chains));
            }
            let needed = *self.n_schedule.last().unwrap();
            if needed > data_len {
                return Err(SgldError::ScheduleExhaustsData { needed, available: data_len });
            }
        }
        Ok(())
    }
}

/// One Langevin update in place. Returns false if the state is no longer finite.
#[allow(clippy::too_many_arguments)]
fn step_in_place<R: Rng + ?Sized>(
    w: &mut [f64],
    grad: &mut [f64],
    energy: &dyn DifferentiableEnergy,
    rows: &[usize],
    n: f64,
    precision: f64,
    step: f64,
    rng: &mut R,
) -> bool {
    energy.gradient(w, rows, grad);
    let noise = step.sqrt();
    let mut finite = true;
    for (wi, gi) in w.iter_mut().zip(grad.iter()) {
        *wi += -0.5 * step * (n * gi + precision * *wi) + noise * rng::std_normal(rng);
        finite &= wi.is_finite();
    }
    finite
}

/// `w' = w - (s/2) ∇[N Ĥ_batch(w) - log φ(w)] + √s ξ`.
///
/// `rows` is the minibatch; `energy` returns its mean, so `N` times the
/// minibatch gradient estimates the full-data gradient of `N Ĥ`.
pub fn sgld_step<R: Rng + ?Sized>(
    w: &[f64],
    energy: &dyn DifferentiableEnergy,
    rows: &[usize],
    n: f64,
    prior: PriorKind,
    step: f64,
    rng: &mut R,
) -> Result<Vec<f64>, SgldError> {
    if !(step > 0.0) {
        return Err(SgldError::Config(format!("step size must be > 0, got {step}")));
    }
    let mut out = w.to_vec();
    let mut grad = vec![0.0; w.len()];
    if step_in_place(&mut out, &mut grad, energy, rows, n, prior.precision(), step, rng) {
        Ok(out)
    } else {
        Err(SgldError::NonFiniteState { step: 0 })
    }
}

/// Mean held-out `1 - p_w(y|x)` of one weight sample.
fn sample_energy(w: &[f64], energy: &dyn DifferentiableEnergy, heldout: &[usize]) -> f64 {
    heldout.iter().map(|&r| 1.0 - energy.per_example_prob(w, r)).sum::<f64>() / heldout.len() as f64
}

/// `(1/m) Σᵢ mean_heldout (1 - p_{w⁽ⁱ⁾}(y|x))`.
pub fn sgld_avg_energy(
    samples: &[Vec<f64>],
    energy: &dyn DifferentiableEnergy,
    heldout: &[usize],
) -> Result<f64, SgldError> {
    if samples.is_empty() {
        return Err(SgldError::EmptyWindow);
    }
    if heldout.is_empty() {
        return Err(SgldError::EmptyHeldout);
    }
    Ok(samples.iter().map(|w| sample_energy(w, energy, heldout)).sum::<f64>() / samples.len() as f64)
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `C = -N² (Ū(N+Δ) - Ū(N)) / Δ` from two windows of samples, with the
/// between-sample standard errors of both windows combined.
pub fn sgld_capacity(
    window_t: &[Vec<f64>],
    window_t_plus: &[Vec<f64>],
    energy: &dyn DifferentiableEnergy,
    heldout: &[usize],
    n: usize,
    delta_n: usize,
) -> Result<CapacityEstimate, SgldError> {
    if window_t.is_empty() || window_t_plus.is_empty() {
        return Err(SgldError::EmptyWindow);
    }
    if heldout.is_empty() {
        return Err(SgldError::EmptyHeldout);
    }
    if delta_n == 0 {
        return Err(SgldError::Config("delta_n must be >= 1".into()));
    }
    let e0: Vec<f64> = window_t.iter().map(|w| sample_energy(w, energy, heldout)).collect();
    let e1: Vec<f64> = window_t_plus.iter().map(|w| sample_energy(w, energy, heldout)).collect();
    let ((m0, s0), (m1, s1)) = (mean_and_se(&e0), mean_and_se(&e1));
    let scale = (n * n) as f64 / delta_n as f64;
    Ok(CapacityEstimate {
        value: -scale * (m1 - m0),
        stderr: scale * (s0 * s0 + s1 * s1).sqrt(),
        at_n: n,
        method: CapacityMethod::Sgld,
    })
}

/// Output of [`run_incremental_protocol`].
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementalRun {
    /// `Ū(N)` on the probability-complement scale; the stderr is taken over
    /// per-chain means.
    pub curve: EnergyCurve,
    /// Finite-difference capacities between consecutive schedule points,
    /// reported at the lower N.
    pub capacities: Vec<CapacityEstimate>,
    /// One record per (chain, sample): boot = chain, fold = 0, seed = sample.
    pub records: Vec<EnergyRecord>,
    pub failed_chains: Vec<(usize, SgldError)>,
}

/// Per chain and schedule point: `(Σ (1-p) over held-out, held-out count)` per sample.
type ChainTrace = Vec<Vec<(f64, usize)>>;

/// Runs `chains` independent Langevin chains while the sample size follows
/// `n_schedule`.
///
/// Data rows are visited in one seeded permutation; the first `N` positions
/// form the sample and position `i` belongs to fold `i mod chains`. Chain `c`
/// samples the posterior on every fold but its own and scores held-out fold
/// `c`, so growing `N₁ → N₂` adds `(N₂ − N₁)/chains` rows to each fold.
/// Data-free energies skip the folds and sample `p(w; N)` directly.
///
/// After each growth step a chain runs `equilibration_epochs` epochs, then
/// keeps one sample at the end of each of the next `samples_per_window`
/// epochs. Chains that hit a non-finite state are dropped; the run fails
/// unless at least half survive.
pub fn run_incremental_protocol(
    energy: &dyn DifferentiableEnergy,
    dataset_id: &str,
    config: &SgldConfig,
) -> Result<IncrementalRun, SgldError> {
    let data_len = energy.data_len();
    config.validate(data_len)?;
    let mut perm: Vec<usize> = (0..data_len).collect();
    perm.shuffle(&mut rng::stream(config.seed, &[tag::PERMUTE]));

    let traces: Vec<Result<ChainTrace, SgldError>> =
        (0..config.chains).into_par_iter().map(|c| run_chain(energy, config, &perm, c)).collect();

    let mut survivors = Vec::new();
    let mut failed_chains = Vec::new();
    for (c, t) in traces.into_iter().enumerate() {
        match t {
            Ok(trace) => survivors.push((c, trace)),
            Err(e) => failed_chains.push((c, e)),
        }
    }
    if 2 * survivors.len() < config.chains {
        return Err(SgldError::MajorityChainFailure {
            failed: failed_chains.len(),
            chains: config.chains,
            first: failed_chains.first().map(|(c, e)| format!("chain {c}: {e}")).unwrap_or_default(),
        });
    }

    let mut records = Vec::new();
    for (c, trace) in &survivors {
        for (si, &n) in config.n_schedule.iter().enumerate() {
            for (l, &(sum, count)) in trace[si].iter().enumerate() {
                records.push(EnergyRecord {
                    dataset_id: dataset_id.to_string(),
                    sample_size: n,
                    boot_index: *c,
                    fold_index: 0,
                    seed_index: l,
                    nll_sum: sum,
                    heldout_count: count,
                });
            }
        }
    }
    let mut curve = estimate_avg_energy(&records).map_err(|e| SgldError::Config(e.to_string()))?;
    curve.scale = EnergyScale::ProbabilityComplement;

    // chain-level means carry the between-chain spread; samples within a
    // chain are autocorrelated and would understate it
    let chain_means: Vec<Vec<f64>> = config
        .n_schedule
        .iter()
        .enumerate()
        .map(|(si, _)| {
            survivors
                .iter()
                .map(|(_, trace)| {
                    let w = &trace[si];
                    w.iter().map(|(s, k)| s / *k as f64).sum::<f64>() / w.len() as f64
                })
                .collect()
        })
        .collect();
    for (point, means) in curve.points.iter_mut().zip(&chain_means) {
        point.u_stderr = mean_and_se(means).1;
    }

    let capacities = config
        .n_schedule
        .windows(2)
        .enumerate()
        .map(|(si, pair)| {
            let diffs: Vec<f64> = chain_means[si + 1].iter().zip(&chain_means[si]).map(|(b, a)| b - a).collect();
            let (mean, se) = mean_and_se(&diffs);
            let (n, delta) = (pair[0], pair[1] - pair[0]);
            let scale = (n * n) as f64 / delta as f64;
            CapacityEstimate { value: -scale * mean, stderr: scale * se, at_n: n, method: CapacityMethod::Sgld }
        })
        .collect();

    Ok(IncrementalRun { curve, capacities, records, failed_chains })
}

fn run_chain(
    energy: &dyn DifferentiableEnergy,
    config: &SgldConfig,
    perm: &[usize],
    chain: usize,
) -> Result<ChainTrace, SgldError> {
    let k = config.chains;
    let mut rng = rng::stream(config.seed, &[tag::CHAIN, chain as u64]);
    let mut w = energy.initial_weights(rng::derive_seed(config.seed, &[tag::CHAIN, chain as u64, 0]));
    let mut grad = vec![0.0; w.len()];
    let precision = config.prior.precision();
    let mut step_index = 0usize;
    let mut trace = Vec::with_capacity(config.n_schedule.len());

    for &n in &config.n_schedule {
        let (train, heldout, n_gibbs) = if perm.is_empty() {
            (Vec::new(), vec![0usize], n as f64)
        } else {
            let (mut train, mut heldout) = (Vec::new(), Vec::new());
            for (i, &row) in perm[..n].iter().enumerate() {
                if i % k == chain {
                    heldout.push(row);
                } else {
                    train.push(row);
                }
            }
            let len = train.len() as f64;
            (train, heldout, len)
        };
        let batch = config.batch_size.min(train.len().max(1));
        let steps_per_epoch = config.min_steps_per_epoch.max(train.len().div_ceil(batch)).max(1);
        let mut order = train.clone();
        let mut cursor = order.len();
        let mut window = Vec::with_capacity(config.samples_per_window);

        for epoch in 0..config.equilibration_epochs + config.samples_per_window {
            for _ in 0..steps_per_epoch {
                let rows: &[usize] = if order.is_empty() {
                    &[]
                } else {
                    if cursor + batch > order.len() {
                        order.shuffle(&mut rng);
                        cursor = 0;
                    }
                    cursor += batch;
                    &order[cursor - batch..cursor]
                };
                if !step_in_place(&mut w, &mut grad, energy, rows, n_gibbs, precision, config.step_size, &mut rng) {
                    return Err(SgldError::NonFiniteState { step: step_index });
                }
                step_index += 1;
            }
            if epoch >= config.equilibration_epochs {
                let sum: f64 = heldout.iter().map(|&r| 1.0 - energy.per_example_prob(&w, r)).sum();
                window.push((sum, heldout.len()));
            }
        }
        trace.push(window);
    }
    Ok(trace)
}
