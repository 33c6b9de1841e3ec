use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::rng::{self, tag};

/// Bootstrap × fold × seed experiment layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n_boots: usize,
    pub k_folds: usize,
    pub m_seeds: usize,
    /// Strictly increasing sample sizes.
    pub n_grid: Vec<usize>,
    pub master_seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { n_boots: 4, k_folds: 5, m_seeds: 5, n_grid: log_grid(50, 5000, 12), master_seed: 0 }
    }
}

impl ProtocolConfig {
    pub fn validate(&self, dataset_size: usize) -> Result<(), ProtocolError> {
        let fail = |m: String| Err(ProtocolError::Config(m));
        if self.k_folds < 2 {
            return fail(format!("k_folds must be >= 2, got {}", self.k_folds));
        }
        if self.n_boots == 0 || self.m_seeds == 0 {
            return fail("n_boots and m_seeds must be >= 1".into());
        }
        if self.n_grid.is_empty() {
            return fail("n_grid is empty".into());
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return fail(format!("n_grid must be strictly increasing: {:?}", self.n_grid));
        }
        if self.n_grid[0] < self.k_folds {
            return fail(format!("every N must be >= k_folds ({}), got {}", self.k_folds, self.n_grid[0]));
        }
        if dataset_size < self.k_folds {
            return fail(format!("dataset has {dataset_size} rows, fewer than k_folds = {}", self.k_folds));
        }
        let max = *self.n_grid.last().unwrap();
        if max > dataset_size {
            return fail(format!("largest N ({max}) exceeds dataset size ({dataset_size})"));
        }
        Ok(())
    }
}

/// `k` log-spaced integers between `lo` and `hi` inclusive, deduplicated.
pub fn log_grid(lo: usize, hi: usize, k: usize) -> Vec<usize> {
    if k <= 1 || lo >= hi {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> =
        (0..k).map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp().round() as usize).collect();
    out.dedup();
    out
}

/// Parses `lo:hi:Klog` or a comma-separated list of sample sizes.
pub fn parse_grid(spec: &str) -> Result<Vec<usize>, ProtocolError> {
    let bad = |why: &str| ProtocolError::Config(format!("bad N grid `{spec}`: {why}"));
    let spec = spec.trim();
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [lo, hi, count] = parts.as_slice() else { return Err(bad("expected lo:hi:Klog")) };
        let count = count.strip_suffix("log").ok_or_else(|| bad("count must end in `log`"))?;
        let lo: usize = lo.parse().map_err(|_| bad("lo is not an integer"))?;
        let hi: usize = hi.parse().map_err(|_| bad("hi is not an integer"))?;
        let count: usize = count.parse().map_err(|_| bad("count is not an integer"))?;
        if lo == 0 || hi < lo || count == 0 {
            return Err(bad("need 0 < lo <= hi and K >= 1"));
        }
        log_grid(lo, hi, count)
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| bad("not an integer list")))
            .collect::<Result<_, _>>()?
    };
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("values must be strictly increasing"));
    }
    Ok(grid)
}

/// One training run: fit on `train`, score on `heldout` (dataset row indices).
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub n: usize,
    pub boot_index: usize,
    pub fold_index: usize,
    pub seed_index: usize,
    /// Seed handed to the learner.
    pub seed: u64,
    pub train: Arc<Vec<usize>>,
    pub heldout: Arc<Vec<usize>>,
}

/// Splits `sample` into `k` folds by a seeded shuffle of positions. Fold
/// sizes differ by at most one. Returns `(train, heldout)` per fold.
pub fn plan_folds<R: Rng + ?Sized>(sample: &[usize], k: usize, rng: &mut R) -> Vec<(Vec<usize>, Vec<usize>)> {
    let n = sample.len();
    let mut positions: Vec<usize> = (0..n).collect();
    positions.shuffle(rng);
    let mut fold_of = vec![0usize; n];
    for j in 0..k {
        for &p in &positions[j * n / k..(j + 1) * n / k] {
            fold_of[p] = j;
        }
    }
    (0..k)
        .map(|j| {
            let (mut train, mut heldout) = (Vec::new(), Vec::new());
            for (p, &row) in sample.iter().enumerate() {
                if fold_of[p] == j {
                    heldout.push(row);
                } else {
                    train.push(row);
                }
            }
            (train, heldout)
        })
        .collect()
}

/// Lays out every job of the experiment, ordered by `(N, boot, fold, seed)`.
pub fn plan_experiment(config: &ProtocolConfig, dataset_size: usize) -> Result<Vec<Job>, ProtocolError> {
    config.validate(dataset_size)?;
    let seed = config.master_seed;
    let mut jobs = Vec::with_capacity(config.n_grid.len() * config.n_boots * config.k_folds * config.m_seeds);
    for &n in &config.n_grid {
        for i in 0..config.n_boots {
            let mut boot_rng = rng::stream(seed, &[tag::BOOTSTRAP, n as u64, i as u64]);
            let sample: Vec<usize> = (0..n).map(|_| boot_rng.gen_range(0..dataset_size)).collect();
            let mut fold_rng = rng::stream(seed, &[tag::FOLDS, n as u64, i as u64]);
            for (j, (train, heldout)) in plan_folds(&sample, config.k_folds, &mut fold_rng).into_iter().enumerate() {
                let (train, heldout) = (Arc::new(train), Arc::new(heldout));
                for l in 0..config.m_seeds {
                    jobs.push(Job {
                        n,
                        boot_index: i,
                        fold_index: j,
                        seed_index: l,
                        seed: rng::derive_seed(seed, &[tag::TRAIN, n as u64, i as u64, j as u64, l as u64]),
                        train: Arc::clone(&train),
                        heldout: Arc::clone(&heldout),
                    });
                }
            }
        }
    }
    Ok(jobs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn config(n: usize, k: usize, m: usize, grid: Vec<usize>) -> ProtocolConfig {
        ProtocolConfig { n_boots: n, k_folds: k, m_seeds: m, n_grid: grid, master_seed: 3 }
    }

    #[test]
    fn smallest_plan_has_two_disjoint_folds() {
        let jobs = plan_experiment(&config(1, 2, 1, vec![4]), 4).unwrap();
        assert_eq!(jobs.len(), 2);
        assert!(jobs.iter().all(|j| j.heldout.len() == 2 && j.train.len() == 2));
        // the two held-out folds together are the bootstrap sample, which is
        // also what each job's train ∪ heldout recovers
        let mut a: Vec<usize> = jobs[0].heldout.iter().chain(jobs[1].heldout.iter()).copied().collect();
        let mut b: Vec<usize> = jobs[0].train.iter().chain(jobs[0].heldout.iter()).copied().collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
        assert_eq!(*jobs[0].train, *jobs[1].heldout);
    }

    #[test]
    fn default_layout_trains_one_hundred_models_per_n() {
        let cfg = ProtocolConfig { n_grid: vec![1000], ..ProtocolConfig::default() };
        assert_eq!(plan_experiment(&cfg, 1500).unwrap().len(), 100);
    }

    #[test]
    fn plans_are_deterministic() {
        let cfg = config(2, 3, 2, vec![10, 20]);
        assert_eq!(plan_experiment(&cfg, 30).unwrap(), plan_experiment(&cfg, 30).unwrap());
        let other = ProtocolConfig { master_seed: 4, ..cfg.clone() };
        assert_ne!(plan_experiment(&cfg, 30).unwrap(), plan_experiment(&other, 30).unwrap());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(plan_experiment(&config(1, 1, 1, vec![4]), 4).is_err());
        assert!(plan_experiment(&config(1, 2, 1, vec![4]), 3).is_err());
        assert!(plan_experiment(&config(1, 5, 1, vec![4]), 10).is_err());
        assert!(plan_experiment(&config(1, 2, 1, vec![8, 4]), 10).is_err());
        assert!(plan_experiment(&config(0, 2, 1, vec![4]), 10).is_err());
    }

    #[test]
    fn grid_syntax() {
        let g = parse_grid("50:5000:12log").unwrap();
        assert_eq!(g.len(), 12);
        assert_eq!((g[0], g[11]), (50, 5000));
        assert_eq!(parse_grid("5,10,20").unwrap(), vec![5, 10, 20]);
        assert_eq!(parse_grid("1:4:10log").unwrap(), vec![1, 2, 3, 4]);
        assert!(parse_grid("10,5").is_err());
        assert!(parse_grid("1:4:10").is_err());
        assert!(parse_grid("x").is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_each_bootstrap(n in 4usize..60, k in 2usize..6, seed in any::<u64>()) {
            prop_assume!(n >= k);
            let cfg = ProtocolConfig { n_boots: 2, k_folds: k, m_seeds: 1, n_grid: vec![n], master_seed: seed };
            let jobs = plan_experiment(&cfg, n + 7).unwrap();
            for boot in 0..2 {
                let folds: Vec<&Job> = jobs.iter().filter(|j| j.boot_index == boot).collect();
                prop_assert_eq!(folds.len(), k);
                let sizes: Vec<usize> = folds.iter().map(|j| j.heldout.len()).collect();
                prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
                prop_assert_eq!(sizes.iter().sum::<usize>(), n);
                let mut union: Vec<usize> = folds.iter().flat_map(|j| j.heldout.iter().copied()).collect();
                let mut sample: Vec<usize> = folds[0].train.iter().chain(folds[0].heldout.iter()).copied().collect();
                union.sort_unstable();
                sample.sort_unstable();
                prop_assert_eq!(union, sample);
                for j in &folds {
                    prop_assert_eq!(j.train.len() + j.heldout.len(), n);
                }
            }
        }
    }
}
