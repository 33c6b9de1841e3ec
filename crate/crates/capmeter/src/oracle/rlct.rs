//! Volume-ratio estimate of the real log-canonical threshold.
//!
//! `K ≈ (log V(aε) - log V(ε)) / log a`, where `V(t)` is the prior mass of
//! the sub-level set `{w : Ĥ(w) < t}`. Both volumes are estimated from one
//! shared set of prior draws, so the low-level hits are a subset of the
//! high-level hits and the ratio has a binomial standard error.

use rand::Rng;

use super::OracleError;
use crate::rng;

/// Fewest samples below the lower level for which an estimate is returned.
pub const MIN_LOW_LEVEL_HITS: usize = 20;

pub trait PriorSampler {
    fn dim(&self) -> usize;
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]);
}

/// Uniform prior on the axis-aligned cube `[lo, hi]^dim`.
#[derive(Debug, Clone, Copy)]
pub struct UniformBox {
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
}

impl UniformBox {
    pub fn symmetric(dim: usize, half_width: f64) -> Self {
        Self { dim, lo: -half_width, hi: half_width }
    }
}

impl PriorSampler for UniformBox {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = rng.gen_range(self.lo..self.hi);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlctEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Samples with energy below `eps`.
    pub low_hits: usize,
    /// Samples with energy below `a · eps`.
    pub high_hits: usize,
    pub n_samples: usize,
}

pub fn rlct_volume_estimate<F, S>(
    energy: F,
    prior: &S,
    eps: f64,
    a: f64,
    n_samples: usize,
    seed: u64,
) -> Result<RlctEstimate, OracleError>
where
    F: Fn(&[f64]) -> f64,
    S: PriorSampler,
{
    if !(eps.is_finite() && eps > 0.0) {
        return Err(OracleError::InvalidArgument(format!("eps must be > 0, got {eps}")));
    }
    if !(a.is_finite() && a > 1.0) {
        return Err(OracleError::InvalidArgument(format!("a must be > 1, got {a}")));
    }
    let mut rng = rng::stream(seed, &[]);
    let mut w = vec![0.0; prior.dim()];
    let upper = a * eps;
    let (mut low, mut high) = (0usize, 0usize);
    for _ in 0..n_samples {
        prior.sample(&mut rng, &mut w);
        let h = energy(&w);
        if h < upper {
            high += 1;
            if h < eps {
                low += 1;
            }
        }
    }
    if low < MIN_LOW_LEVEL_HITS {
        return Err(OracleError::InsufficientHits { hits: low, needed: MIN_LOW_LEVEL_HITS });
    }
    let log_a = a.ln();
    // Given `high`, `low` is Binomial(high, q); Var[log q̂] ≈ (1 - q) / (high q).
    let value = (high as f64 / low as f64).ln() / log_a;
    let stderr = (1.0 / low as f64 - 1.0 / high as f64).max(0.0).sqrt() / log_a;
    Ok(RlctEstimate { value, stderr, low_hits: low, high_hits: high, n_samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_sq_norm(w: &[f64]) -> f64 {
        0.5 * w.iter().map(|x| x * x).sum::<f64>()
    }

    #[test]
    fn quadratic_energies_give_half_the_dimension() {
        for (dim, eps) in [(1usize, 0.01), (2, 0.01), (4, 0.05)] {
            let est =
                rlct_volume_estimate(half_sq_norm, &UniformBox::symmetric(dim, 1.0), eps, 2.0, 200_000, 11).unwrap();
            let target = dim as f64 / 2.0;
            assert!((est.value - target).abs() < 4.0 * est.stderr + 0.02 * target, "dim {dim}: {est:?}");
            assert!(est.low_hits <= est.high_hits);
        }
    }

    #[test]
    fn too_few_hits_is_reported() {
        let err = rlct_volume_estimate(half_sq_norm, &UniformBox::symmetric(4, 1.0), 1e-6, 2.0, 1000, 1).unwrap_err();
        assert!(matches!(err, OracleError::InsufficientHits { needed: MIN_LOW_LEVEL_HITS, .. }));
    }

    #[test]
    fn deterministic_given_seed() {
        let run = || rlct_volume_estimate(half_sq_norm, &UniformBox::symmetric(2, 1.0), 0.01, 2.0, 50_000, 3).unwrap();
        assert_eq!(run(), run());
    }

    #[test]
    fn argument_checks() {
        let prior = UniformBox::symmetric(1, 1.0);
        assert!(rlct_volume_estimate(half_sq_norm, &prior, 0.0, 2.0, 10, 0).is_err());
        assert!(rlct_volume_estimate(half_sq_norm, &prior, 0.1, 1.0, 10, 0).is_err());
    }
}
