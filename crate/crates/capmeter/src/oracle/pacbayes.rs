use super::{HessianSpectrum, OracleError};

/// Lower clamp applied by [`pacbayes_epsilon_default`].
pub const EPSILON_FLOOR: f64 = 1e-8;

fn threshold(eps: f64, n: u64) -> f64 {
    eps / (2.0 * (n - 1) as f64)
}

fn require_n(n: u64) -> Result<(), OracleError> {
    if n < 2 {
        return Err(OracleError::InvalidArgument(format!("N must be >= 2, got {n}")));
    }
    Ok(())
}

/// Number of eigenvalues with `|λᵢ| ≥ ε / (2(N-1))`.
pub fn pacbayes_effective_dim(spec: &HessianSpectrum, n: u64) -> Result<usize, OracleError> {
    require_n(n)?;
    let t = threshold(spec.epsilon(), n);
    Ok(spec.eigenvalues().iter().filter(|l| l.abs() >= t).count())
}

/// Analytic PAC-Bayes bound for a Gaussian prior and Gaussian posterior:
///
/// `[Σ_{i ≤ p(N,ε)} log(2(N-1)|λᵢ| + ε) + 2/κ + ε·‖w - w0‖²] / (4(N-1))`
///
/// where the sum runs over the eigenvalues counted by
/// [`pacbayes_effective_dim`]. `kappa` is the eigenvalue decay rate past
/// that dimension and is always supplied by the caller.
pub fn pacbayes_bound(spec: &HessianSpectrum, n: u64, kappa: f64, dist_sq: f64) -> Result<f64, OracleError> {
    require_n(n)?;
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(OracleError::InvalidArgument(format!("kappa must be > 0, got {kappa}")));
    }
    if !(dist_sq.is_finite() && dist_sq >= 0.0) {
        return Err(OracleError::InvalidArgument(format!("dist_sq must be >= 0, got {dist_sq}")));
    }
    let eps = spec.epsilon();
    let t = threshold(eps, n);
    let scale = 2.0 * (n - 1) as f64;
    let log_sum: f64 = spec.eigenvalues().iter().filter(|l| l.abs() >= t).map(|l| (scale * l.abs() + eps).ln()).sum();
    Ok((log_sum + 2.0 / kappa + eps * dist_sq) / (2.0 * scale))
}

/// Prior precision that makes the PAC-Bayes complexity term equal to the
/// learning capacity: `ε = -2 · HM(λ) · Σ log λᵢ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonChoice {
    pub epsilon: f64,
    /// Unclamped formula value.
    pub raw: f64,
    /// True when `raw < EPSILON_FLOOR` and the floor was returned instead.
    pub clamped: bool,
}

pub fn pacbayes_epsilon_default(spec: &HessianSpectrum) -> Result<EpsilonChoice, OracleError> {
    spec.require_positive()?;
    let l = spec.eigenvalues();
    let hm = l.len() as f64 / l.iter().map(|v| 1.0 / v).sum::<f64>();
    let raw = -2.0 * hm * l.iter().map(|v| v.ln()).sum::<f64>();
    let clamped = !(raw >= EPSILON_FLOOR);
    Ok(EpsilonChoice { epsilon: if clamped { EPSILON_FLOOR } else { raw }, raw, clamped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::E;

    fn spectrum(l: &[f64], eps: f64) -> HessianSpectrum {
        HessianSpectrum::new(l.to_vec(), eps, None).unwrap()
    }

    #[test]
    fn effective_dim_examples() {
        assert_eq!(pacbayes_effective_dim(&spectrum(&[1.0, 0.1, 0.001], 0.2), 101).unwrap(), 3);
        assert_eq!(pacbayes_effective_dim(&spectrum(&[1.0, 0.1, 0.001], 0.4), 101).unwrap(), 2);
        assert_eq!(pacbayes_effective_dim(&spectrum(&[0.0, 0.0], 0.7), 10).unwrap(), 0);
        assert!(pacbayes_effective_dim(&spectrum(&[1.0], 1.0), 1).is_err());
    }

    #[test]
    fn effective_dim_counts_magnitudes() {
        assert_eq!(pacbayes_effective_dim(&spectrum(&[1.0, -1.0, 1e-6], 0.2), 11).unwrap(), 2);
    }

    #[test]
    fn bound_examples() {
        let with_dist = |l: f64, d: f64| pacbayes_bound(&spectrum(&[l], 1.0), 2, 1.0, d).unwrap();
        assert_abs_diff_eq!(with_dist(1.0, 0.0), ((3.0f64).ln() + 2.0) / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(with_dist(1.0, 0.0), 0.774653, epsilon = 1e-6);
        assert_abs_diff_eq!(with_dist(0.0, 0.0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(with_dist(1.0, 4.0), 1.774653, epsilon = 1e-6);
    }

    #[test]
    fn bound_rejects_bad_arguments() {
        let s = spectrum(&[1.0], 1.0);
        assert!(pacbayes_bound(&s, 2, 0.0, 0.0).is_err());
        assert!(pacbayes_bound(&s, 2, 1.0, -1.0).is_err());
    }

    #[test]
    fn epsilon_default_examples() {
        let c = pacbayes_epsilon_default(&spectrum(&[1.0 / E, 1.0 / E], 0.0)).unwrap();
        assert_abs_diff_eq!(c.epsilon, 4.0 / E, epsilon = 1e-12);
        assert!(!c.clamped);

        let c = pacbayes_epsilon_default(&spectrum(&[1.0, 1.0], 0.0)).unwrap();
        assert_eq!(c.epsilon, EPSILON_FLOOR);
        assert!(c.clamped);

        let c = pacbayes_epsilon_default(&spectrum(&[E, E], 0.0)).unwrap();
        assert!(c.clamped);
        assert!(c.raw < 0.0);

        assert!(pacbayes_epsilon_default(&spectrum(&[1.0, 0.0], 0.0)).is_err());
    }
}
