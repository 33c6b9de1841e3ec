//! Closed forms for `Ĥ(w) = ½ (w - w*)ᵀ A (w - w*)`.

use std::f64::consts::PI;

use super::{HessianSpectrum, OracleError, PriorKind};

/// `log Z(N)` for a quadratic energy with eigenvalues `λᵢ` under `prior`.
///
/// `n` is real-valued so that limits `N → 0⁺` can be probed; the integer
/// sample sizes used everywhere else are the special case.
///
/// - Uniform prior: `½ Σ log(2π / (N λᵢ))`.
/// - Gaussian prior `N(w0, ε⁻¹I)`: `½ Σ log(ε / (N λᵢ + ε))`, plus, when the
///   spectrum carries offsets `bᵢ`, `-(ε/2) Σ bᵢ² + (ε²/2) Σ bᵢ² / (N λᵢ + ε)`.
pub fn quad_log_z(spec: &HessianSpectrum, prior: PriorKind, n: f64) -> Result<f64, OracleError> {
    if !(n.is_finite() && n > 0.0) {
        return Err(OracleError::InvalidArgument(format!("N must be positive, got {n}")));
    }
    prior.validate()?;
    match prior {
        PriorKind::Uniform => {
            if let Some(&min) = spec.eigenvalues().last() {
                if min <= 0.0 {
                    return Err(OracleError::DivergentPartition(min));
                }
            }
            Ok(spec.eigenvalues().iter().map(|&l| 0.5 * (2.0 * PI / (n * l)).ln()).sum())
        }
        PriorKind::GaussianIsotropic(eps) => {
            spec.require_nonnegative()?;
            let base: f64 = spec.eigenvalues().iter().map(|&l| 0.5 * (eps / (n * l + eps)).ln()).sum();
            let shift = match spec.offsets() {
                None => 0.0,
                Some(b) => spec
                    .eigenvalues()
                    .iter()
                    .zip(b)
                    .map(|(&l, &bi)| -0.5 * eps * bi * bi + 0.5 * eps * eps * bi * bi / (n * l + eps))
                    .sum(),
            };
            Ok(base + shift)
        }
    }
}

/// Exact learning capacity of a quadratic energy under the spectrum's
/// Gaussian prior: `½ Σ (N λᵢ / (N λᵢ + ε))²`.
pub fn quad_capacity_exact(spec: &HessianSpectrum, n: f64) -> Result<f64, OracleError> {
    if !(n.is_finite() && n > 0.0) {
        return Err(OracleError::InvalidArgument(format!("N must be positive, got {n}")));
    }
    spec.gaussian_prior().validate()?;
    spec.require_nonnegative()?;
    let eps = spec.epsilon();
    Ok(spec
        .eigenvalues()
        .iter()
        .map(|&l| {
            let r = n * l / (n * l + eps);
            0.5 * r * r
        })
        .sum())
}

/// Harmonic-mean approximation `p/2 - ε · mean(1/λᵢ)`.
///
/// Valid when `λᵢ ≫ ε/N`; report it next to [`quad_capacity_exact`] rather
/// than in place of it.
pub fn quad_capacity_hm(spec: &HessianSpectrum) -> Result<f64, OracleError> {
    spec.require_positive()?;
    let p = spec.p() as f64;
    let mean_inv = spec.eigenvalues().iter().map(|l| 1.0 / l).sum::<f64>() / p;
    Ok(p / 2.0 - spec.epsilon() * mean_inv)
}

/// Integer-step average energy `log Z(N) - log Z(N+1)`.
pub fn avg_energy_from_logz<F, E>(logz: F, n: u64) -> Result<f64, E>
where
    F: Fn(u64) -> Result<f64, E>,
{
    Ok(logz(n)? - logz(n + 1)?)
}
