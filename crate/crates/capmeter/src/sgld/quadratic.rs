use super::DifferentiableEnergy;
use crate::oracle::{quad_log_z, HessianSpectrum, OracleError, PriorKind};

/// Data-free quadratic energy `Ĥ(w) = ½ Σ λᵢ (wᵢ - bᵢ)²` with the
/// spectrum's eigenvalues as the diagonal Hessian and its offsets (if any)
/// as the minimiser.
///
/// Its "per-example probability" is `exp(-Ĥ(w))`, so one extra sample
/// multiplies the likelihood by exactly that factor and the chain's
/// probability-complement energy has a closed form.
#[derive(Debug, Clone)]
pub struct QuadraticTestEnergy {
    lambdas: Vec<f64>,
    centre: Vec<f64>,
}

impl QuadraticTestEnergy {
    pub fn new(spectrum: &HessianSpectrum) -> Result<Self, OracleError> {
        spectrum.require_positive()?;
        let lambdas = spectrum.eigenvalues().to_vec();
        let centre = spectrum.offsets().map_or_else(|| vec![0.0; lambdas.len()], <[f64]>::to_vec);
        Ok(Self { lambdas, centre })
    }

    fn energy(&self, w: &[f64]) -> f64 {
        0.5 * self.lambdas.iter().zip(&self.centre).zip(w).map(|((l, b), x)| l * (x - b) * (x - b)).sum::<f64>()
    }
}

impl DifferentiableEnergy for QuadraticTestEnergy {
    fn dim(&self) -> usize {
        self.lambdas.len()
    }

    fn data_len(&self) -> usize {
        0
    }

    fn value(&self, w: &[f64], _rows: &[usize]) -> f64 {
        self.energy(w)
    }

    fn gradient(&self, w: &[f64], _rows: &[usize], out: &mut [f64]) {
        for (((o, l), b), x) in out.iter_mut().zip(&self.lambdas).zip(&self.centre).zip(w) {
            *o = l * (x - b);
        }
    }

    fn per_example_prob(&self, w: &[f64], _row: usize) -> f64 {
        (-self.energy(w)).exp()
    }

    fn initial_weights(&self, _seed: u64) -> Vec<f64> {
        self.centre.clone()
    }
}

/// Exact chain energy for [`QuadraticTestEnergy`]:
/// `E_{p(w;N)}[1 - e^{-Ĥ(w)}] = 1 - Z(N+1)/Z(N)`.
pub fn oracle_probability_complement(spec: &HessianSpectrum, prior: PriorKind, n: u64) -> Result<f64, OracleError> {
    let step = quad_log_z(spec, prior, (n + 1) as f64)? - quad_log_z(spec, prior, n as f64)?;
    Ok(-step.exp_m1())
}

/// Finite-difference capacity `-N² (U(N+Δ) - U(N)) / Δ` of the exact chain
/// energy; the quantity a schedule step from `N` to `N+Δ` estimates.
pub fn oracle_capacity_fd(spec: &HessianSpectrum, prior: PriorKind, n: u64, delta: u64) -> Result<f64, OracleError> {
    if delta == 0 {
        return Err(OracleError::InvalidArgument("delta must be >= 1".into()));
    }
    let u0 = oracle_probability_complement(spec, prior, n)?;
    let u1 = oracle_probability_complement(spec, prior, n + delta)?;
    Ok(-((n * n) as f64) * (u1 - u0) / delta as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> HessianSpectrum {
        HessianSpectrum::new(vec![1.0, 1.0], 1.0, None).unwrap()
    }

    #[test]
    fn unit_spectrum_closed_form() {
        // Z(N) = 1/(N+1) for p = 2, λ = ε = 1, so U = 1 - (N+1)/(N+2)
        let s = unit();
        for n in [5u64, 10, 20, 40] {
            let u = oracle_probability_complement(&s, s.gaussian_prior(), n).unwrap();
            assert_relative_eq!(u, 1.0 / (n as f64 + 2.0), epsilon = 1e-14);
        }
        let c = oracle_capacity_fd(&s, s.gaussian_prior(), 10, 1).unwrap();
        assert_relative_eq!(c, 100.0 * (1.0 / 12.0 - 1.0 / 13.0), epsilon = 1e-12);
    }

    #[test]
    fn matches_monte_carlo_over_the_gibbs_posterior() {
        // draw w ~ N(0, 1/(Nλ+ε)) directly and average 1 - exp(-Ĥ)
        let s = HessianSpectrum::new(vec![2.0, 0.5], 0.3, None).unwrap();
        let energy = QuadraticTestEnergy::new(&s).unwrap();
        let n = 7.0;
        let mut rng = crate::rng::stream(1, &[]);
        let draws = 400_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let w: Vec<f64> =
                s.eigenvalues().iter().map(|l| crate::rng::std_normal(&mut rng) / (n * l + 0.3f64).sqrt()).collect();
            acc += 1.0 - energy.per_example_prob(&w, 0);
        }
        let mc = acc / draws as f64;
        let exact = oracle_probability_complement(&s, PriorKind::GaussianIsotropic(0.3), 7).unwrap();
        assert!((mc / exact - 1.0).abs() < 0.01, "{mc} vs {exact}");
    }

    #[test]
    fn gradient_is_the_linear_map() {
        let s = HessianSpectrum::new(vec![3.0, 1.0], 1.0, Some(vec![0.5, -1.0])).unwrap();
        let e = QuadraticTestEnergy::new(&s).unwrap();
        let w = [1.0, 2.0];
        let fd = crate::learners::testing::numeric_gradient(|v| e.value(v, &[]), &w, 1e-6);
        let mut g = [0.0; 2];
        e.gradient(&w, &[], &mut g);
        for k in 0..2 {
            assert!((fd[k] - g[k]).abs() < 1e-6);
        }
    }
}
