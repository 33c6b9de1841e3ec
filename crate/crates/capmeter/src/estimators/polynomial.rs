use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{curve_weights, nnls, CapacityEstimate, CapacityMethod, EstimatorError};
use crate::protocol::{EnergyCurve, EnergyScale};

pub const DEFAULT_DEGREE: usize = 7;
const GRID_POINTS: usize = 64;
const CONSTRAINT_TOL: f64 = 1e-9;

/// `Ū` as a polynomial in `x = log N`.
///
/// Coefficients are in the Chebyshev basis on `t ∈ [-1, 1]`, the affine image
/// of `[log N_min, log N_max]`; this keeps the normal equations well
/// conditioned at degree 7.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialEnergyModel {
    pub degree: usize,
    pub coeffs: Vec<f64>,
    pub log_n_min: f64,
    pub log_n_max: f64,
    /// N values where `dŪ/dN ≤ 0` and `dC/dN ≥ 0` were imposed.
    pub constraint_grid: Vec<f64>,
    /// Covariance of `coeffs` from the unconstrained weighted fit, scaled by
    /// the residual variance of the constrained fit.
    pub covariance: Vec<Vec<f64>>,
    pub active_constraints: usize,
    /// Largest constraint violation left after solving (0 when none).
    pub max_violation: f64,
    pub residual_rms: f64,
    pub scale: EnergyScale,
}

/// `T_k`, `T_k'` and `T_k''` at `t` for `k = 0..=degree`.
fn chebyshev(t: f64, degree: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = degree + 1;
    let (mut v, mut d1, mut d2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    v[0] = 1.0;
    if n > 1 {
        v[1] = t;
        d1[1] = 1.0;
    }
    for k in 1..n - 1 {
        v[k + 1] = 2.0 * t * v[k] - v[k - 1];
        d1[k + 1] = 2.0 * v[k] + 2.0 * t * d1[k] - d1[k - 1];
        d2[k + 1] = 4.0 * d1[k] + 2.0 * t * d2[k] - d2[k - 1];
    }
    (v, d1, d2)
}

impl PolynomialEnergyModel {
    fn half_width(&self) -> f64 {
        0.5 * (self.log_n_max - self.log_n_min)
    }

    fn t(&self, n: f64) -> f64 {
        (2.0 * n.ln() - self.log_n_min - self.log_n_max) / (self.log_n_max - self.log_n_min)
    }

    pub fn n_range(&self) -> (f64, f64) {
        (self.log_n_min.exp(), self.log_n_max.exp())
    }

    pub fn energy(&self, n: f64) -> f64 {
        let (v, _, _) = chebyshev(self.t(n), self.degree);
        dot(&self.coeffs, &v)
    }

    /// `dŪ/d(log N)`.
    pub fn slope(&self, n: f64) -> f64 {
        let (_, d1, _) = chebyshev(self.t(n), self.degree);
        dot(&self.coeffs, &d1) / self.half_width()
    }

    /// `C(N) = -N dŪ/d(log N)`, unclipped.
    pub fn capacity(&self, n: f64) -> f64 {
        -n * self.slope(n)
    }

    /// `dC/dN = -(Ū' + Ū'')` with primes in `log N`.
    pub fn capacity_slope(&self, n: f64) -> f64 {
        let (_, d1, d2) = chebyshev(self.t(n), self.degree);
        let h = self.half_width();
        -(dot(&self.coeffs, &d1) / h + dot(&self.coeffs, &d2) / (h * h))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Weighted least-squares polynomial in `log N` subject to a decreasing
/// energy and an increasing capacity on a 64-point log grid.
///
/// Solved as a least-squares problem with inequality constraints reduced to
/// least distance programming and then to non-negative least squares.
pub fn fit_monotone_polynomial(curve: &EnergyCurve, degree: usize) -> Result<PolynomialEnergyModel, EstimatorError> {
    let m = curve.len();
    let n = degree + 1;
    if degree == 0 {
        return Err(EstimatorError::InvalidArgument("polynomial degree must be >= 1".into()));
    }
    if m < degree + 2 {
        return Err(EstimatorError::InsufficientPoints { needed: degree + 2, got: m });
    }
    let ns = curve.ns();
    if ns.iter().any(|&v| !(v > 0.0)) {
        return Err(EstimatorError::InvalidArgument("curve N values must be positive".into()));
    }
    let (x_lo, x_hi) = (ns[0].ln(), ns[m - 1].ln());
    let half = 0.5 * (x_hi - x_lo);
    let to_t = |x: f64| (2.0 * x - x_lo - x_hi) / (x_hi - x_lo);

    let weights = curve_weights(&curve.stderrs());
    let y = curve.means();
    let mut e = DMatrix::zeros(m, n);
    let mut f = DVector::zeros(m);
    for i in 0..m {
        let sw = weights[i].sqrt();
        let (v, _, _) = chebyshev(to_t(ns[i].ln()), degree);
        for k in 0..n {
            e[(i, k)] = sw * v[k];
        }
        f[i] = sw * y[i];
    }

    let grid: Vec<f64> =
        (0..GRID_POINTS).map(|g| (x_lo + (x_hi - x_lo) * g as f64 / (GRID_POINTS - 1) as f64).exp()).collect();
    // rows: -Ū'(x) ≥ 0 and -(Ū' + Ū'') ≥ 0, each normalised to unit length
    let mut g = DMatrix::zeros(2 * GRID_POINTS, n);
    for (gi, &gn) in grid.iter().enumerate() {
        let (_, d1, d2) = chebyshev(to_t(gn.ln()), degree);
        for k in 0..n {
            g[(2 * gi, k)] = -d1[k] / half;
            g[(2 * gi + 1, k)] = -(d1[k] / half + d2[k] / (half * half));
        }
    }
    for mut row in g.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }

    let qr = e.clone().qr();
    let r = qr.r();
    let qtf = qr.q().transpose() * &f;
    let r_inv = r
        .clone()
        .try_inverse()
        .filter(|inv| inv.iter().all(|v| v.is_finite()))
        .ok_or_else(|| EstimatorError::SolverFailure("design matrix is rank deficient".into()))?;
    let g_hat = &g * &r_inv;
    let base = -(&g_hat * &qtf);

    let mut h = base.clone();
    let mut coeffs = DVector::zeros(n);
    let mut active = 0;
    let mut violation = f64::INFINITY;
    let coeff_scale = |c: &DVector<f64>| c.amax().max(1e-300);
    for pass in 0..8 {
        let (z, duals) = least_distance(&g_hat, &h)?;
        coeffs = &r_inv * (z + &qtf);
        active = duals.iter().filter(|&&u| u > 0.0).count();
        let gc = &g * &coeffs;
        violation = gc.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max) / coeff_scale(&coeffs);
        if violation <= CONSTRAINT_TOL {
            break;
        }
        if pass == 7 {
            return Err(EstimatorError::SolverFailure(format!(
                "constraint violation {violation:e} above {CONSTRAINT_TOL:e} after {} passes ({active} active)",
                pass + 1
            )));
        }
        // tighten the violated rows by their shortfall and solve again
        for i in 0..h.len() {
            if gc[i] < 0.0 {
                h[i] -= gc[i] * (1.0 + pass as f64);
            }
        }
    }

    let resid = &e * &coeffs - &f;
    let rss = resid.norm_squared();
    let dof = (m - n).max(1) as f64;
    let cov = (&r_inv * r_inv.transpose()) * (rss / dof);
    let residual_rms = {
        let unweighted: f64 = (0..m)
            .map(|i| {
                let (v, _, _) = chebyshev(to_t(ns[i].ln()), degree);
                (coeffs.iter().zip(&v).map(|(c, t)| c * t).sum::<f64>() - y[i]).powi(2)
            })
            .sum();
        (unweighted / m as f64).sqrt()
    };

    Ok(PolynomialEnergyModel {
        degree,
        coeffs: coeffs.iter().copied().collect(),
        log_n_min: x_lo,
        log_n_max: x_hi,
        constraint_grid: grid,
        covariance: (0..n).map(|i| (0..n).map(|j| cov[(i, j)]).collect()).collect(),
        active_constraints: active,
        max_violation: violation.max(0.0),
        residual_rms,
        scale: curve.scale,
    })
}

/// `min ‖z‖` subject to `G z ≥ h`, via NNLS on the stacked system
/// `[Gᵀ; hᵀ] u ≈ e_{n+1}`. Also returns the multipliers `u`.
fn least_distance(g: &DMatrix<f64>, h: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>), EstimatorError> {
    let (rows, n) = g.shape();
    let mut stacked = DMatrix::zeros(n + 1, rows);
    stacked.view_mut((0, 0), (n, rows)).copy_from(&g.transpose());
    stacked.row_mut(n).copy_from(&h.transpose());
    let mut target = DVector::zeros(n + 1);
    target[n] = 1.0;
    let u = nnls(&stacked, &target)?;
    let residual = &stacked * &u - &target;
    if residual.norm() < 1e-12 || residual[n].abs() < 1e-14 {
        return Err(EstimatorError::SolverFailure("constraints are infeasible".into()));
    }
    let z = -residual.rows(0, n) / residual[n];
    Ok((z, u))
}

/// `C(N) = -N² dŪ/dN` from the fitted polynomial, with a delta-method stderr.
/// The stderr ignores the constraints and is approximate when any are active.
pub fn capacity_from_polynomial(model: &PolynomialEnergyModel, n: usize) -> Result<CapacityEstimate, EstimatorError> {
    let nf = n as f64;
    let (lo, hi) = model.n_range();
    let slack = 1e-9 * hi;
    if !(nf >= lo - slack && nf <= hi + slack) {
        return Err(EstimatorError::OutOfRange { n: nf, lo, hi });
    }
    let (_, d1, _) = chebyshev(model.t(nf), model.degree);
    let grad: Vec<f64> = d1.iter().map(|d| -nf * d / model.half_width()).collect();
    let var: f64 = (0..grad.len())
        .flat_map(|i| (0..grad.len()).map(move |j| (i, j)))
        .map(|(i, j)| grad[i] * model.covariance[i][j] * grad[j])
        .sum();
    Ok(CapacityEstimate {
        value: model.capacity(nf).max(0.0),
        stderr: var.max(0.0).sqrt(),
        at_n: n,
        method: CapacityMethod::Polynomial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::log_grid;

    fn curve_of(f: impl Fn(f64) -> f64, ns: &[usize]) -> EnergyCurve {
        let means: Vec<f64> = ns.iter().map(|&n| f(n as f64)).collect();
        EnergyCurve::from_values(ns, &means, &vec![0.0; ns.len()]).unwrap()
    }

    fn grid15() -> Vec<usize> {
        let g = log_grid(50, 5000, 15);
        assert_eq!(g.len(), 15);
        g
    }

    #[test]
    fn chebyshev_derivatives_match_finite_differences() {
        let h = 1e-6;
        for &t in &[-0.9, -0.2, 0.4, 0.95] {
            let (_, d1, d2) = chebyshev(t, 9);
            let (up, ..) = chebyshev(t + h, 9);
            let (down, ..) = chebyshev(t - h, 9);
            let (_, up1, _) = chebyshev(t + h, 9);
            let (_, down1, _) = chebyshev(t - h, 9);
            for k in 0..10 {
                assert!(((up[k] - down[k]) / (2.0 * h) - d1[k]).abs() < 1e-6);
                assert!(((up1[k] - down1[k]) / (2.0 * h) - d2[k]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn inverse_n_energy_has_unit_capacity() {
        let ns = grid15();
        let model = fit_monotone_polynomial(&curve_of(|n| 1.0 / n, &ns), DEFAULT_DEGREE).unwrap();
        // interior two quartiles of the grid
        for &n in &ns[4..11] {
            let c = capacity_from_polynomial(&model, n).unwrap().value;
            assert!((c - 1.0).abs() < 0.05, "C({n}) = {c}");
        }
        assert!((capacity_from_polynomial(&model, 500).unwrap().value - 1.0).abs() < 0.05);
    }

    #[test]
    fn increasing_energy_is_forced_flat_or_decreasing() {
        let ns = grid15();
        let model = fit_monotone_polynomial(&curve_of(|n| n.ln(), &ns), DEFAULT_DEGREE).unwrap();
        assert!(model.active_constraints > 0);
        for &gn in &model.constraint_grid {
            assert!(model.slope(gn) <= 1e-9 * model.coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs())));
        }
    }

    #[test]
    fn constant_energy_has_zero_capacity() {
        let ns = grid15();
        let model = fit_monotone_polynomial(&curve_of(|_| 0.7, &ns), DEFAULT_DEGREE).unwrap();
        for &n in &ns {
            assert!(capacity_from_polynomial(&model, n).unwrap().value.abs() < 1e-6);
        }
    }

    #[test]
    fn out_of_range_and_too_few_points() {
        let ns = grid15();
        let model = fit_monotone_polynomial(&curve_of(|n| 1.0 / n, &ns), DEFAULT_DEGREE).unwrap();
        assert!(matches!(capacity_from_polynomial(&model, 10), Err(EstimatorError::OutOfRange { .. })));
        assert!(matches!(capacity_from_polynomial(&model, 6000), Err(EstimatorError::OutOfRange { .. })));
        let short = curve_of(|n| 1.0 / n, &ns[..8]);
        assert!(matches!(
            fit_monotone_polynomial(&short, DEFAULT_DEGREE),
            Err(EstimatorError::InsufficientPoints { needed: 9, got: 8 })
        ));
    }

    #[test]
    fn constraints_hold_on_the_grid_for_a_noisy_curve() {
        let ns = grid15();
        let noise = [0.3, -0.2, 0.5, -0.4, 0.1, 0.2, -0.5, 0.4, -0.1, 0.0, 0.3, -0.3, 0.2, -0.2, 0.1];
        let means: Vec<f64> = ns.iter().zip(noise).map(|(&n, e)| 0.2 + 20.0 / n as f64 + 1e-3 * e).collect();
        let curve = EnergyCurve::from_values(&ns, &means, &[1e-3; 15]).unwrap();
        let model = fit_monotone_polynomial(&curve, DEFAULT_DEGREE).unwrap();
        let scale = model.coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        for &gn in &model.constraint_grid {
            assert!(model.slope(gn) <= 1e-8 * scale);
            assert!(model.capacity_slope(gn) >= -1e-8 * scale);
        }
    }
}
