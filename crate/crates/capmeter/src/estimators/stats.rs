use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::EstimatorError;

/// Kendall's τ-b over all pairs, corrected for ties in either variable.
pub fn kendall_tau(xs: &[f64], ys: &[f64]) -> Result<f64, EstimatorError> {
    if xs.len() != ys.len() {
        return Err(EstimatorError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(EstimatorError::InvalidArgument("need at least 2 observations".into()));
    }
    let (mut concordant, mut discordant, mut tied_x, mut tied_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let dx = (xs[i] - xs[j]).partial_cmp(&0.0);
            let dy = (ys[i] - ys[j]).partial_cmp(&0.0);
            use std::cmp::Ordering::Equal;
            match (dx, dy) {
                (Some(Equal), Some(Equal)) => {
                    tied_x += 1;
                    tied_y += 1;
                }
                (Some(Equal), _) => tied_x += 1,
                (_, Some(Equal)) => tied_y += 1,
                (a, b) if a == b => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let pairs = (xs.len() * (xs.len() - 1) / 2) as f64;
    let denom = ((pairs - tied_x as f64) * (pairs - tied_y as f64)).sqrt();
    if denom == 0.0 {
        return Err(EstimatorError::AllTied);
    }
    Ok((concordant - discordant) as f64 / denom)
}

/// Ordinary least squares of loss on capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    /// Two-sided p-value for a zero slope.
    pub p_value: f64,
    pub slope_stderr: f64,
    pub n_points: usize,
}

pub fn capacity_loss_regression(points: &[(f64, f64)]) -> Result<Regression, EstimatorError> {
    let n = points.len();
    if n < 3 {
        return Err(EstimatorError::InsufficientPoints { needed: 3, got: n });
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) || !sxx.is_finite() {
        return Err(EstimatorError::DegenerateDesign("all capacities are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let slope_stderr = (rss / (nf - 2.0) / sxx).sqrt();
    let p_value = if slope_stderr == 0.0 || rss <= 1e-28 * points.iter().map(|p| p.1 * p.1).sum::<f64>() {
        0.0
    } else {
        let t = (slope / slope_stderr).abs();
        let dist = StudentsT::new(0.0, 1.0, nf - 2.0).map_err(|e| EstimatorError::DegenerateDesign(e.to_string()))?;
        2.0 * (1.0 - dist.cdf(t))
    };
    Ok(Regression { slope, intercept, p_value, slope_stderr, n_points: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;

    /// Direct τ-b from its definition via sign products.
    fn tau_b_reference(x: &[f64], y: &[f64]) -> f64 {
        let (mut s, mut n1, mut n2) = (0.0, 0.0, 0.0);
        for i in 0..x.len() {
            for j in 0..x.len() {
                if i < j {
                    let a = (x[i] - x[j]).signum() * ((x[i] - x[j]) != 0.0) as i32 as f64;
                    let b = (y[i] - y[j]).signum() * ((y[i] - y[j]) != 0.0) as i32 as f64;
                    s += a * b;
                    n1 += a * a;
                    n2 += b * b;
                }
            }
        }
        s / (n1 * n2).sqrt()
    }

    #[test]
    fn tau_examples() {
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_relative_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(kendall_tau(&[1.0], &[1.0, 2.0]), Err(EstimatorError::LengthMismatch(1, 2)));
        assert_eq!(kendall_tau(&[1.0, 1.0], &[2.0, 3.0]), Err(EstimatorError::AllTied));
    }

    #[test]
    fn exact_line_has_zero_p_value() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        let r = capacity_loss_regression(&pts).unwrap();
        assert_relative_eq!(r.slope, 2.0, epsilon = 1e-12);
        assert_relative_eq!(r.intercept, 1.0, epsilon = 1e-12);
        assert_eq!(r.p_value, 0.0);
    }

    #[test]
    fn constant_capacity_is_degenerate() {
        let pts = [(3.0, 1.0), (3.0, 2.0), (3.0, 0.5)];
        assert!(matches!(capacity_loss_regression(&pts), Err(EstimatorError::DegenerateDesign(_))));
        assert!(matches!(capacity_loss_regression(&pts[..2]), Err(EstimatorError::InsufficientPoints { .. })));
    }

    #[test]
    fn noisy_unit_slope() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|i| {
                let cap = i as f64 / 9.0;
                (cap, cap + 0.01 * crate::rng::std_normal(&mut rng))
            })
            .collect();
        let r = capacity_loss_regression(&pts).unwrap();
        assert!((0.9..=1.1).contains(&r.slope), "slope {}", r.slope);
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn p_value_matches_a_tabulated_t_quantile() {
        // t = 2.306 is the two-sided 5% critical value at 8 degrees of freedom
        let dist = StudentsT::new(0.0, 1.0, 8.0).unwrap();
        assert_relative_eq!(2.0 * (1.0 - dist.cdf(2.306)), 0.05, epsilon = 1e-3);
    }

    proptest! {
        #[test]
        fn tau_matches_reference_with_ties(x in prop::collection::vec(0i32..4, 2..12), y in prop::collection::vec(0i32..4, 12)) {
            let xs: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            let ys: Vec<f64> = y[..xs.len()].iter().map(|&v| v as f64).collect();
            match kendall_tau(&xs, &ys) {
                Ok(t) => {
                    prop_assert!((-1.0..=1.0).contains(&t));
                    prop_assert!((t - tau_b_reference(&xs, &ys)).abs() < 1e-12);
                }
                Err(e) => prop_assert_eq!(e, EstimatorError::AllTied),
            }
        }
    }
}
