//! Adaptive Gauss–Legendre quadrature.

use std::sync::OnceLock;

use thiserror::Error;

const ORDER: usize = 15;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("quadrature did not reach tolerance {tol:e} within {max_intervals} intervals (error estimate {estimate:e})")]
pub struct QuadratureError {
    pub tol: f64,
    pub max_intervals: usize,
    pub estimate: f64,
}

/// Nodes and weights on [-1, 1], found by Newton iteration on `P_n`.
fn rule() -> &'static [(f64, f64); ORDER] {
    static RULE: OnceLock<[(f64, f64); ORDER]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut out = [(0.0, 0.0); ORDER];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out[i] = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        out
    })
}

fn fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * rule().iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>()
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Each interval is accepted when its 15-point estimate and the sum of the
/// estimates on its two halves agree within the interval's share of `tol`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_intervals: usize,
) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    let total = (b - a).abs();
    let mut stack = vec![(a, b, fixed(&f, a, b))];
    let mut result = 0.0;
    let mut intervals = 1usize;
    while let Some((lo, hi, whole)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = fixed(&f, lo, mid);
        let right = fixed(&f, mid, hi);
        let err = (left + right - whole).abs();
        let share = tol * (hi - lo).abs() / total;
        if err <= share || mid == lo || mid == hi {
            result += left + right;
            continue;
        }
        intervals += 1;
        if intervals > max_intervals {
            return Err(QuadratureError { tol, max_intervals, estimate: err });
        }
        stack.push((lo, mid, left));
        stack.push((mid, hi, right));
    }
    Ok(result)
}
