use nalgebra::{DMatrix, DVector};

use super::EstimatorError;

/// Non-negative least squares, `min ‖Ax − b‖` subject to `x ≥ 0`, by the
/// Lawson–Hanson active-set method.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>, EstimatorError> {
    let n = a.ncols();
    let scale = a.amax().max(b.amax()).max(1.0);
    let tol = 1e-12 * scale * scale * (a.nrows().max(n) as f64);
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let max_outer = 3 * n + 10;

    for outer in 0.. {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n).filter(|&j| !passive[j]).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(t) = candidate.filter(|&t| w[t] > tol) else { break };
        if outer >= max_outer {
            return Err(EstimatorError::SolverFailure(format!(
                "NNLS active set did not settle in {max_outer} iterations (max dual {:e})",
                w[t]
            )));
        }
        passive[t] = true;

        for inner in 0.. {
            if inner > 3 * n + 10 {
                return Err(EstimatorError::SolverFailure("NNLS inner loop did not terminate".into()));
            }
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let sub = a.select_columns(&idx);
            let sol = sub
                .svd(true, true)
                .solve(b, 1e-14 * scale)
                .map_err(|e| EstimatorError::SolverFailure(format!("NNLS subproblem: {e}")))?;
            let mut s = DVector::zeros(n);
            for (k, &j) in idx.iter().enumerate() {
                s[j] = sol[k];
            }
            if idx.iter().all(|&j| s[j] > 0.0) {
                x = s;
                break;
            }
            let alpha =
                idx.iter().filter(|&&j| s[j] <= 0.0).map(|&j| x[j] / (x[j] - s[j])).fold(f64::INFINITY, f64::min);
            x += (s - &x) * alpha;
            for &j in &idx {
                if x[j] <= 1e-15 * scale {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    Ok(x)
}
