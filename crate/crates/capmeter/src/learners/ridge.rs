use nalgebra::{DMatrix, DVector};

use super::{gaussian_log_density, Dataset, Label, Learner, LearnerError, PredictiveModel, Targets};

/// Default noise scale of the Gaussian regression likelihood.
pub const DEFAULT_SIGMA: f64 = 1.0;

/// Linear least squares with an L2 penalty, scored with
/// `log p(y | x) = -(y - f(x))² / (2σ²) - log(σ √(2π))`.
#[derive(Debug, Clone)]
pub struct RidgeLearner {
    pub l2: f64,
    pub sigma: f64,
}

pub fn ridge_learner(l2: f64, sigma: f64) -> Result<RidgeLearner, LearnerError> {
    if !(l2.is_finite() && l2 >= 0.0) {
        return Err(LearnerError::InvalidConfig(format!("l2 must be >= 0, got {l2}")));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(LearnerError::InvalidConfig(format!("sigma must be > 0, got {sigma}")));
    }
    Ok(RidgeLearner { l2, sigma })
}

struct RidgeModel {
    coef: Vec<f64>,
    intercept: f64,
    sigma: f64,
}

impl PredictiveModel for RidgeModel {
    fn log_prob(&self, x: &[f64], y: Label) -> f64 {
        let Label::Value(t) = y else { return f64::NEG_INFINITY };
        let f = self.intercept + self.coef.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        gaussian_log_density(t - f, self.sigma)
    }
}

impl Learner for RidgeLearner {
    fn name(&self) -> String {
        format!("ridge(l2={},sigma={})", self.l2, self.sigma)
    }

    fn fit(&self, data: &Dataset, rows: &[usize], _seed: u64) -> Result<Box<dyn PredictiveModel>, LearnerError> {
        if rows.is_empty() {
            return Err(LearnerError::EmptyTrainingSet);
        }
        let Targets::Regression(values) = data.targets() else {
            return Err(LearnerError::UnsupportedTarget { learner: "ridge".into(), target: "classification" });
        };
        let d = data.dim();
        let design = DMatrix::from_fn(rows.len(), d + 1, |i, j| if j < d { data.row(rows[i])[j] } else { 1.0 });
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&r| values[r]));
        let mut gram = design.transpose() * &design;
        // the intercept is not penalised; a tiny jitter keeps the solve defined
        for j in 0..=d {
            gram[(j, j)] += if j < d { self.l2 } else { 0.0 } + 1e-12;
        }
        let rhs = design.transpose() * y;
        let sol = gram.lu().solve(&rhs).ok_or_else(|| LearnerError::InvalidDataset("singular design matrix".into()))?;
        Ok(Box::new(RidgeModel { coef: sol.as_slice()[..d].to_vec(), intercept: sol[d], sigma: self.sigma }))
    }
}
