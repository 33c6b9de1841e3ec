use super::{
    expect_classes, log_softmax_in_place, Dataset, Label, Learner, LearnerError, PredictiveModel, Standardizer,
};
use crate::sgld::DifferentiableEnergy;

/// Multinomial logistic regression with class 0 as the reference class, so a
/// problem with `d` features and `m` classes has `(m - 1)(d + 1)` free
/// parameters.
///
/// Trained by full-batch gradient descent from zero weights. The L2 term
/// `(l2/2)‖w‖²` (bias included) is applied as a proximal step, which stays
/// stable for any `l2`.
#[derive(Debug, Clone)]
pub struct LogisticLearner {
    pub l2: f64,
    pub epochs: usize,
    pub lr: f64,
    /// Standardise features with training-row statistics before fitting.
    pub standardize: bool,
}

pub fn logistic_learner(l2: f64, epochs: usize, lr: f64) -> Result<LogisticLearner, LearnerError> {
    if !(l2.is_finite() && l2 >= 0.0) {
        return Err(LearnerError::InvalidConfig(format!("l2 must be >= 0, got {l2}")));
    }
    if !(lr.is_finite() && lr > 0.0) {
        return Err(LearnerError::InvalidConfig(format!("lr must be > 0, got {lr}")));
    }
    Ok(LogisticLearner { l2, epochs, lr, standardize: true })
}

/// Mean negative log-likelihood of the logistic model over a dataset.
#[derive(Debug, Clone)]
pub struct LogisticEnergy {
    data: Dataset,
    m: usize,
}

impl LogisticEnergy {
    pub fn new(data: Dataset) -> Result<Self, LearnerError> {
        let (_, m) = expect_classes(&data, "logistic")?;
        Ok(Self { m, data })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn param_count(dim: usize, m: usize) -> usize {
        (m - 1) * (dim + 1)
    }

    fn log_probs(&self, w: &[f64], x: &[f64]) -> Vec<f64> {
        logits(w, x, self.m)
    }

    /// Mean NLL over `rows`, accumulating its gradient into `grad` if given.
    fn evaluate(&self, w: &[f64], rows: &[usize], mut grad: Option<&mut [f64]>) -> f64 {
        let d = self.data.dim();
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        if rows.is_empty() {
            return 0.0;
        }
        let mut loss = 0.0;
        for &r in rows {
            let x = self.data.row(r);
            let Label::Class(y) = self.data.label(r) else { unreachable!() };
            let lp = self.log_probs(w, x);
            loss -= lp[y];
            if let Some(g) = grad.as_deref_mut() {
                for c in 1..self.m {
                    let coef = lp[c].exp() - if c == y { 1.0 } else { 0.0 };
                    let block = &mut g[(c - 1) * (d + 1)..c * (d + 1)];
                    for (gj, xj) in block[..d].iter_mut().zip(x) {
                        *gj += coef * xj;
                    }
                    block[d] += coef;
                }
            }
        }
        let n = rows.len() as f64;
        if let Some(g) = grad {
            g.iter_mut().for_each(|v| *v /= n);
        }
        loss / n
    }
}

fn logits(w: &[f64], x: &[f64], m: usize) -> Vec<f64> {
    let d = x.len();
    let mut z = vec![0.0; m];
    for c in 1..m {
        let block = &w[(c - 1) * (d + 1)..c * (d + 1)];
        z[c] = block[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + block[d];
    }
    log_softmax_in_place(&mut z);
    z
}

impl DifferentiableEnergy for LogisticEnergy {
    fn dim(&self) -> usize {
        Self::param_count(self.data.dim(), self.m)
    }

    fn data_len(&self) -> usize {
        self.data.len()
    }

    fn value(&self, w: &[f64], rows: &[usize]) -> f64 {
        self.evaluate(w, rows, None)
    }

    fn gradient(&self, w: &[f64], rows: &[usize], out: &mut [f64]) {
        self.evaluate(w, rows, Some(out));
    }

    fn per_example_prob(&self, w: &[f64], row: usize) -> f64 {
        let Label::Class(y) = self.data.label(row) else { unreachable!() };
        self.log_probs(w, self.data.row(row))[y].exp()
    }

    fn initial_weights(&self, _seed: u64) -> Vec<f64> {
        vec![0.0; self.dim()]
    }
}

struct LogisticModel {
    scaler: Standardizer,
    weights: Vec<f64>,
    m: usize,
}

impl PredictiveModel for LogisticModel {
    fn log_prob(&self, x: &[f64], y: Label) -> f64 {
        match y {
            Label::Class(c) if c < self.m => logits(&self.weights, &self.scaler.apply(x), self.m)[c],
            _ => f64::NEG_INFINITY,
        }
    }

    fn class_log_probs(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(logits(&self.weights, &self.scaler.apply(x), self.m))
    }
}

impl LogisticLearner {
    /// Fits and returns the raw weights together with the feature map.
    pub fn fit_weights(&self, data: &Dataset, rows: &[usize]) -> Result<(Vec<f64>, Standardizer), LearnerError> {
        if rows.is_empty() {
            return Err(LearnerError::EmptyTrainingSet);
        }
        expect_classes(data, "logistic")?;
        let scaler = if self.standardize { Standardizer::fit(data, rows) } else { Standardizer::identity(data.dim()) };
        let energy = LogisticEnergy::new(data.subset(rows).standardized(&scaler))?;
        let all: Vec<usize> = (0..rows.len()).collect();
        let mut w = vec![0.0; energy.dim()];
        let mut g = vec![0.0; w.len()];
        let shrink = 1.0 / (1.0 + self.lr * self.l2);
        for iteration in 0..self.epochs {
            let loss = energy.evaluate(&w, &all, Some(&mut g));
            if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return Err(LearnerError::NonFiniteLoss { iteration });
            }
            for (wi, gi) in w.iter_mut().zip(&g) {
                *wi = (*wi - self.lr * gi) * shrink;
            }
        }
        Ok((w, scaler))
    }
}

impl Learner for LogisticLearner {
    fn name(&self) -> String {
        format!("logistic(l2={},epochs={},lr={})", self.l2, self.epochs, self.lr)
    }

    fn fit(&self, data: &Dataset, rows: &[usize], _seed: u64) -> Result<Box<dyn PredictiveModel>, LearnerError> {
        let (weights, scaler) = self.fit_weights(data, rows)?;
        let m = data.m_classes().expect("checked in fit_weights");
        Ok(Box::new(LogisticModel { scaler, weights, m }))
    }
}
