use serde::{Deserialize, Serialize};

use super::{Dataset, LearnerError};
use crate::rng;

/// Teacher–student classification data with a decaying input spectrum.
///
/// Inputs are Gaussian with covariance `diag(e^{-κ·1}, …, e^{-κ·d})`; labels
/// are the argmax of a fixed random one-hidden-layer ReLU teacher whose
/// weights are drawn `N(0, 1/fan_in)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub d: usize,
    pub kappa: f64,
    pub teacher_hidden: usize,
    pub m_classes: usize,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn new(d: usize, kappa: f64, seed: u64) -> Self {
        Self { d, kappa, teacher_hidden: 1000, m_classes: 2, seed }
    }

    fn validate(&self) -> Result<(), LearnerError> {
        if self.d == 0 {
            return Err(LearnerError::InvalidConfig("synthetic d must be >= 1".into()));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(LearnerError::InvalidConfig(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        if self.m_classes < 2 {
            return Err(LearnerError::InvalidConfig("m_classes must be >= 2".into()));
        }
        if self.teacher_hidden == 0 {
            return Err(LearnerError::InvalidConfig("teacher_hidden must be >= 1".into()));
        }
        Ok(())
    }
}

struct Teacher {
    w1: Vec<f64>,
    w2: Vec<f64>,
    d: usize,
    h: usize,
    m: usize,
}

impl Teacher {
    fn new(cfg: &SyntheticConfig) -> Self {
        let (d, h, m) = (cfg.d, cfg.teacher_hidden, cfg.m_classes);
        let mut rng = rng::stream(cfg.seed, &[rng::tag::TEACHER]);
        let s1 = 1.0 / (d as f64).sqrt();
        let s2 = 1.0 / (h as f64).sqrt();
        let w1 = (0..h * d).map(|_| s1 * rng::std_normal(&mut rng)).collect();
        let w2 = (0..m * h).map(|_| s2 * rng::std_normal(&mut rng)).collect();
        Self { w1, w2, d, h, m }
    }

    fn label(&self, x: &[f64], hidden: &mut [f64]) -> usize {
        for (j, a) in hidden.iter_mut().enumerate() {
            *a = self.w1[j * self.d..(j + 1) * self.d].iter().zip(x).map(|(w, v)| w * v).sum::<f64>().max(0.0);
        }
        (0..self.m)
            .map(|c| self.w2[c * self.h..(c + 1) * self.h].iter().zip(hidden.iter()).map(|(w, a)| w * a).sum::<f64>())
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (c, z)| if z > best.1 { (c, z) } else { best })
            .0
    }
}

/// `n` rows of teacher-labelled data. Row `i` depends only on `(config, i)`,
/// so a larger draw extends a smaller one.
pub fn gen_synthetic(config: &SyntheticConfig, n: usize) -> Result<Dataset, LearnerError> {
    config.validate()?;
    if n == 0 {
        return Err(LearnerError::InvalidConfig("N must be >= 1".into()));
    }
    let d = config.d;
    let scales: Vec<f64> = (1..=d).map(|i| (-config.kappa * i as f64 / 2.0).exp()).collect();
    let teacher = Teacher::new(config);
    let mut inputs = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut hidden = vec![0.0; config.teacher_hidden];
    for i in 0..n {
        let mut rng = rng::stream(config.seed, &[rng::tag::INPUTS, i as u64]);
        let start = inputs.len();
        inputs.extend(scales.iter().map(|s| s * rng::std_normal(&mut rng)));
        labels.push(teacher.label(&inputs[start..], &mut hidden));
    }
    Dataset::classification(inputs, d, labels, config.m_classes)
}
