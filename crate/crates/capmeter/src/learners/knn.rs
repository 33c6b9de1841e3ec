use super::{gaussian_log_density, Dataset, Label, Learner, LearnerError, PredictiveModel, Targets, DEFAULT_SIGMA};

/// k-nearest-neighbour classifier with additive smoothing:
/// `p(y | x) = (c_y + α) / (k + α m)`, where `c_y` counts class `y` among the
/// `k` nearest training rows (Euclidean, ties to the lowest row index).
///
/// On regression data the prediction is the neighbour mean and the
/// likelihood is Gaussian with standard deviation `sigma`.
#[derive(Debug, Clone)]
pub struct KnnLearner {
    pub k: usize,
    pub alpha: f64,
    pub sigma: f64,
}

pub fn knn_learner(k: usize, alpha: f64) -> Result<KnnLearner, LearnerError> {
    if k == 0 {
        return Err(LearnerError::InvalidConfig("k must be >= 1".into()));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(LearnerError::InvalidConfig(format!("alpha must be > 0, got {alpha}")));
    }
    Ok(KnnLearner { k, alpha, sigma: DEFAULT_SIGMA })
}

struct KnnModel {
    dim: usize,
    inputs: Vec<f64>,
    row_ids: Vec<usize>,
    targets: Targets,
    k: usize,
    alpha: f64,
    sigma: f64,
}

impl KnnModel {
    /// Positions (into the stored training rows) of the `k` nearest.
    fn neighbours(&self, x: &[f64]) -> Vec<usize> {
        let mut keyed: Vec<(f64, usize, usize)> = self
            .inputs
            .chunks(self.dim)
            .enumerate()
            .map(|(pos, row)| {
                let d2: f64 = row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, self.row_ids[pos], pos)
            })
            .collect();
        let k = self.k.min(keyed.len());
        let cmp = |a: &(f64, usize, usize), b: &(f64, usize, usize)| {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
        };
        if k < keyed.len() {
            keyed.select_nth_unstable_by(k - 1, cmp);
            keyed.truncate(k);
        }
        keyed.into_iter().map(|t| t.2).collect()
    }
}

impl PredictiveModel for KnnModel {
    fn log_prob(&self, x: &[f64], y: Label) -> f64 {
        let nb = self.neighbours(x);
        match (&self.targets, y) {
            (Targets::Classes { labels, m }, Label::Class(c)) => {
                let count = nb.iter().filter(|&&p| labels[p] == c).count() as f64;
                ((count + self.alpha) / (nb.len() as f64 + self.alpha * *m as f64)).ln()
            }
            (Targets::Regression(v), Label::Value(t)) => {
                let mean = nb.iter().map(|&p| v[p]).sum::<f64>() / nb.len() as f64;
                gaussian_log_density(t - mean, self.sigma)
            }
            _ => f64::NEG_INFINITY,
        }
    }

    fn class_log_probs(&self, x: &[f64]) -> Option<Vec<f64>> {
        let Targets::Classes { labels, m } = &self.targets else { return None };
        let nb = self.neighbours(x);
        let mut counts = vec![0.0; *m];
        for &p in &nb {
            counts[labels[p]] += 1.0;
        }
        let denom = nb.len() as f64 + self.alpha * *m as f64;
        Some(counts.iter().map(|c| ((c + self.alpha) / denom).ln()).collect())
    }
}

impl Learner for KnnLearner {
    fn name(&self) -> String {
        format!("knn(k={},alpha={})", self.k, self.alpha)
    }

    fn fit(&self, data: &Dataset, rows: &[usize], _seed: u64) -> Result<Box<dyn PredictiveModel>, LearnerError> {
        if rows.is_empty() {
            return Err(LearnerError::EmptyTrainingSet);
        }
        let sub = data.subset(rows);
        Ok(Box::new(KnnModel {
            dim: data.dim(),
            inputs: sub.inputs().to_vec(),
            row_ids: rows.to_vec(),
            targets: sub.targets().clone(),
            k: self.k,
            alpha: self.alpha,
            sigma: self.sigma,
        }))
    }
}
