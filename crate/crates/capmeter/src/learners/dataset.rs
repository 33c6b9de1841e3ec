use super::LearnerError;

/// Targets of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    /// Class indices in `[0, m)`.
    Classes {
        labels: Vec<usize>,
        m: usize,
    },
    Regression(Vec<f64>),
}

/// One target value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Label {
    Class(usize),
    Value(f64),
}

/// Row-major `N × d` inputs with their targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<f64>,
    dim: usize,
    targets: Targets,
}

impl Dataset {
    pub fn classification(inputs: Vec<f64>, dim: usize, labels: Vec<usize>, m: usize) -> Result<Self, LearnerError> {
        if m < 2 {
            return Err(LearnerError::InvalidDataset(format!("need at least 2 classes, got {m}")));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= m) {
            return Err(LearnerError::InvalidDataset(format!("label {bad} outside [0, {m})")));
        }
        Self::build(inputs, dim, Targets::Classes { labels, m })
    }

    pub fn regression(inputs: Vec<f64>, dim: usize, values: Vec<f64>) -> Result<Self, LearnerError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LearnerError::InvalidDataset("non-finite regression target".into()));
        }
        Self::build(inputs, dim, Targets::Regression(values))
    }

    fn build(inputs: Vec<f64>, dim: usize, targets: Targets) -> Result<Self, LearnerError> {
        let n = match &targets {
            Targets::Classes { labels, .. } => labels.len(),
            Targets::Regression(v) => v.len(),
        };
        if dim == 0 {
            return Err(LearnerError::InvalidDataset("feature dimension must be >= 1".into()));
        }
        if n == 0 {
            return Err(LearnerError::InvalidDataset("dataset has no rows".into()));
        }
        if inputs.len() != n * dim {
            return Err(LearnerError::InvalidDataset(format!(
                "{} input values for {n} rows of dimension {dim}",
                inputs.len()
            )));
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(LearnerError::InvalidDataset("non-finite input value".into()));
        }
        Ok(Self { inputs, dim, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn label(&self, i: usize) -> Label {
        match &self.targets {
            Targets::Classes { labels, .. } => Label::Class(labels[i]),
            Targets::Regression(v) => Label::Value(v[i]),
        }
    }

    /// Number of classes, `None` for regression.
    pub fn m_classes(&self) -> Option<usize> {
        match &self.targets {
            Targets::Classes { m, .. } => Some(*m),
            Targets::Regression(_) => None,
        }
    }

    /// Copy of the given rows, in order (duplicates kept).
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut inputs = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            inputs.extend_from_slice(self.row(r));
        }
        let targets = match &self.targets {
            Targets::Classes { labels, m } => {
                Targets::Classes { labels: rows.iter().map(|&r| labels[r]).collect(), m: *m }
            }
            Targets::Regression(v) => Targets::Regression(rows.iter().map(|&r| v[r]).collect()),
        };
        Dataset { inputs, dim: self.dim, targets }
    }

    /// Copy with every input passed through `s`.
    pub fn standardized(&self, s: &Standardizer) -> Dataset {
        let mut inputs = self.inputs.clone();
        for row in inputs.chunks_mut(self.dim) {
            s.apply_in_place(row);
        }
        Dataset { inputs, dim: self.dim, targets: self.targets.clone() }
    }
}

/// Per-feature affine map to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    inv_std: Vec<f64>,
}

impl Standardizer {
    /// Estimates mean and standard deviation over `rows`. Constant features
    /// are centred but not rescaled.
    pub fn fit(data: &Dataset, rows: &[usize]) -> Self {
        let d = data.dim();
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for &r in rows {
            for (m, x) in mean.iter_mut().zip(data.row(r)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for &r in rows {
            for ((v, x), m) in var.iter_mut().zip(data.row(r)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let inv_std = var
            .iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 1e-300 {
                    1.0 / sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, inv_std }
    }

    pub fn identity(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], inv_std: vec![1.0; dim] }
    }

    pub fn apply_in_place(&self, x: &mut [f64]) {
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.inv_std) {
            *v = (*v - m) * s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.apply_in_place(&mut out);
        out
    }
}
