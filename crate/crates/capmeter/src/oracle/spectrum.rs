use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::OracleError;

/// Eigen-decomposition of a quadratic energy together with the prior
/// precision used alongside it.
///
/// Eigenvalues are kept sorted non-increasing. When prior-mean offsets are
/// present (the components of `w* - w0` in the eigenbasis) they are permuted
/// together with their eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianSpectrum {
    eigenvalues: Vec<f64>,
    epsilon: f64,
    offsets: Option<Vec<f64>>,
}

impl HessianSpectrum {
    /// Builds a spectrum, sorting eigenvalues non-increasing.
    ///
    /// `epsilon` may be zero here; operations that need a proper Gaussian
    /// prior check for `epsilon > 0` themselves.
    pub fn new(eigenvalues: Vec<f64>, epsilon: f64, offsets: Option<Vec<f64>>) -> Result<Self, OracleError> {
        if eigenvalues.is_empty() {
            return Err(OracleError::InvalidSpectrum("at least one eigenvalue is required".into()));
        }
        if let Some(bad) = eigenvalues.iter().find(|v| !v.is_finite()) {
            return Err(OracleError::InvalidSpectrum(format!("non-finite eigenvalue {bad}")));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(OracleError::InvalidSpectrum(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        if let Some(off) = &offsets {
            if off.len() != eigenvalues.len() {
                return Err(OracleError::InvalidSpectrum(format!(
                    "{} offsets for {} eigenvalues",
                    off.len(),
                    eigenvalues.len()
                )));
            }
            if off.iter().any(|v| !v.is_finite()) {
                return Err(OracleError::InvalidSpectrum("non-finite offset".into()));
            }
        }

        let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eigenvalues[j].total_cmp(&eigenvalues[i]));
        let sorted = order.iter().map(|&i| eigenvalues[i]).collect();
        let offsets = offsets.map(|off| order.iter().map(|&i| off[i]).collect());
        Ok(Self { eigenvalues: sorted, epsilon, offsets })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn offsets(&self) -> Option<&[f64]> {
        self.offsets.as_deref()
    }

    /// Parameter count `p`.
    pub fn p(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Same eigenvalues, different prior precision.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self, OracleError> {
        Self::new(self.eigenvalues.clone(), epsilon, self.offsets.clone())
    }

    /// The isotropic Gaussian prior implied by this spectrum's `epsilon`.
    pub fn gaussian_prior(&self) -> PriorKind {
        PriorKind::GaussianIsotropic(self.epsilon)
    }

    pub(crate) fn require_nonnegative(&self) -> Result<(), OracleError> {
        match self.eigenvalues.last() {
            Some(&min) if min < 0.0 => Err(OracleError::InvalidSpectrum(format!("negative eigenvalue {min}"))),
            _ => Ok(()),
        }
    }

    pub(crate) fn require_positive(&self) -> Result<(), OracleError> {
        match self.eigenvalues.last() {
            Some(&min) if min <= 0.0 => Err(OracleError::InvalidSpectrum(format!("non-positive eigenvalue {min}"))),
            _ => Ok(()),
        }
    }

    /// Reads the plain-text spectrum format: one eigenvalue per line,
    /// `#` lines carrying `epsilon=<real>` and optionally
    /// `offsets=<comma-separated reals>`.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, OracleError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| OracleError::Parse { line: 0, reason: format!("{}: {e}", path.as_ref().display()) })?;
        text.parse()
    }
}

impl FromStr for HessianSpectrum {
    type Err = OracleError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut eigenvalues = Vec::new();
        let mut epsilon = None;
        let mut offsets = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(header) = trimmed.strip_prefix('#') {
                for token in header.split_whitespace() {
                    let Some((key, value)) = token.split_once('=') else { continue };
                    match key {
                        "epsilon" => {
                            let v = value.parse::<f64>().map_err(|e| OracleError::Parse {
                                line,
                                reason: format!("bad epsilon `{value}`: {e}"),
                            })?;
                            epsilon = Some(v);
                        }
                        "offsets" => {
                            let parsed = value
                                .split(',')
                                .map(|s| s.trim().parse::<f64>())
                                .collect::<Result<Vec<_>, _>>()
                                .map_err(|e| OracleError::Parse {
                                    line,
                                    reason: format!("bad offsets `{value}`: {e}"),
                                })?;
                            offsets = Some(parsed);
                        }
                        _ => {}
                    }
                }
                continue;
            }
            let v = trimmed
                .parse::<f64>()
                .map_err(|e| OracleError::Parse { line, reason: format!("bad eigenvalue `{trimmed}`: {e}") })?;
            eigenvalues.push(v);
        }
        let epsilon = epsilon.ok_or(OracleError::MissingEpsilon)?;
        HessianSpectrum::new(eigenvalues, epsilon, offsets)
    }
}

impl fmt::Display for HessianSpectrum {
    /// Writes the spectrum file format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# epsilon={}", self.epsilon)?;
        if let Some(off) = &self.offsets {
            let joined: Vec<String> = off.iter().map(|v| v.to_string()).collect();
            writeln!(f, "# offsets={}", joined.join(","))?;
        }
        for v in &self.eigenvalues {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Prior over weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorKind {
    /// Flat (improper) prior.
    Uniform,
    /// `N(w0, ε⁻¹ I)` with the precision `ε` carried inline.
    GaussianIsotropic(f64),
}

impl PriorKind {
    pub fn validate(&self) -> Result<(), OracleError> {
        match *self {
            PriorKind::GaussianIsotropic(eps) if !(eps.is_finite() && eps > 0.0) => {
                Err(OracleError::InvalidArgument(format!("Gaussian prior needs epsilon > 0, got {eps}")))
            }
            _ => Ok(()),
        }
    }

    /// Precision of the prior, zero for the flat prior.
    pub fn precision(&self) -> f64 {
        match *self {
            PriorKind::Uniform => 0.0,
            PriorKind::GaussianIsotropic(eps) => eps,
        }
    }
}
