use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ProtocolError;

/// Which per-example loss a curve averages. Fits must never mix scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyScale {
    /// Held-out negative log-likelihood.
    #[default]
    Nll,
    /// `1 - p(y|x)`, the estimator used by the Langevin chains.
    ProbabilityComplement,
}

impl fmt::Display for EnergyScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnergyScale::Nll => "nll",
            EnergyScale::ProbabilityComplement => "probability-complement",
        })
    }
}

impl FromStr for EnergyScale {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "nll" => Ok(EnergyScale::Nll),
            "probability-complement" => Ok(EnergyScale::ProbabilityComplement),
            other => Err(format!("unknown energy scale `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub u_mean: f64,
    pub u_stderr: f64,
    pub record_count: usize,
}

/// `Ū(N)` on a strictly increasing grid of sample sizes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyCurve {
    pub points: Vec<CurvePoint>,
    pub scale: EnergyScale,
}

const CURVE_HEADER: &str = "n,u_mean,u_stderr,record_count";

impl EnergyCurve {
    pub fn new(points: Vec<CurvePoint>, scale: EnergyScale) -> Result<Self, ProtocolError> {
        if points.windows(2).any(|w| w[0].n >= w[1].n) {
            return Err(ProtocolError::Config("curve N values must be strictly increasing".into()));
        }
        if let Some(p) =
            points.iter().find(|p| !p.u_mean.is_finite() || !(p.u_stderr >= 0.0) || !p.u_stderr.is_finite())
        {
            return Err(ProtocolError::Config(format!("curve point at N={} has invalid mean or stderr", p.n)));
        }
        Ok(Self { points, scale })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ns(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.n as f64).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.u_mean).collect()
    }

    pub fn stderrs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.u_stderr).collect()
    }

    pub fn at(&self, n: usize) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.n == n)
    }

    /// Builds a curve from exact values, e.g. for fitting a known function.
    pub fn from_values(ns: &[usize], means: &[f64], stderrs: &[f64]) -> Result<Self, ProtocolError> {
        if ns.len() != means.len() || ns.len() != stderrs.len() {
            return Err(ProtocolError::Config("curve columns differ in length".into()));
        }
        let points = ns
            .iter()
            .zip(means)
            .zip(stderrs)
            .map(|((&n, &u_mean), &u_stderr)| CurvePoint { n, u_mean, u_stderr, record_count: 1 })
            .collect();
        Self::new(points, EnergyScale::Nll)
    }

    /// Parses the curve file written by `Display`.
    pub fn parse(text: &str) -> Result<Self, ProtocolError> {
        let mut scale = EnergyScale::Nll;
        let mut points = Vec::new();
        let mut seen_header = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = idx + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("scale=") {
                    scale = v.parse().map_err(|reason| ProtocolError::Parse { line: lineno, column: 1, reason })?;
                }
                continue;
            }
            if !seen_header {
                if line != CURVE_HEADER {
                    return Err(ProtocolError::Parse {
                        line: lineno,
                        column: 1,
                        reason: format!("expected header `{CURVE_HEADER}`"),
                    });
                }
                seen_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(ProtocolError::Parse {
                    line: lineno,
                    column: fields.len().min(4) + 1,
                    reason: "expected 4 fields".into(),
                });
            }
            let bad = |column: usize| ProtocolError::Parse {
                line: lineno,
                column,
                reason: format!("bad value `{}`", fields[column - 1]),
            };
            points.push(CurvePoint {
                n: fields[0].parse().map_err(|_| bad(1))?,
                u_mean: fields[1].parse().map_err(|_| bad(2))?,
                u_stderr: fields[2].parse().map_err(|_| bad(3))?,
                record_count: fields[3].parse().map_err(|_| bad(4))?,
            });
        }
        if !seen_header {
            return Err(ProtocolError::Parse { line: 0, column: 0, reason: "missing curve header".into() });
        }
        Self::new(points, scale)
    }
}

impl fmt::Display for EnergyCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# scale={}", self.scale)?;
        writeln!(f, "{CURVE_HEADER}")?;
        for p in &self.points {
            writeln!(f, "{},{:e},{:e},{}", p.n, p.u_mean, p.u_stderr, p.record_count)?;
        }
        Ok(())
    }
}
