use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{plot, write_file, CliError, FitArgs, FitMethod};
use crate::estimators::{
    capacity_from_polynomial, fit_monotone_polynomial, fit_sigmoid_capacity, freezing_threshold, EstimatorError,
    PolynomialEnergyModel, SigmoidCapacityModel,
};
use crate::protocol::{estimate_avg_energy_by_dataset, ingest_records, EnergyCurve, EnergyScale};

/// One curve point with the fitted capacities at that N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub n: usize,
    pub u_mean: f64,
    pub u_stderr: f64,
    pub capacity_sigmoid: Option<f64>,
    pub capacity_polynomial: Option<f64>,
}

impl FitPoint {
    /// The sigmoid capacity when available, else the polynomial one.
    pub fn capacity(&self) -> Option<f64> {
        self.capacity_sigmoid.or(self.capacity_polynomial)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmoidSection {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub u_inf: f64,
    /// Standard errors of `(a, b, c, u_inf)`.
    pub stderr: [f64; 4],
    pub covariance: [[f64; 4]; 4],
    pub residual_rms: f64,
    pub iterations: usize,
    pub n_star: Option<f64>,
    pub guidance: Option<String>,
    pub capacity_n_max: f64,
    pub capacity_n_max_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialSection {
    pub degree: usize,
    pub active_constraints: usize,
    pub max_violation: f64,
    pub residual_rms: f64,
    pub capacity_n_max: f64,
    pub capacity_n_max_stderr: f64,
}

/// Machine-readable fit report; `compare` reads these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub label: String,
    pub source: String,
    pub scale: EnergyScale,
    pub n_max: usize,
    pub points: Vec<FitPoint>,
    pub sigmoid: Option<SigmoidSection>,
    pub polynomial: Option<PolynomialSection>,
    pub params: Option<u64>,
    /// `100 · C(N_max) / p`.
    pub capacity_per_param_percent: Option<f64>,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn capacity_n_max(&self) -> Option<f64> {
        self.sigmoid.as_ref().map(|s| s.capacity_n_max).or(self.polynomial.as_ref().map(|p| p.capacity_n_max))
    }

    /// Stable-order `key=value` text.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("label", self.label.clone());
        kv("source", self.source.clone());
        kv("scale", self.scale.to_string());
        kv("points", self.points.len().to_string());
        kv("n_max", self.n_max.to_string());
        if let Some(sg) = &self.sigmoid {
            kv("sigmoid.a", fmt_pm(sg.a, sg.stderr[0]));
            kv("sigmoid.b", fmt_pm(sg.b, sg.stderr[1]));
            kv("sigmoid.c", fmt_pm(sg.c, sg.stderr[2]));
            kv("sigmoid.u_inf", fmt_pm(sg.u_inf, sg.stderr[3]));
            let rows: Vec<String> = sg
                .covariance
                .iter()
                .map(|r| r.iter().map(|v| format!("{v:.6e}")).collect::<Vec<_>>().join(","))
                .collect();
            kv("sigmoid.covariance", rows.join(";"));
            kv("sigmoid.residual_rms", format!("{:.6e}", sg.residual_rms));
            kv("sigmoid.iterations", sg.iterations.to_string());
            kv("sigmoid.n_star", sg.n_star.map_or("undefined".into(), |v| format!("{v:.6}")));
            kv("sigmoid.capacity_n_max", fmt_pm(sg.capacity_n_max, sg.capacity_n_max_stderr));
        }
        if let Some(p) = &self.polynomial {
            kv("polynomial.degree", p.degree.to_string());
            kv("polynomial.active_constraints", p.active_constraints.to_string());
            kv("polynomial.max_violation", format!("{:.3e}", p.max_violation));
            kv("polynomial.residual_rms", format!("{:.6e}", p.residual_rms));
            kv("polynomial.capacity_n_max", fmt_pm(p.capacity_n_max, p.capacity_n_max_stderr));
        }
        if let Some(p) = self.params {
            kv("params", p.to_string());
        }
        if let Some(r) = self.capacity_per_param_percent {
            kv("capacity_per_param", format!("{r:.2}%"));
        }
        if let Some(g) = self.sigmoid.as_ref().and_then(|s| s.guidance.clone()) {
            kv("guidance", g);
        }
        for p in &self.points {
            let cap = |c: Option<f64>| c.map_or("-".into(), |v| format!("{v:.6}"));
            kv(
                &format!("curve.{}", p.n),
                format!(
                    "u={:.6e} stderr={:.3e} c_sigmoid={} c_polynomial={}",
                    p.u_mean,
                    p.u_stderr,
                    cap(p.capacity_sigmoid),
                    cap(p.capacity_polynomial)
                ),
            );
        }
        for w in &self.warnings {
            kv("warning", w.clone());
        }
        s
    }
}

fn fmt_pm(v: f64, se: f64) -> String {
    format!("{v:.6} ± {se:.6}")
}

fn fit_error(e: EstimatorError) -> CliError {
    CliError::fit(format!("fit failed: {e}"))
}

fn load_curve(args: &FitArgs) -> Result<(EnergyCurve, String), CliError> {
    if let Some(path) = &args.curve {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let curve = EnergyCurve::parse(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        return Ok((curve, path.display().to_string()));
    }
    let path = args.records.as_ref().ok_or_else(|| CliError::config("pass --records or --curve"))?;
    let file = ingest_records(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let mut curves = estimate_avg_energy_by_dataset(&file.records).map_err(|e| CliError::config(e.to_string()))?;
    let mut curve = match &args.dataset_id {
        Some(id) => curves.remove(id).ok_or_else(|| CliError::config(format!("no records for dataset `{id}`")))?,
        None if curves.len() == 1 => curves.into_values().next().expect("one curve"),
        None => {
            let ids: Vec<&String> = curves.keys().collect();
            return Err(CliError::config(format!(
                "record file holds several datasets {ids:?}; pick one with --dataset-id"
            )));
        }
    };
    curve.scale = file.scale;
    Ok((curve, path.display().to_string()))
}

/// Fits the requested estimators. Sigmoid failures (and polynomial failures
/// when the polynomial is the only method) are fatal; otherwise a failed
/// polynomial fit becomes a warning.
pub(crate) fn build_report(
    curve: &EnergyCurve,
    method: FitMethod,
    degree: usize,
    params: Option<u64>,
    label: String,
    source: String,
) -> Result<FitReport, CliError> {
    let n_max = curve.points.last().map(|p| p.n).ok_or_else(|| CliError::fit("curve is empty"))?;
    let mut warnings = Vec::new();

    let sigmoid_model: Option<SigmoidCapacityModel> = match method {
        FitMethod::Polynomial => None,
        _ => Some(fit_sigmoid_capacity(curve, None).map_err(fit_error)?),
    };
    let poly_model: Option<PolynomialEnergyModel> = match method {
        FitMethod::Sigmoid => None,
        FitMethod::Polynomial => Some(fit_monotone_polynomial(curve, degree).map_err(fit_error)?),
        FitMethod::Both => match fit_monotone_polynomial(curve, degree) {
            Ok(m) => Some(m),
            Err(e) => {
                warnings.push(format!("polynomial fit skipped: {e}"));
                None
            }
        },
    };

    let sigmoid = sigmoid_model.as_ref().map(|m| {
        let cap = m.capacity_at(n_max);
        let threshold = freezing_threshold(&m.params).ok();
        SigmoidSection {
            a: m.params.a,
            b: m.params.b,
            c: m.params.c,
            u_inf: m.params.u_inf,
            stderr: [m.stderr(0), m.stderr(1), m.stderr(2), m.stderr(3)],
            covariance: m.covariance,
            residual_rms: m.residual_rms,
            iterations: m.iterations,
            n_star: threshold.map(|t| t.n_star),
            guidance: threshold.map(|t| t.guidance(n_max as f64).describe().to_string()),
            capacity_n_max: cap.value,
            capacity_n_max_stderr: cap.stderr,
        }
    });
    let polynomial = match &poly_model {
        Some(m) => {
            let cap = capacity_from_polynomial(m, n_max).map_err(fit_error)?;
            if m.active_constraints > 0 {
                warnings.push(format!(
                    "{} monotonicity constraints active; polynomial stderr is approximate",
                    m.active_constraints
                ));
            }
            Some(PolynomialSection {
                degree: m.degree,
                active_constraints: m.active_constraints,
                max_violation: m.max_violation,
                residual_rms: m.residual_rms,
                capacity_n_max: cap.value,
                capacity_n_max_stderr: cap.stderr,
            })
        }
        None => None,
    };

    let points = curve
        .points
        .iter()
        .map(|p| FitPoint {
            n: p.n,
            u_mean: p.u_mean,
            u_stderr: p.u_stderr,
            capacity_sigmoid: sigmoid_model.as_ref().map(|m| m.capacity_at(p.n).value),
            capacity_polynomial: poly_model
                .as_ref()
                .and_then(|m| capacity_from_polynomial(m, p.n).ok().map(|c| c.value)),
        })
        .collect();

    let mut report = FitReport {
        label,
        source,
        scale: curve.scale,
        n_max,
        points,
        sigmoid,
        polynomial,
        params,
        capacity_per_param_percent: None,
        warnings,
    };
    if let (Some(p), Some(c)) = (params, report.capacity_n_max()) {
        if p == 0 {
            return Err(CliError::config("--params must be >= 1"));
        }
        report.capacity_per_param_percent = Some(100.0 * c / p as f64);
    }
    Ok(report)
}

/// JSON twin of a report path: `fit.txt` → `fit.json`.
fn json_path(out: &Path) -> PathBuf {
    if out.extension().is_some_and(|e| e == "json") {
        out.with_extension("report.json")
    } else {
        out.with_extension("json")
    }
}

pub(crate) fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let (curve, source) = load_curve(args)?;
    let label = args.label.clone().unwrap_or_else(|| {
        let p = args.records.as_ref().or(args.curve.as_ref()).expect("clap requires one input");
        p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into())
    });
    let report = build_report(&curve, args.method, args.degree, args.params, label, source)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let text = report.to_text();
    print!("{text}");
    if let Some(out) = &args.out {
        write_file(out, &text)?;
        let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::config(e.to_string()))?;
        write_file(&json_path(out), &(json + "\n"))?;
    }
    if let Some(path) = &args.plot {
        write_file(path, &plot::render_svg(&report))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{energy_from_sigmoid, SigmoidParams};
    use crate::protocol::log_grid;

    #[test]
    fn capacity_per_param_is_a_percentage() {
        let ns = log_grid(100, 10_000, 10);
        let truth = SigmoidParams { a: 609.0, b: 10.0, c: 3.0, u_inf: 0.1 };
        let means: Vec<f64> = ns.iter().map(|&n| energy_from_sigmoid(&truth, n as f64).unwrap()).collect();
        let curve = EnergyCurve::from_values(&ns, &means, &vec![1e-3; ns.len()]).unwrap();
        let report = build_report(&curve, FitMethod::Sigmoid, 7, Some(78_902), "m".into(), "-".into()).unwrap();
        assert!((report.capacity_n_max().unwrap() - 609.0).abs() < 1.0);
        assert!(report.to_text().contains("capacity_per_param=0.77%\n"));
    }

    #[test]
    fn three_point_curve_exits_with_fit_code() {
        let curve = EnergyCurve::from_values(&[10, 20, 40], &[0.5, 0.4, 0.35], &[0.01; 3]).unwrap();
        let err = build_report(&curve, FitMethod::Both, 7, None, "m".into(), "-".into()).unwrap_err();
        assert_eq!(err.code, 4);
        assert!(err.message.contains("5"), "{}", err.message);
    }

    #[test]
    fn json_twin_shares_the_basename() {
        assert_eq!(json_path(Path::new("out/fit.txt")), PathBuf::from("out/fit.json"));
        assert_eq!(json_path(Path::new("fit")), PathBuf::from("fit.json"));
        assert_eq!(json_path(Path::new("fit.json")), PathBuf::from("fit.report.json"));
    }
}
