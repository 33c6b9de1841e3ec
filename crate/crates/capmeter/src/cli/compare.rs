use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::fit::FitReport;
use super::{write_file, CliError, CompareArgs};
use crate::estimators::{capacity_loss_regression, kendall_tau, EstimatorError, Regression};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauAtN {
    pub n: usize,
    /// `None` when every model ties.
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedModel {
    pub label: String,
    pub capacity: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub shared_n: Vec<usize>,
    pub tau: Vec<TauAtN>,
    /// Pooled over every (model, shared N) pair.
    pub regression: Option<Regression>,
    /// Ascending capacity at the largest shared N.
    pub ranking: Vec<RankedModel>,
    pub warnings: Vec<String>,
}

impl CompareReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let joined: Vec<String> = self.shared_n.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "shared_n={}", joined.join(","));
        for t in &self.tau {
            let _ = writeln!(s, "kendall_tau(N={})={}", t.n, t.tau.map_or("undefined".into(), |v| format!("{v:.6}")));
        }
        match &self.regression {
            Some(r) => {
                let _ = writeln!(s, "regression.slope={:.6e} ± {:.3e}", r.slope, r.slope_stderr);
                let _ = writeln!(s, "regression.intercept={:.6e}", r.intercept);
                let _ = writeln!(s, "regression.p_value={:.6e}", r.p_value);
                let _ = writeln!(s, "regression.points={}", r.n_points);
            }
            None => s.push_str("regression=refused\n"),
        }
        let n = self.shared_n.last().copied().unwrap_or(0);
        let _ = writeln!(s, "{:<5} {:<24} {:>14} {:>14}", "rank", "model", format!("C({n})"), format!("U({n})"));
        for (i, m) in self.ranking.iter().enumerate() {
            let _ = writeln!(s, "{:<5} {:<24} {:>14.6} {:>14.6}", i + 1, m.label, m.capacity, m.loss);
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning={w}");
        }
        s
    }
}

fn value_at(report: &FitReport, n: usize) -> Option<(f64, f64)> {
    report.points.iter().find(|p| p.n == n).and_then(|p| Some((p.capacity()?, p.u_mean)))
}

pub(crate) fn compare_reports(reports: &[FitReport]) -> Result<CompareReport, CliError> {
    if reports.len() < 2 {
        return Err(CliError::config("compare needs at least two fit reports"));
    }
    let mut shared: BTreeSet<usize> =
        reports[0].points.iter().filter(|p| p.capacity().is_some()).map(|p| p.n).collect();
    for r in &reports[1..] {
        let ns: BTreeSet<usize> = r.points.iter().filter(|p| p.capacity().is_some()).map(|p| p.n).collect();
        shared = shared.intersection(&ns).copied().collect();
    }
    if shared.is_empty() {
        return Err(CliError::config("the reports share no sample size with a fitted capacity"));
    }
    if let Some(scale) = reports.iter().map(|r| r.scale).find(|s| *s != reports[0].scale) {
        return Err(CliError::config(format!("reports mix energy scales ({} and {scale})", reports[0].scale)));
    }
    let shared_n: Vec<usize> = shared.into_iter().collect();
    let mut warnings = Vec::new();
    let mut pooled = Vec::new();
    let mut tau = Vec::new();
    for &n in &shared_n {
        let vals: Vec<(f64, f64)> = reports.iter().map(|r| value_at(r, n).expect("n is shared")).collect();
        pooled.extend(vals.iter().copied());
        let (caps, losses): (Vec<f64>, Vec<f64>) = vals.into_iter().unzip();
        let t = match kendall_tau(&caps, &losses) {
            Ok(t) => Some(t),
            Err(EstimatorError::AllTied) => None,
            Err(e) => return Err(CliError::config(e.to_string())),
        };
        tau.push(TauAtN { n, tau: t });
    }
    let regression = match capacity_loss_regression(&pooled) {
        Ok(r) => Some(r),
        Err(e @ (EstimatorError::InsufficientPoints { .. } | EstimatorError::DegenerateDesign(_))) => {
            warnings.push(format!("regression refused: {e}"));
            None
        }
        Err(e) => return Err(CliError::config(e.to_string())),
    };
    let last = *shared_n.last().expect("non-empty");
    let mut ranking: Vec<RankedModel> = reports
        .iter()
        .map(|r| {
            let (capacity, loss) = value_at(r, last).expect("n is shared");
            RankedModel { label: r.label.clone(), capacity, loss }
        })
        .collect();
    ranking.sort_by(|a, b| a.capacity.total_cmp(&b.capacity).then_with(|| a.label.cmp(&b.label)));
    Ok(CompareReport { shared_n, tau, regression, ranking, warnings })
}

pub(crate) fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let reports = args
        .reports
        .iter()
        .map(|path| {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<FitReport>(&text)
                .map_err(|e| CliError::config(format!("{} is not a JSON fit report: {e}", path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = compare_reports(&reports)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let text = report.to_text();
    print!("{text}");
    if let Some(out) = &args.out {
        write_file(out, &text)?;
        let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::config(e.to_string()))?;
        write_file(&out.with_extension("json"), &(json + "\n"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::fit::FitPoint;
    use crate::protocol::EnergyScale;

    fn model(label: &str, pts: &[(usize, f64, f64)]) -> FitReport {
        FitReport {
            label: label.into(),
            source: "-".into(),
            scale: EnergyScale::Nll,
            n_max: pts.last().unwrap().0,
            points: pts
                .iter()
                .map(|&(n, c, u)| FitPoint {
                    n,
                    u_mean: u,
                    u_stderr: 0.0,
                    capacity_sigmoid: Some(c),
                    capacity_polynomial: None,
                })
                .collect(),
            sigmoid: None,
            polynomial: None,
            params: None,
            capacity_per_param_percent: None,
            warnings: vec![],
        }
    }

    #[test]
    fn concordant_models_give_unit_tau() {
        let a = model("a", &[(10, 1.0, 0.5), (100, 2.0, 0.3)]);
        let b = model("b", &[(10, 3.0, 0.7), (100, 4.0, 0.4)]);
        let r = compare_reports(&[a.clone(), b.clone()]).unwrap();
        assert!(r.tau.iter().all(|t| t.tau == Some(1.0)));
        assert_eq!(r.ranking[0].label, "a");
        assert!(r.regression.is_some());

        let b_rev = model("b", &[(10, 3.0, 0.1), (100, 4.0, 0.2)]);
        let r = compare_reports(&[a, b_rev]).unwrap();
        assert!(r.tau.iter().all(|t| t.tau == Some(-1.0)));
    }

    #[test]
    fn single_shared_n_refuses_regression() {
        let a = model("a", &[(10, 1.0, 0.5), (20, 2.0, 0.3)]);
        let b = model("b", &[(10, 3.0, 0.7), (40, 4.0, 0.4)]);
        let r = compare_reports(&[a, b]).unwrap();
        assert_eq!(r.shared_n, vec![10]);
        assert_eq!(r.tau[0].tau, Some(1.0));
        assert!(r.regression.is_none());
        assert_eq!(r.warnings.len(), 1);
        assert!(r.to_text().contains("regression=refused"));
    }

    #[test]
    fn disjoint_reports_are_a_config_error() {
        let a = model("a", &[(10, 1.0, 0.5)]);
        let b = model("b", &[(20, 3.0, 0.7)]);
        assert_eq!(compare_reports(&[a, b]).unwrap_err().code, 2);
    }
}
