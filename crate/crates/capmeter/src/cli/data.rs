use std::path::Path;

use super::{CliError, DataArgs, LabelKindArg, LearnerArgs, LearnerKind};
use crate::learners::{
    gen_synthetic, knn_learner, load_tabular, logistic_learner, mlp_learner, ridge_learner, Dataset, LabelKind,
    Learner, SyntheticConfig,
};

/// A synthetic-data request parsed from `key=value` pairs.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SyntheticSpec {
    pub config: SyntheticConfig,
    pub rows: Option<usize>,
}

pub(crate) fn parse_synthetic(spec: &str) -> Result<SyntheticSpec, CliError> {
    let mut config = SyntheticConfig::new(0, f64::NAN, 0);
    let mut rows = None;
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--synthetic: expected key=value, got `{part}`")))?;
        let bad = |e: &dyn std::fmt::Display| CliError::config(format!("--synthetic: bad {key} `{value}`: {e}"));
        match key {
            "d" => config.d = value.parse().map_err(|e| bad(&e))?,
            "kappa" => config.kappa = value.parse().map_err(|e| bad(&e))?,
            "teacher_hidden" => config.teacher_hidden = value.parse().map_err(|e| bad(&e))?,
            "classes" => config.m_classes = value.parse().map_err(|e| bad(&e))?,
            "seed" => config.seed = value.parse().map_err(|e| bad(&e))?,
            "rows" => rows = Some(value.parse().map_err(|e| bad(&e))?),
            other => return Err(CliError::config(format!("--synthetic: unknown key `{other}`"))),
        }
    }
    if config.d == 0 {
        return Err(CliError::config("--synthetic needs d=<dimension>"));
    }
    if config.kappa.is_nan() {
        return Err(CliError::config("--synthetic needs kappa=<decay>"));
    }
    Ok(SyntheticSpec { config, rows })
}

/// Loads or generates the dataset. `default_rows` sizes synthetic data when
/// no `rows=` key is given. Returns the dataset, its id and the input file
/// (if any) for the manifest digest.
pub(crate) fn load_dataset(args: &DataArgs, default_rows: usize) -> Result<(Dataset, String, Option<&Path>), CliError> {
    match (&args.synthetic, &args.data) {
        (Some(spec), None) => {
            let spec = parse_synthetic(spec)?;
            let rows = spec.rows.unwrap_or(default_rows);
            let data = gen_synthetic(&spec.config, rows).map_err(|e| CliError::config(e.to_string()))?;
            Ok((data, args.dataset_id.clone().unwrap_or_else(|| "synthetic".into()), None))
        }
        (None, Some(path)) => {
            let kind = match args.label_kind {
                LabelKindArg::Auto => LabelKind::Auto,
                LabelKindArg::Classes => LabelKind::Classes,
                LabelKindArg::Regression => LabelKind::Regression,
            };
            let data = load_tabular(path, kind).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            let id = args.dataset_id.clone().unwrap_or_else(|| {
                path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "data".into())
            });
            Ok((data, id, Some(path.as_path())))
        }
        _ => Err(CliError::config("a data source is required: pass --synthetic or --data")),
    }
}

pub(crate) fn build_learner(kind: LearnerKind, h: &LearnerArgs) -> Result<Box<dyn Learner>, CliError> {
    let cfg = |e: crate::learners::LearnerError| CliError::config(e.to_string());
    Ok(match kind {
        LearnerKind::Knn => {
            let mut l = knn_learner(h.neighbours, h.alpha).map_err(cfg)?;
            l.sigma = h.sigma;
            Box::new(l)
        }
        LearnerKind::Logistic => {
            let mut l =
                logistic_learner(h.l2.unwrap_or(1e-2), h.epochs.unwrap_or(300), h.lr.unwrap_or(2.0)).map_err(cfg)?;
            l.standardize = !h.no_standardize;
            Box::new(l)
        }
        LearnerKind::Mlp => {
            let mut l = mlp_learner(h.hidden, h.epochs.unwrap_or(50), h.lr.unwrap_or(0.05), h.batch).map_err(cfg)?;
            l.weight_decay = h.weight_decay;
            l.standardize = !h.no_standardize;
            Box::new(l)
        }
        LearnerKind::Ridge => Box::new(ridge_learner(h.l2.unwrap_or(1e-3), h.sigma).map_err(cfg)?),
        LearnerKind::Quadratic => {
            return Err(CliError::config("the quadratic test energy has no data; use it with `capmeter sgld`"))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_synthetic_spec() {
        let s = parse_synthetic("d=20,kappa=1,classes=3,rows=500,seed=9").unwrap();
        assert_eq!(s.config.d, 20);
        assert_eq!(s.config.kappa, 1.0);
        assert_eq!(s.config.m_classes, 3);
        assert_eq!(s.config.seed, 9);
        assert_eq!(s.rows, Some(500));
        assert_eq!(s.config.teacher_hidden, 1000);
    }

    #[test]
    fn rejects_incomplete_synthetic_spec() {
        assert_eq!(parse_synthetic("kappa=1").unwrap_err().code, 2);
        assert_eq!(parse_synthetic("d=5").unwrap_err().code, 2);
        assert_eq!(parse_synthetic("d=5,kappa=1,colour=red").unwrap_err().code, 2);
        assert_eq!(parse_synthetic("d=x,kappa=1").unwrap_err().code, 2);
    }
}
