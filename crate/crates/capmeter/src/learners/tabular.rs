use std::collections::BTreeMap;
use std::path::Path;

use super::{Dataset, LearnerError};

/// How to read the last (label) column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelKind {
    /// Integer-valued or non-numeric labels are classes; other reals are
    /// regression targets.
    #[default]
    Auto,
    Classes,
    Regression,
}

/// Loads comma-separated numeric features with the label in the last column.
/// Lines starting with `#` are ignored.
pub fn load_tabular(path: impl AsRef<Path>, kind: LabelKind) -> Result<Dataset, LearnerError> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| LearnerError::Parse {
        row: 0,
        column: 0,
        reason: format!("{}: {e}", path.as_ref().display()),
    })?;
    parse_tabular(&text, kind)
}

pub fn parse_tabular(text: &str, kind: LabelKind) -> Result<Dataset, LearnerError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut inputs = Vec::new();
    let mut raw_labels: Vec<(usize, String)> = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| LearnerError::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            column: 0,
            reason: e.to_string(),
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() < 2 {
            return Err(LearnerError::Parse { row, column: 1, reason: "need at least one feature and a label".into() });
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(LearnerError::Parse {
                    row,
                    column: record.len().min(w) + 1,
                    reason: format!("expected {w} columns, found {}", record.len()),
                })
            }
            _ => {}
        }
        for (col, field) in record.iter().take(record.len() - 1).enumerate() {
            let v: f64 = field.parse().map_err(|_| LearnerError::Parse {
                row,
                column: col + 1,
                reason: format!("non-numeric feature `{field}`"),
            })?;
            if !v.is_finite() {
                return Err(LearnerError::Parse {
                    row,
                    column: col + 1,
                    reason: format!("non-finite feature `{field}`"),
                });
            }
            inputs.push(v);
        }
        raw_labels.push((row, record[record.len() - 1].to_string()));
    }
    let Some(width) = width else {
        return Err(LearnerError::Parse { row: 0, column: 0, reason: "no data rows".into() });
    };
    let dim = width - 1;

    let numeric: Vec<Option<f64>> =
        raw_labels.iter().map(|(_, s)| s.parse::<f64>().ok().filter(|v| v.is_finite())).collect();
    let all_numeric = numeric.iter().all(Option::is_some);
    let any_numeric = numeric.iter().any(Option::is_some);
    if any_numeric && !all_numeric && kind != LabelKind::Regression {
        let first = numeric.iter().position(|v| v.is_some() != numeric[0].is_some()).unwrap_or(0);
        return Err(LearnerError::MixedTypes { row: raw_labels[first].0 });
    }
    let regression = match kind {
        LabelKind::Regression => true,
        LabelKind::Classes => false,
        LabelKind::Auto => all_numeric && numeric.iter().flatten().any(|v| v.fract() != 0.0),
    };

    if regression {
        let mut values = Vec::with_capacity(numeric.len());
        for ((row, s), v) in raw_labels.iter().zip(&numeric) {
            values.push(v.ok_or_else(|| LearnerError::Parse {
                row: *row,
                column: width,
                reason: format!("non-numeric regression target `{s}`"),
            })?);
        }
        return Dataset::regression(inputs, dim, values);
    }

    // classes: numeric labels ordered by value, string labels lexicographically
    let labels: Vec<usize> = if all_numeric {
        let mut distinct: Vec<f64> = numeric.iter().flatten().copied().collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        numeric.iter().map(|v| distinct.iter().position(|d| *d == v.unwrap()).unwrap()).collect()
    } else {
        let index: BTreeMap<&str, usize> = raw_labels
            .iter()
            .map(|(_, s)| s.as_str())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        raw_labels.iter().map(|(_, s)| index[s.as_str()]).collect()
    };
    let m = labels.iter().max().map_or(0, |v| v + 1).max(2);
    Dataset::classification(inputs, dim, labels, m)
}
