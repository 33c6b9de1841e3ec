use std::collections::BTreeMap;

use super::{CurvePoint, EnergyCurve, EnergyRecord, EnergyScale, ProtocolError};

/// Aggregates records from a single dataset into `Ū(N)`.
///
/// Each `(boot, seed)` pair is one replicate whose mean pools its folds as
/// `Σ nll_sum / Σ heldout_count`; the point estimate is the mean over
/// replicates and the stderr their standard error.
pub fn estimate_avg_energy(records: &[EnergyRecord]) -> Result<EnergyCurve, ProtocolError> {
    let mut ids: Vec<String> = records.iter().map(|r| r.dataset_id.clone()).collect();
    ids.sort();
    ids.dedup();
    if ids.len() > 1 {
        return Err(ProtocolError::MixedDatasets(ids));
    }
    aggregate(records.iter())
}

/// As [`estimate_avg_energy`], restricted to `ns`; every requested N must
/// have at least one record.
pub fn estimate_avg_energy_at(records: &[EnergyRecord], ns: &[usize]) -> Result<EnergyCurve, ProtocolError> {
    let curve = estimate_avg_energy(records)?;
    let mut wanted: Vec<usize> = ns.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    let points = wanted
        .iter()
        .map(|&n| curve.at(n).copied().ok_or(ProtocolError::EmptyGroup(n)))
        .collect::<Result<Vec<_>, _>>()?;
    EnergyCurve::new(points, curve.scale)
}

/// One curve per `dataset_id`.
pub fn estimate_avg_energy_by_dataset(
    records: &[EnergyRecord],
) -> Result<BTreeMap<String, EnergyCurve>, ProtocolError> {
    let mut groups: BTreeMap<&str, Vec<&EnergyRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(&r.dataset_id).or_default().push(r);
    }
    groups.into_iter().map(|(id, rs)| Ok((id.to_string(), aggregate(rs.into_iter())?))).collect()
}

/// `(boot, seed) -> (nll sum, held-out count)` for one sample size.
type ReplicateSums = BTreeMap<(usize, usize), (f64, usize)>;

fn aggregate<'a>(records: impl Iterator<Item = &'a EnergyRecord>) -> Result<EnergyCurve, ProtocolError> {
    // N -> (boot, seed) -> (nll, count)
    let mut groups: BTreeMap<usize, ReplicateSums> = BTreeMap::new();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for r in records {
        if !r.nll_sum.is_finite() {
            return Err(ProtocolError::NonFinite {
                n: r.sample_size,
                boot: r.boot_index,
                fold: r.fold_index,
                seed: r.seed_index,
            });
        }
        let slot = groups.entry(r.sample_size).or_default().entry((r.boot_index, r.seed_index)).or_insert((0.0, 0));
        slot.0 += r.nll_sum;
        slot.1 += r.heldout_count;
        *counts.entry(r.sample_size).or_default() += 1;
    }
    let mut points = Vec::with_capacity(groups.len());
    for (n, replicates) in groups {
        let means: Vec<f64> = replicates.values().filter(|(_, c)| *c > 0).map(|(s, c)| s / *c as f64).collect();
        if means.is_empty() {
            return Err(ProtocolError::EmptyGroup(n));
        }
        let r = means.len() as f64;
        let u_mean = means.iter().sum::<f64>() / r;
        let u_stderr = if means.len() > 1 {
            (means.iter().map(|m| (m - u_mean).powi(2)).sum::<f64>() / (r - 1.0) / r).sqrt()
        } else {
            0.0
        };
        points.push(CurvePoint { n, u_mean, u_stderr, record_count: counts[&n] });
    }
    EnergyCurve::new(points, EnergyScale::Nll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn rec(n: usize, boot: usize, fold: usize, seed: usize, nll: f64, count: usize) -> EnergyRecord {
        EnergyRecord {
            dataset_id: "d".into(),
            sample_size: n,
            boot_index: boot,
            fold_index: fold,
            seed_index: seed,
            nll_sum: nll,
            heldout_count: count,
        }
    }

    #[test]
    fn uniform_two_class_predictor() {
        let curve = estimate_avg_energy(&[rec(10, 0, 0, 0, 5.0 * 2f64.ln(), 5)]).unwrap();
        assert_relative_eq!(curve.points[0].u_mean, std::f64::consts::LN_2, epsilon = 1e-12);
        assert_eq!(curve.points[0].u_stderr, 0.0);
    }

    #[test]
    fn folds_pool_within_a_replicate() {
        let curve = estimate_avg_energy(&[rec(10, 0, 0, 0, 1.0, 5), rec(10, 0, 1, 0, 2.0, 5)]).unwrap();
        assert_relative_eq!(curve.points[0].u_mean, 0.3, epsilon = 1e-12);
        assert_eq!(curve.points[0].record_count, 2);
    }

    #[test]
    fn stderr_over_two_replicates() {
        let curve = estimate_avg_energy(&[rec(10, 0, 0, 0, 2.0, 10), rec(10, 1, 0, 0, 4.0, 10)]).unwrap();
        assert_relative_eq!(curve.points[0].u_mean, 0.3, epsilon = 1e-12);
        assert_relative_eq!(curve.points[0].u_stderr, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            estimate_avg_energy(&[rec(10, 0, 0, 0, f64::INFINITY, 5)]),
            Err(ProtocolError::NonFinite { n: 10, .. })
        ));
        assert!(matches!(
            estimate_avg_energy_at(&[rec(10, 0, 0, 0, 1.0, 5)], &[10, 20]),
            Err(ProtocolError::EmptyGroup(20))
        ));
        let mut other = rec(10, 0, 0, 0, 1.0, 5);
        other.dataset_id = "e".into();
        assert!(matches!(
            estimate_avg_energy(&[rec(10, 0, 0, 0, 1.0, 5), other.clone()]),
            Err(ProtocolError::MixedDatasets(_))
        ));
        let split = estimate_avg_energy_by_dataset(&[rec(10, 0, 0, 0, 1.0, 5), other]).unwrap();
        assert_eq!(split.len(), 2);
    }

    proptest! {
        #[test]
        fn scaling_counts_and_sums_together_is_invisible(
            sums in prop::collection::vec(0.0f64..50.0, 6),
            counts in prop::collection::vec(1usize..20, 6),
            factor in 1usize..7,
        ) {
            let records: Vec<EnergyRecord> = (0..6).map(|i| rec(30, i % 3, i / 3, 0, sums[i], counts[i])).collect();
            let scaled: Vec<EnergyRecord> = records
                .iter()
                .map(|r| EnergyRecord { nll_sum: r.nll_sum * factor as f64, heldout_count: r.heldout_count * factor, ..r.clone() })
                .collect();
            let a = estimate_avg_energy(&records).unwrap().points[0];
            let b = estimate_avg_energy(&scaled).unwrap().points[0];
            prop_assert!((a.u_mean - b.u_mean).abs() <= 1e-12 * a.u_mean.abs().max(1.0));
            prop_assert!((a.u_stderr - b.u_stderr).abs() <= 1e-12 * a.u_stderr.max(1.0));
        }
    }
}
