//! Conformance of an attribute's observed distribution to a target.
//!
//! The observed and target distributions are aligned on a common support
//! (categories or bins) and handed to a [`DeviationMetric`]. The score is
//! `100 * (1 - deviation)`, so 100 means the data matches the target.

use std::collections::BTreeMap;

use super::config::TargetDistribution;
use super::QualityError;
use crate::table::{ColumnData, Dataset, NumericBins};

/// Distance between two probability vectors on the same support, in `[0, 1]`.
pub trait DeviationMetric: Sync {
    fn deviation(&self, observed: &[f64], target: &[f64]) -> f64;
}

/// Total-variation distance: half the L1 distance.
#[derive(Clone, Copy, Debug, Default)]
pub struct TotalVariation;

impl DeviationMetric for TotalVariation {
    fn deviation(&self, observed: &[f64], target: &[f64]) -> f64 {
        let d = 0.5 * observed.iter().zip(target).map(|(o, t)| (o - t).abs()).sum::<f64>();
        d.clamp(0.0, 1.0)
    }
}

/// Observed and target probabilities over a shared support.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedDistributions {
    pub labels: Vec<String>,
    pub observed: Vec<f64>,
    pub target: Vec<f64>,
    /// Target categories that never occur in the data.
    pub unobserved_targets: Vec<String>,
}

fn normalise(counts: &[usize]) -> Vec<f64> {
    let total: usize = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Aligns the observed values of attribute `a` with `target`.
///
/// Returns `None` when the attribute has no non-missing values.
pub fn align(
    dataset: &Dataset,
    a: usize,
    target: &TargetDistribution,
) -> Result<Option<AlignedDistributions>, QualityError> {
    let name = &dataset.attribute(a).name;
    let column = dataset.column(a);
    if column.missing_count() == column.len() {
        return Ok(None);
    }
    match target {
        TargetDistribution::Categorical { probabilities } => {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for r in 0..column.len() {
                if !column.is_missing(r) {
                    *counts.entry(column.raw(r)).or_default() += 1;
                }
            }
            let mut labels: Vec<String> = counts.keys().map(|k| k.to_string()).collect();
            let unobserved_targets: Vec<String> =
                probabilities.keys().filter(|k| !counts.contains_key(k.as_str())).cloned().collect();
            labels.extend(unobserved_targets.iter().cloned());
            let raw_counts: Vec<usize> = labels.iter().map(|l| counts.get(l.as_str()).copied().unwrap_or(0)).collect();
            let target = labels.iter().map(|l| probabilities.get(l).copied().unwrap_or(0.0)).collect();
            Ok(Some(AlignedDistributions { observed: normalise(&raw_counts), target, labels, unobserved_targets }))
        }
        TargetDistribution::Uniform => match column.data() {
            ColumnData::Categorical { dictionary, codes } => {
                let mut counts = vec![0usize; dictionary.len()];
                for c in codes.iter().flatten() {
                    counts[*c as usize] += 1;
                }
                let k = counts.iter().filter(|&&c| c > 0).count();
                let (labels, counts): (Vec<String>, Vec<usize>) =
                    dictionary.iter().cloned().zip(counts).filter(|(_, c)| *c > 0).unzip();
                Ok(Some(AlignedDistributions {
                    labels,
                    observed: normalise(&counts),
                    target: vec![1.0 / k as f64; k],
                    unobserved_targets: Vec::new(),
                }))
            }
            ColumnData::Numerical(_) => {
                let bins = NumericBins::over(column.numbers()).expect("column has values");
                let mut counts = vec![0usize; bins.count];
                for v in column.numbers() {
                    counts[bins.index(v)] += 1;
                }
                let labels = (0..bins.count)
                    .map(|i| {
                        let (lo, hi) = bins.bounds(i);
                        format!("[{lo}, {hi}]")
                    })
                    .collect();
                Ok(Some(AlignedDistributions {
                    labels,
                    observed: normalise(&counts),
                    target: vec![1.0 / bins.count as f64; bins.count],
                    unobserved_targets: Vec::new(),
                }))
            }
        },
        TargetDistribution::Binned { edges, probabilities } => {
            if !matches!(column.data(), ColumnData::Numerical(_)) {
                return Err(QualityError::TargetMismatch {
                    attribute: name.clone(),
                    reason: "binned target on a categorical attribute".into(),
                });
            }
            let n = probabilities.len();
            // last slot collects values outside the target's range
            let mut counts = vec![0usize; n + 1];
            let (lo, hi) = (edges[0], edges[n]);
            for v in column.numbers() {
                let slot = if v < lo || v > hi {
                    n
                } else {
                    // first edge strictly greater than v, minus one
                    let upper = edges.partition_point(|e| *e <= v);
                    upper.saturating_sub(1).min(n - 1)
                };
                counts[slot] += 1;
            }
            let mut labels: Vec<String> = edges.windows(2).map(|w| format!("[{}, {})", w[0], w[1])).collect();
            labels.push("outside".into());
            let mut target = probabilities.clone();
            target.push(0.0);
            Ok(Some(AlignedDistributions {
                labels,
                observed: normalise(&counts),
                target,
                unobserved_targets: Vec::new(),
            }))
        }
    }
}

/// `100 * (1 - deviation)`.
pub fn conformance_score(aligned: &AlignedDistributions, metric: &dyn DeviationMetric) -> f64 {
    100.0 * (1.0 - metric.deviation(&aligned.observed, &aligned.target))
}
