//! Attribute- and record-level quality scores.
//!
//! Attribute level: completeness, correctness and objectivity. Record level:
//! completeness and correctness. Dimensions without a configured rule or
//! target are N/A (`None`) and drop out of the overall weighted mean.

mod config;
mod objectivity;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    categorize, Category, Cutoffs, DimensionWeights, QualityConfig, QualityDimension, TargetDistribution, UnknownPolicy,
};
pub use objectivity::{align, conformance_score, AlignedDistributions, DeviationMetric, TotalVariation};

use crate::constraint::{EvalError, Truth};
use crate::table::{Dataset, TableError};
use crate::Execution;

#[derive(Debug, Error, PartialEq)]
pub enum QualityError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("correctness rule for {attribute:?}: {source}")]
    Rule {
        attribute: String,
        #[source]
        source: EvalError,
    },
    #[error("objectivity target for {attribute:?}: {reason}")]
    TargetMismatch { attribute: String, reason: String },
    #[error("invalid quality configuration: {0}")]
    InvalidConfig(String),
}

/// `100 * (N - missing) / N`; 100 for an empty table.
pub fn attr_completeness(dataset: &Dataset, attribute: &str) -> Result<f64, QualityError> {
    let a = dataset.require_attribute(attribute)?;
    let n = dataset.record_count();
    Ok(completeness_ratio(n - dataset.column(a).missing_count(), n))
}

fn completeness_ratio(present: usize, total: usize) -> f64 {
    if total == 0 {
        100.0
    } else {
        100.0 * present as f64 / total as f64
    }
}

/// Tally of rule outcomes over a set of cells.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TruthCounts {
    pub correct: usize,
    pub incorrect: usize,
    pub unknown: usize,
}

impl TruthCounts {
    pub fn add(&mut self, t: Truth) {
        match t {
            Truth::True => self.correct += 1,
            Truth::False => self.incorrect += 1,
            Truth::Unknown => self.unknown += 1,
        }
    }

    /// Correctness percentage under `policy`; 100 when nothing is countable.
    pub fn score(&self, policy: UnknownPolicy) -> f64 {
        let (num, den) = match policy {
            UnknownPolicy::Exclude => (self.correct, self.correct + self.incorrect),
            UnknownPolicy::CountAsCorrect => {
                (self.correct + self.unknown, self.correct + self.incorrect + self.unknown)
            }
            UnknownPolicy::CountAsIncorrect => (self.correct, self.correct + self.incorrect + self.unknown),
        };
        if den == 0 {
            100.0
        } else {
            100.0 * num as f64 / den as f64
        }
    }
}

/// Per-cell rule outcomes for one rule-bearing attribute.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthColumn(pub Vec<Truth>);

impl Serialize for TruthColumn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let text: String = self
            .0
            .iter()
            .map(|t| match t {
                Truth::True => 'T',
                Truth::False => 'F',
                Truth::Unknown => 'U',
            })
            .collect();
        s.serialize_str(&text)
    }
}

impl<'de> Deserialize<'de> for TruthColumn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.chars()
            .map(|c| match c {
                'T' => Ok(Truth::True),
                'F' => Ok(Truth::False),
                'U' => Ok(Truth::Unknown),
                other => Err(serde::de::Error::custom(format!("bad truth code {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(TruthColumn)
    }
}

fn evaluate_rule(dataset: &Dataset, a: usize, config: &QualityConfig) -> Result<Option<TruthColumn>, QualityError> {
    let name = &dataset.attribute(a).name;
    let Some(rule) = config.rules.get(name) else {
        return Ok(None);
    };
    let column = dataset.column(a);
    (0..dataset.record_count())
        .map(|r| rule.evaluate_cell(name, column.cell(r)))
        .collect::<Result<Vec<_>, _>>()
        .map(|v| Some(TruthColumn(v)))
        .map_err(|source| QualityError::Rule { attribute: name.clone(), source })
}

/// Percentage of values satisfying the attribute's rule, or `None` when the
/// attribute has no rule.
pub fn attr_correctness(
    dataset: &Dataset,
    attribute: &str,
    config: &QualityConfig,
) -> Result<Option<f64>, QualityError> {
    let a = dataset.require_attribute(attribute)?;
    Ok(evaluate_rule(dataset, a, config)?.map(|col| {
        let mut counts = TruthCounts::default();
        col.0.iter().for_each(|t| counts.add(*t));
        counts.score(config.unknown_policy)
    }))
}

/// Objectivity with the default total-variation metric.
pub fn attr_objectivity(
    dataset: &Dataset,
    attribute: &str,
    config: &QualityConfig,
) -> Result<Option<f64>, QualityError> {
    attr_objectivity_with(dataset, attribute, config, &TotalVariation)
}

/// `100 * (1 - D)` against the configured target; `None` without a target
/// or when every value is missing.
pub fn attr_objectivity_with(
    dataset: &Dataset,
    attribute: &str,
    config: &QualityConfig,
    metric: &dyn DeviationMetric,
) -> Result<Option<f64>, QualityError> {
    let a = dataset.require_attribute(attribute)?;
    let Some(target) = config.objectivity_targets.get(attribute) else {
        return Ok(None);
    };
    Ok(align(dataset, a, target)?.map(|al| conformance_score(&al, metric)))
}

/// `100 * (A - missing_in_record) / A`.
pub fn record_completeness(dataset: &Dataset, record: usize) -> Result<f64, QualityError> {
    dataset.require_record(record)?;
    let missing = dataset.columns().iter().filter(|c| c.is_missing(record)).count();
    let a = dataset.attribute_count();
    Ok(completeness_ratio(a - missing, a))
}

/// Correctness over the record's rule-bearing attributes, or `None` when no
/// attribute of the dataset has a rule.
pub fn record_correctness(
    dataset: &Dataset,
    record: usize,
    config: &QualityConfig,
) -> Result<Option<f64>, QualityError> {
    dataset.require_record(record)?;
    let mut counts = TruthCounts::default();
    let mut any = false;
    for (a, meta) in dataset.attributes().iter().enumerate() {
        if let Some(rule) = config.rules.get(&meta.name) {
            any = true;
            let t = rule
                .evaluate_cell(&meta.name, dataset.cell(a, record))
                .map_err(|source| QualityError::Rule { attribute: meta.name.clone(), source })?;
            counts.add(t);
        }
    }
    Ok(any.then(|| counts.score(config.unknown_policy)))
}

/// Weighted mean of the present dimensions, with weights renormalised over
/// them. `None` when no present dimension carries positive weight.
pub fn overall_quality(scores: &[(QualityDimension, Option<f64>)], weights: &DimensionWeights) -> Option<f64> {
    let (mut sum, mut total) = (0.0, 0.0);
    for (dim, score) in scores {
        if let Some(s) = score {
            let w = weights.get(*dim);
            sum += w * s;
            total += w;
        }
    }
    (total > 0.0).then(|| (sum / total).clamp(0.0, 100.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub category: Category,
}

impl Score {
    pub fn new(value: f64, cutoffs: &Cutoffs) -> Score {
        Score { value, category: categorize(value, cutoffs) }
    }
}

fn scored(value: Option<f64>, cutoffs: &Cutoffs) -> Option<Score> {
    value.map(|v| Score::new(v, cutoffs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeQuality {
    pub name: String,
    pub completeness: Score,
    pub correctness: Option<Score>,
    pub objectivity: Option<Score>,
    pub overall: Option<Score>,
}

impl AttributeQuality {
    pub fn dimension(&self, dim: QualityDimension) -> Option<f64> {
        match dim {
            QualityDimension::Completeness => Some(self.completeness.value),
            QualityDimension::Correctness => self.correctness.map(|s| s.value),
            QualityDimension::Objectivity => self.objectivity.map(|s| s.value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordQuality {
    pub completeness: Score,
    pub correctness: Option<Score>,
    pub overall: Option<Score>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleOutcomes {
    pub attribute: usize,
    pub cells: TruthColumn,
}

/// Every quality score for one dataset under one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityProfile {
    pub dataset_id: String,
    pub config_fingerprint: String,
    pub attributes: Vec<AttributeQuality>,
    pub records: Vec<RecordQuality>,
    /// Per-cell rule outcomes for attributes that have a rule.
    pub rule_outcomes: Vec<RuleOutcomes>,
    pub warnings: Vec<String>,
}

impl QualityProfile {
    /// Rule outcome of one cell, `None` when the attribute has no rule.
    pub fn cell_truth(&self, attribute: usize, record: usize) -> Option<Truth> {
        self.rule_outcomes.iter().find(|o| o.attribute == attribute).map(|o| o.cells.0[record])
    }
}

/// Scores every attribute and record with the default execution mode.
pub fn profile_quality(dataset: &Dataset, config: &QualityConfig) -> Result<QualityProfile, QualityError> {
    profile_quality_with(dataset, config, Execution::default())
}

pub fn profile_quality_with(
    dataset: &Dataset,
    config: &QualityConfig,
    exec: Execution,
) -> Result<QualityProfile, QualityError> {
    config.validate()?;
    let cutoffs = &config.cutoffs;
    let n = dataset.record_count();
    let mut warnings = Vec::new();
    for (attr, _) in config.rules.iter() {
        if dataset.attribute_index(attr).is_none() {
            warnings.push(format!("rule for {attr:?} ignored: no such attribute"));
        }
    }
    for attr in config.objectivity_targets.keys() {
        if dataset.attribute_index(attr).is_none() {
            warnings.push(format!("objectivity target for {attr:?} ignored: no such attribute"));
        }
    }

    let rule_columns: Vec<Option<TruthColumn>> =
        exec.try_map_range(dataset.attribute_count(), |a| evaluate_rule(dataset, a, config))?;

    let per_attribute = exec.try_map_range(dataset.attribute_count(), |a| {
        let meta = dataset.attribute(a);
        let column = dataset.column(a);
        let completeness = completeness_ratio(n - column.missing_count(), n);
        let correctness = rule_columns[a].as_ref().map(|col| {
            let mut counts = TruthCounts::default();
            col.0.iter().for_each(|t| counts.add(*t));
            counts.score(config.unknown_policy)
        });
        let (objectivity, unobserved) = match config.objectivity_targets.get(&meta.name) {
            None => (None, Vec::new()),
            Some(target) => match align(dataset, a, target)? {
                None => (None, Vec::new()),
                Some(al) => (Some(conformance_score(&al, &TotalVariation)), al.unobserved_targets),
            },
        };
        let overall = overall_quality(
            &[
                (QualityDimension::Completeness, Some(completeness)),
                (QualityDimension::Correctness, correctness),
                (QualityDimension::Objectivity, objectivity),
            ],
            config.weights_for(&meta.name),
        );
        let aq = AttributeQuality {
            name: meta.name.clone(),
            completeness: Score::new(completeness, cutoffs),
            correctness: scored(correctness, cutoffs),
            objectivity: scored(objectivity, cutoffs),
            overall: scored(overall, cutoffs),
        };
        Ok::<_, QualityError>((aq, unobserved))
    })?;
    let mut attributes = Vec::with_capacity(per_attribute.len());
    for (aq, unobserved) in per_attribute {
        if !unobserved.is_empty() {
            warnings.push(format!(
                "objectivity target for {:?} names categories never observed: {}",
                aq.name,
                unobserved.join(", ")
            ));
        }
        attributes.push(aq);
    }

    let rule_outcomes: Vec<RuleOutcomes> = rule_columns
        .into_iter()
        .enumerate()
        .filter_map(|(attribute, col)| col.map(|cells| RuleOutcomes { attribute, cells }))
        .collect();
    let attribute_count = dataset.attribute_count();
    let records = exec.map_range(n, |r| {
        let missing = dataset.columns().iter().filter(|c| c.is_missing(r)).count();
        let completeness = completeness_ratio(attribute_count - missing, attribute_count);
        let correctness = (!rule_outcomes.is_empty()).then(|| {
            let mut counts = TruthCounts::default();
            rule_outcomes.iter().for_each(|o| counts.add(o.cells.0[r]));
            counts.score(config.unknown_policy)
        });
        let overall = overall_quality(
            &[(QualityDimension::Completeness, Some(completeness)), (QualityDimension::Correctness, correctness)],
            &config.dimension_weights,
        );
        RecordQuality {
            completeness: Score::new(completeness, cutoffs),
            correctness: scored(correctness, cutoffs),
            overall: scored(overall, cutoffs),
        }
    });

    Ok(QualityProfile {
        dataset_id: dataset.id().to_string(),
        config_fingerprint: config.fingerprint(),
        attributes,
        records,
        rule_outcomes,
        warnings,
    })
}
