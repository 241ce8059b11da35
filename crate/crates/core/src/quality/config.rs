use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::QualityError;
use crate::constraint::RuleSet;

const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityDimension {
    Completeness,
    Correctness,
    Objectivity,
}

/// Relative weights of the quality dimensions in the overall score.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DimensionWeights {
    pub completeness: f64,
    pub correctness: f64,
    pub objectivity: f64,
}

impl Default for DimensionWeights {
    fn default() -> Self {
        DimensionWeights { completeness: 1.0, correctness: 1.0, objectivity: 1.0 }
    }
}

impl DimensionWeights {
    pub fn get(&self, dim: QualityDimension) -> f64 {
        match dim {
            QualityDimension::Completeness => self.completeness,
            QualityDimension::Correctness => self.correctness,
            QualityDimension::Objectivity => self.objectivity,
        }
    }

    pub fn scaled(&self, k: f64) -> DimensionWeights {
        DimensionWeights {
            completeness: self.completeness * k,
            correctness: self.correctness * k,
            objectivity: self.objectivity * k,
        }
    }

    fn validate(&self, what: &str) -> Result<(), QualityError> {
        let all = [self.completeness, self.correctness, self.objectivity];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(QualityError::InvalidConfig(format!("{what}: weights must be finite and non-negative")));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(QualityError::InvalidConfig(format!("{what}: at least one weight must be positive")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    High,
    Medium,
    Low,
}

/// Score thresholds for the high / medium / low categories.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Cutoffs {
    pub high_min: f64,
    pub medium_min: f64,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Cutoffs { high_min: 90.0, medium_min: 67.0 }
    }
}

impl Cutoffs {
    pub fn validate(&self) -> Result<(), QualityError> {
        if !(0.0 <= self.medium_min && self.medium_min < self.high_min && self.high_min <= 100.0) {
            return Err(QualityError::InvalidConfig(format!(
                "cutoffs must satisfy 0 <= medium_min < high_min <= 100 (got medium_min={}, high_min={})",
                self.medium_min, self.high_min
            )));
        }
        Ok(())
    }
}

/// Buckets a score: high iff `score >= high_min`, medium iff
/// `medium_min <= score < high_min`, low otherwise.
pub fn categorize(score: f64, cutoffs: &Cutoffs) -> Category {
    if score >= cutoffs.high_min {
        Category::High
    } else if score >= cutoffs.medium_min {
        Category::Medium
    } else {
        Category::Low
    }
}

/// How a rule outcome of `unknown` (a missing cell) enters correctness.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownPolicy {
    CountAsCorrect,
    CountAsIncorrect,
    #[default]
    Exclude,
}

/// Expected distribution an attribute's values should conform to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetDistribution {
    /// Equal mass on every observed category, or on every histogram bin of
    /// a numerical attribute.
    Uniform,
    Categorical {
        probabilities: BTreeMap<String, f64>,
    },
    /// `edges.len() == probabilities.len() + 1`; bins are `[e_i, e_{i+1})`
    /// with the last bin closed.
    Binned {
        edges: Vec<f64>,
        probabilities: Vec<f64>,
    },
}

impl TargetDistribution {
    pub fn validate(&self, attribute: &str) -> Result<(), QualityError> {
        let bad = |msg: String| Err(QualityError::InvalidConfig(format!("target for {attribute:?}: {msg}")));
        let probs: Vec<f64> = match self {
            TargetDistribution::Uniform => return Ok(()),
            TargetDistribution::Categorical { probabilities } => probabilities.values().copied().collect(),
            TargetDistribution::Binned { edges, probabilities } => {
                if edges.len() != probabilities.len() + 1 || probabilities.is_empty() {
                    return bad(format!("{} edges for {} probabilities", edges.len(), probabilities.len()));
                }
                if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("edges must be finite and strictly increasing".into());
                }
                probabilities.clone()
            }
        };
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return bad("probabilities must be non-negative".into());
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return bad(format!("probabilities sum to {total}, expected 1"));
        }
        Ok(())
    }
}

/// Everything the quality engine needs besides the data.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QualityConfig {
    pub rules: RuleSet,
    pub objectivity_targets: BTreeMap<String, TargetDistribution>,
    pub dimension_weights: DimensionWeights,
    /// Replaces `dimension_weights` for the named attributes.
    pub per_attribute_weights: BTreeMap<String, DimensionWeights>,
    pub cutoffs: Cutoffs,
    pub unknown_policy: UnknownPolicy,
}

impl QualityConfig {
    pub fn validate(&self) -> Result<(), QualityError> {
        self.dimension_weights.validate("dimension weights")?;
        for (attr, w) in &self.per_attribute_weights {
            w.validate(&format!("weights for {attr:?}"))?;
        }
        self.cutoffs.validate()?;
        for (attr, t) in &self.objectivity_targets {
            t.validate(attr)?;
        }
        Ok(())
    }

    pub fn weights_for(&self, attribute: &str) -> &DimensionWeights {
        self.per_attribute_weights.get(attribute).unwrap_or(&self.dimension_weights)
    }

    /// Stable digest of the configuration; profiles are cached under it.
    pub fn fingerprint(&self) -> String {
        let mut canon = String::new();
        for (attr, rule) in self.rules.iter() {
            let _ = writeln!(canon, "rule\t{attr}\t{rule}");
        }
        for (attr, t) in &self.objectivity_targets {
            let _ = writeln!(canon, "target\t{attr}\t{t:?}");
        }
        let _ = writeln!(canon, "weights\t{:?}", self.dimension_weights);
        for (attr, w) in &self.per_attribute_weights {
            let _ = writeln!(canon, "attr-weights\t{attr}\t{w:?}");
        }
        let _ = writeln!(canon, "cutoffs\t{:?}\t{:?}", self.cutoffs, self.unknown_policy);
        hex::encode(&Sha256::digest(canon.as_bytes())[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categorize_boundaries() {
        let c = Cutoffs::default();
        assert_eq!(categorize(94.0, &c), Category::High);
        assert_eq!(categorize(90.0, &c), Category::High);
        assert_eq!(categorize(89.99, &c), Category::Medium);
        assert_eq!(categorize(67.0, &c), Category::Medium);
        assert_eq!(categorize(66.99, &c), Category::Low);
        assert_eq!(categorize(0.0, &c), Category::Low);
    }

    #[test]
    fn cutoff_validation() {
        assert!(Cutoffs::default().validate().is_ok());
        assert!(Cutoffs { high_min: 60.0, medium_min: 67.0 }.validate().is_err());
        assert!(Cutoffs { high_min: 67.0, medium_min: 67.0 }.validate().is_err());
        assert!(Cutoffs { high_min: 101.0, medium_min: 67.0 }.validate().is_err());
    }

    #[test]
    fn weight_validation() {
        let mut cfg = QualityConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.dimension_weights = DimensionWeights { completeness: 0.0, correctness: 0.0, objectivity: 0.0 };
        assert!(cfg.validate().is_err());
        cfg.dimension_weights = DimensionWeights { completeness: -1.0, correctness: 1.0, objectivity: 0.0 };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn target_validation() {
        let ok =
            TargetDistribution::Categorical { probabilities: BTreeMap::from([("a".into(), 0.25), ("b".into(), 0.75)]) };
        assert!(ok.validate("x").is_ok());
        let off = TargetDistribution::Categorical { probabilities: BTreeMap::from([("a".into(), 0.5)]) };
        assert!(off.validate("x").is_err());
        let bins = TargetDistribution::Binned { edges: vec![0.0, 1.0, 2.0], probabilities: vec![0.5, 0.5] };
        assert!(bins.validate("x").is_ok());
        let bins = TargetDistribution::Binned { edges: vec![0.0, 2.0, 1.0], probabilities: vec![0.5, 0.5] };
        assert!(bins.validate("x").is_err());
        let bins = TargetDistribution::Binned { edges: vec![0.0, 1.0], probabilities: vec![0.5, 0.5] };
        assert!(bins.validate("x").is_err());
    }

    #[test]
    fn fingerprint_tracks_changes() {
        let a = QualityConfig::default();
        let mut b = QualityConfig::default();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.rules.insert_text("x", "x > 0", false).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
