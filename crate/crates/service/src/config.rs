//! TOML service configuration.
//!
//! ```toml
//! storage_root = "data"
//! glyph_mode = "both"
//!
//! [quality.rules]
//! "customer.email" = "\"customer.email\" LIKE '%_@__%.__%'"
//! age = { expr = "age < 0 OR age > 120", incorrect_if = true }
//!
//! [quality.targets.gender]
//! kind = "uniform"
//!
//! [usage]
//! ignored_dimensions = ["in_filters"]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use curator_core::quality::{Cutoffs, DimensionWeights, QualityConfig, TargetDistribution, UnknownPolicy};
use curator_core::table::IngestConfig;
use curator_core::usage::UsageConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Overrides `storage_root` when set.
pub const STORAGE_ENV: &str = "CURATOR_STORAGE_ROOT";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlyphMode {
    #[default]
    Both,
    QualityOnly,
    UsageOnly,
    None,
}

impl GlyphMode {
    /// The mode actually shown: the usage half disappears without usage data.
    pub fn effective(self, has_usage: bool) -> GlyphMode {
        match (self, has_usage) {
            (GlyphMode::Both, false) => GlyphMode::QualityOnly,
            (GlyphMode::UsageOnly, false) => GlyphMode::None,
            (mode, _) => mode,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RuleEntry {
    /// The attribute is correct where this holds.
    Holds(String),
    Detailed {
        expr: String,
        /// When true, `expr` describes incorrect values instead.
        #[serde(default)]
        incorrect_if: bool,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QualitySection {
    pub rules: BTreeMap<String, RuleEntry>,
    pub targets: BTreeMap<String, TargetDistribution>,
    pub weights: DimensionWeights,
    pub attribute_weights: BTreeMap<String, DimensionWeights>,
    pub unknown_policy: UnknownPolicy,
}

impl QualitySection {
    /// The TOML form of an engine config; rules are written in canonical form.
    pub fn from_config(q: &QualityConfig) -> QualitySection {
        QualitySection {
            rules: q.rules.iter().map(|(a, r)| (a.to_string(), RuleEntry::Holds(r.to_string()))).collect(),
            targets: q.objectivity_targets.clone(),
            weights: q.dimension_weights,
            attribute_weights: q.per_attribute_weights.clone(),
            unknown_policy: q.unknown_policy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub storage_root: PathBuf,
    pub ingest: IngestConfig,
    pub quality: QualitySection,
    pub usage: UsageConfig,
    pub cutoffs: Cutoffs,
    pub glyph_mode: GlyphMode,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            storage_root: PathBuf::from("curator-data"),
            ingest: IngestConfig::default(),
            quality: QualitySection::default(),
            usage: UsageConfig::default(),
            cutoffs: Cutoffs::default(),
            glyph_mode: GlyphMode::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl ServiceConfig {
    /// Reads and validates a config file, then applies the env override.
    pub fn load(path: &Path) -> Result<ServiceConfig, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut config: ServiceConfig =
            toml::from_str(&text).map_err(|source| ConfigError::Toml { path: path.to_path_buf(), source })?;
        if let Some(dir) = path.parent() {
            if config.storage_root.is_relative() && !dir.as_os_str().is_empty() {
                config.storage_root = dir.join(&config.storage_root);
            }
        }
        config.apply_env();
        config.quality_config()?;
        Ok(config)
    }

    /// Defaults plus the env override; used when no file is given.
    pub fn from_env() -> ServiceConfig {
        let mut config = ServiceConfig::default();
        config.apply_env();
        config
    }

    fn apply_env(&mut self) {
        if let Some(root) = std::env::var_os(STORAGE_ENV).filter(|v| !v.is_empty()) {
            self.storage_root = PathBuf::from(root);
        }
    }

    /// Parses the rules and checks weights, targets, cutoffs and usage.
    pub fn quality_config(&self) -> Result<QualityConfig, ConfigError> {
        let mut q = QualityConfig::default();
        for (attribute, entry) in &self.quality.rules {
            let (text, incorrect_if) = match entry {
                RuleEntry::Holds(text) => (text.as_str(), false),
                RuleEntry::Detailed { expr, incorrect_if } => (expr.as_str(), *incorrect_if),
            };
            q.rules.insert_text(attribute, text, incorrect_if).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        q.objectivity_targets = self.quality.targets.clone();
        q.dimension_weights = self.quality.weights;
        q.per_attribute_weights = self.quality.attribute_weights.clone();
        q.cutoffs = self.cutoffs;
        q.unknown_policy = self.quality.unknown_policy;
        q.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.usage.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(q)
    }
}
