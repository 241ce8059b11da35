//! Wire shapes for scores. Values are rounded to two decimals here and
//! nowhere else.

use curator_core::quality::{Category, Cutoffs, QualityProfile, RecordQuality, Score};
use curator_core::table::{Dataset, Datatype};
use curator_core::usage::{DistinctBy, UsageDimension, UsageProfile};
use serde::{Deserialize, Serialize};

use crate::config::GlyphMode;

pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireScore {
    pub value: f64,
    pub category: Category,
}

impl From<Score> for WireScore {
    fn from(s: Score) -> Self {
        WireScore { value: round2(s.value), category: s.category }
    }
}

fn wire(s: Option<Score>) -> Option<WireScore> {
    s.map(WireScore::from)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeInfo {
    pub name: String,
    pub datatype: Datatype,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeQualityWire {
    pub name: String,
    pub completeness: WireScore,
    pub correctness: Option<WireScore>,
    pub objectivity: Option<WireScore>,
    pub overall: Option<WireScore>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordQualityWire {
    pub completeness: WireScore,
    pub correctness: Option<WireScore>,
    pub overall: Option<WireScore>,
}

impl From<&RecordQuality> for RecordQualityWire {
    fn from(r: &RecordQuality) -> Self {
        RecordQualityWire {
            completeness: r.completeness.into(),
            correctness: wire(r.correctness),
            overall: wire(r.overall),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityBlock {
    pub attributes: Vec<AttributeQualityWire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records: Option<Vec<RecordQualityWire>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeUsageWire {
    pub name: String,
    pub in_subsets: WireScore,
    pub in_filters: WireScore,
    pub in_visualizations: WireScore,
    pub overall: WireScore,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UsageBlock {
    pub session_count: usize,
    pub ignored_dimensions: Vec<UsageDimension>,
    pub distinct_by: DistinctBy,
    pub attributes: Vec<AttributeUsageWire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records: Option<Vec<WireScore>>,
}

/// What `GET /datasets/{id}/profile` serves and `curator profile` writes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub dataset_id: String,
    pub attribute_count: usize,
    pub record_count: usize,
    pub config_fingerprint: String,
    /// Configured mode after degrading for missing usage data.
    pub glyph_mode: GlyphMode,
    pub cutoffs: Cutoffs,
    pub attributes: Vec<AttributeInfo>,
    pub quality: QualityBlock,
    /// Absent until at least one session has been finalized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<UsageBlock>,
    pub warnings: Vec<String>,
}

pub struct ReportInputs<'a> {
    pub dataset: &'a Dataset,
    pub quality: &'a QualityProfile,
    pub usage: Option<&'a UsageProfile>,
    pub usage_config: &'a curator_core::usage::UsageConfig,
    pub cutoffs: Cutoffs,
    pub glyph_mode: GlyphMode,
}

pub fn usage_block(usage: &UsageProfile, config: &curator_core::usage::UsageConfig, with_records: bool) -> UsageBlock {
    UsageBlock {
        session_count: usage.session_count,
        ignored_dimensions: config.ignored_dimensions.iter().copied().collect(),
        distinct_by: config.distinct_by,
        attributes: usage
            .attributes
            .iter()
            .map(|a| AttributeUsageWire {
                name: a.name.clone(),
                in_subsets: a.in_subsets.into(),
                in_filters: a.in_filters.into(),
                in_visualizations: a.in_visualizations.into(),
                overall: a.overall.into(),
            })
            .collect(),
        records: with_records.then(|| usage.records.iter().map(|&s| s.into()).collect()),
    }
}

pub fn profile_report(inputs: &ReportInputs<'_>, with_records: bool) -> ProfileReport {
    let d = inputs.dataset;
    let q = inputs.quality;
    ProfileReport {
        dataset_id: d.id().to_string(),
        attribute_count: d.attribute_count(),
        record_count: d.record_count(),
        config_fingerprint: q.config_fingerprint.clone(),
        glyph_mode: inputs.glyph_mode.effective(inputs.usage.is_some()),
        cutoffs: inputs.cutoffs,
        attributes: d
            .attributes()
            .iter()
            .map(|m| AttributeInfo { name: m.name.clone(), datatype: m.datatype })
            .collect(),
        quality: QualityBlock {
            attributes: q
                .attributes
                .iter()
                .map(|a| AttributeQualityWire {
                    name: a.name.clone(),
                    completeness: a.completeness.into(),
                    correctness: wire(a.correctness),
                    objectivity: wire(a.objectivity),
                    overall: wire(a.overall),
                })
                .collect(),
            records: with_records.then(|| q.records.iter().map(RecordQualityWire::from).collect()),
        },
        usage: inputs.usage.map(|u| usage_block(u, inputs.usage_config, with_records)),
        warnings: q.warnings.clone(),
    }
}
