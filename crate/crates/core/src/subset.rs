//! Per-session subset selection.
//!
//! A [`SubsetState`] holds the analyst's active filters and explicit
//! attribute selection. Everything else (visible attributes, visible and
//! selected records) is derived from scratch from the dataset, the current
//! profiles and the filters whenever something changes. Filters compose
//! conjunctively and there is at most one filter per [`FilterKey`].

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quality::QualityProfile;
use crate::table::{ColumnData, Dataset, Datatype};
use crate::usage::UsageProfile;
use crate::Execution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreSource {
    Quality,
    Usage,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreDimension {
    Completeness,
    Correctness,
    Objectivity,
    InSubsets,
    InFilters,
    InVisualizations,
    Overall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Attribute,
    Record,
}

impl ScoreDimension {
    /// Whether `source` defines this dimension at `level`.
    pub fn exists(self, source: ScoreSource, level: Level) -> bool {
        use ScoreDimension::*;
        match (source, level) {
            (ScoreSource::Quality, Level::Attribute) => {
                matches!(self, Completeness | Correctness | Objectivity | Overall)
            }
            (ScoreSource::Quality, Level::Record) => matches!(self, Completeness | Correctness | Overall),
            (ScoreSource::Usage, Level::Attribute) => {
                matches!(self, InSubsets | InFilters | InVisualizations | Overall)
            }
            (ScoreSource::Usage, Level::Record) => matches!(self, InSubsets | Overall),
        }
    }
}

/// What a value filter keeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ValueSelection {
    /// Categorical: keep rows whose value is one of these.
    Categories { values: BTreeSet<String> },
    /// Numerical: keep rows with `low <= value <= high`.
    Range { low: f64, high: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterSpec {
    AttributeValue {
        attribute: String,
        selection: ValueSelection,
        #[serde(default)]
        include_missing: bool,
    },
    AttributeScore {
        source: ScoreSource,
        dimension: ScoreDimension,
        low: f64,
        high: f64,
    },
    RecordScore {
        source: ScoreSource,
        dimension: ScoreDimension,
        low: f64,
        high: f64,
    },
}

/// Identity of a filter slot; re-applying a filter with the same key
/// replaces the old one.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterKey {
    AttributeValue { attribute: String },
    AttributeScore { source: ScoreSource, dimension: ScoreDimension },
    RecordScore { source: ScoreSource, dimension: ScoreDimension },
}

impl FilterSpec {
    pub fn key(&self) -> FilterKey {
        match self {
            FilterSpec::AttributeValue { attribute, .. } => FilterKey::AttributeValue { attribute: attribute.clone() },
            FilterSpec::AttributeScore { source, dimension, .. } => {
                FilterKey::AttributeScore { source: *source, dimension: *dimension }
            }
            FilterSpec::RecordScore { source, dimension, .. } => {
                FilterKey::RecordScore { source: *source, dimension: *dimension }
            }
        }
    }

    /// The attribute a value filter constrains.
    pub fn value_attribute(&self) -> Option<&str> {
        match self {
            FilterSpec::AttributeValue { attribute, .. } => Some(attribute),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubsetError {
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error("no usage data for this dataset")]
    NoUsageData,
    #[error("no active filter {0:?}")]
    UnknownFilter(FilterKey),
    #[error("no attributes selected")]
    EmptySelection,
}

/// Read-only inputs the derived sets depend on.
#[derive(Clone, Copy)]
pub struct SubsetContext<'a> {
    pub dataset: &'a Dataset,
    pub quality: &'a QualityProfile,
    pub usage: Option<&'a UsageProfile>,
    pub exec: Execution,
}

impl<'a> SubsetContext<'a> {
    pub fn new(dataset: &'a Dataset, quality: &'a QualityProfile, usage: Option<&'a UsageProfile>) -> Self {
        SubsetContext { dataset, quality, usage, exec: Execution::default() }
    }

    fn require_source(&self, source: ScoreSource) -> Result<(), SubsetError> {
        if source == ScoreSource::Usage && self.usage.is_none() {
            return Err(SubsetError::NoUsageData);
        }
        Ok(())
    }

    /// Attribute-level score; `None` when N/A or the profile is absent.
    pub fn attribute_score(&self, source: ScoreSource, dim: ScoreDimension, a: usize) -> Option<f64> {
        use ScoreDimension::*;
        match source {
            ScoreSource::Quality => {
                let q = &self.quality.attributes[a];
                match dim {
                    Completeness => Some(q.completeness.value),
                    Correctness => q.correctness.map(|s| s.value),
                    Objectivity => q.objectivity.map(|s| s.value),
                    Overall => q.overall.map(|s| s.value),
                    _ => None,
                }
            }
            ScoreSource::Usage => {
                let u = &self.usage?.attributes[a];
                match dim {
                    InSubsets => Some(u.in_subsets.value),
                    InFilters => Some(u.in_filters.value),
                    InVisualizations => Some(u.in_visualizations.value),
                    Overall => Some(u.overall.value),
                    _ => None,
                }
            }
        }
    }

    /// Record-level score; `None` when N/A or the profile is absent.
    pub fn record_score(&self, source: ScoreSource, dim: ScoreDimension, r: usize) -> Option<f64> {
        use ScoreDimension::*;
        match source {
            ScoreSource::Quality => {
                let q = &self.quality.records[r];
                match dim {
                    Completeness => Some(q.completeness.value),
                    Correctness => q.correctness.map(|s| s.value),
                    Overall => q.overall.map(|s| s.value),
                    _ => None,
                }
            }
            ScoreSource::Usage => match dim {
                InSubsets | Overall => Some(self.usage?.records[r].value),
                _ => None,
            },
        }
    }
}

fn check_range(low: f64, high: f64, bounded: bool) -> Result<(), SubsetError> {
    if !low.is_finite() || !high.is_finite() {
        return Err(SubsetError::InvalidFilter("range bounds must be finite".into()));
    }
    if low > high {
        return Err(SubsetError::InvalidFilter(format!("low {low} exceeds high {high}")));
    }
    if bounded && (low < 0.0 || high > 100.0) {
        return Err(SubsetError::InvalidFilter(format!("score range [{low}, {high}] outside [0, 100]")));
    }
    Ok(())
}

fn validate_filter(ctx: &SubsetContext<'_>, filter: &FilterSpec) -> Result<(), SubsetError> {
    match filter {
        FilterSpec::AttributeValue { attribute, selection, .. } => {
            let a = ctx
                .dataset
                .attribute_index(attribute)
                .ok_or_else(|| SubsetError::UnknownAttribute(attribute.clone()))?;
            match (selection, ctx.dataset.attribute(a).datatype) {
                (ValueSelection::Categories { .. }, Datatype::Categorical) => Ok(()),
                (ValueSelection::Range { low, high }, Datatype::Numerical) => check_range(*low, *high, false),
                (ValueSelection::Categories { .. }, Datatype::Numerical) => {
                    Err(SubsetError::InvalidFilter(format!("{attribute:?} is numerical; use a range")))
                }
                (ValueSelection::Range { .. }, Datatype::Categorical) => {
                    Err(SubsetError::InvalidFilter(format!("{attribute:?} is categorical; use a category set")))
                }
            }
        }
        FilterSpec::AttributeScore { source, dimension, low, high } => {
            if !dimension.exists(*source, Level::Attribute) {
                return Err(SubsetError::InvalidFilter(format!(
                    "{source:?} has no attribute-level {dimension:?} dimension"
                )));
            }
            check_range(*low, *high, true)?;
            ctx.require_source(*source)
        }
        FilterSpec::RecordScore { source, dimension, low, high } => {
            if !dimension.exists(*source, Level::Record) {
                return Err(SubsetError::InvalidFilter(format!(
                    "{source:?} has no record-level {dimension:?} dimension"
                )));
            }
            check_range(*low, *high, true)?;
            ctx.require_source(*source)
        }
    }
}

/// A value filter compiled against a column.
enum RowTest<'a> {
    Codes { codes: &'a [Option<u32>], keep: Vec<bool>, include_missing: bool },
    Range { values: &'a [Option<f64>], low: f64, high: f64, include_missing: bool },
    Score { source: ScoreSource, dim: ScoreDimension, low: f64, high: f64 },
}

impl RowTest<'_> {
    fn passes(&self, ctx: &SubsetContext<'_>, r: usize) -> bool {
        match self {
            RowTest::Codes { codes, keep, include_missing } => match codes[r] {
                Some(c) => keep[c as usize],
                None => *include_missing,
            },
            RowTest::Range { values, low, high, include_missing } => match values[r] {
                Some(v) => *low <= v && v <= *high,
                None => *include_missing,
            },
            RowTest::Score { source, dim, low, high } => {
                ctx.record_score(*source, *dim, r).is_some_and(|s| *low <= s && s <= *high)
            }
        }
    }
}

fn compile<'a>(ctx: &SubsetContext<'a>, filter: &FilterSpec) -> Option<RowTest<'a>> {
    match filter {
        FilterSpec::AttributeValue { attribute, selection, include_missing } => {
            let a = ctx.dataset.attribute_index(attribute)?;
            let include_missing = *include_missing;
            match (ctx.dataset.column(a).data(), selection) {
                (ColumnData::Categorical { dictionary, codes }, ValueSelection::Categories { values }) => {
                    let keep = dictionary.iter().map(|d| values.contains(d)).collect();
                    Some(RowTest::Codes { codes, keep, include_missing })
                }
                (ColumnData::Numerical(values), ValueSelection::Range { low, high }) => {
                    Some(RowTest::Range { values, low: *low, high: *high, include_missing })
                }
                _ => None,
            }
        }
        FilterSpec::RecordScore { source, dimension, low, high } => {
            Some(RowTest::Score { source: *source, dim: *dimension, low: *low, high: *high })
        }
        FilterSpec::AttributeScore { .. } => None,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    pub visible: usize,
    pub selected: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimapSummary {
    pub attrs: Counts,
    pub records: Counts,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Asc,
    Desc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "by", rename_all = "snake_case")]
pub enum SortKey {
    /// Attribute name, or record index for records.
    Name,
    Score {
        source: ScoreSource,
        dimension: ScoreDimension,
    },
}

/// Stable sort of `items` by an optional score; `None` sorts last in either
/// direction.
fn sort_by_score(items: &mut [usize], score: impl Fn(usize) -> Option<f64>, dir: Direction) {
    items.sort_by(|&a, &b| match (score(a), score(b)) {
        (Some(x), Some(y)) => {
            let o = x.total_cmp(&y);
            if dir == Direction::Desc {
                o.reverse()
            } else {
                o
            }
        }
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    });
}

/// One analyst's filters and selection over one dataset version.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SubsetState {
    /// Active filters, ordered by key.
    filters: Vec<FilterSpec>,
    selected_attributes: BTreeSet<String>,
    #[serde(skip)]
    visible_attributes: Vec<usize>,
    #[serde(skip)]
    visible_records: Vec<usize>,
}

impl SubsetState {
    /// Fresh state: no filters, nothing selected, everything visible.
    pub fn new(ctx: &SubsetContext<'_>) -> SubsetState {
        let mut s = SubsetState::default();
        s.recompute(ctx);
        s
    }

    pub fn filters(&self) -> &[FilterSpec] {
        &self.filters
    }

    pub fn filter(&self, key: &FilterKey) -> Option<&FilterSpec> {
        self.filters.iter().find(|f| f.key() == *key)
    }

    pub fn selected_attribute_names(&self) -> &BTreeSet<String> {
        &self.selected_attributes
    }

    /// Explicitly selected attributes in dataset order.
    pub fn selected_attributes(&self, dataset: &Dataset) -> Vec<usize> {
        (0..dataset.attribute_count())
            .filter(|&a| self.selected_attributes.contains(&dataset.attribute(a).name))
            .collect()
    }

    pub fn visible_attributes(&self) -> &[usize] {
        &self.visible_attributes
    }

    pub fn visible_records(&self) -> &[usize] {
        &self.visible_records
    }

    /// Every visible record is selected.
    pub fn selected_records(&self) -> &[usize] {
        &self.visible_records
    }

    /// Selected attributes currently hidden by an attribute-score filter.
    pub fn hidden_selected(&self, dataset: &Dataset) -> Vec<usize> {
        self.selected_attributes(dataset)
            .into_iter()
            .filter(|a| self.visible_attributes.binary_search(a).is_err())
            .collect()
    }

    /// Rebuilds the derived sets, e.g. after the profiles changed or the
    /// state was deserialized. Filters whose source profile is absent keep
    /// nothing.
    pub fn refresh(&mut self, ctx: &SubsetContext<'_>) {
        self.recompute(ctx);
    }

    fn recompute(&mut self, ctx: &SubsetContext<'_>) {
        let d = ctx.dataset;
        let attr_filters: Vec<(ScoreSource, ScoreDimension, f64, f64)> = self
            .filters
            .iter()
            .filter_map(|f| match f {
                FilterSpec::AttributeScore { source, dimension, low, high } => Some((*source, *dimension, *low, *high)),
                _ => None,
            })
            .collect();
        self.visible_attributes = (0..d.attribute_count())
            .filter(|&a| {
                attr_filters
                    .iter()
                    .all(|&(src, dim, lo, hi)| ctx.attribute_score(src, dim, a).is_some_and(|s| lo <= s && s <= hi))
            })
            .collect();

        let tests: Vec<Option<RowTest<'_>>> = self
            .filters
            .iter()
            .filter(|f| !matches!(f, FilterSpec::AttributeScore { .. }))
            .map(|f| compile(ctx, f))
            .collect();
        if tests.is_empty() {
            self.visible_records = (0..d.record_count()).collect();
            return;
        }
        if tests.iter().any(Option::is_none) {
            // a filter that no longer compiles (attribute gone) keeps nothing
            self.visible_records = Vec::new();
            return;
        }
        let tests: Vec<RowTest<'_>> = tests.into_iter().flatten().collect();
        self.visible_records = ctx.exec.filter_range(d.record_count(), |r| tests.iter().all(|t| t.passes(ctx, r)));
    }

    /// Adds or replaces the filter with the same key. On error the state is
    /// unchanged.
    pub fn apply_filter(&mut self, ctx: &SubsetContext<'_>, filter: FilterSpec) -> Result<(), SubsetError> {
        validate_filter(ctx, &filter)?;
        let key = filter.key();
        match self.filters.binary_search_by(|f| f.key().cmp(&key)) {
            Ok(at) => self.filters[at] = filter,
            Err(at) => self.filters.insert(at, filter),
        }
        self.recompute(ctx);
        Ok(())
    }

    pub fn remove_filter(&mut self, ctx: &SubsetContext<'_>, key: &FilterKey) -> Result<FilterSpec, SubsetError> {
        let at =
            self.filters.iter().position(|f| f.key() == *key).ok_or_else(|| SubsetError::UnknownFilter(key.clone()))?;
        let removed = self.filters.remove(at);
        self.recompute(ctx);
        Ok(removed)
    }

    pub fn clear_filters(&mut self, ctx: &SubsetContext<'_>) {
        self.filters.clear();
        self.recompute(ctx);
    }

    /// Selection is independent of visibility: hidden attributes can be
    /// selected and stay selected when a filter hides them.
    pub fn set_attribute_selection(
        &mut self,
        ctx: &SubsetContext<'_>,
        attribute: &str,
        selected: bool,
    ) -> Result<(), SubsetError> {
        if ctx.dataset.attribute_index(attribute).is_none() {
            return Err(SubsetError::UnknownAttribute(attribute.to_string()));
        }
        if selected {
            self.selected_attributes.insert(attribute.to_string());
        } else {
            self.selected_attributes.remove(attribute);
        }
        Ok(())
    }

    pub fn minimap(&self, ctx: &SubsetContext<'_>) -> MinimapSummary {
        MinimapSummary {
            attrs: Counts {
                total: ctx.dataset.attribute_count(),
                visible: self.visible_attributes.len(),
                selected: self.selected_attributes.len(),
            },
            records: Counts {
                total: ctx.dataset.record_count(),
                visible: self.visible_records.len(),
                selected: self.visible_records.len(),
            },
        }
    }

    /// Visible attributes ordered by `key`.
    pub fn sort_attributes(
        &self,
        ctx: &SubsetContext<'_>,
        key: SortKey,
        dir: Direction,
    ) -> Result<Vec<usize>, SubsetError> {
        let mut out = self.visible_attributes.clone();
        match key {
            SortKey::Name => {
                let name = |a: usize| ctx.dataset.attribute(a).name.as_str();
                out.sort_by(|&a, &b| {
                    let o = name(a).cmp(name(b));
                    if dir == Direction::Desc {
                        o.reverse()
                    } else {
                        o
                    }
                });
            }
            SortKey::Score { source, dimension } => {
                if !dimension.exists(source, Level::Attribute) {
                    return Err(SubsetError::InvalidFilter(format!(
                        "{source:?} has no attribute-level {dimension:?} dimension"
                    )));
                }
                ctx.require_source(source)?;
                sort_by_score(&mut out, |a| ctx.attribute_score(source, dimension, a), dir);
            }
        }
        Ok(out)
    }

    /// Visible records ordered by `key`; [`SortKey::Name`] orders by index.
    pub fn sort_records(
        &self,
        ctx: &SubsetContext<'_>,
        key: SortKey,
        dir: Direction,
    ) -> Result<Vec<usize>, SubsetError> {
        let mut out = self.visible_records.clone();
        match key {
            SortKey::Name => {
                if dir == Direction::Desc {
                    out.reverse();
                }
            }
            SortKey::Score { source, dimension } => {
                if !dimension.exists(source, Level::Record) {
                    return Err(SubsetError::InvalidFilter(format!(
                        "{source:?} has no record-level {dimension:?} dimension"
                    )));
                }
                ctx.require_source(source)?;
                sort_by_score(&mut out, |r| ctx.record_score(source, dimension, r), dir);
            }
        }
        Ok(out)
    }

    /// The selected attributes × selected records as a new dataset, row
    /// order preserved.
    pub fn export(&self, dataset: &Dataset) -> Result<Dataset, SubsetError> {
        let attrs = self.selected_attributes(dataset);
        if attrs.is_empty() {
            return Err(SubsetError::EmptySelection);
        }
        Ok(dataset.project(&attrs, &self.visible_records))
    }
}
