//! Usage scores derived from finalized analyst sessions.
//!
//! Only the final state of a session counts: the attributes it selected,
//! the attribute-value filters it left active, the charts still on its
//! dashboard and the records those filters kept. Every score is
//! `100 * k / n` where `n` is the number of counted sessions.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dashboard::{Dashboard, VizSpec};
use crate::quality::{Cutoffs, Score};
use crate::subset::{FilterSpec, SubsetState};
use crate::table::Dataset;
use crate::Execution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UsageDimension {
    InSubsets,
    InFilters,
    InVisualizations,
}

impl UsageDimension {
    pub const ALL: [UsageDimension; 3] =
        [UsageDimension::InSubsets, UsageDimension::InFilters, UsageDimension::InVisualizations];
}

/// What the denominator counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistinctBy {
    #[default]
    Session,
    /// One vote per user: their most recently finalized session.
    User,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct UsageConfig {
    pub ignored_dimensions: BTreeSet<UsageDimension>,
    pub distinct_by: DistinctBy,
}

impl UsageConfig {
    pub fn validate(&self) -> Result<(), UsageError> {
        if self.ignored_dimensions.len() >= UsageDimension::ALL.len() {
            return Err(UsageError::AllIgnored);
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum UsageError {
    #[error("every usage dimension is ignored")]
    AllIgnored,
    #[error("session {session_id} belongs to dataset {found}, expected {expected}")]
    MixedVersions { session_id: String, expected: String, found: String },
    #[error("session {session_id} selects record {index} but the dataset has {count} records")]
    RecordOutOfRange { session_id: String, index: usize, count: usize },
    #[error("session store: {0}")]
    Store(#[source] Box<dyn std::error::Error + Send + Sync>),
}

/// The committed final state of one analyst session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub dataset_id: String,
    pub user_id: String,
    pub finalized_at: DateTime<Utc>,
    pub final_selected_attributes: BTreeSet<String>,
    /// Every filter active at finalize time. Only attribute-value filters
    /// count toward `in_filters`.
    pub final_filters: Vec<FilterSpec>,
    pub final_visualizations: Vec<VizSpec>,
    /// Records passing `final_filters`, ascending. Materialized here so the
    /// score survives later config changes.
    pub final_selected_record_indices: Vec<usize>,
}

impl SessionRecord {
    /// Snapshots a session's state. `state` must be current for `dataset`.
    pub fn finalize(
        session_id: impl Into<String>,
        user_id: impl Into<String>,
        dataset: &Dataset,
        state: &SubsetState,
        dashboard: &Dashboard,
        at: DateTime<Utc>,
    ) -> SessionRecord {
        SessionRecord {
            session_id: session_id.into(),
            dataset_id: dataset.id().to_string(),
            user_id: user_id.into(),
            finalized_at: at,
            final_selected_attributes: state.selected_attribute_names().clone(),
            final_filters: state.filters().to_vec(),
            final_visualizations: dashboard.specs().cloned().collect(),
            final_selected_record_indices: state.selected_records().to_vec(),
        }
    }

    pub fn selected(&self, attribute: &str) -> bool {
        self.final_selected_attributes.contains(attribute)
    }

    pub fn filtered(&self, attribute: &str) -> bool {
        self.final_filters.iter().any(|f| f.value_attribute() == Some(attribute))
    }

    pub fn visualized(&self, attribute: &str) -> bool {
        self.final_visualizations.iter().any(|v| v.encoded_attributes().any(|a| a == attribute))
    }

    pub fn uses(&self, attribute: &str, dim: UsageDimension) -> bool {
        match dim {
            UsageDimension::InSubsets => self.selected(attribute),
            UsageDimension::InFilters => self.filtered(attribute),
            UsageDimension::InVisualizations => self.visualized(attribute),
        }
    }
}

fn percent(k: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| 100.0 * k as f64 / n as f64)
}

fn share(sessions: &[SessionRecord], hit: impl Fn(&SessionRecord) -> bool) -> Option<f64> {
    percent(sessions.iter().filter(|s| hit(s)).count(), sessions.len())
}

/// `None` for an empty session list.
pub fn in_subsets_attr(sessions: &[SessionRecord], attribute: &str) -> Option<f64> {
    share(sessions, |s| s.selected(attribute))
}

pub fn in_filters_attr(sessions: &[SessionRecord], attribute: &str) -> Option<f64> {
    share(sessions, |s| s.filtered(attribute))
}

pub fn in_visualizations_attr(sessions: &[SessionRecord], attribute: &str) -> Option<f64> {
    share(sessions, |s| s.visualized(attribute))
}

pub fn in_subsets_record(sessions: &[SessionRecord], record: usize) -> Option<f64> {
    share(sessions, |s| s.final_selected_record_indices.binary_search(&record).is_ok())
}

/// Maximum over the dimensions not ignored by `config`.
pub fn overall_usage(scores: &[(UsageDimension, f64)], config: &UsageConfig) -> Result<f64, UsageError> {
    scores
        .iter()
        .filter(|(d, _)| !config.ignored_dimensions.contains(d))
        .map(|(_, s)| *s)
        .reduce(f64::max)
        .ok_or(UsageError::AllIgnored)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeUsage {
    pub name: String,
    pub in_subsets: Score,
    pub in_filters: Score,
    pub in_visualizations: Score,
    pub overall: Score,
}

impl AttributeUsage {
    pub fn dimension(&self, dim: UsageDimension) -> f64 {
        match dim {
            UsageDimension::InSubsets => self.in_subsets.value,
            UsageDimension::InFilters => self.in_filters.value,
            UsageDimension::InVisualizations => self.in_visualizations.value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UsageProfile {
    pub dataset_id: String,
    pub session_count: usize,
    pub attributes: Vec<AttributeUsage>,
    /// Record in-subsets, which is also the record's overall usage.
    pub records: Vec<Score>,
}

/// Sessions that enter the denominator under `distinct_by`.
pub fn counted_sessions(sessions: &[SessionRecord], distinct_by: DistinctBy) -> Vec<&SessionRecord> {
    match distinct_by {
        DistinctBy::Session => {
            let mut seen = BTreeSet::new();
            sessions.iter().filter(|s| seen.insert(s.session_id.as_str())).collect()
        }
        DistinctBy::User => {
            let mut latest: BTreeMap<&str, &SessionRecord> = BTreeMap::new();
            for s in sessions {
                let slot = latest.entry(s.user_id.as_str()).or_insert(s);
                if (s.finalized_at, &s.session_id) > (slot.finalized_at, &slot.session_id) {
                    *slot = s;
                }
            }
            latest.into_values().collect()
        }
    }
}

/// Scores every attribute and record of `dataset`. Returns `Ok(None)` when no
/// session counts.
pub fn profile_usage(
    dataset: &Dataset,
    sessions: &[SessionRecord],
    config: &UsageConfig,
    cutoffs: &Cutoffs,
) -> Result<Option<UsageProfile>, UsageError> {
    profile_usage_with(dataset, sessions, config, cutoffs, Execution::default())
}

pub fn profile_usage_with(
    dataset: &Dataset,
    sessions: &[SessionRecord],
    config: &UsageConfig,
    cutoffs: &Cutoffs,
    exec: Execution,
) -> Result<Option<UsageProfile>, UsageError> {
    config.validate()?;
    let n_records = dataset.record_count();
    for s in sessions {
        if s.dataset_id != dataset.id() {
            return Err(UsageError::MixedVersions {
                session_id: s.session_id.clone(),
                expected: dataset.id().to_string(),
                found: s.dataset_id.clone(),
            });
        }
        if let Some(&index) = s.final_selected_record_indices.iter().find(|&&i| i >= n_records) {
            return Err(UsageError::RecordOutOfRange { session_id: s.session_id.clone(), index, count: n_records });
        }
    }
    let counted = counted_sessions(sessions, config.distinct_by);
    let n = counted.len();
    if n == 0 {
        return Ok(None);
    }

    let attributes = exec.map_range(dataset.attribute_count(), |a| {
        let name = &dataset.attribute(a).name;
        let count = |dim| counted.iter().filter(|s| s.uses(name, dim)).count();
        let dims: Vec<(UsageDimension, f64)> =
            UsageDimension::ALL.iter().map(|&d| (d, 100.0 * count(d) as f64 / n as f64)).collect();
        let overall = overall_usage(&dims, config).expect("config validated");
        AttributeUsage {
            name: name.clone(),
            in_subsets: Score::new(dims[0].1, cutoffs),
            in_filters: Score::new(dims[1].1, cutoffs),
            in_visualizations: Score::new(dims[2].1, cutoffs),
            overall: Score::new(overall, cutoffs),
        }
    });

    let mut hits = vec![0usize; n_records];
    for s in &counted {
        let mut last = None;
        for &r in &s.final_selected_record_indices {
            // tolerate unsorted or repeated indices from hand-written logs
            if last != Some(r) {
                hits[r] += 1;
            }
            last = Some(r);
        }
    }
    let records = exec.map_vec(hits, |k| Score::new(100.0 * k.min(n) as f64 / n as f64, cutoffs));

    Ok(Some(UsageProfile { dataset_id: dataset.id().to_string(), session_count: n, attributes, records }))
}

/// Source of finalized sessions.
pub trait SessionStore {
    fn finalized_sessions(
        &self,
        dataset_id: &str,
    ) -> Result<Vec<SessionRecord>, Box<dyn std::error::Error + Send + Sync>>;
}

/// A session log held in memory.
#[derive(Clone, Debug, Default)]
pub struct MemorySessionStore {
    pub sessions: Vec<SessionRecord>,
}

impl SessionStore for MemorySessionStore {
    fn finalized_sessions(
        &self,
        dataset_id: &str,
    ) -> Result<Vec<SessionRecord>, Box<dyn std::error::Error + Send + Sync>> {
        Ok(self.sessions.iter().filter(|s| s.dataset_id == dataset_id).cloned().collect())
    }
}

/// Rebuilds the usage profile of `dataset` from everything in `store`.
pub fn recompute_usage(
    dataset: &Dataset,
    store: &dyn SessionStore,
    config: &UsageConfig,
    cutoffs: &Cutoffs,
) -> Result<Option<UsageProfile>, UsageError> {
    let sessions = store.finalized_sessions(dataset.id()).map_err(UsageError::Store)?;
    profile_usage(dataset, &sessions, config, cutoffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dashboard::{Aggregation, ChartType};
    use crate::subset::ValueSelection;
    use crate::table::IngestConfig;
    use chrono::TimeZone;

    fn dataset(rows: usize) -> Dataset {
        let names = vec!["age".to_string(), "city".to_string(), "price".to_string()];
        let cols = vec![
            (0..rows).map(|i| (20 + i).to_string()).collect(),
            (0..rows).map(|i| ["x", "y"][i % 2].to_string()).collect(),
            (0..rows).map(|i| (i * 3).to_string()).collect(),
        ];
        Dataset::from_raw_columns(names, cols, &IngestConfig::default()).unwrap()
    }

    fn session(d: &Dataset, id: usize, selected: &[&str], records: Vec<usize>) -> SessionRecord {
        SessionRecord {
            session_id: format!("s{id}"),
            dataset_id: d.id().to_string(),
            user_id: format!("u{id}"),
            finalized_at: Utc.timestamp_opt(1_700_000_000 + id as i64, 0).unwrap(),
            final_selected_attributes: selected.iter().map(|s| s.to_string()).collect(),
            final_filters: Vec::new(),
            final_visualizations: Vec::new(),
            final_selected_record_indices: records,
        }
    }

    fn age_filter() -> FilterSpec {
        FilterSpec::AttributeValue {
            attribute: "age".into(),
            selection: ValueSelection::Range { low: 0.0, high: 100.0 },
            include_missing: false,
        }
    }

    #[test]
    fn fifteen_of_twenty() {
        let d = dataset(4);
        let sessions: Vec<_> = (0..20).map(|i| session(&d, i, if i < 15 { &["age"] } else { &[] }, vec![])).collect();
        assert_eq!(in_subsets_attr(&sessions, "age"), Some(75.0));
        assert_eq!(in_subsets_attr(&sessions, "city"), Some(0.0));
        assert_eq!(in_subsets_attr(&[], "age"), None);
    }

    #[test]
    fn filtered_but_deselected() {
        let d = dataset(4);
        let mut s = session(&d, 0, &["city"], vec![0]);
        s.final_filters.push(age_filter());
        s.final_filters.push(FilterSpec::AttributeScore {
            source: crate::subset::ScoreSource::Quality,
            dimension: crate::subset::ScoreDimension::Overall,
            low: 0.0,
            high: 100.0,
        });
        let one = [s];
        assert_eq!(in_filters_attr(&one, "age"), Some(100.0));
        assert_eq!(in_subsets_attr(&one, "age"), Some(0.0));
        // score filters are on metadata, not on any attribute's values
        assert_eq!(in_filters_attr(&one, "city"), Some(0.0));
    }

    #[test]
    fn visualization_counts_either_axis() {
        let d = dataset(4);
        let mut s = session(&d, 0, &[], vec![]);
        s.final_visualizations.push(VizSpec {
            chart: ChartType::Bar,
            x: Some("city".into()),
            y: Some("price".into()),
            aggregation: Some(Aggregation::Sum),
            title: String::new(),
        });
        let t = session(&d, 1, &[], vec![]);
        let both = [s, t];
        assert_eq!(in_visualizations_attr(&both, "price"), Some(50.0));
        assert_eq!(in_visualizations_attr(&both, "city"), Some(50.0));
        assert_eq!(in_visualizations_attr(&both, "age"), Some(0.0));
    }

    #[test]
    fn record_two_of_three() {
        let d = dataset(3);
        let s = vec![session(&d, 0, &[], vec![0, 1]), session(&d, 1, &[], vec![1]), session(&d, 2, &[], vec![0])];
        assert!((in_subsets_record(&s, 0).unwrap() - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(in_subsets_record(&s, 2), Some(0.0));
    }

    #[test]
    fn overall_is_max_of_kept() {
        use UsageDimension::*;
        let dims = [(InSubsets, 75.0), (InFilters, 30.0), (InVisualizations, 10.0)];
        assert_eq!(overall_usage(&dims, &UsageConfig::default()).unwrap(), 75.0);
        let cfg = UsageConfig { ignored_dimensions: [InSubsets].into(), ..Default::default() };
        assert_eq!(overall_usage(&dims, &cfg).unwrap(), 30.0);
        let all = UsageConfig { ignored_dimensions: UsageDimension::ALL.into(), ..Default::default() };
        assert!(matches!(overall_usage(&dims, &all), Err(UsageError::AllIgnored)));
        assert!(all.validate().is_err());
    }

    #[test]
    fn profile_absent_without_sessions() {
        let d = dataset(3);
        assert!(profile_usage(&d, &[], &UsageConfig::default(), &Cutoffs::default()).unwrap().is_none());
    }

    #[test]
    fn profile_counts() {
        let d = dataset(4);
        let mut a = session(&d, 0, &["age", "price"], vec![0, 1, 2, 3]);
        a.final_filters.push(age_filter());
        let b = session(&d, 1, &["price"], vec![1, 3]);
        let p = profile_usage(&d, &[a, b], &UsageConfig::default(), &Cutoffs::default()).unwrap().unwrap();
        assert_eq!(p.session_count, 2);
        assert_eq!(p.attributes[0].in_subsets.value, 50.0);
        assert_eq!(p.attributes[0].in_filters.value, 50.0);
        assert_eq!(p.attributes[2].overall.value, 100.0);
        let recs: Vec<f64> = p.records.iter().map(|s| s.value).collect();
        assert_eq!(recs, vec![50.0, 100.0, 50.0, 100.0]);
    }

    #[test]
    fn mixed_versions_rejected() {
        let d = dataset(4);
        let mut s = session(&d, 0, &[], vec![]);
        s.dataset_id = "other".into();
        let err = profile_usage(&d, &[s], &UsageConfig::default(), &Cutoffs::default()).unwrap_err();
        assert!(matches!(err, UsageError::MixedVersions { .. }));
        let bad = session(&d, 1, &[], vec![9]);
        let err = profile_usage(&d, &[bad], &UsageConfig::default(), &Cutoffs::default()).unwrap_err();
        assert!(matches!(err, UsageError::RecordOutOfRange { index: 9, .. }));
    }

    #[test]
    fn distinct_users_take_latest() {
        let d = dataset(2);
        let mut early = session(&d, 0, &["age"], vec![]);
        let mut late = session(&d, 1, &[], vec![]);
        early.user_id = "u".into();
        late.user_id = "u".into();
        let other = session(&d, 2, &["age"], vec![]);
        let log = [early, late, other];
        let by_user = UsageConfig { distinct_by: DistinctBy::User, ..Default::default() };
        let p = profile_usage(&d, &log, &by_user, &Cutoffs::default()).unwrap().unwrap();
        assert_eq!(p.session_count, 2);
        assert_eq!(p.attributes[0].in_subsets.value, 50.0);
        let p = profile_usage(&d, &log, &UsageConfig::default(), &Cutoffs::default()).unwrap().unwrap();
        assert_eq!(p.session_count, 3);
    }

    #[test]
    fn store_recompute() {
        let d = dataset(2);
        let mut store = MemorySessionStore::default();
        store.sessions.push(session(&d, 0, &["age"], vec![0]));
        let mut foreign = session(&d, 1, &[], vec![]);
        foreign.dataset_id = "elsewhere".into();
        store.sessions.push(foreign);
        let p = recompute_usage(&d, &store, &UsageConfig::default(), &Cutoffs::default()).unwrap().unwrap();
        assert_eq!(p.session_count, 1);
    }

    #[test]
    fn session_round_trips_as_json() {
        let d = dataset(2);
        let mut s = session(&d, 0, &["age"], vec![0]);
        s.final_filters.push(age_filter());
        let line = serde_json::to_string(&s).unwrap();
        assert!(!line.contains('\n'));
        assert_eq!(serde_json::from_str::<SessionRecord>(&line).unwrap(), s);
    }
}
