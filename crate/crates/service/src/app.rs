//! In-memory service state over the file store.
//!
//! Datasets and their quality profiles are immutable once loaded. The usage
//! profile is swapped atomically after each finalize. Each session sits
//! behind its own mutex so mutations on one session are serialized while
//! others proceed.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, RwLock};

use chrono::Utc;
use curator_core::dashboard::Dashboard;
use curator_core::quality::{profile_quality, QualityConfig, QualityError, QualityProfile};
use curator_core::subset::{SubsetContext, SubsetState};
use curator_core::table::{ingest_csv, Dataset, IngestError};
use curator_core::usage::{recompute_usage, SessionRecord, UsageError, UsageProfile};
use thiserror::Error;

use crate::config::{ConfigError, ServiceConfig};
use crate::report::{profile_report, ProfileReport, ReportInputs};
use crate::store::{FileStore, SessionSnapshot, SessionStatus, StoreError};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Quality(#[from] QualityError),
    #[error(transparent)]
    Usage(#[from] UsageError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

pub struct DatasetEntry {
    pub dataset: Dataset,
    pub quality: QualityProfile,
    usage: RwLock<Option<Arc<UsageProfile>>>,
    /// Held while appending sessions and rebuilding usage.
    write: Mutex<()>,
}

impl DatasetEntry {
    pub fn usage(&self) -> Option<Arc<UsageProfile>> {
        self.usage.read().expect("usage lock").clone()
    }
}

pub type SessionCell = Arc<Mutex<SessionSnapshot>>;

pub struct AppState {
    pub config: ServiceConfig,
    pub quality_config: QualityConfig,
    pub store: FileStore,
    datasets: RwLock<BTreeMap<String, Arc<DatasetEntry>>>,
    sessions: RwLock<BTreeMap<String, SessionCell>>,
}

impl AppState {
    /// Opens the store and restores every dataset, profile and session in it.
    pub fn open(config: ServiceConfig) -> Result<Arc<AppState>, ServiceError> {
        let quality_config = config.quality_config()?;
        let store = FileStore::open(&config.storage_root)?;
        let state = AppState {
            config,
            quality_config,
            store,
            datasets: RwLock::new(BTreeMap::new()),
            sessions: RwLock::new(BTreeMap::new()),
        };
        for id in state.store.dataset_ids()? {
            let dataset = state.store.load_dataset(&id, &state.config.ingest)?;
            state.register(dataset)?;
        }
        for mut snap in state.store.snapshots()? {
            let Some(entry) = state.dataset(&snap.dataset_id) else { continue };
            // a crash between the log append and the snapshot write leaves the
            // session active here although it already counts
            if snap.status == SessionStatus::Active
                && state.store.sessions(&snap.dataset_id)?.iter().any(|r| r.session_id == snap.session_id)
            {
                snap.status = SessionStatus::Finalized;
                state.store.save_snapshot(&snap)?;
            }
            let usage = entry.usage();
            let ctx = context(&entry, usage.as_deref());
            snap.subset.refresh(&ctx);
            state.sessions.write().expect("sessions lock").insert(snap.session_id.clone(), Arc::new(Mutex::new(snap)));
        }
        Ok(Arc::new(state))
    }

    /// Profiles (or loads the cached profile of) a dataset and rebuilds its
    /// usage from the session log.
    fn register(&self, dataset: Dataset) -> Result<Arc<DatasetEntry>, ServiceError> {
        let fingerprint = self.quality_config.fingerprint();
        let quality = match self.store.load_quality(dataset.id(), &fingerprint)? {
            Some(q) if q.dataset_id == dataset.id() => q,
            _ => {
                let q = profile_quality(&dataset, &self.quality_config)?;
                self.store.save_quality(&q)?;
                q
            }
        };
        let usage = recompute_usage(&dataset, &self.store, &self.config.usage, &self.config.cutoffs)?;
        self.store.save_usage(dataset.id(), usage.as_ref())?;
        let entry =
            Arc::new(DatasetEntry { dataset, quality, usage: RwLock::new(usage.map(Arc::new)), write: Mutex::new(()) });
        self.datasets.write().expect("datasets lock").insert(entry.dataset.id().to_string(), entry.clone());
        Ok(entry)
    }

    pub fn dataset(&self, id: &str) -> Option<Arc<DatasetEntry>> {
        self.datasets.read().expect("datasets lock").get(id).cloned()
    }

    pub fn dataset_ids(&self) -> Vec<String> {
        self.datasets.read().expect("datasets lock").keys().cloned().collect()
    }

    /// Ingests CSV text. Returns the entry and whether it is a new version.
    pub fn ingest(&self, csv: &[u8]) -> Result<(Arc<DatasetEntry>, bool), ServiceError> {
        let dataset = ingest_csv(csv, &self.config.ingest)?;
        if let Some(existing) = self.dataset(dataset.id()) {
            return Ok((existing, false));
        }
        self.store.put_dataset(&dataset)?;
        Ok((self.register(dataset)?, true))
    }

    pub fn session(&self, id: &str) -> Option<SessionCell> {
        self.sessions.read().expect("sessions lock").get(id).cloned()
    }

    pub fn session_ids(&self, dataset: Option<&str>) -> Vec<String> {
        let sessions = self.sessions.read().expect("sessions lock");
        sessions
            .iter()
            .filter(|(_, s)| dataset.is_none_or(|d| s.lock().expect("session lock").dataset_id == d))
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn create_session(&self, entry: &DatasetEntry, user_id: Option<String>) -> Result<SessionCell, ServiceError> {
        let session_id = uuid::Uuid::new_v4().simple().to_string();
        let usage = entry.usage();
        let ctx = context(entry, usage.as_deref());
        let snap = SessionSnapshot {
            user_id: user_id.unwrap_or_else(|| session_id.clone()),
            session_id: session_id.clone(),
            dataset_id: entry.dataset.id().to_string(),
            created_at: Utc::now(),
            status: SessionStatus::Active,
            finalized_at: None,
            subset: SubsetState::new(&ctx),
            dashboard: Dashboard::new(),
        };
        self.store.save_snapshot(&snap)?;
        let cell = Arc::new(Mutex::new(snap));
        self.sessions.write().expect("sessions lock").insert(session_id, cell.clone());
        Ok(cell)
    }

    /// Commits the session's final state and rebuilds usage for its dataset.
    /// The caller holds the session lock and has checked it is active.
    pub fn finalize(&self, entry: &DatasetEntry, snap: &mut SessionSnapshot) -> Result<(), ServiceError> {
        let _guard = entry.write.lock().expect("dataset write lock");
        let now = Utc::now();
        let record = SessionRecord::finalize(
            &snap.session_id,
            &snap.user_id,
            &entry.dataset,
            &snap.subset,
            &snap.dashboard,
            now,
        );
        self.store.append_session(&record)?;
        let usage = recompute_usage(&entry.dataset, &self.store, &self.config.usage, &self.config.cutoffs)?;
        self.store.save_usage(entry.dataset.id(), usage.as_ref())?;
        *entry.usage.write().expect("usage lock") = usage.map(Arc::new);
        snap.status = SessionStatus::Finalized;
        snap.finalized_at = Some(now);
        self.store.save_snapshot(snap)?;
        Ok(())
    }

    /// Re-reads the session log of one dataset, e.g. after sessions were
    /// appended out of band.
    pub fn reload_usage(&self, entry: &DatasetEntry) -> Result<Option<Arc<UsageProfile>>, ServiceError> {
        let _guard = entry.write.lock().expect("dataset write lock");
        let usage = recompute_usage(&entry.dataset, &self.store, &self.config.usage, &self.config.cutoffs)?;
        self.store.save_usage(entry.dataset.id(), usage.as_ref())?;
        let usage = usage.map(Arc::new);
        *entry.usage.write().expect("usage lock") = usage.clone();
        Ok(usage)
    }

    pub fn report(&self, entry: &DatasetEntry, with_records: bool) -> ProfileReport {
        let usage = entry.usage();
        profile_report(
            &ReportInputs {
                dataset: &entry.dataset,
                quality: &entry.quality,
                usage: usage.as_deref(),
                usage_config: &self.config.usage,
                cutoffs: self.config.cutoffs,
                glyph_mode: self.config.glyph_mode,
            },
            with_records,
        )
    }
}

pub fn context<'a>(entry: &'a DatasetEntry, usage: Option<&'a UsageProfile>) -> SubsetContext<'a> {
    SubsetContext::new(&entry.dataset, &entry.quality, usage)
}
