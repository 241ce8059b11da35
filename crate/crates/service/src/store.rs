//! File-backed persistence under the storage root.
//!
//! ```text
//! datasets/<id>/data.csv               canonical CSV, written once
//! datasets/<id>/profile-<config>.json  quality profile cache per config fingerprint
//! datasets/<id>/sessions.ndjson        finalized sessions, append-only
//! datasets/<id>/usage.json             last usage profile (absent with no sessions)
//! sessions/<session>.json              live session snapshot, replaced atomically
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use curator_core::dashboard::Dashboard;
use curator_core::quality::QualityProfile;
use curator_core::subset::SubsetState;
use curator_core::table::{ingest_csv, Dataset, IngestConfig, IngestError};
use curator_core::usage::{SessionRecord, SessionStore, UsageProfile};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path} line {line}: {source}")]
    SessionLine { path: PathBuf, line: usize, source: serde_json::Error },
    #[error("{path}: {source}")]
    Ingest { path: PathBuf, source: IngestError },
    #[error("{path} re-ingests as dataset {found}; the ingest settings changed since it was stored")]
    IdMismatch { path: PathBuf, found: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Active,
    Finalized,
}

/// Everything needed to resume a session after a restart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub session_id: String,
    pub dataset_id: String,
    pub user_id: String,
    pub created_at: DateTime<Utc>,
    pub status: SessionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finalized_at: Option<DateTime<Utc>>,
    pub subset: SubsetState,
    pub dashboard: Dashboard,
}

#[derive(Clone, Debug)]
pub struct FileStore {
    root: PathBuf,
}

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<FileStore, StoreError> {
        let root = root.into();
        for sub in ["datasets", "sessions"] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        Ok(FileStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dataset_dir(&self, id: &str) -> PathBuf {
        self.root.join("datasets").join(id)
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{id}.json"))
    }

    /// Writes via a temporary sibling and a rename so readers never see a
    /// partial file.
    fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
        let tmp = path.with_extension("tmp");
        {
            let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
            f.write_all(bytes).map_err(io_err(&tmp))?;
            f.sync_all().map_err(io_err(&tmp))?;
        }
        fs::rename(&tmp, path).map_err(io_err(path))
    }

    fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
        let bytes =
            serde_json::to_vec(value).map_err(|source| StoreError::Json { path: path.to_path_buf(), source })?;
        Self::write_atomic(path, &bytes)
    }

    fn read_json<T: DeserializeOwned>(path: &Path) -> Result<Option<T>, StoreError> {
        match fs::read(path) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|source| StoreError::Json { path: path.to_path_buf(), source }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(StoreError::Io { path: path.to_path_buf(), source: e }),
        }
    }

    /// Stores the canonical CSV unless this version already exists. Returns
    /// whether it was new.
    pub fn put_dataset(&self, dataset: &Dataset) -> Result<bool, StoreError> {
        let dir = self.dataset_dir(dataset.id());
        let path = dir.join("data.csv");
        if path.exists() {
            return Ok(false);
        }
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Self::write_atomic(&path, dataset.to_csv_string().as_bytes())?;
        Ok(true)
    }

    /// Stored dataset ids, sorted.
    pub fn dataset_ids(&self) -> Result<Vec<String>, StoreError> {
        let dir = self.root.join("datasets");
        let mut ids = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let entry = entry.map_err(io_err(&dir))?;
            if entry.path().join("data.csv").is_file() {
                ids.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn load_dataset(&self, id: &str, ingest: &IngestConfig) -> Result<Dataset, StoreError> {
        let path = self.dataset_dir(id).join("data.csv");
        let file = File::open(&path).map_err(io_err(&path))?;
        let dataset = ingest_csv(BufReader::new(file), ingest)
            .map_err(|source| StoreError::Ingest { path: path.clone(), source })?;
        if dataset.id() != id {
            return Err(StoreError::IdMismatch { path, found: dataset.id().to_string() });
        }
        Ok(dataset)
    }

    pub fn load_quality(&self, id: &str, fingerprint: &str) -> Result<Option<QualityProfile>, StoreError> {
        Self::read_json(&self.dataset_dir(id).join(format!("profile-{fingerprint}.json")))
    }

    pub fn save_quality(&self, profile: &QualityProfile) -> Result<(), StoreError> {
        let path = self.dataset_dir(&profile.dataset_id).join(format!("profile-{}.json", profile.config_fingerprint));
        Self::write_json(&path, profile)
    }

    pub fn load_usage(&self, id: &str) -> Result<Option<UsageProfile>, StoreError> {
        Self::read_json(&self.dataset_dir(id).join("usage.json"))
    }

    pub fn save_usage(&self, id: &str, usage: Option<&UsageProfile>) -> Result<(), StoreError> {
        let path = self.dataset_dir(id).join("usage.json");
        match usage {
            Some(u) => Self::write_json(&path, u),
            None => match fs::remove_file(&path) {
                Err(e) if e.kind() != io::ErrorKind::NotFound => Err(StoreError::Io { path, source: e }),
                _ => Ok(()),
            },
        }
    }

    /// Appends one finalized session as a single JSON line.
    pub fn append_session(&self, record: &SessionRecord) -> Result<(), StoreError> {
        let path = self.dataset_dir(&record.dataset_id).join("sessions.ndjson");
        let mut line = serde_json::to_vec(record).map_err(|source| StoreError::Json { path: path.clone(), source })?;
        line.push(b'\n');
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
        f.write_all(&line).map_err(io_err(&path))?;
        f.sync_all().map_err(io_err(&path))
    }

    /// Finalized sessions of one dataset in log order. Blank lines are skipped.
    pub fn sessions(&self, dataset_id: &str) -> Result<Vec<SessionRecord>, StoreError> {
        let path = self.dataset_dir(dataset_id).join("sessions.ndjson");
        let file = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(StoreError::Io { path, source: e }),
        };
        let mut out = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(&path))?;
            if line.trim().is_empty() {
                continue;
            }
            let record = serde_json::from_str(&line).map_err(|source| StoreError::SessionLine {
                path: path.clone(),
                line: i + 1,
                source,
            })?;
            out.push(record);
        }
        Ok(out)
    }

    pub fn save_snapshot(&self, snapshot: &SessionSnapshot) -> Result<(), StoreError> {
        Self::write_json(&self.session_path(&snapshot.session_id), snapshot)
    }

    /// All session snapshots, ordered by session id.
    pub fn snapshots(&self) -> Result<Vec<SessionSnapshot>, StoreError> {
        let dir = self.root.join("sessions");
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut out = Vec::with_capacity(paths.len());
        for p in paths {
            if let Some(s) = Self::read_json(&p)? {
                out.push(s);
            }
        }
        Ok(out)
    }
}

impl SessionStore for FileStore {
    fn finalized_sessions(
        &self,
        dataset_id: &str,
    ) -> Result<Vec<SessionRecord>, Box<dyn std::error::Error + Send + Sync>> {
        Ok(self.sessions(dataset_id)?)
    }
}
