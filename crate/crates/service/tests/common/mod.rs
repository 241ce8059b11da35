#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use curator_core::usage::SessionRecord;
use curator_service::api::router;
use curator_service::app::AppState;
use curator_service::config::{QualitySection, ServiceConfig};
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

pub struct Harness {
    pub dir: TempDir,
    pub config: ServiceConfig,
    pub state: Arc<AppState>,
}

pub fn marketing_config(root: &std::path::Path) -> ServiceConfig {
    ServiceConfig {
        storage_root: root.to_path_buf(),
        quality: QualitySection::from_config(&curator_core::synth::marketing_config()),
        ..ServiceConfig::default()
    }
}

impl Harness {
    pub fn new() -> Harness {
        let dir = tempfile::tempdir().unwrap();
        let config = marketing_config(dir.path());
        Harness::with_config(dir, config)
    }

    pub fn with_config(dir: TempDir, config: ServiceConfig) -> Harness {
        let state = AppState::open(config.clone()).unwrap();
        Harness { dir, config, state }
    }

    /// Drops the in-memory state and reopens the same storage root.
    pub fn restart(self) -> Harness {
        let Harness { dir, config, state } = self;
        drop(state);
        Harness::with_config(dir, config)
    }

    pub fn app(&self) -> Router {
        router(self.state.clone())
    }

    pub async fn raw(&self, method: Method, uri: &str, body: Body) -> (StatusCode, Vec<u8>) {
        let req =
            Request::builder().method(method).uri(uri).header("content-type", "application/json").body(body).unwrap();
        let resp = self.app().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
        (status, bytes.to_vec())
    }

    pub async fn call(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let body = body.map_or_else(Body::empty, |b| Body::from(b.to_string()));
        let (status, bytes) = self.raw(method, uri, body).await;
        let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
        (status, value)
    }

    pub async fn get(&self, uri: &str) -> (StatusCode, Value) {
        self.call(Method::GET, uri, None).await
    }

    pub async fn upload(&self, csv: &str) -> String {
        let (status, bytes) = self.raw(Method::POST, "/datasets", Body::from(csv.to_string())).await;
        assert!(status.is_success(), "upload failed: {status} {}", String::from_utf8_lossy(&bytes));
        let v: Value = serde_json::from_slice(&bytes).unwrap();
        v["dataset_id"].as_str().unwrap().to_string()
    }

    pub async fn session(&self, dataset: &str, user: &str) -> String {
        let (status, v) =
            self.call(Method::POST, "/sessions", Some(json!({ "dataset_id": dataset, "user_id": user }))).await;
        assert_eq!(status, StatusCode::CREATED, "{v}");
        v["session_id"].as_str().unwrap().to_string()
    }

    /// Reproduces a generated final state through the API and finalizes it.
    pub async fn replay(&self, dataset: &str, record: &SessionRecord) -> Value {
        let sid = self.session(dataset, &record.user_id).await;
        let (s, v) = self
            .call(
                Method::PUT,
                &format!("/sessions/{sid}/filters"),
                Some(json!({ "action": "replace", "filters": record.final_filters })),
            )
            .await;
        assert_eq!(s, StatusCode::OK, "{v}");
        let (s, v) = self
            .call(
                Method::PUT,
                &format!("/sessions/{sid}/selection"),
                Some(json!({ "action": "replace", "attributes": record.final_selected_attributes })),
            )
            .await;
        assert_eq!(s, StatusCode::OK, "{v}");
        for spec in &record.final_visualizations {
            let (s, v) = self
                .call(
                    Method::PUT,
                    &format!("/sessions/{sid}/visualizations"),
                    Some(json!({ "action": "save", "spec": spec })),
                )
                .await;
            assert_eq!(s, StatusCode::OK, "{v}");
        }
        let (s, v) = self.call(Method::POST, &format!("/sessions/{sid}/finalize"), None).await;
        assert_eq!(s, StatusCode::OK, "{v}");
        v
    }
}

pub fn marketing_csv(records: usize, seed: u64) -> String {
    curator_core::synth::marketing_table(records, seed).to_csv_string()
}
