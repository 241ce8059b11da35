//! HTTP service, file store and report generation around `curator-core`.

pub mod api;
pub mod app;
pub mod config;
pub mod report;
pub mod store;

pub use app::AppState;
pub use config::ServiceConfig;
