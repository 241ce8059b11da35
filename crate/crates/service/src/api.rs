//! HTTP routes.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/datasets` | stored dataset ids |
//! | POST | `/datasets` | CSV body; profiles on first upload |
//! | GET | `/datasets/{id}/profile` | `?records=false` drops record-level arrays |
//! | GET | `/datasets/{id}/records` | `?page&size&sort&dir&session` |
//! | GET | `/datasets/{id}/attributes/{name}/stats` | `?session` adds the filtered histogram |
//! | GET | `/datasets/{id}/export/{session}` | subset as CSV |
//! | POST | `/datasets/{id}/usage/recompute` | re-read the session log |
//! | GET, POST | `/sessions` | list (`?dataset`) or create |
//! | GET | `/sessions/{id}` | derived state and minimap |
//! | GET | `/sessions/{id}/attributes` | visible attributes, `?sort&dir` |
//! | PUT | `/sessions/{id}/filters`, `/selection`, `/visualizations` | mutations |
//! | GET | `/sessions/{id}/visualizations` | saved charts with their series |
//! | POST | `/sessions/{id}/finalize` | commit; 409 the second time |
//!
//! Errors are `{"error": <code>, "message": <text>}` with 400, 404 or 409.
//! Rejected charts add `"rule"`; a repeated finalize adds the current `"usage"`.

use std::collections::BTreeSet;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use curator_core::dashboard::{compute_series, DeleteTarget, SeriesPoint, VizError, VizSpec};
use curator_core::subset::{
    Direction, FilterKey, FilterSpec, MinimapSummary, ScoreDimension, ScoreSource, SortKey, SubsetContext, SubsetError,
    SubsetState,
};
use curator_core::table::{attribute_stats, AttributeStats, Datatype, TableError};
use curator_core::usage::UsageProfile;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::app::{context, AppState, DatasetEntry, ServiceError};
use crate::report::{usage_block, RecordQualityWire, UsageBlock, WireScore};
use crate::store::{SessionSnapshot, SessionStatus};

pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
    extra: Option<serde_json::Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: impl Into<String>, message: impl Into<String>) -> ApiError {
        ApiError { status, code: code.into(), message: message.into(), extra: None }
    }

    fn not_found(what: &str, id: &str) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no {what} {id:?}"))
    }

    fn bad(code: &str, message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.code, "message": self.message });
        if let (Some(extra), Some(map)) = (self.extra, body.as_object_mut()) {
            if let Some(e) = extra.as_object() {
                map.extend(e.clone());
            }
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Ingest(e) => ApiError::bad("invalid_csv", e.to_string()),
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", other.to_string()),
        }
    }
}

impl From<SubsetError> for ApiError {
    fn from(e: SubsetError) -> Self {
        let code = match &e {
            SubsetError::UnknownAttribute(_) => "unknown_attribute",
            SubsetError::InvalidFilter(_) => "invalid_filter",
            SubsetError::NoUsageData => "no_usage_data",
            SubsetError::UnknownFilter(_) => "unknown_filter",
            SubsetError::EmptySelection => "empty_selection",
        };
        ApiError::bad(code, e.to_string())
    }
}

impl From<VizError> for ApiError {
    fn from(e: VizError) -> Self {
        match &e {
            VizError::Rejected(rule) => {
                let mut err = ApiError::bad("invalid_visualization", e.to_string());
                err.extra = Some(json!({ "rule": rule.code() }));
                err
            }
            VizError::UnknownId(id) => ApiError::not_found("visualization", &id.to_string()),
        }
    }
}

impl From<TableError> for ApiError {
    fn from(e: TableError) -> Self {
        match &e {
            TableError::UnknownAttribute(name) => ApiError::not_found("attribute", name),
            _ => ApiError::bad("invalid_request", e.to_string()),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/datasets", get(list_datasets).post(upload_dataset))
        .route("/datasets/{id}/profile", get(get_profile))
        .route("/datasets/{id}/records", get(get_records))
        .route("/datasets/{id}/attributes/{name}/stats", get(get_stats))
        .route("/datasets/{id}/export/{session_id}", get(export_subset))
        .route("/datasets/{id}/usage/recompute", post(recompute))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/attributes", get(session_attributes))
        .route("/sessions/{id}/filters", put(put_filters))
        .route("/sessions/{id}/selection", put(put_selection))
        .route("/sessions/{id}/visualizations", get(get_visualizations).put(put_visualizations))
        .route("/sessions/{id}/finalize", post(finalize))
        .with_state(state)
}

fn dataset(state: &AppState, id: &str) -> ApiResult<Arc<DatasetEntry>> {
    state.dataset(id).ok_or_else(|| ApiError::not_found("dataset", id))
}

async fn list_datasets(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({ "datasets": state.dataset_ids() }))
}

async fn upload_dataset(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let (entry, created) = state.ingest(&body)?;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    let body = json!({
        "dataset_id": entry.dataset.id(),
        "created": created,
        "attribute_count": entry.dataset.attribute_count(),
        "record_count": entry.dataset.record_count(),
    });
    Ok((status, Json(body)).into_response())
}

#[derive(Deserialize)]
struct ProfileQuery {
    records: Option<bool>,
}

async fn get_profile(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<ProfileQuery>,
) -> ApiResult<Response> {
    let entry = dataset(&state, &id)?;
    Ok(Json(state.report(&entry, q.records.unwrap_or(true))).into_response())
}

/// `quality.<dim>` or `usage.<dim>`; anything else is an index sort.
fn parse_sort(sort: Option<&str>) -> ApiResult<SortKey> {
    let Some(text) = sort.filter(|s| !s.is_empty() && *s != "index" && *s != "name") else {
        return Ok(SortKey::Name);
    };
    let (source, dim) =
        text.split_once('.').ok_or_else(|| ApiError::bad("invalid_sort", format!("bad sort {text:?}")))?;
    let source: ScoreSource = serde_json::from_value(json!(source))
        .map_err(|_| ApiError::bad("invalid_sort", format!("unknown score source {source:?}")))?;
    let dimension: ScoreDimension = serde_json::from_value(json!(dim))
        .map_err(|_| ApiError::bad("invalid_sort", format!("unknown dimension {dim:?}")))?;
    Ok(SortKey::Score { source, dimension })
}

fn parse_dir(dir: Option<&str>) -> ApiResult<Direction> {
    match dir {
        None | Some("asc") => Ok(Direction::Asc),
        Some("desc") => Ok(Direction::Desc),
        Some(other) => Err(ApiError::bad("invalid_sort", format!("direction must be asc or desc, got {other:?}"))),
    }
}

#[derive(Deserialize)]
struct RecordsQuery {
    page: Option<usize>,
    size: Option<usize>,
    sort: Option<String>,
    dir: Option<String>,
    session: Option<String>,
}

#[derive(Serialize)]
struct CellOut<'a> {
    value: &'a str,
    missing: bool,
    incorrect: bool,
}

#[derive(Serialize)]
struct RowOut<'a> {
    index: usize,
    cells: Vec<CellOut<'a>>,
    quality: RecordQualityWire,
    #[serde(skip_serializing_if = "Option::is_none")]
    usage: Option<WireScore>,
}

/// A session's subset state refreshed against the current profiles, or a
/// fresh unfiltered state.
fn session_state(
    state: &AppState,
    entry: &DatasetEntry,
    ctx: &SubsetContext<'_>,
    session: Option<&str>,
) -> ApiResult<SubsetState> {
    match session {
        None => Ok(SubsetState::new(ctx)),
        Some(sid) => {
            let cell = state.session(sid).ok_or_else(|| ApiError::not_found("session", sid))?;
            let snap = cell.lock().expect("session lock");
            if snap.dataset_id != entry.dataset.id() {
                return Err(ApiError::not_found("session", sid));
            }
            let mut s = snap.subset.clone();
            s.refresh(ctx);
            Ok(s)
        }
    }
}

async fn get_records(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<RecordsQuery>,
) -> ApiResult<Response> {
    let entry = dataset(&state, &id)?;
    let usage = entry.usage();
    let ctx = context(&entry, usage.as_deref());
    let subset = session_state(&state, &entry, &ctx, q.session.as_deref())?;
    let order = subset.sort_records(&ctx, parse_sort(q.sort.as_deref())?, parse_dir(q.dir.as_deref())?)?;
    let size = q.size.unwrap_or(50).clamp(1, 10_000);
    let page = q.page.unwrap_or(0);
    let d = &entry.dataset;
    let rows: Vec<RowOut<'_>> = order
        .iter()
        .skip(page.saturating_mul(size))
        .take(size)
        .map(|&r| RowOut {
            index: r,
            cells: (0..d.attribute_count())
                .map(|a| CellOut {
                    value: d.column(a).raw(r),
                    missing: d.column(a).is_missing(r),
                    incorrect: entry.quality.cell_truth(a, r) == Some(curator_core::constraint::Truth::False),
                })
                .collect(),
            quality: (&entry.quality.records[r]).into(),
            usage: usage.as_ref().map(|u| u.records[r].into()),
        })
        .collect();
    let body = json!({
        "page": page,
        "size": size,
        "total": order.len(),
        "attributes": d.attributes().iter().map(|m| &m.name).collect::<Vec<_>>(),
        "rows": rows,
    });
    Ok(Json(body).into_response())
}

#[derive(Deserialize)]
struct StatsQuery {
    session: Option<String>,
}

#[derive(Serialize)]
struct StatsOut {
    attribute: String,
    datatype: Datatype,
    original: AttributeStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    filtered: Option<AttributeStats>,
}

async fn get_stats(
    State(state): State<Arc<AppState>>,
    Path((id, name)): Path<(String, String)>,
    Query(q): Query<StatsQuery>,
) -> ApiResult<Response> {
    let entry = dataset(&state, &id)?;
    let a = entry.dataset.require_attribute(&name)?;
    let original = attribute_stats(&entry.dataset, &name, None)?;
    let filtered = match q.session.as_deref() {
        None => None,
        Some(sid) => {
            let usage = entry.usage();
            let ctx = context(&entry, usage.as_deref());
            let s = session_state(&state, &entry, &ctx, Some(sid))?;
            let mut mask = vec![false; entry.dataset.record_count()];
            s.visible_records().iter().for_each(|&r| mask[r] = true);
            Some(attribute_stats(&entry.dataset, &name, Some(&mask))?)
        }
    };
    Ok(Json(StatsOut { attribute: name, datatype: entry.dataset.attribute(a).datatype, original, filtered })
        .into_response())
}

async fn export_subset(
    State(state): State<Arc<AppState>>,
    Path((id, session_id)): Path<(String, String)>,
) -> ApiResult<Response> {
    let entry = dataset(&state, &id)?;
    let usage = entry.usage();
    let ctx = context(&entry, usage.as_deref());
    let s = session_state(&state, &entry, &ctx, Some(&session_id))?;
    let subset = s.export(&entry.dataset)?;
    let disposition = format!("attachment; filename=\"subset-{session_id}.csv\"");
    Ok((
        [(header::CONTENT_TYPE, "text/csv; charset=utf-8".to_string()), (header::CONTENT_DISPOSITION, disposition)],
        subset.to_csv_string(),
    )
        .into_response())
}

async fn recompute(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let entry = dataset(&state, &id)?;
    let usage = state.reload_usage(&entry)?;
    Ok(Json(json!({ "usage": usage.map(|u| usage_block(&u, &state.config.usage, false)) })).into_response())
}

#[derive(Deserialize)]
struct SessionsQuery {
    dataset: Option<String>,
}

async fn list_sessions(State(state): State<Arc<AppState>>, Query(q): Query<SessionsQuery>) -> Json<serde_json::Value> {
    Json(json!({ "sessions": state.session_ids(q.dataset.as_deref()) }))
}

#[derive(Deserialize)]
struct CreateSession {
    dataset_id: String,
    user_id: Option<String>,
}

#[derive(Serialize)]
struct VizOut {
    id: u64,
    spec: VizSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    series: Option<Vec<SeriesPoint>>,
}

/// A session as the client sees it after any call.
#[derive(Serialize)]
struct SessionView {
    session_id: String,
    dataset_id: String,
    user_id: String,
    status: SessionStatus,
    filters: Vec<FilterSpec>,
    selected_attributes: Vec<String>,
    visible_attributes: Vec<String>,
    /// Selected but currently hidden by an attribute-score filter.
    hidden_selected: Vec<String>,
    minimap: MinimapSummary,
    visualizations: Vec<VizOut>,
}

fn view(entry: &DatasetEntry, snap: &SessionSnapshot, with_series: bool) -> SessionView {
    let d = &entry.dataset;
    let names = |idx: Vec<usize>| idx.into_iter().map(|a| d.attribute(a).name.clone()).collect::<Vec<_>>();
    let usage = entry.usage();
    let ctx = context(entry, usage.as_deref());
    let subset_data = with_series.then(|| subset_of(entry, &snap.subset));
    SessionView {
        session_id: snap.session_id.clone(),
        dataset_id: snap.dataset_id.clone(),
        user_id: snap.user_id.clone(),
        status: snap.status,
        filters: snap.subset.filters().to_vec(),
        selected_attributes: names(snap.subset.selected_attributes(d)),
        visible_attributes: names(snap.subset.visible_attributes().to_vec()),
        hidden_selected: names(snap.subset.hidden_selected(d)),
        minimap: snap.subset.minimap(&ctx),
        visualizations: snap
            .dashboard
            .items()
            .iter()
            .map(|v| VizOut {
                id: v.id,
                spec: v.spec.clone(),
                series: subset_data.as_ref().map(|s| compute_series(&v.spec, s).unwrap_or_default()),
            })
            .collect(),
    }
}

/// Selected attributes over selected records; empty when nothing is selected.
fn subset_of(entry: &DatasetEntry, s: &SubsetState) -> curator_core::table::Dataset {
    entry.dataset.project(&s.selected_attributes(&entry.dataset), s.selected_records())
}

async fn create_session(State(state): State<Arc<AppState>>, Json(req): Json<CreateSession>) -> ApiResult<Response> {
    let entry = dataset(&state, &req.dataset_id)?;
    let cell = state.create_session(&entry, req.user_id)?;
    let snap = cell.lock().expect("session lock");
    Ok((StatusCode::CREATED, Json(view(&entry, &snap, false))).into_response())
}

/// Runs `f` on a refreshed session under its lock. Mutations require an
/// active session and are persisted when `f` succeeds.
fn with_session<T>(
    state: &AppState,
    id: &str,
    mutate: bool,
    f: impl FnOnce(&DatasetEntry, &SubsetContext<'_>, &mut SessionSnapshot) -> ApiResult<T>,
) -> ApiResult<T> {
    let cell = state.session(id).ok_or_else(|| ApiError::not_found("session", id))?;
    let mut snap = cell.lock().expect("session lock");
    let entry = dataset(state, &snap.dataset_id)?;
    if mutate && snap.status == SessionStatus::Finalized {
        return Err(ApiError::new(StatusCode::CONFLICT, "session_finalized", format!("session {id:?} is finalized")));
    }
    let usage = entry.usage();
    let ctx = context(&entry, usage.as_deref());
    snap.subset.refresh(&ctx);
    if !mutate {
        return f(&entry, &ctx, &mut snap);
    }
    let mut draft = snap.clone();
    let out = f(&entry, &ctx, &mut draft)?;
    state.store.save_snapshot(&draft).map_err(ServiceError::from)?;
    *snap = draft;
    Ok(out)
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    with_session(&state, &id, false, |entry, _, snap| Ok(Json(view(entry, snap, false)).into_response()))
}

#[derive(Deserialize)]
struct SortQuery {
    sort: Option<String>,
    dir: Option<String>,
}

async fn session_attributes(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<SortQuery>,
) -> ApiResult<Response> {
    let key = parse_sort(q.sort.as_deref())?;
    let dir = parse_dir(q.dir.as_deref())?;
    with_session(&state, &id, false, |entry, ctx, snap| {
        let order = snap.subset.sort_attributes(ctx, key, dir)?;
        let selected: BTreeSet<&String> = snap.subset.selected_attribute_names().iter().collect();
        let items: Vec<serde_json::Value> = order
            .into_iter()
            .map(|a| {
                let name = &entry.dataset.attribute(a).name;
                json!({ "name": name, "selected": selected.contains(name) })
            })
            .collect();
        Ok(Json(json!({ "attributes": items })).into_response())
    })
}

#[derive(Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
enum FilterUpdate {
    /// Adds the filter or replaces the one with the same key.
    Apply {
        filter: FilterSpec,
    },
    Remove {
        key: FilterKey,
    },
    /// Replaces every filter; all-or-nothing.
    Replace {
        filters: Vec<FilterSpec>,
    },
    Clear,
}

async fn put_filters(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(update): Json<FilterUpdate>,
) -> ApiResult<Response> {
    with_session(&state, &id, true, |entry, ctx, snap| {
        match update {
            FilterUpdate::Apply { filter } => snap.subset.apply_filter(ctx, filter)?,
            FilterUpdate::Remove { key } => {
                snap.subset.remove_filter(ctx, &key)?;
            }
            FilterUpdate::Replace { filters } => {
                snap.subset.clear_filters(ctx);
                for f in filters {
                    snap.subset.apply_filter(ctx, f)?;
                }
            }
            FilterUpdate::Clear => snap.subset.clear_filters(ctx),
        }
        Ok(Json(view(entry, snap, false)).into_response())
    })
}

#[derive(Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
enum SelectionUpdate {
    Select { attributes: Vec<String> },
    Deselect { attributes: Vec<String> },
    Replace { attributes: Vec<String> },
}

async fn put_selection(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(update): Json<SelectionUpdate>,
) -> ApiResult<Response> {
    with_session(&state, &id, true, |entry, ctx, snap| {
        let (names, selected) = match update {
            SelectionUpdate::Select { attributes } => (attributes, true),
            SelectionUpdate::Deselect { attributes } => (attributes, false),
            SelectionUpdate::Replace { attributes } => {
                let current: Vec<String> = snap.subset.selected_attribute_names().iter().cloned().collect();
                for name in current {
                    snap.subset.set_attribute_selection(ctx, &name, false)?;
                }
                (attributes, true)
            }
        };
        for name in names {
            snap.subset.set_attribute_selection(ctx, &name, selected)?;
        }
        Ok(Json(view(entry, snap, false)).into_response())
    })
}

#[derive(Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
enum VizUpdate {
    Save { spec: VizSpec },
    Delete { id: u64 },
    DeleteAll,
}

async fn put_visualizations(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(update): Json<VizUpdate>,
) -> ApiResult<Response> {
    with_session(&state, &id, true, |entry, _, snap| {
        match update {
            VizUpdate::Save { spec } => {
                let subset = subset_of(entry, &snap.subset);
                snap.dashboard.save(spec, &subset)?;
            }
            VizUpdate::Delete { id } => snap.dashboard.delete(DeleteTarget::One(id))?,
            VizUpdate::DeleteAll => snap.dashboard.delete(DeleteTarget::All)?,
        }
        Ok(Json(view(entry, snap, true)).into_response())
    })
}

async fn get_visualizations(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    with_session(&state, &id, false, |entry, _, snap| Ok(Json(view(entry, snap, true)).into_response()))
}

fn usage_out(state: &AppState, usage: Option<Arc<UsageProfile>>) -> Option<UsageBlock> {
    usage.map(|u| usage_block(&u, &state.config.usage, false))
}

async fn finalize(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let cell = state.session(&id).ok_or_else(|| ApiError::not_found("session", &id))?;
    let mut snap = cell.lock().expect("session lock");
    let entry = dataset(&state, &snap.dataset_id)?;
    if snap.status == SessionStatus::Finalized {
        let mut err =
            ApiError::new(StatusCode::CONFLICT, "session_finalized", format!("session {id:?} is already finalized"));
        err.extra = Some(json!({ "usage": usage_out(&state, entry.usage()) }));
        return Err(err);
    }
    let usage = entry.usage();
    let ctx = context(&entry, usage.as_deref());
    snap.subset.refresh(&ctx);
    state.finalize(&entry, &mut snap)?;
    let body = json!({ "session": view(&entry, &snap, false), "usage": usage_out(&state, entry.usage()) });
    Ok(Json(body).into_response())
}
