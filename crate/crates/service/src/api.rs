//! The `/api/v1` router.

use std::path::{Component, Path as FsPath, PathBuf};
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, PathRejection};
use axum::extract::{FromRequest, FromRequestParts, Request, State};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use guielicit_core::corpus::GuiDocument;
use guielicit_core::recommend::FeatureRecommendation;
use guielicit_core::session::{FeatureDecision, FeatureSubmission, GuiSlot, PrototypeArtifact, SessionConfig, SessionState};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::error::ApiError;
use crate::sessions::{blocking, Registry};

#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<Registry>,
    /// Root for relative screenshot references.
    pub asset_root: PathBuf,
}

/// JSON body whose rejections become [`ApiError`]s.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e) => Err(json_rejection(e)),
        }
    }
}

fn json_rejection(e: JsonRejection) -> ApiError {
    ApiError::bad_request(e.body_text())
}

/// Path parameters whose rejections become [`ApiError`]s.
pub struct Params<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned + Send> FromRequestParts<S> for Params<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        match axum::extract::Path::<T>::from_request_parts(parts, state).await {
            Ok(axum::extract::Path(v)) => Ok(Params(v)),
            Err(e) => Err(path_rejection(e)),
        }
    }
}

fn path_rejection(e: PathRejection) -> ApiError {
    ApiError::bad_request(e.body_text())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    pub app_name: String,
    #[serde(default)]
    pub config: Option<SessionConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    pub nlr_gui: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectGuiRequest {
    pub gui_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureRequest {
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecommendationsResponse {
    pub recommendations: Vec<FeatureRecommendation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub corpus_size: usize,
    pub count_total: usize,
    pub count_filtered: usize,
    pub corpus_hash: String,
    pub embedding_provider: String,
    pub embedding_dim: usize,
    pub llm_provider: String,
    pub live_sessions: usize,
}

pub fn router(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/healthz", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/artifact", get(artifact))
        .route("/sessions/{id}/slots/{n}/query", post(submit_query))
        .route("/sessions/{id}/slots/{n}/select-gui", post(select_gui))
        .route("/sessions/{id}/slots/{n}/features", post(submit_feature))
        .route("/sessions/{id}/slots/{n}/features/{fid}/decision", post(decide_feature))
        .route("/sessions/{id}/slots/{n}/recommendations", post(recommend))
        .route("/sessions/{id}/slots/{n}/recommendations/{fid}/decision", post(decide_recommendation))
        .route("/sessions/{id}/slots/{n}/complete", post(complete))
        .route("/guis/{gui_id}", get(gui))
        .route("/guis/{gui_id}/screenshot", get(screenshot))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(state);
    let app = Router::new().nest("/api/v1", api);
    match ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

async fn health(State(app): State<AppState>) -> Json<Health> {
    let engine = app.registry.engine();
    let corpus = engine.retriever().corpus();
    let embedder = engine.retriever().embedder();
    Json(Health {
        status: "ok".into(),
        corpus_size: corpus.len(),
        count_total: corpus.count_total,
        count_filtered: corpus.count_filtered,
        corpus_hash: engine.retriever().vectors().corpus_hash().to_string(),
        embedding_provider: kind_name(&embedder.kind()),
        embedding_dim: embedder.dim(),
        llm_provider: kind_name(&engine.llm().kind()),
        live_sessions: app.registry.len(),
    })
}

fn kind_name(kind: &impl Serialize) -> String {
    serde_json::to_value(kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

async fn create_session(
    State(app): State<AppState>,
    Body(req): Body<CreateSessionRequest>,
) -> Result<(StatusCode, Json<SessionState>), ApiError> {
    let engine = app.registry.engine().clone();
    let state = blocking(move || {
        engine
            .create_session(&req.app_name, req.config.unwrap_or_default())
            .map_err(ApiError::from)
    })
    .await?;
    let state = app.registry.insert(state).await?;
    Ok((StatusCode::CREATED, Json(SessionState::clone(&state))))
}

async fn get_session(State(app): State<AppState>, Params(id): Params<String>) -> Result<Json<SessionState>, ApiError> {
    Ok(Json(SessionState::clone(&*app.registry.snapshot(&id).await?)))
}

async fn artifact(State(app): State<AppState>, Params(id): Params<String>) -> Result<Json<PrototypeArtifact>, ApiError> {
    let state = app.registry.snapshot(&id).await?;
    Ok(Json(state.export_artifact()?))
}

async fn submit_query(
    State(app): State<AppState>,
    Params((id, n)): Params<(String, usize)>,
    Body(req): Body<QueryRequest>,
) -> Result<Json<GuiSlot>, ApiError> {
    let (_, slot) = app
        .registry
        .mutate(&id, move |e, s| e.submit_gui_query(s, n, &req.nlr_gui).cloned())
        .await?;
    Ok(Json(slot))
}

async fn select_gui(
    State(app): State<AppState>,
    Params((id, n)): Params<(String, usize)>,
    Body(req): Body<SelectGuiRequest>,
) -> Result<Json<GuiSlot>, ApiError> {
    let (_, slot) = app
        .registry
        .mutate(&id, move |e, s| e.select_gui(s, n, &req.gui_id).cloned())
        .await?;
    Ok(Json(slot))
}

async fn submit_feature(
    State(app): State<AppState>,
    Params((id, n)): Params<(String, usize)>,
    Body(req): Body<FeatureRequest>,
) -> Result<(StatusCode, Json<FeatureSubmission>), ApiError> {
    let (_, sub) = app
        .registry
        .mutate(&id, move |e, s| e.submit_feature_query(s, n, &req.text))
        .await?;
    Ok((StatusCode::CREATED, Json(sub)))
}

async fn decide_feature(
    State(app): State<AppState>,
    Params((id, n, fid)): Params<(String, usize, String)>,
    Body(decision): Body<FeatureDecision>,
) -> Result<Json<GuiSlot>, ApiError> {
    let (_, slot) = app
        .registry
        .mutate(&id, move |e, s| {
            let (aspect, text_only) = match &decision {
                FeatureDecision::SelectAspect { gui_id } => (Some(gui_id.as_str()), false),
                FeatureDecision::RelevantNoAspect => (None, true),
                FeatureDecision::NotRelevant => (None, false),
            };
            e.select_aspect_gui(s, n, &fid, aspect, text_only).cloned()
        })
        .await?;
    Ok(Json(slot))
}

async fn recommend(
    State(app): State<AppState>,
    Params((id, n)): Params<(String, usize)>,
) -> Result<Json<RecommendationsResponse>, ApiError> {
    let (_, recommendations) = app
        .registry
        .mutate(&id, move |e, s| e.request_recommendations(s, n))
        .await?;
    Ok(Json(RecommendationsResponse { recommendations }))
}

async fn decide_recommendation(
    State(app): State<AppState>,
    Params((id, n, fid)): Params<(String, usize, String)>,
    Body(decision): Body<FeatureDecision>,
) -> Result<Json<GuiSlot>, ApiError> {
    let (_, slot) = app
        .registry
        .mutate(&id, move |e, s| e.respond_to_recommendation(s, n, &fid, &decision).cloned())
        .await?;
    Ok(Json(slot))
}

async fn complete(
    State(app): State<AppState>,
    Params((id, n)): Params<(String, usize)>,
) -> Result<Json<SessionState>, ApiError> {
    let (state, _) = app
        .registry
        .mutate(&id, move |e, s| e.complete_slot(s, n).map(|_| ()))
        .await?;
    Ok(Json(SessionState::clone(&state)))
}

fn lookup_gui<'a>(app: &'a AppState, gui_id: &str) -> Result<&'a GuiDocument, ApiError> {
    app.registry
        .engine()
        .retriever()
        .corpus()
        .get(gui_id)
        .ok_or_else(|| ApiError::not_found(format!("unknown GUI {gui_id:?}")))
}

async fn gui(State(app): State<AppState>, Params(gui_id): Params<String>) -> Result<Json<GuiDocument>, ApiError> {
    Ok(Json(lookup_gui(&app, &gui_id)?.clone()))
}

async fn screenshot(State(app): State<AppState>, Params(gui_id): Params<String>) -> Result<Response, ApiError> {
    let doc = lookup_gui(&app, &gui_id)?;
    let missing = || ApiError::not_found(format!("GUI {gui_id:?} has no screenshot"));
    let rel = doc.screenshot_ref.as_deref().ok_or_else(missing)?;
    let rel = FsPath::new(rel);
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return Err(ApiError::bad_request(format!("screenshot reference {} escapes the corpus", rel.display())));
    }
    let path = app.asset_root.join(rel);
    let bytes = tokio::fs::read(&path).await.map_err(|_| missing())?;
    let mime = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("webp") => "image/webp",
        _ => "application/octet-stream",
    };
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}

