//! HTTP+JSON transport over [`SessionService`].

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use corrbelief::mcmcp::ChoiceResponse;
use corrbelief::ElicitationPayload;
use serde::{Deserialize, Serialize};

use crate::error::SessionError;
use crate::service::SessionService;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub study_id: String,
    pub participant_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttentionAnswer {
    pub item_id: String,
    pub answer: String,
}

/// Error body: `{"error": "<kind>", "message": "..."}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

pub struct ApiError(StatusCode, ErrorBody);

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let (status, kind) = match &e {
            SessionError::UnknownStudy(_) | SessionError::UnknownSession(_) => (StatusCode::NOT_FOUND, "not_found"),
            SessionError::DuplicateParticipant { .. } => (StatusCode::CONFLICT, "duplicate_participant"),
            SessionError::OutOfOrder(_) => (StatusCode::CONFLICT, "out_of_order"),
            SessionError::Sealed(_) => (StatusCode::CONFLICT, "sealed"),
            SessionError::InvalidPayload(_) | SessionError::Model(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "invalid_payload")
            }
            SessionError::Config(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_config"),
            SessionError::Storage(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage"),
        };
        ApiError(status, ErrorBody { error: kind.into(), message: e.to_string() })
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError(StatusCode::UNPROCESSABLE_ENTITY, ErrorBody { error: "invalid_payload".into(), message: e.body_text() })
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;
type Shared = Arc<SessionService>;

/// Runs a service call off the async executor; model fits can take a while.
async fn blocking<T: Send + 'static>(
    service: Shared,
    f: impl FnOnce(&SessionService) -> Result<T, SessionError> + Send + 'static,
) -> ApiResult<T> {
    match tokio::task::spawn_blocking(move || f(&service)).await {
        Ok(r) => r.map(Json).map_err(Into::into),
        Err(e) => Err(SessionError::Storage(format!("worker failed: {e}")).into()),
    }
}

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/current-trial", get(current_trial))
        .route("/sessions/{id}/trials/{tid}/prior", post(submit_prior))
        .route("/sessions/{id}/trials/{tid}/view-ack", post(view_ack))
        .route("/sessions/{id}/trials/{tid}/posterior", post(submit_posterior))
        .route("/sessions/{id}/mcmcp/{chain}/choice", post(submit_choice))
        .route("/sessions/{id}/attention", post(answer_attention))
        .route("/sessions/{id}/exclusions", get(exclusions))
        .route("/studies/{id}/export", get(export))
        .with_state(service)
}

async fn create_session(
    State(s): State<Shared>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<crate::view::CurrentTrial>), ApiError> {
    let Json(req) = body?;
    let view = blocking(s, move |s| s.create_session(&req.study_id, &req.participant_id)).await?;
    Ok((StatusCode::CREATED, view))
}

async fn current_trial(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult<crate::view::CurrentTrial> {
    blocking(s, move |s| s.current_trial(&id)).await
}

async fn submit_prior(
    State(s): State<Shared>,
    Path((id, tid)): Path<(String, String)>,
    body: Result<Json<ElicitationPayload>, JsonRejection>,
) -> ApiResult<crate::view::PriorOutcome> {
    let Json(p) = body?;
    blocking(s, move |s| s.submit_prior(&id, &tid, p)).await
}

async fn view_ack(State(s): State<Shared>, Path((id, tid)): Path<(String, String)>) -> ApiResult<crate::view::Progress> {
    blocking(s, move |s| s.acknowledge_view(&id, &tid)).await
}

async fn submit_posterior(
    State(s): State<Shared>,
    Path((id, tid)): Path<(String, String)>,
    body: Result<Json<ElicitationPayload>, JsonRejection>,
) -> ApiResult<crate::view::Progress> {
    let Json(p) = body?;
    blocking(s, move |s| s.submit_posterior(&id, &tid, p)).await
}

async fn submit_choice(
    State(s): State<Shared>,
    Path((id, chain)): Path<(String, String)>,
    body: Result<Json<ChoiceResponse>, JsonRejection>,
) -> ApiResult<crate::view::ChoiceOutcome> {
    let Json(r) = body?;
    blocking(s, move |s| s.submit_choice(&id, &chain, r)).await
}

async fn answer_attention(
    State(s): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<AttentionAnswer>, JsonRejection>,
) -> ApiResult<crate::view::Progress> {
    let Json(a) = body?;
    blocking(s, move |s| s.answer_attention(&id, &a.item_id, &a.answer)).await
}

async fn exclusions(
    State(s): State<Shared>,
    Path(id): Path<String>,
) -> ApiResult<std::collections::BTreeSet<crate::exclusion::ExclusionFlag>> {
    blocking(s, move |s| s.evaluate_exclusions(&id)).await
}

async fn export(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult<crate::export::ExportBundle> {
    blocking(s, move |s| s.export(&id)).await
}
