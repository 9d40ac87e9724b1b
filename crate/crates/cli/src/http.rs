//! HTTP+JSON front end for [`ScoringService`].
//!
//! | method | path        | body                                                        |
//! |--------|-------------|-------------------------------------------------------------|
//! | POST   | `/score`    | one of `tweet_ref`, `retweeter_ids`, `inline_records`; optional `mode` |
//! | POST   | `/feedback` | `user_id`, `predicted_label`, optional `corrected_label`, `client_id` |
//! | GET    | `/model`    |                                                             |
//! | GET    | `/health`   |                                                             |

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::{Deserialize, Serialize};
use serde_json::json;

use retweet_guard::corpus::UserRecord;
use retweet_guard::serve::{FeedbackEvent, FeedbackOutcome, Retweeters, ScoringService, ServiceError};
use retweet_guard::ClassMode;

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::NoActiveModel => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::TweetNotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::UnknownLabel(_) | ServiceError::MissingCorrection => StatusCode::BAD_REQUEST,
            ServiceError::ModeUnavailable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError(StatusCode::BAD_REQUEST, e.body_text())
    }
}

fn join_error(e: tokio::task::JoinError) -> ApiError {
    ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    pub tweet_ref: Option<String>,
    pub retweeter_ids: Option<Vec<String>>,
    pub inline_records: Option<Vec<UserRecord>>,
    pub mode: Option<ClassMode>,
}

impl ScoreRequest {
    fn into_parts(self) -> Result<(Retweeters, Option<ClassMode>), ApiError> {
        let mode = self.mode;
        let mut given = Vec::new();
        if let Some(r) = self.tweet_ref {
            given.push(Retweeters::TweetRef(r));
        }
        if let Some(ids) = self.retweeter_ids {
            given.push(Retweeters::RetweeterIds(ids));
        }
        if let Some(records) = self.inline_records {
            given.push(Retweeters::InlineRecords(records));
        }
        match given.len() {
            1 => Ok((given.pop().unwrap(), mode)),
            _ => Err(ApiError(
                StatusCode::BAD_REQUEST,
                "give exactly one of tweet_ref, retweeter_ids, inline_records".into(),
            )),
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct FeedbackRequest {
    pub user_id: String,
    pub predicted_label: String,
    pub corrected_label: Option<String>,
    #[serde(default)]
    pub client_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub status: FeedbackOutcome,
    pub model_version: u64,
    pub buffered: usize,
}

async fn score(
    State(service): State<Arc<ScoringService>>,
    body: Result<Json<ScoreRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let (request, mode) = body?.0.into_parts()?;
    let response = tokio::task::spawn_blocking(move || service.score_retweeters(&request, mode))
        .await
        .map_err(join_error)??;
    Ok(Json(response).into_response())
}

async fn feedback(
    State(service): State<Arc<ScoringService>>,
    body: Result<Json<FeedbackRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let req = body?.0;
    let event = FeedbackEvent {
        user_id: req.user_id,
        predicted_label: req.predicted_label,
        corrected_label: req.corrected_label,
        flagged: true,
        submitted_at: Utc::now(),
        client_id: req.client_id,
    };
    let response = tokio::task::spawn_blocking(move || -> Result<FeedbackResponse, ServiceError> {
        let status = service.submit_feedback(event)?;
        if status == FeedbackOutcome::Accepted {
            if let Err(e) = service.retrain_if_due() {
                log::error!("retrain failed: {e}");
            }
        }
        Ok(FeedbackResponse {
            status,
            model_version: service.active().map_or(0, |a| a.version),
            buffered: service.buffer_len(),
        })
    })
    .await
    .map_err(join_error)??;
    Ok(Json(response).into_response())
}

async fn model(State(service): State<Arc<ScoringService>>) -> Result<Response, ApiError> {
    let active = service.active().ok_or(ServiceError::NoActiveModel)?;
    let policy = service.policy();
    Ok(Json(json!({
        "version": active.version,
        "spec": active.model.spec,
        "classes": active.model.classes,
        "trained_at": active.trained_at,
        "threshold": policy.confidence_threshold,
        "retrain_trigger": policy.retrain_trigger,
        "buffered": service.buffer_len(),
    }))
    .into_response())
}

async fn health(State(service): State<Arc<ScoringService>>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "model_loaded": service.active().is_some(),
        "users": service.store().len(),
    }))
}

pub fn router(service: Arc<ScoringService>) -> Router {
    Router::new()
        .route("/score", post(score))
        .route("/feedback", post(feedback))
        .route("/model", get(model))
        .route("/health", get(health))
        .with_state(service)
}

/// Serves until Ctrl-C.
pub async fn serve(service: Arc<ScoringService>, listen: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
