//! HTTP front end for adaptive assessment sessions.
//!
//! Routes live under `/v1`. Every session is journaled to disk as it
//! progresses, so a restarted server resumes sessions where they stopped.

pub mod api;
pub mod store;

use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;

pub use api::*;
pub use store::{AppState, ServiceConfig, SessionDefaults, SharedModel};

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/answers", post(post_answer))
        .route("/v1/sessions/{id}/corrections", post(post_corrections))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route") })
        .with_state(state)
}

/// Serves until `shutdown` resolves, then writes out all transcripts.
pub async fn serve(listener: tokio::net::TcpListener, state: Shared, shutdown: impl Future<Output = ()> + Send + 'static) -> std::io::Result<()> {
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(shutdown)
        .await?;
    state.flush_transcripts();
    Ok(())
}

// Bodies are parsed by hand so malformed JSON gets our error shape.
fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", format!("malformed body: {e}")))
}

async fn health(State(state): State<Shared>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        skills: state.ontology().len(),
        sessions: state.session_count(),
    })
}

async fn create_session(State(state): State<Shared>, body: Bytes) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let req: CreateSessionRequest = if body.is_empty() { CreateSessionRequest::default() } else { parse(&body)? };
    Ok((StatusCode::CREATED, Json(state.create(&req)?)))
}

async fn get_session(State(state): State<Shared>, Path(id): Path<String>) -> Result<Json<SessionState>, ApiError> {
    Ok(Json(state.state(&id)?))
}

async fn post_answer(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<Json<SessionView>, ApiError> {
    let req: AnswerRequest = parse(&body)?;
    Ok(Json(state.answer(&id, &req)?))
}

async fn post_corrections(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<Json<CorrectionsResponse>, ApiError> {
    let req: CorrectionsRequest = parse(&body)?;
    Ok(Json(state.correct(&id, &req)?))
}
