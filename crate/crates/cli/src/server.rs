//! The HTTP service: read-only JSON endpoints over one snapshot.

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;

use crate::api::{self, ApiError, ApiResult, AppState};

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, [(header::CONTENT_TYPE, "application/json")], self.body()).into_response()
    }
}

fn reply(r: ApiResult<serde_json::Value>) -> Response {
    match r {
        Ok(json) => ([(header::CONTENT_TYPE, "application/json")], api::render(&json)).into_response(),
        Err(e) => e.into_response(),
    }
}

fn parse_body<T: DeserializeOwned>(body: &str) -> ApiResult<T> {
    serde_json::from_str(body).map_err(|e| ApiError::bad_request("bad-request", e.to_string()))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/context", get(context))
        .route("/aggregates", get(aggregates))
        .route("/proposals", post(proposals))
        .route("/traversal", post(traversal))
        .route("/analytic", post(analytic))
        .with_state(state)
}

async fn health(State(st): State<Arc<AppState>>) -> Response {
    reply(Ok(api::health(&st.snapshot())))
}

async fn context(State(st): State<Arc<AppState>>) -> Response {
    reply(Ok(api::context_json(st.snapshot().context())))
}

async fn aggregates(State(st): State<Arc<AppState>>, Query(params): Query<HashMap<String, String>>) -> Response {
    let s = st.snapshot();
    reply(match params.get("node") {
        Some(node) => api::aggregates(s.context(), node),
        None => Err(ApiError::bad_request("bad-request", "missing query parameter `node`")),
    })
}

async fn proposals(State(st): State<Arc<AppState>>, body: String) -> Response {
    let s = st.snapshot();
    reply(parse_body(&body).and_then(|req| api::proposals(&s, &req)))
}

async fn traversal(State(st): State<Arc<AppState>>, body: String) -> Response {
    let s = st.snapshot();
    reply(parse_body(&body).and_then(|req| api::traversal(&s, &req)))
}

async fn analytic(State(st): State<Arc<AppState>>, body: String) -> Response {
    let s = st.snapshot();
    reply(parse_body(&body).and_then(|req| api::analytic(&s, &req)))
}
