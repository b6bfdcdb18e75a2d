//! axum front end: `POST /v1/route`, `GET /v1/health`, `GET /v1/spend`, `POST /v1/reload`.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::service::{Gateway, RouteError, RouteRequest};

fn error_response(status: StatusCode, message: impl Into<String>, extra: serde_json::Value) -> Response {
    let mut body = json!({ "error": message.into() });
    if let (Some(obj), serde_json::Value::Object(more)) = (body.as_object_mut(), extra) {
        obj.extend(more);
    }
    (status, Json(body)).into_response()
}

impl IntoResponse for RouteError {
    fn into_response(self) -> Response {
        let msg = self.to_string();
        match self {
            RouteError::BadRequest(_) | RouteError::NoEmbedder => {
                error_response(StatusCode::BAD_REQUEST, msg, json!({}))
            }
            RouteError::Dimension { .. } => error_response(StatusCode::UNPROCESSABLE_ENTITY, msg, json!({})),
            RouteError::Embedding(_) => error_response(StatusCode::BAD_GATEWAY, msg, json!({})),
            RouteError::Auth { arm } => error_response(StatusCode::BAD_GATEWAY, msg, json!({ "arm": arm })),
            RouteError::AllFailed { attempts } => {
                error_response(StatusCode::SERVICE_UNAVAILABLE, msg, json!({ "attempts": attempts }))
            }
        }
    }
}

async fn route(State(gw): State<Arc<Gateway>>, body: Bytes) -> Response {
    let req: RouteRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return RouteError::BadRequest(format!("malformed body: {e}")).into_response(),
    };
    match gw.handle_route(req).await {
        Ok(resp) => Json(resp).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn health(State(gw): State<Arc<Gateway>>) -> Response {
    let model = gw.model();
    Json(json!({
        "status": "ok",
        "arms": model.roster().arms().iter().map(|a| a.name.clone()).collect::<Vec<_>>(),
        "embedding_dim": model.embedding_dim(),
        "roster_fingerprint": model.roster().fingerprint(),
    }))
    .into_response()
}

async fn spend(State(gw): State<Arc<Gateway>>) -> Response {
    Json(gw.spend()).into_response()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReloadRequest {
    model_path: PathBuf,
}

async fn reload(State(gw): State<Arc<Gateway>>, body: Bytes) -> Response {
    let req: ReloadRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, format!("malformed body: {e}"), json!({})),
    };
    let path = req.model_path.clone();
    match tokio::task::spawn_blocking(move || gw.reload(&path)).await {
        Ok(Ok(())) => Json(json!({ "status": "reloaded", "model_path": req.model_path })).into_response(),
        Ok(Err(e)) => error_response(StatusCode::UNPROCESSABLE_ENTITY, e.to_string(), json!({})),
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, e.to_string(), json!({})),
    }
}

pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new()
        .route("/v1/route", post(route))
        .route("/v1/health", get(health))
        .route("/v1/spend", get(spend))
        .route("/v1/reload", post(reload))
        .with_state(gateway)
}

/// Binds `listen` and serves until ctrl-c.
pub async fn serve(gateway: Arc<Gateway>, listen: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "gateway listening");
    axum::serve(listener, router(gateway))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
