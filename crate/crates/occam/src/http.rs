//! JSON-over-HTTP control API. Handlers may run concurrently, but every
//! command goes through one mutex-guarded store, so the core sees a single
//! serialized command stream.

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use tokio::sync::Mutex;

use occam_core::control::{ControlError, Store};
use occam_core::manifest::parse_manifest;
use occam_core::{Command, Error, Outcome};

use crate::requests::{
    deploy_command, AdvanceRequest, ExecRequest, FioRequest, HplRequest, JobRequest, MdtestRequest,
    ScaleRequest, TenantRequest,
};

pub type Shared = Arc<Mutex<Store>>;

/// An engine error rendered as `{"error": .., "exit_code": ..}`.
pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let code = self.0.exit_code();
        let status = match (&self.0, code) {
            (Error::Control(ControlError::UnknownApp(_) | ControlError::UnknownSession(_)), _) => {
                StatusCode::NOT_FOUND
            }
            (_, 2) => StatusCode::BAD_REQUEST,
            (_, 3) => StatusCode::CONFLICT,
            (_, 4) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::CONFLICT,
        };
        (
            status,
            Json(json!({"error": self.0.to_string(), "exit_code": code})),
        )
            .into_response()
    }
}

type Reply = Result<Json<Outcome>, ApiError>;

async fn run(store: &Shared, command: Command) -> Reply {
    Ok(Json(store.lock().await.execute(command)?))
}

pub fn router(store: Shared) -> Router {
    Router::new()
        .route("/v1/tenants", post(add_tenant))
        .route("/v1/applications", post(submit_app))
        .route("/v1/applications/{id}", get(app_status))
        .route("/v1/applications/{id}/deploy", post(deploy))
        .route("/v1/applications/{id}/scale", post(scale))
        .route("/v1/applications/{id}/jobs", post(submit_job))
        .route("/v1/applications/{id}/negotiate", post(negotiate))
        .route("/v1/applications/{id}/run", post(run_farm))
        .route("/v1/applications/{id}/release", post(release))
        .route("/v1/sessions/{id}/exec", post(session_exec))
        .route("/v1/sessions/{id}/stop", post(session_stop))
        .route("/v1/clock/advance", post(advance))
        .route("/v1/nodes", get(nodes))
        .route("/v1/events", get(events))
        .route("/v1/bench/hpl", post(bench_hpl))
        .route("/v1/bench/fio", post(bench_fio))
        .route("/v1/bench/mdtest", post(bench_mdtest))
        .with_state(store)
}

async fn add_tenant(State(store): State<Shared>, Json(req): Json<TenantRequest>) -> Reply {
    run(&store, req.command()).await
}

/// The body is the manifest itself.
async fn submit_app(State(store): State<Shared>, body: String) -> Reply {
    let app = parse_manifest(&body).map_err(Error::from)?;
    run(&store, Command::SubmitApplication { app }).await
}

async fn app_status(
    State(store): State<Shared>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let status = store.lock().await.system().app_status(&id)?;
    Ok(Json(status).into_response())
}

async fn deploy(State(store): State<Shared>, Path(id): Path<String>) -> Reply {
    let mut store = store.lock().await;
    let command = deploy_command(store.system(), &id)?;
    Ok(Json(store.execute(command)?))
}

async fn scale(
    State(store): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<ScaleRequest>,
) -> Reply {
    run(
        &store,
        Command::ScaleFarm {
            app_id: id,
            delta: req.delta,
        },
    )
    .await
}

async fn submit_job(
    State(store): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<JobRequest>,
) -> Reply {
    run(&store, req.command(&id)).await
}

async fn negotiate(State(store): State<Shared>, Path(id): Path<String>) -> Reply {
    run(&store, Command::Negotiate { app_id: id }).await
}

async fn run_farm(State(store): State<Shared>, Path(id): Path<String>) -> Reply {
    run(&store, Command::RunFarm { app_id: id }).await
}

async fn release(State(store): State<Shared>, Path(id): Path<String>) -> Reply {
    run(&store, Command::ReleaseApplication { app_id: id }).await
}

async fn session_exec(
    State(store): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<ExecRequest>,
) -> Reply {
    run(&store, req.command(&id)).await
}

async fn session_stop(State(store): State<Shared>, Path(id): Path<String>) -> Reply {
    run(&store, Command::StopSession { session_id: id }).await
}

async fn advance(State(store): State<Shared>, Json(req): Json<AdvanceRequest>) -> Reply {
    run(
        &store,
        Command::Advance {
            seconds: req.seconds,
        },
    )
    .await
}

async fn nodes(State(store): State<Shared>) -> Response {
    Json(store.lock().await.system().node_usage()).into_response()
}

/// Events with `seq >= since` as JSON Lines.
async fn events(
    State(store): State<Shared>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let since = match q.get("since") {
        Some(s) => s.parse().map_err(|_| {
            Error::from(ControlError::InvalidArgument(format!(
                "bad `since` value {s:?}"
            )))
        })?,
        None => 0,
    };
    let body = store.lock().await.system().log().lines_since(since);
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

async fn bench_hpl(State(store): State<Shared>, Json(req): Json<HplRequest>) -> Reply {
    run(&store, req.command()?).await
}

async fn bench_fio(State(store): State<Shared>, Json(req): Json<FioRequest>) -> Reply {
    run(&store, req.command()?).await
}

async fn bench_mdtest(State(store): State<Shared>, body: Option<Json<MdtestRequest>>) -> Reply {
    let req = body.map(|Json(r)| r).unwrap_or_default();
    let mut store = store.lock().await;
    let mut last = None;
    for command in req.commands()? {
        last = Some(store.execute(command)?);
    }
    Ok(Json(last.expect("mdtest issues commands")))
}
