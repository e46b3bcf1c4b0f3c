mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tokio::sync::Mutex;
use tower::ServiceExt;

use occam::http::router;
use occam_core::control::Store;
use occam_core::fixtures;

struct Api {
    app: Router,
}

impl Api {
    fn new(dir: &std::path::Path) -> Self {
        let store = Store::open(dir, 42).unwrap();
        Self {
            app: router(Arc::new(Mutex::new(store))),
        }
    }

    async fn call(&self, method: &str, uri: &str, body: Option<String>) -> (StatusCode, String) {
        let mut req = Request::builder().method(method).uri(uri);
        if body.is_some() {
            req = req.header("content-type", "application/json");
        }
        let req = req
            .body(body.map(Body::from).unwrap_or_else(Body::empty))
            .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, String::from_utf8(bytes.to_vec()).unwrap())
    }

    async fn ok(&self, method: &str, uri: &str, body: Option<Value>) -> Value {
        let (status, text) = self.call(method, uri, body.map(|b| b.to_string())).await;
        assert_eq!(status, StatusCode::OK, "{method} {uri}: {text}");
        serde_json::from_str(&text).unwrap()
    }

    async fn submit(&self, manifest: &str) -> String {
        let (status, text) = self
            .call("POST", "/v1/applications", Some(manifest.to_string()))
            .await;
        assert_eq!(status, StatusCode::OK, "{text}");
        let v: Value = serde_json::from_str(&text).unwrap();
        v["app_id"].as_str().unwrap().to_string()
    }
}

/// The same scenario as `common::cli_scenario`, over HTTP.
async fn http_scenario(api: &Api) {
    for t in common::TENANTS {
        api.ok(
            "POST",
            "/v1/tenants",
            Some(json!({"name": t, "ssh_pubkey": "ssh-ed25519 AAAAC3Nza scenario@occam\n"})),
        )
        .await;
    }
    let crystal = api.submit(fixtures::CRYSTAL).await;
    let casc = api.submit(fixtures::CASC).await;
    let no2 = api.submit(fixtures::NO2).await;

    api.ok("POST", &format!("/v1/applications/{crystal}/deploy"), None)
        .await;
    for work in [2000000.0, 1500000.0, 3000000.0] {
        api.ok(
            "POST",
            &format!("/v1/applications/{crystal}/jobs"),
            Some(json!({"millicores": 48000, "memory_mib": 65536, "work": work})),
        )
        .await;
    }
    api.ok("POST", &format!("/v1/applications/{crystal}/run"), None)
        .await;
    api.ok(
        "POST",
        &format!("/v1/applications/{crystal}/scale"),
        Some(json!({"delta": -4})),
    )
    .await;

    api.ok("POST", &format!("/v1/applications/{casc}/deploy"), None)
        .await;

    let session = api
        .ok("POST", &format!("/v1/applications/{no2}/deploy"), None)
        .await;
    let sid = session["session_id"].as_str().unwrap().to_string();
    api.ok(
        "POST",
        &format!("/v1/sessions/{sid}/exec"),
        Some(json!({"image": "r-base:3.4", "work": 80000.0, "millicores": 8000, "memory_mib": 16384})),
    )
    .await;
    api.ok("POST", "/v1/clock/advance", Some(json!({"seconds": 60.0})))
        .await;
    api.ok("POST", &format!("/v1/sessions/{sid}/stop"), None)
        .await;

    api.ok(
        "POST",
        "/v1/bench/hpl",
        Some(json!({"mix": "mixed", "balance": "proportional"})),
    )
    .await;
    api.ok(
        "POST",
        "/v1/bench/fio",
        Some(json!({"target": "scratch", "clients": 32})),
    )
    .await;
    api.ok("POST", "/v1/bench/mdtest", Some(json!({}))).await;
    api.ok("POST", &format!("/v1/applications/{crystal}/release"), None)
        .await;
}

#[tokio::test]
async fn cli_and_http_write_identical_logs() {
    let (cli_dir, http_dir) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let from_cli = common::cli_scenario(cli_dir.path());
    let api = Api::new(http_dir.path());
    http_scenario(&api).await;
    let from_http = std::fs::read_to_string(http_dir.path().join("events.jsonl")).unwrap();
    assert_eq!(from_cli, from_http);

    let (status, lines) = api.call("GET", "/v1/events?since=0", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        from_http.split_once('\n').unwrap().1,
        lines,
        "event stream is the log without its header"
    );
}

#[tokio::test]
async fn events_since_filters_by_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());
    api.ok(
        "POST",
        "/v1/tenants",
        Some(json!({"name": "chem", "ssh_pubkey": "ssh-ed25519 AAAA"})),
    )
    .await;
    let (_, all) = api.call("GET", "/v1/events", None).await;
    let (_, tail) = api.call("GET", "/v1/events?since=1", None).await;
    assert_eq!(all.lines().count(), 2);
    assert_eq!(tail.lines().count(), 1);
    assert!(tail.starts_with("{\"seq\":1,"));
    let (status, _) = api.call("GET", "/v1/events?since=soon", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn status_and_nodes_reflect_deployments() {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());
    api.ok(
        "POST",
        "/v1/tenants",
        Some(json!({"name": "stats", "ssh_pubkey": "ssh-ed25519 AAAA"})),
    )
    .await;
    let no2 = api.submit(fixtures::NO2).await;
    api.ok("POST", &format!("/v1/applications/{no2}/deploy"), None)
        .await;

    let status = api
        .ok("GET", &format!("/v1/applications/{no2}"), None)
        .await;
    assert_eq!(status["app_id"], json!(no2));
    assert_eq!(status["placements"].as_array().unwrap().len(), 1);

    let nodes = api.ok("GET", "/v1/nodes", None).await;
    let busy: Vec<&Value> = nodes
        .as_array()
        .unwrap()
        .iter()
        .filter(|n| n["used"]["millicores"].as_u64().unwrap() > 0)
        .collect();
    assert_eq!(busy.len(), 1);
    assert_eq!(busy[0]["class"], json!("fat"));
    assert_eq!(busy[0]["used"]["millicores"], json!(16000));
}

#[tokio::test]
async fn errors_map_to_statuses_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let api = Api::new(dir.path());

    let (status, body) = api
        .call("GET", "/v1/applications/app-000000000000", None)
        .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let body: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(body["exit_code"], json!(1));

    // Unknown tenant: a validation failure.
    let (status, body) = api
        .call("POST", "/v1/applications", Some(fixtures::CRYSTAL.into()))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    assert_eq!(
        serde_json::from_str::<Value>(&body).unwrap()["exit_code"],
        json!(2)
    );

    let (status, _) = api
        .call("POST", "/v1/applications", Some("{\"name\": 3}".into()))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    api.ok(
        "POST",
        "/v1/tenants",
        Some(json!({"name": "chem", "ssh_pubkey": "ssh-ed25519 AAAA"})),
    )
    .await;
    let crystal = api.submit(fixtures::CRYSTAL).await;
    api.ok("POST", &format!("/v1/applications/{crystal}/deploy"), None)
        .await;
    // The farm already holds every Light node.
    let (status, body) = api
        .call(
            "POST",
            &format!("/v1/applications/{crystal}/scale"),
            Some(json!({"delta": 1}).to_string()),
        )
        .await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");
    assert_eq!(
        serde_json::from_str::<Value>(&body).unwrap()["exit_code"],
        json!(3)
    );
}

#[tokio::test]
async fn server_restarts_from_the_log() {
    let dir = tempfile::tempdir().unwrap();
    {
        let api = Api::new(dir.path());
        api.ok(
            "POST",
            "/v1/tenants",
            Some(json!({"name": "chem", "ssh_pubkey": "ssh-ed25519 AAAA"})),
        )
        .await;
        api.submit(fixtures::CRYSTAL).await;
    }
    let api = Api::new(dir.path());
    let (status, body) = api
        .call(
            "POST",
            "/v1/tenants",
            Some(json!({"name": "chem", "ssh_pubkey": "ssh-ed25519 AAAA"}).to_string()),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "duplicate tenant: {body}");
    let (_, events) = api.call("GET", "/v1/events", None).await;
    assert!(events.lines().count() >= 4);
}
