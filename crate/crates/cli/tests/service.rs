mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

use caption_cli::app::Workspace;
use caption_cli::service::{self, AppState};

fn app() -> (TempDir, Arc<AppState>, Router) {
    let dir = common::data_copy();
    let state = AppState::open(Workspace::new(dir.path(), None)).unwrap();
    let router = service::router(state.clone());
    (dir, state, router)
}

async fn call(router: &Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
    let resp = router.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(value["schema_version"], json!(1), "{uri} carries the schema version");
    (status, value)
}

#[tokio::test]
async fn parse_returns_meaning_list() {
    let (_dir, _state, router) = app();
    let (status, v) = call(&router, "POST", "/parse", Some(r#"{"text":"big missile on stand","n":2}"#)).await;
    assert_eq!(status, StatusCode::OK);
    let parses = v["result"]["parses"].as_array().unwrap();
    assert_eq!(parses.len(), 2);
    assert_eq!(parses[0]["rank"], json!(1));
    assert_eq!(
        parses[0]["meaning_text"],
        json!("ako v2 projectile-1\nako v4 base-2\nprop v2 big-1\nrel locationover v2 v4\n")
    );
    assert_eq!(v["result"]["tokens"], json!(["big", "missile", "on", "stand"]));
}

#[tokio::test]
async fn parse_errors_map_to_status_codes() {
    let (_dir, _state, router) = app();
    let (status, v) = call(&router, "POST", "/parse", Some("{not json")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["error"].is_string());

    let (status, _) = call(&router, "POST", "/parse", Some(r#"{"text":"  "}"#)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, _) = call(&router, "POST", "/parse", Some(r#"{"text":"missile","n":0}"#)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, _) = call(&router, "POST", "/parse", Some(r#"{"text":"missile","extra":1}"#)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, v) = call(&router, "POST", "/parse", Some(r#"{"text":"the of with"}"#)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["diagnostic"]["tokens"], json!(3));
    assert_eq!(v["diagnostic"]["longest_prefix"], json!(1));
}

#[tokio::test]
async fn query_finds_mounted_missiles() {
    let (_dir, _state, router) = app();
    let (status, v) = call(&router, "POST", "/query", Some(r#"{"text":"missile mounted on aircraft"}"#)).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = v["hits"].as_array().unwrap().iter().map(|h| h["caption_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["cap-01", "cap-03", "cap-02"]);
    assert!(v["hits"].as_array().unwrap().iter().all(|h| h["matched_predicates"] == json!(3)));

    let (status, v) = call(&router, "POST", "/query", Some(r#"{"text":"missile mounted on aircraft","k":1}"#)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["hits"].as_array().unwrap().len(), 1);

    let (status, _) = call(&router, "POST", "/query", Some(r#"{"text":""}"#)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&router, "POST", "/query", Some(r#"{"text":"missile","k":0}"#)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&router, "POST", "/query", Some(r#"{"text":"on on on"}"#)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn review_session_flow() {
    let (dir, _state, router) = app();
    let (status, _) = call(&router, "POST", "/session/accept", None).await;
    assert_eq!(status, StatusCode::CONFLICT, "nothing proposed yet");

    let (status, v) = call(&router, "GET", "/session/next", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["proposal"]["caption_id"], json!("cap-01"));
    assert_eq!(v["proposal"]["rank"], json!(1));
    let first_token = v["token"].as_str().unwrap().to_string();

    let (status, v) = call(&router, "POST", "/session/reject", Some(&json!({ "token": first_token }).to_string())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["next_rank"], json!(2));

    let (status, v) = call(&router, "GET", "/session/next", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["proposal"]["caption_id"], json!("cap-01"));
    assert_eq!(v["proposal"]["rank"], json!(2));

    let stale = json!({ "token": first_token }).to_string();
    let (status, _) = call(&router, "POST", "/session/accept", Some(&stale)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = call(&router, "POST", "/session/accept", Some("{bad")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, v) = call(&router, "POST", "/session/accept", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["decision"]["decision"], json!("accepted"));
    assert_eq!(v["decision"]["rank"], json!(2));
    assert_eq!(v["counters"]["accepted"], json!(1));
    assert_eq!(v["counters"]["first_try_accepted"], json!(0));

    call(&router, "GET", "/session/next", None).await;
    let (status, v) = call(&router, "POST", "/session/skip", Some("")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["counters"]["skipped"], json!(1));
    assert_eq!(v["decision"]["reason"], json!("requested"));

    let journal = std::fs::read_to_string(dir.path().join("journal.txt")).unwrap();
    assert_eq!(journal, "cap-01 2\ncap-02 skip\n");
    assert!(dir.path().join("counts.txt").exists());

    let (status, v) = call(&router, "GET", "/stats", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["cursor"], json!(2));
    assert_eq!(v["corpus_size"], json!(52));
    assert_eq!(v["counters"]["total_reviewed"], json!(2));
    assert!(v["store"]["pairs"].as_u64().unwrap() > 0);
    assert_eq!(v["indexed_captions"], json!(52));
}

#[tokio::test]
async fn accept_publishes_new_counts_to_readers() {
    let (_dir, state, router) = app();
    let (_, before) = call(&router, "GET", "/stats", None).await;
    assert_eq!(before["store"]["total_instances"], json!(0));
    call(&router, "GET", "/session/next", None).await;
    let (status, _) = call(&router, "POST", "/session/accept", Some("{}")).await;
    assert_eq!(status, StatusCode::OK);
    let (_, after) = call(&router, "GET", "/stats", None).await;
    assert!(after["store"]["total_instances"].as_u64().unwrap() > 0);
    drop(state);
}

#[test]
fn second_session_on_same_directory_is_refused() {
    let dir = common::data_copy();
    let ws = Workspace::new(dir.path(), None);
    let state = AppState::open(ws.clone()).unwrap();
    assert!(AppState::open(ws.clone()).is_err());
    drop(state);
    assert!(AppState::open(ws).is_ok());
}

#[test]
fn restart_replays_the_journal() {
    let dir = common::data_copy();
    let ws = Workspace::new(dir.path(), None);
    let rt = tokio::runtime::Builder::new_current_thread().build().unwrap();
    {
        let state = AppState::open(ws.clone()).unwrap();
        let router = service::router(state);
        rt.block_on(async {
            call(&router, "GET", "/session/next", None).await;
            call(&router, "POST", "/session/accept", None).await;
            call(&router, "GET", "/session/next", None).await;
            call(&router, "POST", "/session/reject", None).await;
            call(&router, "GET", "/session/next", None).await;
            call(&router, "POST", "/session/accept", None).await;
        });
    }
    let saved = std::fs::read_to_string(dir.path().join("counts.txt")).unwrap();
    std::fs::remove_file(dir.path().join("counts.txt")).unwrap();

    let lock = ws.lock().unwrap();
    let (model, session) = ws.open_session(&lock).unwrap();
    assert_eq!(model.counts.to_text(), saved);
    assert_eq!(session.cursor(), 2);
    assert_eq!(session.counters().accepted, 2);
}
