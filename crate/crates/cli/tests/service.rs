mod common;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use reactmix::datasets::{ClassMap, DatasetManifest};
use reactmix::embedding::LabelVector;
use reactmix::motion::SequenceFile;
use reactmix_cli::service::{router, AppState};
use reactmix_cli::synthesis::Snapshot;

/// Six classes carrying the SBU names.
fn sbu_named_manifest() -> DatasetManifest {
    let mut m = common::manifest(6, 2);
    m.class_names = ClassMap::sbu().class_names;
    m
}

fn app(manifest: &DatasetManifest, seed: u64) -> Router {
    router(AppState::new(Snapshot::new(common::checkpoint(manifest, seed)).unwrap()))
}

async fn send(app: &Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = send(app, method, uri, body.map(|b| b.to_string())).await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn motion_a(manifest: &DatasetManifest, i: usize) -> Value {
    serde_json::to_value(SequenceFile::new(&manifest.pairs[i].motion_a, &manifest.skeleton)).unwrap()
}

#[tokio::test]
async fn health_and_classes_describe_the_loaded_checkpoint() {
    let m = sbu_named_manifest();
    let app = app(&m, 0);
    let (s, health) = call(&app, "GET", "/health", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(health["status"], "ok");
    let expected_id = common::checkpoint(&m, 0).hash().unwrap();
    assert_eq!(health["checkpoint_id"], expected_id);
    let (s, classes) = call(&app, "GET", "/classes", None).await;
    assert_eq!(s, StatusCode::OK);
    let names: Vec<String> = serde_json::from_value(classes["class_names"].clone()).unwrap();
    assert_eq!(names, ["kick", "push", "shake-hands", "hug", "exchange-objects", "punch"]);
}

#[tokio::test]
async fn empty_label_map_generates_the_neutral_reaction() {
    let m = sbu_named_manifest();
    let app = app(&m, 0);
    let (s, out) = call(&app, "POST", "/synthesize", Some(json!({"motion_a": motion_a(&m, 0)}))).await;
    assert_eq!(s, StatusCode::OK, "{out}");
    assert_eq!(out["label_vector"], json!(vec![0.0; 6]));
    let generator = common::checkpoint(&m, 0).generator().unwrap();
    let direct = generator.generate(&m.pairs[0].motion_a, &LabelVector::zeros(6)).unwrap();
    let got: SequenceFile = serde_json::from_value(out["sequence"].clone()).unwrap();
    assert_eq!(got, SequenceFile::new(&direct, &m.skeleton));
    assert_eq!(got.frames.len(), m.pairs[0].motion_a.frames());
}

#[tokio::test]
async fn label_maps_resolve_prefixes_and_clamp() {
    let m = sbu_named_manifest();
    let app = app(&m, 0);
    let a = motion_a(&m, 1);
    let (s, out) = call(&app, "POST", "/synthesize", Some(json!({"motion_a": a, "label_spec": {"shake": 1.0, "hug": 1.0}}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(out["label_vector"], json!([0.0, 0.0, 1.0, 1.0, 0.0, 0.0]));
    let (_, out) = call(&app, "POST", "/synthesize", Some(json!({"motion_a": a, "label_spec": {"kick": 3.0, "punch": -2.0}}))).await;
    assert_eq!(out["label_vector"], json!([1.0, 0.0, 0.0, 0.0, 0.0, -1.0]));
    let body = json!({"motion_a": a, "label_spec": {"kick": 3.0}, "options": {"clamp_labels": false}});
    let (_, out) = call(&app, "POST", "/synthesize", Some(body)).await;
    assert_eq!(out["label_vector"], json!([3.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
}

#[tokio::test]
async fn unknown_class_is_rejected_with_the_valid_names() {
    let m = sbu_named_manifest();
    let app = app(&m, 0);
    let body = json!({"motion_a": motion_a(&m, 0), "label_spec": {"hug": 1.0, "dance": 1.0}});
    let (s, err) = call(&app, "POST", "/synthesize", Some(body)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["field"], "label_spec.dance");
    let message = err["message"].as_str().unwrap();
    assert!(message.contains("shake-hands") && message.contains("exchange-objects"), "{message}");
}

#[tokio::test]
async fn malformed_requests_name_the_offending_field() {
    let m = sbu_named_manifest();
    let app = app(&m, 0);
    let (s, err) = call(&app, "POST", "/synthesize", Some(json!({"motion_a": motion_a(&m, 0), "label_spec": {"hug": "high"}}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(err["field"], "label_spec.hug");

    let (s, err) = call(&app, "POST", "/synthesize", Some(json!({"motion_a": motion_a(&m, 0), "options": {"seed": -1}}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(err["field"], "options.seed");

    let (s, err) = call(&app, "POST", "/synthesize", Some(json!({"motion_a": motion_a(&m, 0), "labels": {}}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(err["message"].as_str().unwrap().contains("labels"));

    let (s, bytes) = send(&app, "POST", "/synthesize", Some("{\"motion_a\": ".into())).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let err: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(err["error"], "malformed_json");

    let (s, err) = call(&app, "POST", "/synthesize", Some(json!({"label_spec": {}}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["field"], "motion_a");

    let other = common::manifest(2, 1);
    let mut wrong = SequenceFile::new(&other.pairs[0].motion_a, &other.skeleton);
    wrong.frames.iter_mut().for_each(|f| f.truncate(5));
    wrong.skeleton = m.skeleton.clone();
    let (s, err) = call(&app, "POST", "/synthesize", Some(json!({"motion_a": wrong}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["field"], "motion_a");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_identical_requests_return_identical_bodies() {
    let m = sbu_named_manifest();
    let app = app(&m, 0);
    let body = json!({"motion_a": motion_a(&m, 2), "label_spec": {"push": 1.0, "kick": -0.5}, "options": {"seed": 7}}).to_string();
    let tasks: Vec<_> = (0..16)
        .map(|_| {
            let (app, body) = (app.clone(), body.clone());
            tokio::spawn(async move { send(&app, "POST", "/synthesize", Some(body)).await })
        })
        .collect();
    let mut bodies = Vec::new();
    for t in tasks {
        let (s, b) = t.await.unwrap();
        assert_eq!(s, StatusCode::OK);
        bodies.push(b);
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));

    let out: Value = serde_json::from_slice(&bodies[0]).unwrap();
    let id = out["id"].as_str().unwrap();
    let (s, stored) = send(&app, "GET", &format!("/sequences/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(stored, bodies[0]);
    let (s, _) = send(&app, "GET", "/sequences/seq-0000000000000000", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn checkpoint_swap_is_atomic_and_all_or_nothing() {
    let m = sbu_named_manifest();
    let app = app(&m, 0);
    let dir = tempfile::tempdir().unwrap();
    let next = common::checkpoint(&m, 1);
    let next_path = dir.path().join("next.json");
    next.save(&next_path).unwrap();
    let request = json!({"motion_a": motion_a(&m, 0), "label_spec": {"hug": 1.0}});

    let (_, before) = call(&app, "GET", "/health", None).await;
    let (_, first) = call(&app, "POST", "/synthesize", Some(request.clone())).await;
    let (s, swapped) = call(&app, "POST", "/admin/checkpoint", Some(json!({"path": next_path}))).await;
    assert_eq!(s, StatusCode::OK, "{swapped}");
    assert_eq!(swapped["previous_checkpoint_id"], before["checkpoint_id"]);
    assert_eq!(swapped["checkpoint_id"], next.hash().unwrap());
    let (_, after) = call(&app, "GET", "/health", None).await;
    assert_eq!(after["checkpoint_id"], swapped["checkpoint_id"]);

    let (_, second) = call(&app, "POST", "/synthesize", Some(request.clone())).await;
    assert_ne!(first["sequence"], second["sequence"]);
    assert_ne!(first["id"], second["id"]);

    let mut stale = request.clone();
    stale["checkpoint_id"] = before["checkpoint_id"].clone();
    let (s, _) = call(&app, "POST", "/synthesize", Some(stale)).await;
    assert_eq!(s, StatusCode::CONFLICT);

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"format\": \"reactmix-checkpoint\"").unwrap();
    for path in [broken, dir.path().join("missing.json")] {
        let (s, err) = call(&app, "POST", "/admin/checkpoint", Some(json!({"path": path}))).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(err["field"], "path");
    }
    let (_, still) = call(&app, "GET", "/health", None).await;
    assert_eq!(still["checkpoint_id"], swapped["checkpoint_id"]);
}

#[tokio::test]
async fn numeric_failure_returns_a_diagnostic_id() {
    let m = sbu_named_manifest();
    let mut ckpt = common::checkpoint(&m, 0);
    ckpt.generator_params = ckpt.generator_params.map_values(|w| w.map(|_| f64::MAX / 2.0));
    let app = router(AppState::new(Snapshot::new(ckpt).unwrap()));
    let (s, err) = call(&app, "POST", "/synthesize", Some(json!({"motion_a": motion_a(&m, 0)}))).await;
    assert_eq!(s, StatusCode::INTERNAL_SERVER_ERROR);
    assert_eq!(err["error"], "internal");
    assert_eq!(err["diagnostic_id"].as_str().unwrap().len(), 36);
}

#[tokio::test]
async fn manifest_reference_matches_inline_motion() {
    let m = sbu_named_manifest();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("manifest.json");
    m.save(&path).unwrap();
    let app = app(&m, 0);
    let pair = &m.pairs[3];
    let by_ref = json!({"manifest_ref": {"manifest": path, "pair_id": pair.id}, "label_spec": {"kick": 1.0}});
    let inline = json!({"motion_a": motion_a(&m, 3), "label_spec": {"kick": 1.0}});
    let (s, a) = call(&app, "POST", "/synthesize", Some(by_ref)).await;
    assert_eq!(s, StatusCode::OK, "{a}");
    let (_, b) = call(&app, "POST", "/synthesize", Some(inline)).await;
    assert_eq!(a, b);

    let missing = json!({"manifest_ref": {"manifest": path, "pair_id": "nope"}});
    let (s, err) = call(&app, "POST", "/synthesize", Some(missing)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["field"], "manifest_ref.pair_id");
}
