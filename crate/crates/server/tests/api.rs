use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use confirmability::ingest::fixtures::{expedition3_scenario, EXPEDITION3_SCENARIO};
use confirmability::ingest::ScenarioStore;
use confirmability_server::{router, AppState};

struct Harness {
    _dir: tempfile::TempDir,
    app: axum::Router,
}

fn harness() -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let store = ScenarioStore::open(dir.path()).unwrap();
    Harness {
        app: router(AppState::new(store)),
        _dir: dir,
    }
}

async fn send(app: &axum::Router, method: Method, uri: &str, body: Option<String>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn post(app: &axum::Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let (s, b) = send(app, Method::POST, uri, Some(body.to_string())).await;
    (s, serde_json::from_slice(&b).unwrap())
}

fn expedition3_sim() -> Value {
    json!({
        "fixed": { "alpha_common": 45.6, "beta_rx": -6.17 / 80.0, "beta_c": -7.17 / 80.0 },
        "config": {
            "visit_weeks": [0, 12, 28, 40, 52, 64, 80],
            "n_rx": 1057, "n_c": 1072,
            "etz": { "var_z": 53.802, "var_e": 10.778, "var_traj": 70.809 },
            "seed": 3, "n_reps": 20
        }
    })
}

#[tokio::test]
async fn decompose_table5() {
    let h = harness();
    let (s, v) = post(
        &h.app,
        "/v1/etz/decompose",
        json!({"var_baseline": 64.580, "var_milestone": 135.389, "var_change": 92.365}),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert!((v["var_z"].as_f64().unwrap() - 53.802).abs() < 1e-3);
    assert!((v["var_e"].as_f64().unwrap() - 10.778).abs() < 1e-3);
    assert!((v["var_traj"].as_f64().unwrap() - 70.809).abs() < 1e-3);
}

#[tokio::test]
async fn decompose_errors() {
    let h = harness();
    let (s, v) = post(
        &h.app,
        "/v1/etz/decompose",
        json!({"var_baseline": 60.0, "var_milestone": 50.0, "var_change": 200.0}),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "DecompositionError");
    assert_eq!(v["field_path"], "var_z");

    let (s, v) = post(&h.app, "/v1/etz/decompose", json!({"var_baseline": 60.0, "var_milestone": "x"})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "ParseError");
    assert_eq!(v["field_path"], "var_milestone");

    let (s, b) = send(&h.app, Method::POST, "/v1/etz/decompose", Some("{not json".into())).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_slice(&b).unwrap();
    assert_eq!(v["code"], "ParseError");

    let (s, v) = post(
        &h.app,
        "/v1/etz/decompose",
        json!({"var_baseline": -1.0, "var_milestone": 1.0, "var_change": 1.0}),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "DomainError");
}

#[tokio::test]
async fn transition_and_designation() {
    let h = harness();
    let body = json!({
        "e1": {"theta_hat": 3.5, "sigma": 1.0},
        "e2": {"theta_hat": 3.0, "sigma": 1.0},
        "config": {"alpha": 0.05, "c_md": 0.5, "rho": 0.5}
    });
    let (s, v) = post(&h.app, "/v1/confset/transition", body.clone()).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["transition"], true);
    assert!((v["joint_bound"].as_f64().unwrap() - 1.9163319447).abs() < 1e-6);

    let (s, v) = post(&h.app, "/v1/confset/designate", body).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert!(v["outcome"]["verdict"].is_string());

    let (s, v) = post(
        &h.app,
        "/v1/confset/transition",
        json!({"e1": {"theta_hat": 1.0, "sigma": 1.0}, "e2": {"theta_hat": 1.0, "sigma": 1.0},
               "config": {"alpha": 0.7, "c_md": 0.5}}),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
    assert_eq!(v["code"], "DomainError");
}

#[tokio::test]
async fn assess_inline_and_stored() {
    let h = harness();
    let scenario: Value = serde_json::from_str(EXPEDITION3_SCENARIO).unwrap();
    let (s, v) = post(&h.app, "/v1/cbq/assess", json!({ "scenario": scenario })).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert!((v["cbq"].as_f64().unwrap() + 0.10).abs() < 0.01);
    assert_eq!(v["transition_recommended"], false);
    assert_eq!(v["quantile_histogram"].as_array().unwrap().len(), 50);

    let (s, _) = send(&h.app, Method::PUT, "/v1/scenarios/expedition3-iadl", Some(scenario.to_string())).await;
    assert_eq!(s, StatusCode::CREATED);
    let (s, stored) = post(&h.app, "/v1/cbq/assess", json!({ "scenario_id": "expedition3-iadl" })).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(stored, v);

    let (s, v) = post(&h.app, "/v1/cbq/assess", json!({})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "ParseError");

    let mut broken = scenario.clone();
    broken["study"]["arms"]["rx"].as_object_mut().unwrap().remove("se_change");
    let (s, v) = post(&h.app, "/v1/cbq/assess", json!({ "scenario": broken })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["field_path"], "scenario.study.arms.rx.se_change");

    let mut huge = scenario;
    huge["design"]["reps"] = json!(20_000_000u64);
    let (s, v) = post(&h.app, "/v1/cbq/assess", json!({ "scenario": huge })).await;
    assert_eq!(s, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(v["code"], "TooLarge");
}

#[tokio::test]
async fn scenario_crud() {
    let h = harness();
    let (s, v) = send(&h.app, Method::GET, "/v1/scenarios/missing", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let v: Value = serde_json::from_slice(&v).unwrap();
    assert_eq!(v["code"], "NotFound");

    let record = expedition3_scenario();
    let body = serde_json::to_string(&record).unwrap();
    let (s, _) = send(&h.app, Method::PUT, "/v1/scenarios/expedition3-iadl", Some(body.clone())).await;
    assert_eq!(s, StatusCode::CREATED);
    let (s, v) = send(&h.app, Method::PUT, "/v1/scenarios/expedition3-iadl", Some(body.clone())).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(serde_json::from_slice::<Value>(&v).unwrap()["code"], "Conflict");
    let (s, v) = send(&h.app, Method::PUT, "/v1/scenarios/other", Some(body)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(serde_json::from_slice::<Value>(&v).unwrap()["field_path"], "id");

    let (s, v) = send(&h.app, Method::GET, "/v1/scenarios/expedition3-iadl", None).await;
    assert_eq!(s, StatusCode::OK);
    let loaded: confirmability::ingest::ScenarioRecord = serde_json::from_slice(&v).unwrap();
    assert_eq!(loaded, record);

    let (s, v) = send(&h.app, Method::GET, "/v1/scenarios", None).await;
    assert_eq!(s, StatusCode::OK);
    let list: Vec<Value> = serde_json::from_slice(&v).unwrap();
    assert_eq!(list.len(), 1);
    assert_eq!(list[0]["id"], "expedition3-iadl");
}

#[tokio::test]
async fn simulation_endpoints() {
    let h = harness();
    let mut body = expedition3_sim();
    body["rep_index"] = json!(0);
    let (s, v) = post(&h.app, "/v1/sim/profiles", body.clone()).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 14);
    assert_eq!(rows[0]["week"], 0.0);
    assert_eq!(rows[0]["arm"], "rx");

    let (s, v) = post(&h.app, "/v1/sim/replicability", expedition3_sim()).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["per_rep"].as_array().unwrap().len(), 20);
    assert!((v["mean_separation"].as_f64().unwrap() - 1.0).abs() < 0.5);

    // No server-side entropy: the seed is mandatory.
    let mut unseeded = expedition3_sim();
    unseeded["config"].as_object_mut().unwrap().remove("seed");
    let (s, v) = post(&h.app, "/v1/sim/replicability", unseeded).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["field_path"], "config");

    let mut big = expedition3_sim();
    big["config"]["n_reps"] = json!(1000);
    let (s, v) = post(&h.app, "/v1/sim/replicability", big).await;
    assert_eq!(s, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(v["code"], "TooLarge");
}

#[tokio::test]
async fn identical_requests_identical_bytes() {
    let h = harness();
    let scenario: Value = serde_json::from_str(EXPEDITION3_SCENARIO).unwrap();
    for (uri, body) in [
        ("/v1/cbq/assess", json!({ "scenario": scenario })),
        ("/v1/sim/replicability", expedition3_sim()),
    ] {
        let a = send(&h.app, Method::POST, uri, Some(body.to_string())).await;
        let b = send(&h.app, Method::POST, uri, Some(body.to_string())).await;
        assert_eq!(a.0, StatusCode::OK);
        assert_eq!(a, b, "{uri}");
    }
}
