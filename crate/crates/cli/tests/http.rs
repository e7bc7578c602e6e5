mod common;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use common::{assert_interchange, assert_output, workspace};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use vdmn_cli::server::{router, AppState};
use vdmn_cli::ModelRegistry;

fn app_for(dir: &str) -> Router {
    router(AppState::new(ModelRegistry::load_dir(&workspace().join(dir)).unwrap()))
}

fn app() -> Router {
    app_for("corpus")
}

struct Reply {
    status: StatusCode,
    content_type: String,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let res = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = res.status();
    let content_type = res
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default();
    let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply {
        status,
        content_type,
        body,
    }
}

async fn get(app: &Router, uri: &str) -> Reply {
    call(app, Method::GET, uri, None).await
}

async fn post(app: &Router, uri: &str, body: Value) -> Reply {
    call(app, Method::POST, uri, Some(body)).await
}

async fn patch(app: &Router, uri: &str, body: Value) -> Reply {
    call(app, Method::PATCH, uri, Some(body)).await
}

fn root_change(session: &Value) -> (Value, Value) {
    let report = &session["report"];
    let root = report["root"].as_str().unwrap();
    let entry = report["entries"].as_array().unwrap().iter().find(|e| e["id"] == root).unwrap();
    (entry["base"].clone(), entry["new"].clone())
}

#[tokio::test]
async fn lists_models_by_name() {
    let r = get(&app(), "/models").await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_output("model_list", &v);
    assert_eq!(v, json!(["Gross Profit", "ROCE"]));
}

#[tokio::test]
async fn model_detail_carries_interchange_and_diagnostics() {
    let app = app();
    for uri in ["/models/ROCE", "/models/roce"] {
        let r = get(&app, uri).await;
        assert_eq!(r.status, StatusCode::OK, "{uri}");
        let v = r.json();
        assert_output("model_detail", &v);
        assert_interchange(&v["model"]);
        assert_eq!(v["name"], "ROCE");
        assert!(v["diagnostics"].as_array().unwrap().iter().all(|d| d["severity"] == "warning"));
    }
    let gp = get(&app, "/models/Gross%20Profit").await.json();
    assert_eq!(gp["model"]["name"], "Gross Profit");
}

#[tokio::test]
async fn unknown_models_and_sessions_are_404() {
    let app = app();
    for r in [
        get(&app, "/models/Nope").await,
        get(&app, "/models/Nope/svg").await,
        get(&app, "/models/Nope/sensitivity").await,
        post(&app, "/models/Nope/evaluate", json!({})).await,
        post(&app, "/sessions", json!({"model": "Nope"})).await,
        get(&app, "/sessions/0000").await,
        patch(&app, "/sessions/0000/overrides", json!({"Volume": 1})).await,
    ] {
        assert_eq!(r.status, StatusCode::NOT_FOUND);
        let v = r.json();
        assert_output("error", &v);
        assert_eq!(v["error"]["kind"], "not_found");
    }
}

#[tokio::test]
async fn evaluate_uses_recorded_values_and_bindings() {
    let app = app();
    let r = post(&app, "/models/gross_profit/evaluate", json!({})).await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_output("valuation", &v);
    assert_eq!(v["values"]["GP"], 400.0);

    let v = post(&app, "/models/gross_profit/evaluate", json!({"bindings": {"Volume": 110}}))
        .await
        .json();
    assert_eq!(v["values"]["GP"], 500.0);

    let v = post(
        &app,
        "/models/gross_profit/evaluate",
        json!({"bindings": {"Price": 12}, "result_type": "budget"}),
    )
    .await
    .json();
    assert_eq!(v["result_type"], "budget");
    assert_eq!(v["values"]["Price"], 12.0);
}

#[tokio::test]
async fn missing_leaf_binding_is_not_computed() {
    let app = app_for("fixtures/cli");
    let r = post(&app, "/models/GP/evaluate", json!({"bindings": {"Price": 10, "Volume": 100}})).await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_output("valuation", &v);
    assert_eq!(v["values"]["COGS"], json!({"not_computed": "missing_binding"}));
    assert_eq!(v["values"]["GP"], json!({"not_computed": "missing_binding"}));
    assert_eq!(v["values"]["Revenue"], 1000.0);
}

#[tokio::test]
async fn binding_a_computed_indicator_conflicts() {
    let r = post(&app(), "/models/gross_profit/evaluate", json!({"bindings": {"Revenue": 1}})).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let v = r.json();
    assert_output("error", &v);
    assert_eq!(v["error"]["kind"], "conflicting_binding");
}

#[tokio::test]
async fn engine_and_request_errors_are_422() {
    let app = app();
    let r = post(&app, "/models/gross_profit/evaluate", json!({"bindings": {"Ghost": 1}})).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["error"]["kind"], "unknown_indicator");

    let r = get(&app, "/models/gross_profit/sensitivity?epsilon=2").await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["error"]["kind"], "invalid_epsilon");

    let r = post(&app, "/models/gross_profit/evaluate", json!({"bindngs": {}})).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn models_with_validation_errors_are_refused() {
    let app = app_for("fixtures/validator");
    let r = post(&app, "/models/V001_trigger/evaluate", json!({})).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let v = r.json();
    assert_output("error", &v);
    assert_eq!(v["error"]["kind"], "validation");
    assert!(v["diagnostics"].as_array().unwrap().iter().any(|d| d["code"] == "V001"));

    let detail = get(&app, "/models/V001_trigger").await;
    assert_eq!(detail.status, StatusCode::OK);
    assert!(detail.json()["diagnostics"].as_array().unwrap().iter().any(|d| d["severity"] == "error"));
}

#[tokio::test]
async fn identical_requests_get_identical_bodies() {
    let app = app();
    let body = json!({"bindings": {"Volume": 123.5, "Price": 9.75}});
    let a = post(&app, "/models/gross_profit/evaluate", body.clone()).await;
    let b = post(&app, "/models/gross_profit/evaluate", body).await;
    assert_eq!(a.status, StatusCode::OK);
    assert_eq!(a.body, b.body);

    let a = get(&app, "/models/roce/sensitivity").await;
    let b = get(&app, "/models/roce/sensitivity").await;
    assert_eq!(a.body, b.body);
}

#[tokio::test]
async fn sessions_track_overrides() {
    let app = app();
    let r = post(&app, "/sessions", json!({"model": "gross_profit"})).await;
    assert_eq!(r.status, StatusCode::CREATED);
    let session = r.json();
    assert_output("session", &session);
    assert_eq!(session["model"], "Gross Profit");
    assert_eq!(root_change(&session), (json!(400.0), json!(400.0)));
    let id = session["id"].as_str().unwrap();
    let uri = format!("/sessions/{id}/overrides");

    let r = patch(&app, &uri, json!({"Volume": 110})).await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_output("session", &v);
    assert_eq!(root_change(&v), (json!(400.0), json!(500.0)));
    assert_eq!(v["overrides"], json!({"Volume": 110.0}));

    let v = patch(&app, &uri, json!({"Price": 11})).await.json();
    assert_eq!(v["overrides"], json!({"Price": 11.0, "Volume": 110.0}));
    assert_eq!(root_change(&v).1, json!(11.0 * 110.0 - 600.0 - 5.0));

    let v = get(&app, &format!("/sessions/{id}")).await.json();
    assert_eq!(v["overrides"], json!({"Price": 11.0, "Volume": 110.0}));

    let v = patch(&app, &uri, json!({"Price": null, "Volume": null})).await.json();
    assert_eq!(v["overrides"], json!({}));
    assert_eq!(root_change(&v), (json!(400.0), json!(400.0)));
}

#[tokio::test]
async fn rejected_overrides_leave_the_session_alone() {
    let app = app();
    let id = post(&app, "/sessions", json!({"model": "gross_profit"})).await.json()["id"]
        .as_str()
        .unwrap()
        .to_string();
    let uri = format!("/sessions/{id}/overrides");
    patch(&app, &uri, json!({"Volume": 110})).await;

    let r = patch(&app, &uri, json!({"Volume": 90, "Revenue": 5})).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["error"]["kind"], "override_not_a_leaf_driver");

    let v = get(&app, &format!("/sessions/{id}")).await.json();
    assert_eq!(v["overrides"], json!({"Volume": 110.0}));
    assert_eq!(root_change(&v).1, json!(500.0));
}

#[tokio::test]
async fn sessions_accept_base_bindings() {
    let app = app_for("fixtures/cli");
    let r = post(
        &app,
        "/sessions",
        json!({"model": "GP", "bindings": {"Price": 10, "Volume": 100, "COGS": 600}}),
    )
    .await;
    assert_eq!(r.status, StatusCode::CREATED);
    let id = r.json()["id"].as_str().unwrap().to_string();
    let v = patch(&app, &format!("/sessions/{id}/overrides"), json!({"Volume": 110}))
        .await
        .json();
    assert_eq!(root_change(&v), (json!(400.0), json!(500.0)));
}

#[tokio::test]
async fn sensitivity_ranks_drivers() {
    let r = get(&app(), "/models/gross_profit/sensitivity?epsilon=0.001").await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_output("sensitivity", &v);
    assert_eq!(v["epsilon"], 0.001);
    assert_eq!(v["entries"][0]["driver"], "Volume");
    assert!((v["entries"][0]["elasticity"].as_f64().unwrap() - 2.5).abs() < 1e-4);
}

#[tokio::test]
async fn svg_is_served_as_an_image() {
    let r = get(&app(), "/models/ROCE/svg").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.content_type, "image/svg+xml");
    let text = String::from_utf8(r.body).unwrap();
    assert!(text.starts_with("<svg"));
    assert!(text.trim_end().ends_with("</svg>"));
}

#[tokio::test]
async fn unknown_routes_are_404() {
    let r = get(&app(), "/nothing/here").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}
