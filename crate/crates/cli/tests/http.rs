use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use contextdb::bridge::BackingMap;
use contextdb_cli::api::{AppState, Snapshot};
use contextdb_cli::server::router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn state() -> Arc<AppState> {
    let backing = BackingMap::load(testkit::fixture("star/backing.json")).unwrap();
    Arc::new(AppState::new(Snapshot::new(testkit::inv7(), Some(backing))))
}

async fn call(st: &Arc<AppState>, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = router(st.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

fn parse(body: &str) -> Value {
    serde_json::from_str(body).unwrap()
}

#[tokio::test]
async fn regional_totals() {
    let st = state();
    let (status, body) = call(&st, "POST", "/analytic", Some(json!({"grouping": "r o b", "measuring": "q", "op": "sum"}))).await;
    assert_eq!(status, StatusCode::OK);
    let v = parse(&body);
    assert_eq!(v["rows"], json!([["North", 300], ["South", 1200]]));
    assert_eq!(v["schema"]["columns"][0]["name"], "sum(Qty)");
}

#[tokio::test]
async fn analytic_with_sql_restriction_and_combination() {
    let st = state();
    let (_, body) = call(&st, "POST", "/analytic", Some(json!({"grouping": "b", "measuring": "q", "op": "sum", "sql": true}))).await;
    assert_eq!(parse(&body)["sql"], testkit::read_fixture("golden/b_q_sum.sql"));
    let (_, body) = call(
        &st,
        "POST",
        "/analytic",
        Some(json!({"grouping": "b", "measuring": "q", "op": "sum", "restrictions": "[ans >= 600]"})),
    )
    .await;
    assert_eq!(parse(&body)["rows"], json!([["Branch-2", 600], ["Branch-3", 600]]));
    let share = json!({
        "grouping": "b", "measuring": "q", "op": "sum",
        "combine": {"op": "divide", "with": {"grouping": "tau(Inv)", "measuring": "q", "op": "sum"}}
    });
    let (status, body) = call(&st, "POST", "/analytic", Some(share)).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(parse(&body)["rows"], json!([["Branch-1", 0.2], ["Branch-2", 0.4], ["Branch-3", 0.4]]));
}

#[tokio::test]
async fn aggregates_follow_the_domain() {
    let st = state();
    let (_, body) = call(&st, "GET", "/aggregates?node=Branch", None).await;
    assert_eq!(parse(&body), json!(["count", "countd"]));
    let (_, body) = call(&st, "GET", "/aggregates?node=Qty", None).await;
    assert_eq!(parse(&body), json!(["sum", "min", "max", "count", "countd", "avg"]));
    let (status, body) = call(&st, "GET", "/aggregates?node=Nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(parse(&body)["code"], "unknown-node");
    let (status, _) = call(&st, "GET", "/aggregates", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn proposals_for_regions() {
    let ctx = testkit::load_ctx("supply.ctx");
    let st = Arc::new(AppState::new(Snapshot::new(testkit::load_db(&ctx, "supply_consistent.db"), None)));
    let (status, body) = call(&st, "POST", "/proposals", Some(json!({"targets": ["Region"]}))).await;
    assert_eq!(status, StatusCode::OK);
    let v = parse(&body);
    let inv = v["proposals"].as_array().unwrap().iter().find(|p| p["key"] == "Inv").unwrap();
    assert_eq!(inv["expressions"]["Region"], json!(["r o b", "h o s o p"]));
    let (_, body) = call(&st, "POST", "/proposals", Some(json!({"targets": ["Date", "Region", "Qty"]}))).await;
    let keys: Vec<Value> = parse(&body)["proposals"].as_array().unwrap().iter().map(|p| p["key"].clone()).collect();
    assert_eq!(keys, vec![json!("Inv")]);
    let (status, body) = call(&st, "POST", "/proposals", Some(json!({"targets": ["Inv"]}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(parse(&body)["code"], "no-candidate-key");
}

#[tokio::test]
async fn traversal_tables() {
    let st = state();
    let (status, body) = call(&st, "POST", "/traversal", Some(json!({"query": "Q(Inv; b; q)"}))).await;
    assert_eq!(status, StatusCode::OK);
    let v = parse(&body);
    assert_eq!(v["rows"].as_array().unwrap().len(), 7);
    assert_eq!(v["rows"][0], json!([1, "Branch-1", 200]));
}

#[tokio::test]
async fn errors_carry_engine_codes() {
    let st = state();
    let (status, body) = call(&st, "POST", "/analytic", Some(json!({"grouping": "zz", "measuring": "q", "op": "sum"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(parse(&body)["code"], "unknown-edge");
    let (status, body) = call(&st, "POST", "/analytic", Some(json!({"grouping": "q", "measuring": "b", "op": "sum"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(parse(&body)["code"], "op-not-applicable");
    let (status, body) = call(&st, "POST", "/traversal", Some(json!({"nope": 1}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(parse(&body)["code"], "bad-request");
    let (status, _) = call(&st, "POST", "/analytic", Some(json!({"grouping": "b o", "measuring": "q", "op": "sum"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn context_and_health() {
    let st = state();
    let (_, body) = call(&st, "GET", "/context", None).await;
    let v = parse(&body);
    assert_eq!(v["root"], "Inv");
    assert_eq!(v["edges"].as_array().unwrap().len(), 5);
    let (_, body) = call(&st, "GET", "/health", None).await;
    assert_eq!(parse(&body)["status"], "ok");
}

#[tokio::test]
async fn swapping_snapshots_keeps_old_handles_valid() {
    let st = state();
    let old = st.snapshot();
    let (_, before) = call(&st, "GET", "/health", None).await;
    st.swap(Snapshot::new(testkit::supply(), None));
    assert_eq!(old.db.context().plain_edges().len(), 5);
    let (_, after) = call(&st, "GET", "/health", None).await;
    assert_ne!(parse(&before)["snapshot"], parse(&after)["snapshot"]);
    assert_eq!(parse(&before)["snapshot"], json!(old.id));
}

#[tokio::test]
async fn http_and_cli_answers_are_byte_identical() {
    let st = state();
    let cases = [
        (json!({"grouping": "r o b", "measuring": "q", "op": "sum"}), vec!["r o b", "q", "sum"]),
        (json!({"grouping": "b & p", "measuring": "id(Inv)", "op": "count"}), vec!["b & p", "id(Inv)", "count"]),
        (json!({"grouping": "tau(Inv)", "measuring": "q", "op": "avg"}), vec!["tau(Inv)", "q", "avg"]),
    ];
    for (req, args) in cases {
        let (_, body) = call(&st, "POST", "/analytic", Some(req)).await;
        let ctx = testkit::fixture("inv.ctx");
        let db = testkit::fixture("inv7.db");
        let o = std::process::Command::new(env!("CARGO_BIN_EXE_contextdb"))
            .arg("analytic")
            .arg(&ctx)
            .arg(&db)
            .args(&args)
            .arg("--json")
            .output()
            .unwrap();
        assert_eq!(String::from_utf8(o.stdout).unwrap(), format!("{body}\n"));
    }
    let (_, body) = call(&st, "POST", "/traversal", Some(json!({"query": "Q(Inv; r o b; q)", "mode": "alias"}))).await;
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_contextdb"))
        .args(["query", testkit::fixture("inv.ctx").to_str().unwrap(), testkit::fixture("inv7.db").to_str().unwrap(), "Q(Inv; r o b; q)", "--json"])
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), format!("{body}\n"));
}
