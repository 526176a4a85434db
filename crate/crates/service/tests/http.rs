use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use incube::codebook::CodebookTables;
use incube::cube::{CellQuery, Snapshot};
use incube::ingest::{generate_synthetic, GeneratorProfile, Incident};
use incube_service::{answer_query, router, AppState, JobStatus};
use serde_json::{json, Value};
use tower::ServiceExt;

fn tables() -> &'static CodebookTables {
    CodebookTables::bundled()
}

fn fixture() -> Snapshot {
    let corpus = generate_synthetic(7, 500, &GeneratorProfile::default(), tables()).unwrap();
    Snapshot::build(corpus, tables()).unwrap()
}

async fn call(state: &AppState, method: &str, uri: &str, body: &str) -> (StatusCode, Vec<u8>) {
    let request = Request::builder().method(method).uri(uri).body(Body::from(body.to_string())).unwrap();
    let response = router(state.clone()).oneshot(request).await.unwrap();
    let status = response.status();
    (status, response.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn parse(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

#[tokio::test]
async fn schema_lists_hierarchies() {
    let snapshot = fixture();
    let state = AppState::new(tables(), Some(snapshot.clone()));
    let (status, body) = call(&state, "GET", "/schema", "").await;
    assert_eq!(status, StatusCode::OK);
    let schema = parse(&body);
    let names: Vec<&str> = schema["hierarchies"].as_array().unwrap().iter().map(|h| h["name"].as_str().unwrap()).collect();
    assert_eq!(&names[..6], ["time", "space", "attack", "target", "weapon", "perpetrator"]);
    let space = &schema["hierarchies"][1]["levels"];
    let levels: Vec<&str> = space.as_array().unwrap().iter().map(|l| l["name"].as_str().unwrap()).collect();
    assert_eq!(levels, ["region", "country", "provstate", "city"]);
    for (h, dim) in schema["hierarchies"].as_array().unwrap().iter().zip(snapshot.table.dims()) {
        for (l, col) in h["levels"].as_array().unwrap().iter().zip(&dim.levels) {
            assert_eq!(l["members"].as_u64().unwrap() as usize, col.dictionary.len());
        }
    }
}

#[tokio::test]
async fn no_cube_is_503() {
    let state = AppState::new(tables(), None);
    assert_eq!(call(&state, "GET", "/schema", "").await.0, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(call(&state, "POST", "/query", "{}").await.0, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn query_matches_library_bytes() {
    let snapshot = fixture();
    let state = AppState::new(tables(), Some(snapshot.clone()));
    let body = r#"{"group_by":[{"hierarchy":"space","depth":1}],"measures":["incident_count","nkill"]}"#;
    let (status, bytes) = call(&state, "POST", "/query", body).await;
    assert_eq!(status, StatusCode::OK);
    let q: CellQuery = serde_json::from_str(body).unwrap();
    let expected = serde_json::to_vec(&answer_query(&snapshot, &q).unwrap()).unwrap();
    assert_eq!(bytes, expected);
    let value = parse(&bytes);
    let sum: u64 = value["cells"].as_array().unwrap().iter().map(|c| c["values"]["incident_count"]["sum"].as_u64().unwrap()).sum();
    assert_eq!(sum, value["total"].as_u64().unwrap());
    assert_eq!(call(&state, "POST", "/query", body).await.1, bytes);
}

#[tokio::test]
async fn query_errors() {
    let state = AppState::new(tables(), Some(fixture()));
    assert_eq!(call(&state, "POST", "/query", r#"{"measures":["foo"]}"#).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(call(&state, "POST", "/query", r#"{"group_by":[{"hierarchy":"colour"}]}"#).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    let bad_member = r#"{"filters":[{"dim":"space.country","members":["Atlantis"]}]}"#;
    assert_eq!(call(&state, "POST", "/query", bad_member).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(call(&state, "POST", "/query", "{not json").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&state, "POST", "/query", r#"{"groupby":[]}"#).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn empty_group_by_is_grand_total() {
    let state = AppState::new(tables(), Some(fixture()));
    let value = parse(&call(&state, "POST", "/query", "{}").await.1);
    assert_eq!(value["cells"].as_array().unwrap().len(), 1);
    assert_eq!(value["total"], 500);
    assert_eq!(value["query"]["measures"], json!(["incident_count"]));
}

fn rule_fixture() -> Snapshot {
    let mk = |attacks: [Option<u16>; 3]| Incident { country: 92, attack_types: attacks, ..Incident::default() };
    let incidents = vec![
        mk([Some(1), Some(2), None]),
        mk([Some(1), Some(2), None]),
        mk([Some(1), Some(3), None]),
        mk([Some(2), Some(3), None]),
    ];
    Snapshot::build(incidents, tables()).unwrap()
}

#[tokio::test]
async fn rules_mirror_the_library() {
    let state = AppState::new(tables(), Some(rule_fixture()));
    let body = r#"{"min_support":0.5,"min_confidence":0.6,"items":["attack"]}"#;
    let (status, bytes) = call(&state, "POST", "/mine/rules", body).await;
    assert_eq!(status, StatusCode::OK);
    let rules = parse(&bytes)["rules"].clone();
    assert_eq!(rules.as_array().unwrap().len(), 2);
    assert_eq!(rules[0]["antecedent"], json!(["attack=Armed Assault"]));
    assert_eq!(rules[0]["consequent"], json!(["attack=Assassination"]));
    assert_eq!(rules[1]["antecedent"], json!(["attack=Assassination"]));
    let bad = r#"{"min_support":0,"min_confidence":0.6}"#;
    assert_eq!(call(&state, "POST", "/mine/rules", bad).await.0, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn sequences_and_outliers() {
    let state = AppState::new(tables(), Some(fixture()));
    let (status, bytes) = call(&state, "POST", "/mine/sequences", r#"{"min_support":3}"#).await;
    assert_eq!(status, StatusCode::OK);
    assert!(parse(&bytes)["entities"].as_u64().unwrap() > 0);
    assert_eq!(call(&state, "POST", "/mine/sequences", r#"{"min_support":0}"#).await.0, StatusCode::UNPROCESSABLE_ENTITY);

    let (status, bytes) = call(&state, "POST", "/mine/outliers", r#"{"series":[4,4,4,4],"threshold":3}"#).await;
    assert_eq!(status, StatusCode::OK);
    assert!(parse(&bytes)["reports"].as_array().unwrap().iter().all(|r| r["flagged"] == false));
    let q = r#"{"query":{"group_by":[{"hierarchy":"time","depth":1}]},"measure":"nkill","threshold":3}"#;
    let (status, bytes) = call(&state, "POST", "/mine/outliers", q).await;
    assert_eq!(status, StatusCode::OK);
    assert!(!parse(&bytes)["reports"].as_array().unwrap().is_empty());
    assert_eq!(call(&state, "POST", "/mine/outliers", r#"{"series":[1,2]}"#).await.0, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn async_jobs_poll_to_completion() {
    let state = AppState::new(tables(), Some(rule_fixture()));
    let body = r#"{"min_support":0.5,"min_confidence":0.6,"items":["attack"],"async":true}"#;
    let (status, bytes) = call(&state, "POST", "/mine/rules", body).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let id = parse(&bytes)["job_id"].as_u64().unwrap();
    let mut result = None;
    for _ in 0..200 {
        let (status, bytes) = call(&state, "GET", &format!("/jobs/{id}"), "").await;
        assert_eq!(status, StatusCode::OK);
        let v = parse(&bytes);
        if v["status"] == "done" {
            result = Some(v["result"].clone());
            break;
        }
        tokio::time::sleep(std::time::Duration::from_millis(10)).await;
    }
    let inline = body.replace(r#","async":true"#, "");
    let expected = parse(&call(&state, "POST", "/mine/rules", &inline).await.1);
    assert_eq!(result.unwrap(), expected);
    assert!(matches!(state.job(id), Some(JobStatus::Done { .. })));
    assert_eq!(call(&state, "GET", "/jobs/999", "").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn replace_swaps_snapshot() {
    let state = AppState::new(tables(), Some(fixture()));
    let before = state.snapshot().unwrap();
    state.replace(rule_fixture());
    assert_eq!(before.table.rows(), 500);
    assert_eq!(parse(&call(&state, "POST", "/query", "{}").await.1)["total"], 4);
}
