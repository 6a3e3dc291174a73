mod support;

use adprov::holder::{MemoryProvider, ProvenanceHolder};
use adprov::prov::{check_dot, parse_prov_json, parse_provn};
use adprov::service::INTEGRITY_HEADER;
use support::*;

fn app() -> (Http, ProvenanceHolder) {
    let holder = ProvenanceHolder::new(Box::new(MemoryProvider::new("default")));
    (Http::new(holder.clone()), holder)
}

fn record_count(holder: &ProvenanceHolder) -> usize {
    holder.providers().iter().map(|p| p.record_count).sum()
}

#[test]
fn health() {
    let (http, _) = app();
    let reply = http.get("/health");
    assert_eq!(reply.status, 200);
    assert_eq!(reply.json()["status"], "ok");
}

#[test]
fn collect_then_export_in_every_format() {
    let (http, _) = app();
    let reply = http.post("/collect/xes", SHOPPING_XES);
    assert_eq!(reply.status, 200, "{}", reply.body);
    let report = reply.json();
    assert_eq!(report["record_ids"].as_array().unwrap().len(), 4);
    assert_eq!(report["change_count"], 1);

    let provn = http.get("/instances/shopping-1/provenance");
    assert_eq!(provn.status, 200);
    assert_eq!(provn.header(INTEGRITY_HEADER), Some("Valid"));
    assert!(provn.header("content-type").unwrap().starts_with("text/provenance-notation"));
    let doc = parse_provn(&provn.body).unwrap();
    assert_eq!(doc.activities.len(), 4);

    let json = http.get("/instances/shopping-1/provenance?format=prov-json");
    assert_eq!(json.status, 200);
    assert_eq!(parse_prov_json(&json.body).unwrap(), doc);

    let dot = http.get("/instances/shopping-1/provenance?format=dot");
    assert_eq!(dot.status, 200);
    assert_eq!(check_dot(&dot.body).unwrap().nodes.len(), doc.node_count());

    assert_eq!(http.get("/instances/shopping-1/provenance?format=svg").status, 400);
}

#[test]
fn instance_ids_are_percent_decoded() {
    let (http, _) = app();
    let xes = SHOPPING_XES.replace("shopping-1", "case 7/a");
    assert_eq!(http.post("/collect/xes", &xes).status, 200);
    let reply = http.get("/instances/case%207%2Fa/changes");
    assert_eq!(reply.status, 200, "{}", reply.body);
    assert_eq!(reply.json().as_array().unwrap().len(), 1);
}

#[test]
fn changes_are_listed() {
    let (http, _) = app();
    http.post("/collect/xes", SHOPPING_XES);
    let reply = http.get("/instances/shopping-1/changes");
    assert_eq!(reply.status, 200);
    assert_eq!(reply.header(INTEGRITY_HEADER), Some("Valid"));
    let changes = reply.json();
    assert_eq!(changes[0]["change_type"], "insert");
    assert_eq!(changes[0]["target_activity"], "Go to cart");
}

#[test]
fn error_statuses() {
    let (http, holder) = app();
    http.post("/collect/xes", SHOPPING_XES);
    let before = record_count(&holder);

    // adaptation rule broken: change recorded after the execution
    let late = SHOPPING_XES.replace("2024-05-01T10:02:00.000Z", "2024-05-01T11:00:00.000Z");
    assert_ne!(late, SHOPPING_XES);
    let reply = http.post("/collect/xes", &late);
    assert_eq!(reply.status, 422, "{}", reply.body);
    assert_eq!(reply.json()["code"], "validation_failed");
    assert!(reply.json()["violations"].as_array().unwrap().iter().any(|v| v["rule"] == "CHANGE_AFTER_EXECUTION"));

    let reply = http.post("/collect/xes", "<log><trace>");
    assert_eq!(reply.status, 400);
    assert_eq!(reply.json()["code"], "malformed_xes");

    assert_eq!(http.post("/collect/xes?provider=nope", SHOPPING_XES).status, 404);
    assert_eq!(http.post("/collect/xes?detect=true", SHOPPING_XES).status, 400);
    assert_eq!(http.post("/collect/xes?detect=true&model=ffff", SHOPPING_XES).status, 404);
    assert_eq!(http.get("/instances/nobody/provenance").status, 404);
    assert_eq!(http.get("/instances/shopping-1/changes?provider=nope").status, 404);

    assert_eq!(record_count(&holder), before);
}

#[test]
fn detection_through_the_api() {
    let (http, _) = app();
    let reply = http.post("/models", SHOPPING_MODEL);
    assert_eq!(reply.status, 201, "{}", reply.body);
    let model = reply.json();
    assert_eq!(model["name"], "Simple online shopping");
    let id = model["model_id"].as_str().unwrap().to_string();
    assert_eq!(http.post("/models", SHOPPING_MODEL).json()["model_id"], id.as_str());

    let reply = http.post(&format!("/collect/xes?detect=true&model={id}"), SHOPPING_PLAIN_XES);
    assert_eq!(reply.status, 200, "{}", reply.body);
    assert_eq!(reply.json()["change_count"], 1);
    let changes = http.get("/instances/shopping-1/changes").json();
    assert_eq!(changes[0]["target_activity"], "Go to cart");
    assert_eq!(changes[0]["position"]["kind"], "after_activity");
    assert_eq!(changes[0]["position"]["anchor"], "Add item to cart");
}

#[test]
fn bad_models_are_rejected() {
    let (http, _) = app();
    assert_eq!(http.post("/models", "{not json").status, 400);
    let cyclic = r#"{"name":"c","activities":["A","B"],"edges":[["A","B"],["B","A"]],"start":"A","end":"B"}"#;
    let reply = http.post("/models", cyclic);
    assert_eq!(reply.status, 422);
    assert_eq!(reply.json()["code"], "invalid_model");
}

#[test]
fn tampered_store_answers_409() {
    let chain = random_chain(&mut rng(3), 6);
    let mut broken = chain.clone();
    broken[2] = corrupt(&chain[2], "payload");
    let instance = broken[0].instance_id.clone();
    let tampered_id = broken[2].record_id;
    let holder = ProvenanceHolder::new(Box::new(MemoryProvider::from_records("default", broken)));
    let http = Http::new(holder);
    let reply = http.get(&format!("/instances/{instance}/provenance"));
    assert_eq!(reply.status, 409);
    let body = reply.json();
    assert_eq!(body["code"], "store_tampered");
    assert_eq!(body["record_id"], tampered_id.to_string());
    assert!(reply.header(INTEGRITY_HEADER).is_none());
}

#[test]
fn providers_and_migration() {
    let dir = tempfile::tempdir().unwrap();
    let mut holder = ProvenanceHolder::new(Box::new(MemoryProvider::new("default")));
    holder
        .add_provider(Box::new(adprov::holder::FileProvider::open("disk", dir.path().join("disk.jsonl")).unwrap()))
        .unwrap();
    let http = Http::new(holder);
    http.post("/collect/xes", SHOPPING_XES);

    let listed = http.get("/providers").json();
    assert_eq!(listed[0]["provider_id"], "default");
    assert_eq!(listed[0]["record_count"], 4);
    assert_eq!(listed[1]["storage_kind"], "AppendOnlyFile");

    let reply = http.post("/migrate", r#"{"from":"default","to":"disk"}"#);
    assert_eq!(reply.status, 200, "{}", reply.body);
    assert_eq!(reply.json()["migrated"], 4);
    let again = http.post("/migrate", r#"{"from":"default","to":"disk"}"#);
    assert_eq!(again.status, 409);
    assert_eq!(again.json()["code"], "destination_not_empty");
    assert_eq!(http.post("/migrate", r#"{"from":"default"}"#).status, 400);

    let a = http.get("/instances/shopping-1/provenance").body;
    let b = http.get("/instances/shopping-1/provenance?provider=disk").body;
    assert_eq!(a, b);
}
