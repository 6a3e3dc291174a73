mod support;

use std::path::Path;

use adprov::cli::{run, EXIT_INTEGRITY, EXIT_NOT_FOUND, EXIT_OK, EXIT_VALIDATION};
use adprov::prov::{check_dot, parse_prov_json, parse_provn};
use support::*;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn adprov(store: &Path, args: &[&str]) -> Out {
    let mut argv = vec!["adprov".to_string(), "--store".into(), store.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    Out {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn ingest_reports_records_and_changes() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let log = write(dir.path(), "shop.xes", SHOPPING_XES);
    let out = adprov(&store, &["ingest", &log]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[..4].iter().all(|l| uuid::Uuid::parse_str(l).is_ok()));
    assert_eq!(lines[4], "4 records, 1 change");
    assert!(store.join("default.jsonl").exists());
}

#[test]
fn empty_log_ingests_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let log = write(dir.path(), "empty.xes", "<log xes.version=\"2.0\"/>");
    let out = adprov(&dir.path().join("s"), &["ingest", &log]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert_eq!(out.stdout, "0 records\n");
}

#[test]
fn detect_matches_explicit_annotation() {
    let dir = tempfile::tempdir().unwrap();
    let plain = write(dir.path(), "plain.xes", SHOPPING_PLAIN_XES);
    let model = write(dir.path(), "model.json", SHOPPING_MODEL);
    let out = adprov(&dir.path().join("s"), &["ingest", &plain, "--detect", "--model", &model]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert!(out.stdout.ends_with("4 records, 1 change\n"));

    let explicit = write(dir.path(), "shop.xes", SHOPPING_XES);
    adprov(&dir.path().join("t"), &["ingest", &explicit]);
    let derived = adprov(&dir.path().join("s"), &["changes", SHOPPING_INSTANCE]).stdout;
    let annotated = adprov(&dir.path().join("t"), &["changes", SHOPPING_INSTANCE]).stdout;
    let facets = |s: &str| s.lines().map(|l| l.split(" by ").next().unwrap().to_string()).collect::<Vec<_>>();
    assert_eq!(facets(&derived), facets(&annotated));
    assert_eq!(derived.lines().count(), 1);
}

#[test]
fn detect_needs_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let plain = write(dir.path(), "plain.xes", SHOPPING_PLAIN_XES);
    let out = adprov(&dir.path().join("s"), &["ingest", &plain, "--detect"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("--model"));
}

#[test]
fn export_formats() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s");
    adprov(&store, &["ingest", &write(dir.path(), "shop.xes", SHOPPING_XES)]);

    let provn = adprov(&store, &["export", SHOPPING_INSTANCE]);
    assert_eq!(provn.code, EXIT_OK);
    let doc = parse_provn(&provn.stdout).unwrap();
    assert_eq!(doc.activities.len(), 4);

    let json = adprov(&store, &["export", SHOPPING_INSTANCE, "--format", "prov-json"]);
    assert_eq!(parse_prov_json(&json.stdout).unwrap(), doc);

    let target = dir.path().join("graph.dot");
    let dot = adprov(&store, &["export", SHOPPING_INSTANCE, "--format", "dot", "--out", target.to_str().unwrap()]);
    assert_eq!(dot.code, EXIT_OK);
    assert!(dot.stdout.is_empty());
    check_dot(&std::fs::read_to_string(target).unwrap()).unwrap();

    assert_eq!(adprov(&store, &["export", "missing"]).code, EXIT_NOT_FOUND);
}

#[test]
fn invalid_log_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s");
    let late = SHOPPING_XES.replace("2024-05-01T10:02:00.000Z", "2024-05-01T11:00:00.000Z");
    let out = adprov(&store, &["ingest", &write(dir.path(), "late.xes", &late)]);
    assert_eq!(out.code, EXIT_VALIDATION);
    assert!(out.stderr.contains("CHANGE_AFTER_EXECUTION"), "{}", out.stderr);
    assert_eq!(adprov(&store, &["ingest", "/no/such/file.xes"]).code, EXIT_NOT_FOUND);
}

#[test]
fn validate_and_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s");
    adprov(&store, &["ingest", &write(dir.path(), "shop.xes", SHOPPING_XES)]);
    let out = adprov(&store, &["validate"]);
    assert_eq!((out.code, out.stdout.as_str()), (EXIT_OK, "Valid\n"));

    let path = store.join("default.jsonl");
    let text = std::fs::read_to_string(&path).unwrap();
    let second = text.lines().nth(1).unwrap();
    let id = second[14..50].to_string();
    std::fs::write(&path, text.replacen("Go to cart", "Go to kart", 1)).unwrap();

    let out = adprov(&store, &["validate"]);
    assert_eq!(out.code, EXIT_INTEGRITY);
    assert_eq!(out.stdout, format!("Tampered at {id}\n"));
    assert_eq!(adprov(&store, &["export", SHOPPING_INSTANCE]).code, EXIT_INTEGRITY);
}

#[test]
fn migrate_into_a_new_provider() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s");
    adprov(&store, &["ingest", &write(dir.path(), "shop.xes", SHOPPING_XES)]);
    let out = adprov(&store, &["migrate", "default", "archive"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert_eq!(out.stdout, "migrated 4 records from default to archive\n");
    assert_eq!(
        std::fs::read_to_string(store.join("default.jsonl")).unwrap(),
        std::fs::read_to_string(store.join("archive.jsonl")).unwrap()
    );
    let out = adprov(&store, &["validate"]);
    assert_eq!(out.stdout, "default: Valid\narchive: Valid\n");

    let again = adprov(&store, &["migrate", "default", "archive"]);
    assert_ne!(again.code, EXIT_OK);
    let missing = adprov(&store, &["migrate", "ghost", "fresh"]);
    assert_eq!(missing.code, EXIT_NOT_FOUND);
    assert!(!store.join("fresh.jsonl").exists());
    assert_eq!(adprov(&store, &["migrate", "default", "../x"]).code, EXIT_VALIDATION);
}

#[test]
fn binary_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_adprov"))
        .args(["--store", dir.path().to_str().unwrap(), "export", "nobody"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_NOT_FOUND));
    assert!(String::from_utf8_lossy(&status.stderr).starts_with("adprov: "));
}
