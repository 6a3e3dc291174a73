//! Fixtures, seeded generators and independent oracles shared by the
//! integration tests and the acceptance suite.

#![allow(dead_code)]

use std::collections::BTreeMap;

use adprov::adaptation::{ChangeEvent, ChangePosition, ChangeType};
use adprov::detection::{EditKind, EditOp};
use adprov::holder::{Digest, ExecutionPayload, NewRecord, ProvenanceRecord};
use adprov::model::{parse_model, ProcessModel};
use adprov::prov::{encode_local, Attributes, ProvActivity, ProvAgent, ProvDocument, ProvEntity, ProvRelation, ProvValue, RelationKind};
use adprov::xes::{
    parse_xes, Attribute, AttributeValue, Classifier, Event, EventLog, Extension, Global, Trace, CONCEPT_NAME, ORG_RESOURCE,
    TIME_TIMESTAMP,
};
use adprov::Timestamp;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uuid::Uuid;

pub const SHOPPING_XES: &str = include_str!("../../examples/data/shopping.xes");
pub const SHOPPING_PLAIN_XES: &str = include_str!("../../examples/data/shopping_plain.xes");
pub const SHOPPING_MODEL: &str = include_str!("../../examples/data/shopping_model.json");
pub const SHOPPING_INSTANCE: &str = "shopping-1";

pub fn shopping_log() -> EventLog {
    parse_xes(SHOPPING_XES).expect("shopping log parses")
}

pub fn shopping_model() -> ProcessModel {
    parse_model(SHOPPING_MODEL).expect("shopping model parses")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixed_time() -> Timestamp {
    Timestamp::parse("2024-05-01T12:00:00Z").unwrap()
}

// ---------------------------------------------------------------------------
// text and attribute generators

const TRICKY: [&str; 12] = ["", " ", "<tag>", "a & b", "\"quoted\"", "it's", "tab\there", "line\nbreak", "cr\rlf", "ümlaut", "日本語", "😀"];

pub fn text<R: Rng>(rng: &mut R) -> String {
    match rng.gen_range(0..4) {
        0 => TRICKY.choose(rng).unwrap().to_string(),
        1 => format!("{} {}", TRICKY.choose(rng).unwrap(), rng.gen_range(0..1000)),
        _ => {
            let len = rng.gen_range(1..12);
            (0..len).map(|_| rng.gen_range(b'a'..=b'z') as char).collect()
        }
    }
}

pub fn timestamp<R: Rng>(rng: &mut R) -> Timestamp {
    // 1990 .. 2040
    Timestamp::from_millis(rng.gen_range(631_152_000_000i64..2_208_988_800_000)).unwrap()
}

fn uuid<R: Rng>(rng: &mut R) -> Uuid {
    Uuid::from_u128(rng.gen())
}

fn float<R: Rng>(rng: &mut R) -> f64 {
    match rng.gen_range(0..8) {
        0 => f64::INFINITY,
        1 => f64::NEG_INFINITY,
        2 => 0.0,
        3 => rng.gen_range(-1e6..1e6f64).round(),
        4 => rng.gen::<f64>() * 1e-300,
        _ => rng.gen_range(-1e9..1e9),
    }
}

fn scalar_value<R: Rng>(rng: &mut R) -> AttributeValue {
    match rng.gen_range(0..6) {
        0 => AttributeValue::String(text(rng)),
        1 => AttributeValue::Int(rng.gen()),
        2 => AttributeValue::Float(float(rng)),
        3 => AttributeValue::Boolean(rng.gen()),
        4 => AttributeValue::Date(timestamp(rng)),
        _ => AttributeValue::Id(uuid(rng).to_string()),
    }
}

/// Attributes with distinct keys, drawn from unprefixed keys and declared
/// prefixes only.
fn attributes<R: Rng>(rng: &mut R, count: usize, depth: u32, prefix: &str) -> Vec<Attribute> {
    (0..count)
        .map(|i| {
            let key = format!("{prefix}k{i}");
            let value = if depth > 0 && rng.gen_ratio(1, 8) {
                let n = rng.gen_range(0..4);
                if rng.gen() {
                    AttributeValue::List(attributes(rng, n, depth - 1, "item"))
                } else {
                    AttributeValue::Container(attributes(rng, n, depth - 1, ""))
                }
            } else {
                scalar_value(rng)
            };
            let nested = if depth > 0 && !matches!(value, AttributeValue::Container(_)) && rng.gen_ratio(1, 10) {
                let n = rng.gen_range(1..3);
                attributes(rng, n, depth - 1, "meta:")
            } else {
                Vec::new()
            };
            Attribute { key, value, nested }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// logs

pub const ALPHABET: [&str; 6] = ["Add item to cart", "Go to cart", "Checkout", "Pay", "Ship", "Review & rate"];

/// A valid, unannotated log with up to `max_traces` traces of up to
/// `max_events` events. Execution timestamps are at or after 2000-01-01.
pub fn random_log<R: Rng>(rng: &mut R, max_traces: usize, max_events: usize) -> EventLog {
    let mut log = EventLog {
        extensions: vec![
            Extension::concept(),
            Extension::time(),
            Extension::org(),
            Extension::new("Meta", "meta", "http://example.org/meta.xesext"),
        ],
        ..EventLog::default()
    };
    if rng.gen() {
        log.features = Some("nested-attributes".to_string());
    }
    if rng.gen() {
        log.globals.push(Global {
            scope: "event".into(),
            attributes: vec![Attribute::string(CONCEPT_NAME, "__INVALID__")],
        });
        log.globals.push(Global {
            scope: "trace".into(),
            attributes: vec![Attribute::string(CONCEPT_NAME, "__INVALID__")],
        });
    }
    if rng.gen() {
        log.classifiers.push(Classifier {
            name: "Activity".into(),
            keys: CONCEPT_NAME.into(),
            scope: rng.gen::<bool>().then(|| "event".to_string()),
        });
    }
    let n = rng.gen_range(0..4);
    log.attributes = attributes(rng, n, 2, "");

    let traces = rng.gen_range(0..=max_traces);
    let base = 946_684_800_000i64; // 2000-01-01
    for t in 0..traces {
        let mut trace = Trace {
            attributes: vec![Attribute::string(CONCEPT_NAME, format!("case {t}/{}", text(rng)))],
            events: Vec::new(),
        };
        let n = rng.gen_range(0..3);
        trace.attributes.extend(attributes(rng, n, 2, ""));
        let mut clock = base + rng.gen_range(0..1_000_000_000);
        for _ in 0..rng.gen_range(0..=max_events) {
            clock += rng.gen_range(0..10_000_000);
            let mut attrs = vec![Attribute::string(CONCEPT_NAME, *ALPHABET.choose(rng).unwrap())];
            if rng.gen_ratio(9, 10) {
                attrs.push(Attribute::date(TIME_TIMESTAMP, Timestamp::from_millis(clock).unwrap()));
            }
            if rng.gen_ratio(4, 5) {
                attrs.push(Attribute::string(ORG_RESOURCE, format!("Resource{}", rng.gen_range(0..4))));
            }
            let n = rng.gen_range(0..3);
            attrs.extend(attributes(rng, n, 1, ""));
            attrs.shuffle(rng);
            trace.events.push(Event::new(attrs));
        }
        log.traces.push(trace);
    }
    log
}

/// Changes valid for `log`: inserts target labels of the alphabet or new
/// labels, deletes target labels that never occur, and every change time
/// precedes all execution timestamps.
pub fn random_changes<R: Rng>(rng: &mut R, log: &EventLog, max: usize) -> Vec<ChangeEvent> {
    let instances: Vec<String> = log.traces.iter().filter_map(|t| t.instance_id().map(str::to_string)).collect();
    if instances.is_empty() {
        return Vec::new();
    }
    let positions = |rng: &mut R| -> ChangePosition {
        match rng.gen_range(0..3) {
            0 => ChangePosition::AfterActivity(ALPHABET.choose(rng).unwrap().to_string()),
            1 => ChangePosition::BeforeActivity(ALPHABET.choose(rng).unwrap().to_string()),
            _ => ChangePosition::AtIndex(rng.gen_range(0..8)),
        }
    };
    (0..rng.gen_range(0..=max))
        .map(|_| {
            let instance_id = instances.choose(rng).unwrap().clone();
            let (change_type, target_activity) = if rng.gen() {
                let target = if rng.gen_ratio(3, 4) {
                    ALPHABET.choose(rng).unwrap().to_string()
                } else {
                    format!("New step {}", rng.gen_range(0..3))
                };
                (ChangeType::Insert, target)
            } else {
                (ChangeType::Delete, format!("Gone step {}", rng.gen_range(0..3)))
            };
            ChangeEvent {
                instance_id,
                change_type,
                target_activity,
                position: positions(rng),
                initiator: format!("Person{}", rng.gen_range(0..3)),
                // strictly before 2000-01-01
                change_time: Timestamp::from_millis(rng.gen_range(0..946_684_800_000)).unwrap(),
                note: rng.gen_ratio(1, 3).then(|| text(rng)),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// records

/// A hash-linked chain of `len` records mixing execution and change kinds.
pub fn random_chain<R: Rng>(rng: &mut R, len: usize) -> Vec<ProvenanceRecord> {
    let mut prev = Digest::ZERO;
    (0..len)
        .map(|i| {
            let instance = format!("case-{}", rng.gen_range(0..3));
            let entry = if rng.gen_ratio(3, 4) {
                NewRecord::execution(
                    &instance,
                    &ExecutionPayload {
                        activity: Some(ALPHABET.choose(rng).unwrap().to_string()),
                        resource: rng.gen::<bool>().then(|| format!("Resource{}", rng.gen_range(0..3))),
                        timestamp: Some(timestamp(rng)),
                        attributes: attributes(rng, 2, 1, ""),
                    },
                )
            } else {
                NewRecord::change(&ChangeEvent {
                    instance_id: instance.clone(),
                    change_type: if rng.gen() { ChangeType::Insert } else { ChangeType::Delete },
                    target_activity: text(rng),
                    position: ChangePosition::AtIndex(rng.gen_range(0..5)),
                    initiator: "PersonA".into(),
                    change_time: timestamp(rng),
                    note: None,
                })
            };
            let record = ProvenanceRecord::seal(entry, Uuid::from_u128(i as u128 + 1), timestamp(rng), prev);
            prev = record.digest;
            record
        })
        .collect()
}

// ---------------------------------------------------------------------------
// PROV documents

fn prov_value<R: Rng>(rng: &mut R) -> ProvValue {
    if rng.gen() {
        ProvValue::String(text(rng))
    } else {
        ProvValue::DateTime(timestamp(rng))
    }
}

fn prov_attributes<R: Rng>(rng: &mut R) -> Attributes {
    (0..rng.gen_range(0..4))
        .map(|i| {
            let prefix = if rng.gen() { "adprov" } else { "ex" };
            (format!("{prefix}:attr{i}"), prov_value(rng))
        })
        .collect()
}

/// A structurally valid document with arbitrary labels and relations.
pub fn random_prov_doc<R: Rng>(rng: &mut R) -> ProvDocument {
    let mut doc = ProvDocument::empty();
    doc.namespaces.insert("ex".into(), "http://example.org/ns#".into());
    let id = |rng: &mut R, kind: &str, i: usize| format!("adprov:{}/{kind}/{i}", encode_local(&text(rng)));
    for i in 0..rng.gen_range(0..8) {
        let id = id(rng, "entity", i);
        doc.entities.push(ProvEntity {
            id,
            label: text(rng),
            attributes: prov_attributes(rng),
        });
    }
    for i in 0..rng.gen_range(0..8) {
        let id = id(rng, "activity", i);
        doc.activities.push(ProvActivity {
            id,
            label: text(rng),
            start: rng.gen::<bool>().then(|| timestamp(rng)),
            end: rng.gen::<bool>().then(|| timestamp(rng)),
            attributes: prov_attributes(rng),
        });
    }
    for i in 0..rng.gen_range(0..4) {
        doc.agents.push(ProvAgent {
            id: format!("adprov:agent/{i}"),
            label: text(rng),
            attributes: prov_attributes(rng),
        });
    }
    let entities: Vec<String> = doc.entities.iter().map(|e| e.id.clone()).collect();
    let activities: Vec<String> = doc.activities.iter().map(|a| a.id.clone()).collect();
    let agents: Vec<String> = doc.agents.iter().map(|a| a.id.clone()).collect();
    for _ in 0..rng.gen_range(0..12) {
        let kind = *RelationKind::ALL.choose(rng).unwrap();
        let (subjects, objects) = match kind {
            RelationKind::WasGeneratedBy => (&entities, &activities),
            RelationKind::Used => (&activities, &entities),
            RelationKind::WasAssociatedWith => (&activities, &agents),
            RelationKind::WasInformedBy => (&activities, &activities),
        };
        if let (Some(s), Some(o)) = (subjects.choose(rng), objects.choose(rng)) {
            doc.relations.push(ProvRelation {
                kind,
                subject: s.clone(),
                object: o.clone(),
                label: rng.gen_ratio(1, 4).then(|| text(rng)),
            });
        }
    }
    doc.relations.dedup();
    assert!(doc.problems().is_empty(), "{:?}", doc.problems());
    doc
}

// ---------------------------------------------------------------------------
// edit-distance oracles, written independently of the library

/// Insert/delete distance through a forward LCS table.
pub fn indel_distance(a: &[&str], b: &[&str]) -> usize {
    let mut lcs = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            lcs[i][j] = if a[i - 1] == b[j - 1] {
                lcs[i - 1][j - 1] + 1
            } else {
                lcs[i - 1][j].max(lcs[i][j - 1])
            };
        }
    }
    a.len() + b.len() - 2 * lcs[a.len()][b.len()]
}

/// Replays a script: the reference elements kept before each edit fill the
/// trace up to the edit's position.
pub fn replay<'a>(reference: &[&'a str], script: &'a [EditOp]) -> Option<Vec<&'a str>> {
    let mut out: Vec<&str> = Vec::new();
    let mut rest = reference.iter();
    for op in script {
        let keep = op.trace_position.checked_sub(out.len())?;
        for _ in 0..keep {
            out.push(*rest.next()?);
        }
        match op.kind {
            EditKind::Delete => {
                if *rest.next()? != op.label {
                    return None;
                }
            }
            EditKind::Insert => out.push(&op.label),
        }
    }
    out.extend(rest.copied());
    Some(out)
}

/// Every sequence over `alphabet` with length at most `max_len`.
pub fn all_sequences<'a>(alphabet: &[&'a str], max_len: usize) -> Vec<Vec<&'a str>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &frontier {
            for &c in alphabet {
                let mut s: Vec<&str> = seq.clone();
                s.push(c);
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Counts of records per kind and per instance, for quick comparisons.
pub fn census(records: &[ProvenanceRecord]) -> BTreeMap<(String, String), usize> {
    let mut out = BTreeMap::new();
    for r in records {
        *out.entry((r.instance_id.clone(), r.kind.to_string())).or_insert(0) += 1;
    }
    out
}

// ---------------------------------------------------------------------------
// tampering

/// Every stored field of a record.
pub const RECORD_FIELDS: [&str; 7] = ["record_id", "instance_id", "kind", "payload", "recorded_at", "prev_digest", "digest"];

/// A copy of `record` with one field changed to a different, well-formed
/// value.
pub fn corrupt(record: &ProvenanceRecord, field: &str) -> ProvenanceRecord {
    let mut r = record.clone();
    match field {
        "record_id" => r.record_id = Uuid::from_u128(r.record_id.as_u128() ^ 1 << 64),
        "instance_id" => r.instance_id.push('x'),
        "kind" => {
            r.kind = match r.kind {
                adprov::holder::RecordKind::Execution => adprov::holder::RecordKind::Change,
                adprov::holder::RecordKind::Change => adprov::holder::RecordKind::Execution,
            }
        }
        "payload" => {
            r.payload.as_object_mut().expect("payloads are objects").insert("tampered".into(), true.into());
        }
        "recorded_at" => r.recorded_at = Timestamp::from_millis(r.recorded_at.as_millis() + 1).unwrap(),
        "prev_digest" => r.prev_digest.0[31] ^= 1,
        "digest" => r.digest.0[0] ^= 0x80,
        other => panic!("no field {other}"),
    }
    assert_ne!(r, *record);
    r
}

// ---------------------------------------------------------------------------
// HTTP

/// Drives the router in-process, one request at a time.
pub struct Http {
    runtime: tokio::runtime::Runtime,
    router: axum::Router,
}

pub struct Reply {
    pub status: u16,
    pub headers: axum::http::HeaderMap,
    pub body: String,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.body))
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(name).and_then(|v| v.to_str().ok())
    }
}

impl Http {
    pub fn new(holder: adprov::holder::ProvenanceHolder) -> Self {
        Http {
            runtime: tokio::runtime::Runtime::new().unwrap(),
            router: adprov::service::router(holder),
        }
    }

    pub fn call(&self, method: &str, uri: &str, body: &str) -> Reply {
        use http_body_util::BodyExt;
        use tower::ServiceExt;
        let request = axum::http::Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", if body.starts_with('{') { "application/json" } else { "application/xml" })
            .body(axum::body::Body::from(body.to_string()))
            .unwrap();
        self.runtime.block_on(async {
            let response = self.router.clone().oneshot(request).await.unwrap();
            let status = response.status().as_u16();
            let headers = response.headers().clone();
            let bytes = response.into_body().collect().await.unwrap().to_bytes();
            Reply {
                status,
                headers,
                body: String::from_utf8(bytes.to_vec()).unwrap(),
            }
        })
    }

    pub fn get(&self, uri: &str) -> Reply {
        self.call("GET", uri, "")
    }

    pub fn post(&self, uri: &str, body: &str) -> Reply {
        self.call("POST", uri, body)
    }
}

/// [`indel_distance`] with one rolling row on the stack, for short inputs
/// in hot loops.
pub fn indel_distance_small(a: &[&str], b: &[&str]) -> usize {
    const MAX: usize = 16;
    if b.len() >= MAX {
        return indel_distance(a, b);
    }
    let mut row = [0usize; MAX];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    a.len() + b.len() - 2 * row[b.len()]
}

/// True when replaying `script` on `reference` yields exactly `observed`;
/// same rules as [`replay`] without building the sequence.
pub fn replay_matches(reference: &[&str], script: &[EditOp], observed: &[&str]) -> bool {
    let mut out = 0;
    let mut next = 0;
    let emit = |label: &str, out: &mut usize| {
        let ok = observed.get(*out) == Some(&label);
        *out += 1;
        ok
    };
    for op in script {
        let Some(keep) = op.trace_position.checked_sub(out) else {
            return false;
        };
        for _ in 0..keep {
            match reference.get(next) {
                Some(label) if emit(label, &mut out) => next += 1,
                _ => return false,
            }
        }
        match op.kind {
            EditKind::Delete => {
                if reference.get(next) != Some(&op.label.as_str()) {
                    return false;
                }
                next += 1;
            }
            EditKind::Insert => {
                if !emit(&op.label, &mut out) {
                    return false;
                }
            }
        }
    }
    for label in &reference[next..] {
        if !emit(label, &mut out) {
            return false;
        }
    }
    out == observed.len()
}
