use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use sha2::{Digest as _, Sha256};
use uuid::Uuid;

use crate::adaptation::ChangeEvent;
use crate::timestamp::Timestamp;
use crate::xes::{Attribute, Event};

/// SHA-256 output; serialized as 64 lowercase hex characters.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0; 32]);

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(text: &str) -> Option<Self> {
        if text.len() != 64 || text.bytes().any(|b| b.is_ascii_uppercase()) {
            return None;
        }
        let mut out = [0u8; 32];
        hex::decode_to_slice(text, &mut out).ok()?;
        Some(Digest(out))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Digest::from_hex(&text).ok_or_else(|| serde::de::Error::custom("digest must be 64 lowercase hex characters"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Execution,
    Change,
}

impl RecordKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecordKind::Execution => "execution",
            RecordKind::Change => "change",
        }
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Payload of an execution record: the executed activity, who ran it, when,
/// and every attribute of the source event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionPayload {
    pub activity: Option<String>,
    pub resource: Option<String>,
    pub timestamp: Option<Timestamp>,
    pub attributes: Vec<Attribute>,
}

impl ExecutionPayload {
    pub fn from_event(event: &Event) -> Self {
        ExecutionPayload {
            activity: event.activity().map(str::to_string),
            resource: event.resource().map(str::to_string),
            timestamp: event.timestamp(),
            attributes: event.attributes.clone(),
        }
    }
}

/// A record waiting to be sealed into a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct NewRecord {
    pub instance_id: String,
    pub kind: RecordKind,
    pub payload: Value,
}

impl NewRecord {
    pub fn execution(instance_id: &str, payload: &ExecutionPayload) -> Self {
        NewRecord {
            instance_id: instance_id.to_string(),
            kind: RecordKind::Execution,
            payload: serde_json::to_value(payload).expect("execution payloads serialize"),
        }
    }

    pub fn change(change: &ChangeEvent) -> Self {
        NewRecord {
            instance_id: change.instance_id.clone(),
            kind: RecordKind::Change,
            payload: serde_json::to_value(change).expect("change events serialize"),
        }
    }
}

/// One stored unit of provenance, linked to its predecessor by digest.
///
/// `digest` is SHA-256 over the canonical JSON of
/// `{instance_id, kind, payload}`, then the raw 32 bytes of `prev_digest`,
/// then the hyphenated record id, then the `recorded_at` text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub record_id: Uuid,
    pub instance_id: String,
    pub kind: RecordKind,
    pub payload: Value,
    pub recorded_at: Timestamp,
    pub prev_digest: Digest,
    pub digest: Digest,
}

impl ProvenanceRecord {
    /// Builds a record linked to `prev_digest` and computes its digest.
    pub fn seal(entry: NewRecord, record_id: Uuid, recorded_at: Timestamp, prev_digest: Digest) -> Self {
        let digest = compute_digest(
            &entry.instance_id,
            entry.kind,
            &entry.payload,
            &prev_digest,
            &record_id,
            &recorded_at,
        );
        ProvenanceRecord {
            record_id,
            instance_id: entry.instance_id,
            kind: entry.kind,
            payload: entry.payload,
            recorded_at,
            prev_digest,
            digest,
        }
    }

    pub fn recompute_digest(&self) -> Digest {
        compute_digest(
            &self.instance_id,
            self.kind,
            &self.payload,
            &self.prev_digest,
            &self.record_id,
            &self.recorded_at,
        )
    }

    pub fn execution(&self) -> Option<ExecutionPayload> {
        match self.kind {
            RecordKind::Execution => serde_json::from_value(self.payload.clone()).ok(),
            RecordKind::Change => None,
        }
    }

    pub fn change_event(&self) -> Option<ChangeEvent> {
        match self.kind {
            RecordKind::Change => serde_json::from_value(self.payload.clone()).ok(),
            RecordKind::Execution => None,
        }
    }

    /// One JSON object with the fields in storage order and a canonical
    /// payload. Identical records always yield identical lines.
    pub fn to_json_line(&self) -> String {
        format!(
            "{{\"record_id\":\"{}\",\"instance_id\":{},\"kind\":\"{}\",\"payload\":{},\"recorded_at\":\"{}\",\"prev_digest\":\"{}\",\"digest\":\"{}\"}}",
            self.record_id.hyphenated(),
            Value::String(self.instance_id.clone()),
            self.kind,
            canonical_json(&self.payload),
            self.recorded_at,
            self.prev_digest,
            self.digest
        )
    }
}

pub fn compute_digest(
    instance_id: &str,
    kind: RecordKind,
    payload: &Value,
    prev_digest: &Digest,
    record_id: &Uuid,
    recorded_at: &Timestamp,
) -> Digest {
    let body = serde_json::json!({
        "instance_id": instance_id,
        "kind": kind.as_str(),
        "payload": payload,
    });
    let mut hasher = Sha256::new();
    hasher.update(canonical_json(&body).as_bytes());
    hasher.update(prev_digest.0);
    hasher.update(record_id.hyphenated().to_string().as_bytes());
    hasher.update(recorded_at.to_string().as_bytes());
    let mut out = [0u8; 32];
    out.copy_from_slice(&hasher.finalize());
    Digest(out)
}

/// JSON with object keys sorted lexicographically and no whitespace.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(key.clone()).to_string());
                out.push(':');
                write_canonical(&map[key], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample(prev: Digest) -> ProvenanceRecord {
        ProvenanceRecord::seal(
            NewRecord {
                instance_id: "i".into(),
                kind: RecordKind::Execution,
                payload: json!({"b": 1, "a": [true, null]}),
            },
            Uuid::from_u128(7),
            Timestamp::from_millis(0).unwrap(),
            prev,
        )
    }

    #[test]
    fn canonical_json_sorts_keys() {
        assert_eq!(canonical_json(&json!({"z": {"b": 1, "a": "x"}, "a": []})), r#"{"a":[],"z":{"a":"x","b":1}}"#);
    }

    #[test]
    fn digest_covers_every_field() {
        let base = sample(Digest::ZERO);
        assert_eq!(base.recompute_digest(), base.digest);
        let mut r = base.clone();
        r.instance_id = "j".into();
        assert_ne!(r.recompute_digest(), base.digest);
        let mut r = base.clone();
        r.kind = RecordKind::Change;
        assert_ne!(r.recompute_digest(), base.digest);
        let mut r = base.clone();
        r.payload = json!({"b": 2, "a": [true, null]});
        assert_ne!(r.recompute_digest(), base.digest);
        let mut r = base.clone();
        r.record_id = Uuid::from_u128(8);
        assert_ne!(r.recompute_digest(), base.digest);
        let mut r = base.clone();
        r.recorded_at = Timestamp::from_millis(1).unwrap();
        assert_ne!(r.recompute_digest(), base.digest);
        assert_ne!(sample(Digest([1; 32])).digest, base.digest);
    }

    #[test]
    fn json_line_parses_back() {
        let r = sample(Digest([0xab; 32]));
        let line = r.to_json_line();
        let back: ProvenanceRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json_line(), line);
        let keys: Vec<String> = serde_json::from_str::<serde_json::Map<String, Value>>(&line)
            .unwrap()
            .keys()
            .cloned()
            .collect();
        assert_eq!(keys.len(), 7);
    }

    #[test]
    fn digest_hex() {
        assert!(Digest::from_hex(&"A".repeat(64)).is_none());
        assert!(Digest::from_hex(&"a".repeat(63)).is_none());
        assert_eq!(Digest::from_hex(&"0".repeat(64)), Some(Digest::ZERO));
    }
}
