//! In-memory XES event logs.
//!
//! A log holds extension declarations, global attribute declarations,
//! classifiers and an ordered list of traces. Attribute order is kept exactly
//! as read so that serialization is deterministic and golden files stay
//! stable. Nested attributes are carried along but never interpreted.

mod parse;
mod validate;
mod write;

use serde::{Deserialize, Serialize};

use crate::timestamp::Timestamp;
use crate::violation::Violation;

pub use parse::parse_xes;
pub use validate::{is_uuid, validate_log};
pub use write::serialize_xes;

/// Key holding the activity label of an event and the instance id of a trace.
pub const CONCEPT_NAME: &str = "concept:name";
pub const TIME_TIMESTAMP: &str = "time:timestamp";
pub const ORG_RESOURCE: &str = "org:resource";
pub const LIFECYCLE_TRANSITION: &str = "lifecycle:transition";

#[derive(Debug, thiserror::Error)]
pub enum XesError {
    #[error("malformed XML at line {line}, column {column}: {message}")]
    Xml {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid XES element <{element}> at line {line}, column {column}: {message}")]
    Structure {
        element: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("log failed validation with {} violation(s)", .0.len())]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum AttributeValue {
    String(String),
    Int(i64),
    Float(#[serde(with = "float_form")] f64),
    Boolean(bool),
    Date(Timestamp),
    Id(String),
    List(Vec<Attribute>),
    Container(Vec<Attribute>),
}

/// JSON form of a float value: a number when finite, else the XES text
/// (`NaN`, `INF`, `-INF`), which JSON numbers cannot carry.
mod float_form {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(f: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        if f.is_finite() {
            serializer.serialize_f64(*f)
        } else {
            serializer.serialize_str(&super::write::format_float(*f))
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        match Repr::deserialize(deserializer)? {
            Repr::Number(f) => Ok(f),
            Repr::Text(t) => super::parse::parse_float(&t).ok_or_else(|| D::Error::custom(format!("invalid float `{t}`"))),
        }
    }
}

impl AttributeValue {
    /// XML element name used for this value.
    pub fn tag(&self) -> &'static str {
        match self {
            AttributeValue::String(_) => "string",
            AttributeValue::Int(_) => "int",
            AttributeValue::Float(_) => "float",
            AttributeValue::Boolean(_) => "boolean",
            AttributeValue::Date(_) => "date",
            AttributeValue::Id(_) => "id",
            AttributeValue::List(_) => "list",
            AttributeValue::Container(_) => "container",
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            AttributeValue::String(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_date(&self) -> Option<Timestamp> {
        match self {
            AttributeValue::Date(t) => Some(*t),
            _ => None,
        }
    }

    /// Display text for scalar values; compound values render as `None`.
    pub fn scalar_text(&self) -> Option<String> {
        Some(match self {
            AttributeValue::String(s) | AttributeValue::Id(s) => s.clone(),
            AttributeValue::Int(i) => i.to_string(),
            AttributeValue::Float(f) => write::format_float(*f),
            AttributeValue::Boolean(b) => b.to_string(),
            AttributeValue::Date(t) => t.to_string(),
            AttributeValue::List(_) | AttributeValue::Container(_) => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub key: String,
    #[serde(flatten)]
    pub value: AttributeValue,
    /// Child attributes of a scalar or list attribute (XES nested attributes).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nested: Vec<Attribute>,
}

impl Attribute {
    pub fn new(key: impl Into<String>, value: AttributeValue) -> Self {
        Attribute {
            key: key.into(),
            value,
            nested: Vec::new(),
        }
    }

    pub fn string(key: impl Into<String>, value: impl Into<String>) -> Self {
        Self::new(key, AttributeValue::String(value.into()))
    }

    pub fn date(key: impl Into<String>, value: Timestamp) -> Self {
        Self::new(key, AttributeValue::Date(value))
    }

    /// Namespace prefix of the key, if any.
    pub fn prefix(&self) -> Option<&str> {
        key_prefix(&self.key)
    }
}

pub(crate) fn key_prefix(key: &str) -> Option<&str> {
    key.split_once(':').map(|(p, _)| p)
}

fn find<'a>(attributes: &'a [Attribute], key: &str) -> Option<&'a Attribute> {
    attributes.iter().find(|a| a.key == key)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub attributes: Vec<Attribute>,
}

impl Event {
    pub fn new(attributes: Vec<Attribute>) -> Self {
        Event { attributes }
    }

    pub fn get(&self, key: &str) -> Option<&AttributeValue> {
        find(&self.attributes, key).map(|a| &a.value)
    }

    /// Activity label under the default `concept:name` classifier.
    pub fn activity(&self) -> Option<&str> {
        self.get(CONCEPT_NAME).and_then(AttributeValue::as_str)
    }

    pub fn timestamp(&self) -> Option<Timestamp> {
        self.get(TIME_TIMESTAMP).and_then(AttributeValue::as_date)
    }

    pub fn resource(&self) -> Option<&str> {
        self.get(ORG_RESOURCE).and_then(AttributeValue::as_str)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub attributes: Vec<Attribute>,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn get(&self, key: &str) -> Option<&AttributeValue> {
        find(&self.attributes, key).map(|a| &a.value)
    }

    /// Process-instance identifier (`concept:name` of the trace).
    pub fn instance_id(&self) -> Option<&str> {
        self.get(CONCEPT_NAME).and_then(AttributeValue::as_str)
    }

    pub fn activities(&self) -> Vec<&str> {
        self.events.iter().filter_map(Event::activity).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extension {
    pub name: String,
    pub prefix: String,
    pub uri: String,
}

impl Extension {
    pub fn new(name: &str, prefix: &str, uri: &str) -> Self {
        Extension {
            name: name.into(),
            prefix: prefix.into(),
            uri: uri.into(),
        }
    }

    pub fn concept() -> Self {
        Self::new("Concept", "concept", "http://www.xes-standard.org/concept.xesext")
    }

    pub fn time() -> Self {
        Self::new("Time", "time", "http://www.xes-standard.org/time.xesext")
    }

    pub fn org() -> Self {
        Self::new("Organizational", "org", "http://www.xes-standard.org/org.xesext")
    }

    pub fn lifecycle() -> Self {
        Self::new("Lifecycle", "lifecycle", "http://www.xes-standard.org/lifecycle.xesext")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Global {
    /// `trace` or `event`.
    pub scope: String,
    pub attributes: Vec<Attribute>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classifier {
    pub name: String,
    pub keys: String,
    pub scope: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    /// `xes.version`; documents without one are read as the current version.
    pub version: String,
    pub features: Option<String>,
    pub extensions: Vec<Extension>,
    pub globals: Vec<Global>,
    pub classifiers: Vec<Classifier>,
    pub attributes: Vec<Attribute>,
    pub traces: Vec<Trace>,
}

pub const XES_VERSION: &str = "2.0";

impl Default for EventLog {
    fn default() -> Self {
        EventLog {
            version: XES_VERSION.to_string(),
            features: None,
            extensions: Vec::new(),
            globals: Vec::new(),
            classifiers: Vec::new(),
            attributes: Vec::new(),
            traces: Vec::new(),
        }
    }
}

impl EventLog {
    pub fn extension(&self, prefix: &str) -> Option<&Extension> {
        self.extensions.iter().find(|e| e.prefix == prefix)
    }

    /// Adds the declaration unless an extension with the same prefix exists.
    pub fn declare(&mut self, extension: Extension) {
        if self.extension(&extension.prefix).is_none() {
            self.extensions.push(extension);
        }
    }

    pub fn trace(&self, instance_id: &str) -> Option<&Trace> {
        self.traces.iter().find(|t| t.instance_id() == Some(instance_id))
    }

    pub fn event_count(&self) -> usize {
        self.traces.iter().map(|t| t.events.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_floats_survive_json() {
        for f in [f64::INFINITY, f64::NEG_INFINITY, -27203048.784852263, 5e-324] {
            let value = AttributeValue::Float(f);
            let json = serde_json::to_string(&value).unwrap();
            assert_eq!(serde_json::from_str::<AttributeValue>(&json).unwrap(), value, "{json}");
        }
        let nan: AttributeValue = serde_json::from_str(r#"{"type":"float","value":"NaN"}"#).unwrap();
        assert!(matches!(nan, AttributeValue::Float(f) if f.is_nan()));
    }
}
