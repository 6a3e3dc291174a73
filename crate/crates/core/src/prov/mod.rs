//! PROV-DM documents built from provenance records, with PROV-N, PROV-JSON
//! and Graphviz DOT output.

mod dot;
mod json;
mod mapping;
mod provn;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::timestamp::Timestamp;

pub use dot::{check_dot, to_dot, DotSummary};
pub use json::{parse_prov_json, serialize_prov_json};
pub use mapping::{camel_label, map_to_prov, MappingError};
pub use provn::{parse_provn, serialize_provn};

pub const PROV_NS: &str = "http://www.w3.org/ns/prov#";
pub const XSD_NS: &str = "http://www.w3.org/2001/XMLSchema#";
pub const ADPROV_PREFIX: &str = "adprov";
pub const ADPROV_NS: &str = "urn:adprov:";

/// Prefixes every PROV serialization knows without a declaration.
pub(crate) const BUILTIN_PREFIXES: [&str; 2] = ["prov", "xsd"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum ProvValue {
    String(String),
    #[serde(rename = "xsd:dateTime")]
    DateTime(Timestamp),
}

impl ProvValue {
    pub fn text(&self) -> String {
        match self {
            ProvValue::String(s) => s.clone(),
            ProvValue::DateTime(t) => t.to_string(),
        }
    }
}

impl From<&str> for ProvValue {
    fn from(s: &str) -> Self {
        ProvValue::String(s.to_string())
    }
}

impl From<Timestamp> for ProvValue {
    fn from(t: Timestamp) -> Self {
        ProvValue::DateTime(t)
    }
}

pub type Attributes = BTreeMap<String, ProvValue>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProvEntity {
    pub id: String,
    pub label: String,
    pub attributes: Attributes,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProvActivity {
    pub id: String,
    pub label: String,
    pub start: Option<Timestamp>,
    pub end: Option<Timestamp>,
    pub attributes: Attributes,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProvAgent {
    pub id: String,
    pub label: String,
    pub attributes: Attributes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RelationKind {
    WasGeneratedBy,
    Used,
    WasAssociatedWith,
    WasInformedBy,
}

impl RelationKind {
    pub const ALL: [RelationKind; 4] = [
        RelationKind::WasGeneratedBy,
        RelationKind::Used,
        RelationKind::WasAssociatedWith,
        RelationKind::WasInformedBy,
    ];

    /// PROV-N / PROV-JSON name.
    pub fn name(&self) -> &'static str {
        match self {
            RelationKind::WasGeneratedBy => "wasGeneratedBy",
            RelationKind::Used => "used",
            RelationKind::WasAssociatedWith => "wasAssociatedWith",
            RelationKind::WasInformedBy => "wasInformedBy",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    fn endpoints(&self) -> (ElementClass, ElementClass) {
        use ElementClass::*;
        match self {
            RelationKind::WasGeneratedBy => (Entity, Activity),
            RelationKind::Used => (Activity, Entity),
            RelationKind::WasAssociatedWith => (Activity, Agent),
            RelationKind::WasInformedBy => (Activity, Activity),
        }
    }

    /// PROV-JSON member names of subject and object.
    pub(crate) fn json_roles(&self) -> (&'static str, &'static str) {
        match self {
            RelationKind::WasGeneratedBy => ("prov:entity", "prov:activity"),
            RelationKind::Used => ("prov:activity", "prov:entity"),
            RelationKind::WasAssociatedWith => ("prov:activity", "prov:agent"),
            RelationKind::WasInformedBy => ("prov:informed", "prov:informant"),
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ElementClass {
    Entity,
    Activity,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ProvRelation {
    pub kind: RelationKind,
    pub subject: String,
    pub object: String,
    pub label: Option<String>,
}

impl ProvRelation {
    pub fn new(kind: RelationKind, subject: &str, object: &str) -> Self {
        ProvRelation {
            kind,
            subject: subject.to_string(),
            object: object.to_string(),
            label: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProvDocument {
    pub namespaces: BTreeMap<String, String>,
    pub entities: Vec<ProvEntity>,
    pub activities: Vec<ProvActivity>,
    pub agents: Vec<ProvAgent>,
    pub relations: Vec<ProvRelation>,
}

impl Default for ProvDocument {
    fn default() -> Self {
        ProvDocument {
            namespaces: BTreeMap::from([
                ("prov".to_string(), PROV_NS.to_string()),
                ("xsd".to_string(), XSD_NS.to_string()),
                (ADPROV_PREFIX.to_string(), ADPROV_NS.to_string()),
            ]),
            entities: Vec::new(),
            activities: Vec::new(),
            agents: Vec::new(),
            relations: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProvError {
    #[error("invalid PROV document: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("{format} syntax error at offset {offset}: {message}")]
    Syntax {
        format: &'static str,
        offset: usize,
        message: String,
    },
}

impl ProvDocument {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Sorts every section by id (relations by kind, subject, object).
    pub fn normalize(&mut self) {
        self.entities.sort_by(|a, b| a.id.cmp(&b.id));
        self.activities.sort_by(|a, b| a.id.cmp(&b.id));
        self.agents.sort_by(|a, b| a.id.cmp(&b.id));
        self.relations.sort();
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    pub fn node_count(&self) -> usize {
        self.entities.len() + self.activities.len() + self.agents.len()
    }

    pub fn activity(&self, id: &str) -> Option<&ProvActivity> {
        self.activities.iter().find(|a| a.id == id)
    }

    pub fn activity_by_label(&self, label: &str) -> Option<&ProvActivity> {
        self.activities.iter().find(|a| a.label == label)
    }

    pub fn relations_of(&self, kind: RelationKind) -> impl Iterator<Item = &ProvRelation> {
        self.relations.iter().filter(move |r| r.kind == kind)
    }

    fn class_of(&self, id: &str) -> Option<ElementClass> {
        if self.entities.iter().any(|e| e.id == id) {
            Some(ElementClass::Entity)
        } else if self.activities.iter().any(|a| a.id == id) {
            Some(ElementClass::Activity)
        } else if self.agents.iter().any(|a| a.id == id) {
            Some(ElementClass::Agent)
        } else {
            None
        }
    }

    /// Every structural problem of the document; empty when valid.
    pub fn problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for prefix in ["prov", ADPROV_PREFIX] {
            if !self.namespaces.contains_key(prefix) {
                problems.push(format!("namespace `{prefix}` is not declared"));
            }
        }
        for (prefix, uri) in &self.namespaces {
            if !is_prefix(prefix) {
                problems.push(format!("invalid prefix `{prefix}`"));
            }
            if uri.is_empty() || uri.contains(['<', '>', '"', ' ']) {
                problems.push(format!("invalid namespace URI for `{prefix}`"));
            }
        }

        let mut seen = BTreeSet::new();
        let ids = self
            .entities
            .iter()
            .map(|e| (&e.id, &e.attributes))
            .chain(self.activities.iter().map(|a| (&a.id, &a.attributes)))
            .chain(self.agents.iter().map(|a| (&a.id, &a.attributes)));
        for (id, attributes) in ids {
            if !seen.insert(id.as_str()) {
                problems.push(format!("duplicate id `{id}`"));
            }
            self.check_name(id, &mut problems);
            for key in attributes.keys() {
                self.check_name(key, &mut problems);
                if RESERVED_KEYS.contains(&key.as_str()) {
                    problems.push(format!("attribute `{key}` of `{id}` is reserved"));
                }
            }
        }

        for r in &self.relations {
            let (want_subject, want_object) = r.kind.endpoints();
            for (end, want) in [(&r.subject, want_subject), (&r.object, want_object)] {
                match self.class_of(end) {
                    None => problems.push(format!("{} references undeclared `{end}`", r.kind)),
                    Some(class) if class != want => {
                        problems.push(format!("{} expects {want:?} but `{end}` is {class:?}", r.kind))
                    }
                    Some(_) => {}
                }
            }
        }
        problems
    }

    pub fn check(&self) -> Result<(), ProvError> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ProvError::Invalid(problems))
        }
    }

    fn check_name(&self, name: &str, problems: &mut Vec<String>) {
        match name.split_once(':') {
            Some((prefix, local)) if self.namespaces.contains_key(prefix) && is_local_name(local) => {}
            Some((prefix, _)) if !self.namespaces.contains_key(prefix) => {
                problems.push(format!("`{name}` uses undeclared prefix `{prefix}`"))
            }
            _ => problems.push(format!("`{name}` is not a qualified name")),
        }
    }
}

/// Keys carried by dedicated fields rather than the attribute map.
const RESERVED_KEYS: [&str; 3] = ["prov:label", "prov:startTime", "prov:endTime"];

fn is_prefix(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Local part of a qualified name in the subset every output format accepts.
pub(crate) fn is_local_name(s: &str) -> bool {
    !s.is_empty()
        && !s.ends_with('.')
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.' | b'/' | b'%'))
}

/// Percent-encodes everything outside `[A-Za-z0-9_-]`.
pub fn encode_local(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || b == b'_' || b == b'-' {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}
