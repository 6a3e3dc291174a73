//! Violation descriptors shared by the XES and adaptation validators.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Stable rule identifiers. The text form (see [`Rule::as_str`]) is part of
/// the public contract and never changes between releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rule {
    // XES structure
    EmptyKey,
    MalformedKey,
    DuplicateKey,
    ConceptNameNotString,
    MissingInstanceId,
    DuplicateInstanceId,
    InvalidId,
    InvalidCharacter,
    UndeclaredPrefix,
    DuplicateExtensionPrefix,
    ContainerMetaAttributes,
    // adaptation extension
    UndeclaredExtension,
    UnknownAdaptationKey,
    WrongValueType,
    MissingType,
    InvalidType,
    MissingWhat,
    TargetMismatch,
    MissingWhere,
    InvalidPosition,
    MissingWho,
    MissingWhen,
    DeleteOnEvent,
    InsertOnTrace,
    DeleteTargetPresent,
    ChangeAfterExecution,
}

impl Rule {
    pub const ALL: [Rule; 26] = [
        Rule::EmptyKey,
        Rule::MalformedKey,
        Rule::DuplicateKey,
        Rule::ConceptNameNotString,
        Rule::MissingInstanceId,
        Rule::DuplicateInstanceId,
        Rule::InvalidId,
        Rule::InvalidCharacter,
        Rule::UndeclaredPrefix,
        Rule::DuplicateExtensionPrefix,
        Rule::ContainerMetaAttributes,
        Rule::UndeclaredExtension,
        Rule::UnknownAdaptationKey,
        Rule::WrongValueType,
        Rule::MissingType,
        Rule::InvalidType,
        Rule::MissingWhat,
        Rule::TargetMismatch,
        Rule::MissingWhere,
        Rule::InvalidPosition,
        Rule::MissingWho,
        Rule::MissingWhen,
        Rule::DeleteOnEvent,
        Rule::InsertOnTrace,
        Rule::DeleteTargetPresent,
        Rule::ChangeAfterExecution,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Rule::EmptyKey => "EMPTY_KEY",
            Rule::MalformedKey => "MALFORMED_KEY",
            Rule::DuplicateKey => "DUPLICATE_KEY",
            Rule::ConceptNameNotString => "CONCEPT_NAME_NOT_STRING",
            Rule::MissingInstanceId => "MISSING_INSTANCE_ID",
            Rule::DuplicateInstanceId => "DUPLICATE_INSTANCE_ID",
            Rule::InvalidId => "INVALID_ID",
            Rule::InvalidCharacter => "INVALID_CHARACTER",
            Rule::UndeclaredPrefix => "UNDECLARED_PREFIX",
            Rule::DuplicateExtensionPrefix => "DUPLICATE_EXTENSION_PREFIX",
            Rule::ContainerMetaAttributes => "CONTAINER_META_ATTRIBUTES",
            Rule::UndeclaredExtension => "UNDECLARED_EXTENSION",
            Rule::UnknownAdaptationKey => "UNKNOWN_ADAPTATION_KEY",
            Rule::WrongValueType => "WRONG_VALUE_TYPE",
            Rule::MissingType => "MISSING_TYPE",
            Rule::InvalidType => "INVALID_TYPE",
            Rule::MissingWhat => "MISSING_WHAT",
            Rule::TargetMismatch => "TARGET_MISMATCH",
            Rule::MissingWhere => "MISSING_WHERE",
            Rule::InvalidPosition => "INVALID_POSITION",
            Rule::MissingWho => "MISSING_WHO",
            Rule::MissingWhen => "MISSING_WHEN",
            Rule::DeleteOnEvent => "DELETE_ON_EVENT",
            Rule::InsertOnTrace => "INSERT_ON_TRACE",
            Rule::DeleteTargetPresent => "DELETE_TARGET_PRESENT",
            Rule::ChangeAfterExecution => "CHANGE_AFTER_EXECUTION",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One broken rule, located by trace index, event index and attribute key.
/// Log-level problems carry no trace index; trace-level ones no event index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub trace: Option<usize>,
    pub event: Option<usize>,
    pub key: Option<String>,
    pub rule: Rule,
}

impl Violation {
    pub fn new(trace: Option<usize>, event: Option<usize>, key: Option<&str>, rule: Rule) -> Self {
        Violation {
            trace,
            event,
            key: key.map(str::to_string),
            rule,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.rule)?;
        if let Some(t) = self.trace {
            write!(f, " trace={t}")?;
        }
        if let Some(e) = self.event {
            write!(f, " event={e}")?;
        }
        if let Some(k) = &self.key {
            write!(f, " key={k}")?;
        }
        Ok(())
    }
}
