//! The Adaptation XES extension: change events for runtime insert/delete
//! adaptations of a single process instance.
//!
//! An insert is annotated on the event of the inserted activity. A delete
//! has no event of its own, so it is carried on the trace inside the list
//! attribute `adaptation:deletes`, one `adaptation:change` container per
//! deleted activity. Both carriers use the same facet keys.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::timestamp::Timestamp;
use crate::violation::{Rule, Violation};
use crate::xes::{validate_log, Attribute, AttributeValue, Event, EventLog, Extension, Trace, CONCEPT_NAME};

pub const EXTENSION_NAME: &str = "Adaptation";
pub const PREFIX: &str = "adaptation";
pub const EXTENSION_URI: &str =
    "https://raw.githubusercontent.com/ProvenanceHolder/ProvenanceHolder/refs/heads/main/adaptation.xesext";

pub const KEY_TYPE: &str = "adaptation:type";
pub const KEY_TARGET: &str = "adaptation:target";
pub const KEY_POSITION_KIND: &str = "adaptation:position_kind";
pub const KEY_POSITION_ANCHOR: &str = "adaptation:position_anchor";
pub const KEY_INITIATOR: &str = "adaptation:initiator";
pub const KEY_TIME: &str = "adaptation:time";
pub const KEY_NOTE: &str = "adaptation:note";
/// Trace-level list holding delete annotations.
pub const KEY_DELETES: &str = "adaptation:deletes";
/// Container key of one delete annotation inside [`KEY_DELETES`].
pub const KEY_CHANGE: &str = "adaptation:change";

const FACET_KEYS: [&str; 7] = [
    KEY_TYPE,
    KEY_TARGET,
    KEY_POSITION_KIND,
    KEY_POSITION_ANCHOR,
    KEY_INITIATOR,
    KEY_TIME,
    KEY_NOTE,
];

pub fn extension() -> Extension {
    Extension::new(EXTENSION_NAME, PREFIX, EXTENSION_URI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeType {
    Insert,
    Delete,
}

impl ChangeType {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChangeType::Insert => "insert",
            ChangeType::Delete => "delete",
        }
    }
}

impl fmt::Display for ChangeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChangeType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "insert" => Ok(ChangeType::Insert),
            "delete" => Ok(ChangeType::Delete),
            other => Err(format!("unknown change type `{other}`")),
        }
    }
}

/// Where a change happened, relative to the trace's activity sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "anchor", rename_all = "snake_case")]
pub enum ChangePosition {
    AfterActivity(String),
    BeforeActivity(String),
    AtIndex(usize),
}

impl ChangePosition {
    pub fn kind(&self) -> &'static str {
        match self {
            ChangePosition::AfterActivity(_) => "after_activity",
            ChangePosition::BeforeActivity(_) => "before_activity",
            ChangePosition::AtIndex(_) => "at_index",
        }
    }

    pub fn anchor(&self) -> String {
        match self {
            ChangePosition::AfterActivity(a) | ChangePosition::BeforeActivity(a) => a.clone(),
            ChangePosition::AtIndex(i) => i.to_string(),
        }
    }

    pub fn from_parts(kind: &str, anchor: &str) -> Option<Self> {
        match kind {
            "after_activity" if !anchor.is_empty() => Some(ChangePosition::AfterActivity(anchor.into())),
            "before_activity" if !anchor.is_empty() => Some(ChangePosition::BeforeActivity(anchor.into())),
            "at_index" => anchor.parse().ok().map(ChangePosition::AtIndex),
            _ => None,
        }
    }
}

impl fmt::Display for ChangePosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChangePosition::AfterActivity(a) => write!(f, "after \"{a}\""),
            ChangePosition::BeforeActivity(a) => write!(f, "before \"{a}\""),
            ChangePosition::AtIndex(i) => write!(f, "at index {i}"),
        }
    }
}

/// One adaptation of one process instance: what, where, who and when.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChangeEvent {
    pub instance_id: String,
    pub change_type: ChangeType,
    pub target_activity: String,
    pub position: ChangePosition,
    pub initiator: String,
    /// When the change was made, not when the adapted activity ran.
    pub change_time: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ChangeEvent {
    /// Canonical order of changes within one instance: change time, then
    /// type and target text, then the remaining facets.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.change_time
            .cmp(&other.change_time)
            .then_with(|| self.change_type.as_str().cmp(other.change_type.as_str()))
            .then_with(|| self.target_activity.cmp(&other.target_activity))
            .then_with(|| self.position.kind().cmp(other.position.kind()))
            .then_with(|| self.position.anchor().cmp(&other.position.anchor()))
            .then_with(|| self.initiator.cmp(&other.initiator))
            .then_with(|| self.note.cmp(&other.note))
    }

    /// The (type, target, position) triple that identifies the change
    /// independently of who made it and when.
    pub fn triple(&self) -> (ChangeType, &str, &ChangePosition) {
        (self.change_type, &self.target_activity, &self.position)
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} \"{}\" {} by {} at {}",
            self.change_type, self.target_activity, self.position, self.initiator, self.change_time
        );
        if let Some(note) = &self.note {
            s.push_str(&format!(" ({note})"));
        }
        s
    }

    fn to_attributes(&self) -> Vec<Attribute> {
        let mut attrs = vec![
            Attribute::string(KEY_TYPE, self.change_type.as_str()),
            Attribute::string(KEY_TARGET, &self.target_activity),
            Attribute::string(KEY_POSITION_KIND, self.position.kind()),
            Attribute::string(KEY_POSITION_ANCHOR, self.position.anchor()),
            Attribute::string(KEY_INITIATOR, &self.initiator),
            Attribute::date(KEY_TIME, self.change_time),
        ];
        if let Some(note) = &self.note {
            attrs.push(Attribute::string(KEY_NOTE, note));
        }
        attrs
    }
}

/// Groups changes by instance and sorts each group canonically.
pub fn canonical_changes(changes: &[ChangeEvent]) -> BTreeMap<String, Vec<ChangeEvent>> {
    let mut out: BTreeMap<String, Vec<ChangeEvent>> = BTreeMap::new();
    for change in changes {
        out.entry(change.instance_id.clone()).or_default().push(change.clone());
    }
    for list in out.values_mut() {
        list.sort_by(ChangeEvent::canonical_cmp);
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum AdaptationError {
    #[error("log is not valid XES ({} violation(s))", .0.len())]
    InvalidLog(Vec<Violation>),
    #[error("incomplete adaptation annotation at {location}: missing {}", .missing.join(", "))]
    Incomplete {
        location: Location,
        missing: Vec<String>,
    },
    #[error("malformed adaptation annotation at {location}: {rule} on {key}")]
    Malformed {
        location: Location,
        key: String,
        rule: Rule,
    },
    #[error("no trace for process instance `{0}`")]
    UnknownInstance(String),
    #[error("cannot record deletion of `{target}` in `{instance}`: the activity still occurs in the trace")]
    DeleteTargetPresent { instance: String, target: String },
    #[error("annotated log fails adaptation validation ({} violation(s))", .0.len())]
    Invalid(Vec<Violation>),
}

/// Carrier of an annotation: an event, or an entry of a trace's delete list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub trace: usize,
    pub event: Option<usize>,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.event {
            Some(e) => write!(f, "trace {} event {}", self.trace, e),
            None => write!(f, "trace {} delete list", self.trace),
        }
    }
}

/// Facet values read from one carrier, with every problem found.
struct Reading {
    change: Option<ChangeEvent>,
    problems: Vec<(Rule, String)>,
}

fn has_annotation(attrs: &[Attribute]) -> bool {
    attrs.iter().any(|a| a.key.starts_with("adaptation:"))
}

fn read_facets(attrs: &[Attribute], instance_id: &str) -> Reading {
    let mut problems = Vec::new();
    let get = |key: &str| attrs.iter().find(|a| a.key == key).map(|a| &a.value);

    let text = |key: &str, missing: Rule, problems: &mut Vec<(Rule, String)>| -> Option<String> {
        match get(key) {
            None => {
                problems.push((missing, key.to_string()));
                None
            }
            Some(AttributeValue::String(s)) if s.is_empty() => {
                problems.push((missing, key.to_string()));
                None
            }
            Some(AttributeValue::String(s)) => Some(s.clone()),
            Some(_) => {
                problems.push((Rule::WrongValueType, key.to_string()));
                None
            }
        }
    };

    let change_type = text(KEY_TYPE, Rule::MissingType, &mut problems).and_then(|t| match t.parse() {
        Ok(ct) => Some(ct),
        Err(_) => {
            problems.push((Rule::InvalidType, KEY_TYPE.to_string()));
            None
        }
    });
    let target = text(KEY_TARGET, Rule::MissingWhat, &mut problems);
    let kind = text(KEY_POSITION_KIND, Rule::MissingWhere, &mut problems);
    let anchor = text(KEY_POSITION_ANCHOR, Rule::MissingWhere, &mut problems);
    let position = match (&kind, &anchor) {
        (Some(k), Some(a)) => {
            let p = ChangePosition::from_parts(k, a);
            if p.is_none() {
                problems.push((Rule::InvalidPosition, KEY_POSITION_KIND.to_string()));
            }
            p
        }
        _ => None,
    };
    let initiator = text(KEY_INITIATOR, Rule::MissingWho, &mut problems);
    let change_time = match get(KEY_TIME) {
        None => {
            problems.push((Rule::MissingWhen, KEY_TIME.to_string()));
            None
        }
        Some(AttributeValue::Date(t)) => Some(*t),
        Some(_) => {
            problems.push((Rule::WrongValueType, KEY_TIME.to_string()));
            None
        }
    };
    let note = match get(KEY_NOTE) {
        None => None,
        Some(AttributeValue::String(s)) => Some(s.clone()),
        Some(_) => {
            problems.push((Rule::WrongValueType, KEY_NOTE.to_string()));
            None
        }
    };
    for attr in attrs {
        if attr.key.starts_with("adaptation:") && !FACET_KEYS.contains(&attr.key.as_str()) {
            problems.push((Rule::UnknownAdaptationKey, attr.key.clone()));
        }
    }

    let change = match (change_type, target, position, initiator, change_time) {
        (Some(change_type), Some(target_activity), Some(position), Some(initiator), Some(change_time))
            if problems.is_empty() =>
        {
            Some(ChangeEvent {
                instance_id: instance_id.to_string(),
                change_type,
                target_activity,
                position,
                initiator,
                change_time,
                note,
            })
        }
        _ => None,
    };
    Reading { change, problems }
}

/// Delete containers of a trace, or a problem if the carrier is malformed.
fn delete_entries(trace: &Trace) -> Result<Vec<&[Attribute]>, ()> {
    match trace.get(KEY_DELETES) {
        None => Ok(Vec::new()),
        Some(AttributeValue::List(items)) => items
            .iter()
            .map(|item| match &item.value {
                AttributeValue::Container(children) if item.key == KEY_CHANGE => Ok(children.as_slice()),
                _ => Err(()),
            })
            .collect(),
        Some(_) => Err(()),
    }
}

/// Reads the explicit change events of every trace, keyed by instance id.
///
/// Traces without annotations contribute nothing. Each list is in canonical
/// order (see [`ChangeEvent::canonical_cmp`]).
pub fn extract_change_events(log: &EventLog) -> Result<BTreeMap<String, Vec<ChangeEvent>>, AdaptationError> {
    let violations = validate_log(log);
    if !violations.is_empty() {
        return Err(AdaptationError::InvalidLog(violations));
    }
    let mut out = BTreeMap::new();
    for (t, trace) in log.traces.iter().enumerate() {
        let changes = trace_changes(trace, t)?;
        if !changes.is_empty() {
            let instance = trace.instance_id().unwrap_or_default().to_string();
            out.insert(instance, changes);
        }
    }
    Ok(out)
}

/// Change events of one trace in carrier order: inserts in event order, then
/// deletes in list order.
pub fn trace_changes_in_carrier_order(trace: &Trace, index: usize) -> Result<Vec<(Option<usize>, ChangeEvent)>, AdaptationError> {
    let instance = trace.instance_id().unwrap_or_default();
    let mut out = Vec::new();
    let reading_to_change = |reading: Reading, location: Location| -> Result<ChangeEvent, AdaptationError> {
        let missing: Vec<String> = reading
            .problems
            .iter()
            .filter(|(rule, _)| {
                matches!(
                    rule,
                    Rule::MissingType | Rule::MissingWhat | Rule::MissingWhere | Rule::MissingWho | Rule::MissingWhen
                )
            })
            .map(|(_, key)| key.clone())
            .collect();
        if !missing.is_empty() {
            return Err(AdaptationError::Incomplete { location, missing });
        }
        if let Some((rule, key)) = reading.problems.first() {
            return Err(AdaptationError::Malformed {
                location,
                key: key.clone(),
                rule: *rule,
            });
        }
        Ok(reading.change.expect("a reading without problems carries a change"))
    };

    for (e, event) in trace.events.iter().enumerate() {
        if has_annotation(&event.attributes) {
            let location = Location { trace: index, event: Some(e) };
            let change = reading_to_change(read_facets(&event.attributes, instance), location)?;
            if change.change_type == ChangeType::Delete {
                return Err(AdaptationError::Malformed {
                    location,
                    key: KEY_TYPE.into(),
                    rule: Rule::DeleteOnEvent,
                });
            }
            out.push((Some(e), change));
        }
    }
    let location = Location { trace: index, event: None };
    let entries = delete_entries(trace).map_err(|_| AdaptationError::Malformed {
        location,
        key: KEY_DELETES.into(),
        rule: Rule::WrongValueType,
    })?;
    for attrs in entries {
        let change = reading_to_change(read_facets(attrs, instance), location)?;
        if change.change_type == ChangeType::Insert {
            return Err(AdaptationError::Malformed {
                location,
                key: KEY_TYPE.into(),
                rule: Rule::InsertOnTrace,
            });
        }
        out.push((None, change));
    }
    Ok(out)
}

fn trace_changes(trace: &Trace, index: usize) -> Result<Vec<ChangeEvent>, AdaptationError> {
    let mut changes: Vec<ChangeEvent> = trace_changes_in_carrier_order(trace, index)?
        .into_iter()
        .map(|(_, c)| c)
        .collect();
    changes.sort_by(ChangeEvent::canonical_cmp);
    Ok(changes)
}

/// Checks every adaptation annotation in the log. Returns an empty list iff
/// each annotation is complete, well-typed, on the right carrier and the
/// extension is declared.
pub fn validate_adaptation(log: &EventLog) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut annotated = false;

    for (t, trace) in log.traces.iter().enumerate() {
        let instance = trace.instance_id().unwrap_or_default();
        for attr in &trace.attributes {
            if attr.key.starts_with("adaptation:") && attr.key != KEY_DELETES {
                annotated = true;
                out.push(Violation::new(Some(t), None, Some(&attr.key), Rule::UnknownAdaptationKey));
            }
        }
        for (e, event) in trace.events.iter().enumerate() {
            if !has_annotation(&event.attributes) {
                continue;
            }
            annotated = true;
            let reading = read_facets(&event.attributes, instance);
            for (rule, key) in &reading.problems {
                out.push(Violation::new(Some(t), Some(e), Some(key), *rule));
            }
            let Some(change) = reading.change else { continue };
            if change.change_type == ChangeType::Delete {
                out.push(Violation::new(Some(t), Some(e), Some(KEY_TYPE), Rule::DeleteOnEvent));
            }
            if event.activity() != Some(change.target_activity.as_str()) {
                out.push(Violation::new(Some(t), Some(e), Some(KEY_TARGET), Rule::TargetMismatch));
            }
            if let Some(executed) = event.timestamp() {
                if change.change_time > executed {
                    out.push(Violation::new(Some(t), Some(e), Some(KEY_TIME), Rule::ChangeAfterExecution));
                }
            }
        }
        if trace.get(KEY_DELETES).is_some() {
            annotated = true;
        }
        match delete_entries(trace) {
            Err(()) => out.push(Violation::new(Some(t), None, Some(KEY_DELETES), Rule::WrongValueType)),
            Ok(entries) => {
                for attrs in entries {
                    let reading = read_facets(attrs, instance);
                    for (rule, key) in &reading.problems {
                        out.push(Violation::new(Some(t), None, Some(key), *rule));
                    }
                    let Some(change) = reading.change else { continue };
                    if change.change_type == ChangeType::Insert {
                        out.push(Violation::new(Some(t), None, Some(KEY_TYPE), Rule::InsertOnTrace));
                    }
                    if trace.events.iter().any(|e| e.activity() == Some(change.target_activity.as_str())) {
                        out.push(Violation::new(Some(t), None, Some(KEY_TARGET), Rule::DeleteTargetPresent));
                    }
                }
            }
        }
    }

    if annotated && log.extension(PREFIX).is_none() {
        out.insert(0, Violation::new(None, None, Some(PREFIX), Rule::UndeclaredExtension));
    }
    out
}

/// Writes change events into a copy of the log.
///
/// Inserts annotate an unannotated event labelled with the target activity,
/// preferring one whose neighbourhood matches the recorded position. When no
/// such event exists, one carrying only `concept:name` is synthesized at the
/// recorded position. Deletes are appended to the trace's delete list.
pub fn annotate_log(log: &EventLog, changes: &[ChangeEvent]) -> Result<EventLog, AdaptationError> {
    if changes.is_empty() {
        return Ok(log.clone());
    }
    let mut out = log.clone();
    out.declare(extension());

    for (instance, list) in canonical_changes(changes) {
        let trace = out
            .traces
            .iter_mut()
            .find(|t| t.instance_id() == Some(instance.as_str()))
            .ok_or_else(|| AdaptationError::UnknownInstance(instance.clone()))?;
        for change in &list {
            match change.change_type {
                ChangeType::Insert => annotate_insert(trace, change),
                ChangeType::Delete => annotate_delete(trace, change)?,
            }
        }
    }

    let violations = validate_adaptation(&out);
    if !violations.is_empty() {
        return Err(AdaptationError::Invalid(violations));
    }
    Ok(out)
}

fn annotate_insert(trace: &mut Trace, change: &ChangeEvent) {
    let target = change.target_activity.as_str();
    let labels: Vec<Option<String>> = trace.events.iter().map(|e| e.activity().map(str::to_string)).collect();
    let candidates: Vec<usize> = (0..trace.events.len())
        .filter(|&i| labels[i].as_deref() == Some(target) && !has_annotation(&trace.events[i].attributes))
        .collect();

    let matches_position = |i: usize| match &change.position {
        ChangePosition::AfterActivity(a) => i > 0 && labels[i - 1].as_deref() == Some(a.as_str()),
        ChangePosition::BeforeActivity(b) => labels.get(i + 1).and_then(|l| l.as_deref()) == Some(b.as_str()),
        ChangePosition::AtIndex(idx) => i == *idx,
    };

    let index = match candidates.iter().copied().find(|&i| matches_position(i)).or(candidates.first().copied()) {
        Some(i) => i,
        None => {
            let at = match &change.position {
                ChangePosition::AfterActivity(a) => labels
                    .iter()
                    .position(|l| l.as_deref() == Some(a.as_str()))
                    .map_or(labels.len(), |p| p + 1),
                ChangePosition::BeforeActivity(b) => labels
                    .iter()
                    .position(|l| l.as_deref() == Some(b.as_str()))
                    .unwrap_or(labels.len()),
                ChangePosition::AtIndex(idx) => (*idx).min(labels.len()),
            };
            trace
                .events
                .insert(at, Event::new(vec![Attribute::string(CONCEPT_NAME, target)]));
            at
        }
    };
    trace.events[index].attributes.extend(change.to_attributes());
}

fn annotate_delete(trace: &mut Trace, change: &ChangeEvent) -> Result<(), AdaptationError> {
    if trace.events.iter().any(|e| e.activity() == Some(change.target_activity.as_str())) {
        return Err(AdaptationError::DeleteTargetPresent {
            instance: change.instance_id.clone(),
            target: change.target_activity.clone(),
        });
    }
    let entry = Attribute::new(KEY_CHANGE, AttributeValue::Container(change.to_attributes()));
    match trace.attributes.iter_mut().find(|a| a.key == KEY_DELETES) {
        Some(Attribute {
            value: AttributeValue::List(items),
            ..
        }) => items.push(entry),
        _ => trace
            .attributes
            .push(Attribute::new(KEY_DELETES, AttributeValue::List(vec![entry]))),
    }
    Ok(())
}

/// Removes every adaptation annotation and the extension declaration.
/// Events synthesized for inserts are left in place.
pub fn strip_adaptation(log: &EventLog) -> EventLog {
    let mut out = log.clone();
    out.extensions.retain(|e| e.prefix != PREFIX);
    for trace in &mut out.traces {
        trace.attributes.retain(|a| !a.key.starts_with("adaptation:"));
        for event in &mut trace.events {
            event.attributes.retain(|a| !a.key.starts_with("adaptation:"));
        }
    }
    out
}
