use std::collections::{BTreeSet, HashSet};

use super::{key_prefix, Attribute, AttributeValue, EventLog, CONCEPT_NAME};
use crate::violation::{Rule, Violation};

/// Checks every structural invariant of a log. Returns an empty list iff the
/// log is valid.
pub fn validate_log(log: &EventLog) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut prefixes = HashSet::new();
    for ext in &log.extensions {
        if !prefixes.insert(ext.prefix.as_str()) {
            out.push(Violation::new(None, None, Some(&ext.prefix), Rule::DuplicateExtensionPrefix));
        }
    }

    let ctx = Ctx { prefixes: &prefixes };
    ctx.check_level(&log.attributes, None, None, &mut out);
    for global in &log.globals {
        ctx.check_level(&global.attributes, None, None, &mut out);
    }

    let mut instances = BTreeSet::new();
    for (t, trace) in log.traces.iter().enumerate() {
        ctx.check_level(&trace.attributes, Some(t), None, &mut out);
        match trace.attributes.iter().find(|a| a.key == CONCEPT_NAME) {
            None => out.push(Violation::new(Some(t), None, Some(CONCEPT_NAME), Rule::MissingInstanceId)),
            Some(attr) => {
                if let AttributeValue::String(id) = &attr.value {
                    if !instances.insert(id.as_str()) {
                        out.push(Violation::new(Some(t), None, Some(CONCEPT_NAME), Rule::DuplicateInstanceId));
                    }
                }
            }
        }
        for (e, event) in trace.events.iter().enumerate() {
            ctx.check_level(&event.attributes, Some(t), Some(e), &mut out);
        }
    }
    out
}

struct Ctx<'a> {
    prefixes: &'a HashSet<&'a str>,
}

impl Ctx<'_> {
    /// Checks one attribute list: duplicate keys at this level, then every
    /// attribute recursively.
    fn check_level(&self, attrs: &[Attribute], trace: Option<usize>, event: Option<usize>, out: &mut Vec<Violation>) {
        let mut seen = HashSet::new();
        for attr in attrs {
            if !seen.insert(attr.key.as_str()) {
                out.push(Violation::new(trace, event, Some(&attr.key), Rule::DuplicateKey));
            }
            if attr.key == CONCEPT_NAME && !matches!(attr.value, AttributeValue::String(_)) {
                out.push(Violation::new(trace, event, Some(&attr.key), Rule::ConceptNameNotString));
            }
            self.check_attribute(attr, trace, event, out);
        }
    }

    fn check_attribute(&self, attr: &Attribute, trace: Option<usize>, event: Option<usize>, out: &mut Vec<Violation>) {
        let key = Some(attr.key.as_str());
        if attr.key.is_empty() {
            out.push(Violation::new(trace, event, key, Rule::EmptyKey));
        } else if attr.key.matches(':').count() > 1 || attr.key.starts_with(':') || attr.key.ends_with(':') {
            out.push(Violation::new(trace, event, key, Rule::MalformedKey));
        } else if let Some(prefix) = key_prefix(&attr.key) {
            if !self.prefixes.contains(prefix) {
                out.push(Violation::new(trace, event, key, Rule::UndeclaredPrefix));
            }
        }
        let text_ok = match &attr.value {
            AttributeValue::String(s) => xml_safe(s),
            AttributeValue::Id(s) => xml_safe(s),
            _ => true,
        };
        if !xml_safe(&attr.key) || !text_ok {
            out.push(Violation::new(trace, event, key, Rule::InvalidCharacter));
        }
        if let AttributeValue::Id(id) = &attr.value {
            if !is_uuid(id) {
                out.push(Violation::new(trace, event, key, Rule::InvalidId));
            }
        }
        match &attr.value {
            AttributeValue::Container(children) => {
                // every child element of a container is a member
                if !attr.nested.is_empty() {
                    out.push(Violation::new(trace, event, key, Rule::ContainerMetaAttributes));
                }
                self.check_level(children, trace, event, out)
            }
            AttributeValue::List(items) => {
                for item in items {
                    self.check_attribute(item, trace, event, out);
                }
            }
            _ => {}
        }
        if !attr.nested.is_empty() {
            self.check_level(&attr.nested, trace, event, out);
        }
    }
}

fn xml_safe(text: &str) -> bool {
    text.chars().all(|c| {
        matches!(c, '\t' | '\n' | '\r' | '\u{20}'..='\u{D7FF}' | '\u{E000}'..='\u{FFFD}' | '\u{10000}'..)
    })
}

/// True for the hyphenated 8-4-4-4-12 hexadecimal form.
pub fn is_uuid(text: &str) -> bool {
    let groups: Vec<&str> = text.split('-').collect();
    groups.len() == 5
        && groups
            .iter()
            .zip([8, 4, 4, 4, 12])
            .all(|(g, len)| g.len() == len && g.bytes().all(|b| b.is_ascii_hexdigit()))
}
