use serde_json::{json, Map, Value};

use super::{Attributes, ProvActivity, ProvAgent, ProvDocument, ProvEntity, ProvError, ProvRelation, ProvValue, RelationKind, BUILTIN_PREFIXES};
use crate::timestamp::Timestamp;

const FORMAT: &str = "PROV-JSON";

fn blank_prefix(kind: RelationKind) -> &'static str {
    match kind {
        RelationKind::WasGeneratedBy => "wGB",
        RelationKind::Used => "u",
        RelationKind::WasAssociatedWith => "wAW",
        RelationKind::WasInformedBy => "wIB",
    }
}

fn attribute_value(value: &ProvValue) -> Value {
    match value {
        ProvValue::String(s) => Value::String(s.clone()),
        ProvValue::DateTime(t) => json!({"$": t.to_string(), "type": "xsd:dateTime"}),
    }
}

fn element(label: &str, attributes: &Attributes) -> Map<String, Value> {
    let mut body = Map::new();
    body.insert("prov:label".into(), Value::String(label.to_string()));
    for (key, value) in attributes {
        body.insert(key.clone(), attribute_value(value));
    }
    body
}

/// PROV-JSON with sorted keys. Relations get blank-node ids numbered in
/// sorted order.
pub fn serialize_prov_json(doc: &ProvDocument) -> Result<String, ProvError> {
    doc.check()?;
    let doc = doc.clone().normalized();
    let mut root = Map::new();

    let prefixes: Map<String, Value> = doc
        .namespaces
        .iter()
        .filter(|(p, _)| !BUILTIN_PREFIXES.contains(&p.as_str()))
        .map(|(p, uri)| (p.clone(), Value::String(uri.clone())))
        .collect();
    root.insert("prefix".into(), Value::Object(prefixes));

    if !doc.entities.is_empty() {
        let section = doc
            .entities
            .iter()
            .map(|e| (e.id.clone(), Value::Object(element(&e.label, &e.attributes))))
            .collect();
        root.insert("entity".into(), Value::Object(section));
    }
    if !doc.activities.is_empty() {
        let section = doc
            .activities
            .iter()
            .map(|a| {
                let mut body = element(&a.label, &a.attributes);
                if let Some(t) = a.start {
                    body.insert("prov:startTime".into(), Value::String(t.to_string()));
                }
                if let Some(t) = a.end {
                    body.insert("prov:endTime".into(), Value::String(t.to_string()));
                }
                (a.id.clone(), Value::Object(body))
            })
            .collect();
        root.insert("activity".into(), Value::Object(section));
    }
    if !doc.agents.is_empty() {
        let section = doc
            .agents
            .iter()
            .map(|a| (a.id.clone(), Value::Object(element(&a.label, &a.attributes))))
            .collect();
        root.insert("agent".into(), Value::Object(section));
    }
    for kind in RelationKind::ALL {
        let (subject_role, object_role) = kind.json_roles();
        let section: Map<String, Value> = doc
            .relations_of(kind)
            .enumerate()
            .map(|(i, r)| {
                let mut body = Map::new();
                body.insert(subject_role.into(), Value::String(r.subject.clone()));
                body.insert(object_role.into(), Value::String(r.object.clone()));
                if let Some(label) = &r.label {
                    body.insert("prov:label".into(), Value::String(label.clone()));
                }
                (format!("_:{}{}", blank_prefix(kind), i + 1), Value::Object(body))
            })
            .collect();
        if !section.is_empty() {
            root.insert(kind.name().into(), Value::Object(section));
        }
    }

    let mut text = serde_json::to_string_pretty(&Value::Object(root)).expect("JSON values serialize");
    text.push('\n');
    Ok(text)
}

fn offset_of(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    line_start + column.saturating_sub(1)
}

fn invalid(message: impl Into<String>) -> ProvError {
    ProvError::Syntax {
        format: FORMAT,
        offset: 0,
        message: message.into(),
    }
}

fn object<'a>(value: &'a Value, what: &str) -> Result<&'a Map<String, Value>, ProvError> {
    value.as_object().ok_or_else(|| invalid(format!("{what} must be an object")))
}

fn string<'a>(value: &'a Value, what: &str) -> Result<&'a str, ProvError> {
    value.as_str().ok_or_else(|| invalid(format!("{what} must be a string")))
}

fn time(value: &Value, what: &str) -> Result<Timestamp, ProvError> {
    Timestamp::parse(string(value, what)?).map_err(|e| invalid(format!("{what}: {e}")))
}

struct ElementBody {
    label: String,
    start: Option<Timestamp>,
    end: Option<Timestamp>,
    attributes: Attributes,
}

fn element_body(id: &str, value: &Value, allow_times: bool) -> Result<ElementBody, ProvError> {
    let mut body = ElementBody {
        label: String::new(),
        start: None,
        end: None,
        attributes: Attributes::new(),
    };
    for (key, value) in object(value, id)? {
        match key.as_str() {
            "prov:label" => body.label = string(value, "prov:label")?.to_string(),
            "prov:startTime" if allow_times => body.start = Some(time(value, key)?),
            "prov:endTime" if allow_times => body.end = Some(time(value, key)?),
            _ => {
                let parsed = match value {
                    Value::String(s) => ProvValue::String(s.clone()),
                    Value::Object(typed) if typed.get("type").and_then(Value::as_str) == Some("xsd:dateTime") => {
                        let raw = typed.get("$").ok_or_else(|| invalid(format!("{key} of {id} lacks `$`")))?;
                        ProvValue::DateTime(time(raw, key)?)
                    }
                    _ => return Err(invalid(format!("unsupported value for {key} of {id}"))),
                };
                body.attributes.insert(key.clone(), parsed);
            }
        }
    }
    Ok(body)
}

/// Parses the PROV-JSON subset written by [`serialize_prov_json`] and checks
/// the result for structural validity.
pub fn parse_prov_json(text: &str) -> Result<ProvDocument, ProvError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ProvError::Syntax {
        format: FORMAT,
        offset: offset_of(text, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let root = object(&root, "document")?;
    let mut doc = ProvDocument::empty();
    doc.namespaces.retain(|prefix, _| BUILTIN_PREFIXES.contains(&prefix.as_str()));

    for (section, value) in root {
        let members = object(value, section)?;
        match section.as_str() {
            "prefix" => {
                for (prefix, uri) in members {
                    doc.namespaces.insert(prefix.clone(), string(uri, prefix)?.to_string());
                }
            }
            "entity" => {
                for (id, body) in members {
                    let b = element_body(id, body, false)?;
                    doc.entities.push(ProvEntity {
                        id: id.clone(),
                        label: b.label,
                        attributes: b.attributes,
                    });
                }
            }
            "activity" => {
                for (id, body) in members {
                    let b = element_body(id, body, true)?;
                    doc.activities.push(ProvActivity {
                        id: id.clone(),
                        label: b.label,
                        start: b.start,
                        end: b.end,
                        attributes: b.attributes,
                    });
                }
            }
            "agent" => {
                for (id, body) in members {
                    let b = element_body(id, body, false)?;
                    doc.agents.push(ProvAgent {
                        id: id.clone(),
                        label: b.label,
                        attributes: b.attributes,
                    });
                }
            }
            other => {
                let kind = RelationKind::from_name(other).ok_or_else(|| invalid(format!("unknown section `{other}`")))?;
                let (subject_role, object_role) = kind.json_roles();
                for (id, body) in members {
                    let body = object(body, id)?;
                    let mut relation = ProvRelation::new(kind, "", "");
                    for (key, value) in body {
                        match key.as_str() {
                            k if k == subject_role => relation.subject = string(value, k)?.to_string(),
                            k if k == object_role => relation.object = string(value, k)?.to_string(),
                            "prov:label" => relation.label = Some(string(value, key)?.to_string()),
                            _ => return Err(invalid(format!("unsupported member `{key}` in {id}"))),
                        }
                    }
                    if relation.subject.is_empty() || relation.object.is_empty() {
                        return Err(invalid(format!("{id} lacks {subject_role} or {object_role}")));
                    }
                    doc.relations.push(relation);
                }
            }
        }
    }
    doc.check()?;
    Ok(doc.normalized())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_has_only_prefixes() {
        let text = serialize_prov_json(&ProvDocument::empty()).unwrap();
        let value: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value, json!({"prefix": {"adprov": "urn:adprov:"}}));
        assert_eq!(parse_prov_json(&text).unwrap(), ProvDocument::empty());
    }

    #[test]
    fn round_trip() {
        let mut doc = ProvDocument::empty();
        let mut attributes = Attributes::new();
        attributes.insert("adprov:when".into(), ProvValue::DateTime(Timestamp::from_millis(1).unwrap()));
        doc.agents.push(ProvAgent {
            id: "adprov:agent/R".into(),
            label: "R".into(),
            attributes: attributes.clone(),
        });
        doc.activities.push(ProvActivity {
            id: "adprov:a".into(),
            label: "A".into(),
            start: None,
            end: Some(Timestamp::epoch()),
            attributes,
        });
        doc.relations
            .push(ProvRelation::new(RelationKind::WasAssociatedWith, "adprov:a", "adprov:agent/R"));
        let text = serialize_prov_json(&doc).unwrap();
        assert!(text.contains("\"_:wAW1\""));
        assert_eq!(parse_prov_json(&text).unwrap(), doc.normalized());
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(parse_prov_json("{\n  \"prefix\": "), Err(ProvError::Syntax { .. })));
        assert!(parse_prov_json("[]").is_err());
        assert!(parse_prov_json(r#"{"prefix":{"adprov":"urn:adprov:"},"bundle":{}}"#).is_err());
        assert!(parse_prov_json(r#"{"prefix":{"adprov":"urn:adprov:"},"used":{"_:u1":{"prov:activity":"adprov:a"}}}"#).is_err());
        assert!(matches!(
            parse_prov_json(r#"{"prefix":{"adprov":"urn:adprov:"},"entity":{"bad id":{}}}"#),
            Err(ProvError::Invalid(_))
        ));
    }
}
