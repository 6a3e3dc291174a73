use std::collections::BTreeMap;

use uuid::Uuid;

use super::{encode_local, Attributes, ProvActivity, ProvAgent, ProvDocument, ProvEntity, ProvRelation, ProvValue, RelationKind};
use crate::adaptation::{ChangeEvent, ChangeType};
use crate::holder::{ExecutionPayload, IntegrityVerdict, ProvenanceRecord, RecordKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MappingError {
    #[error("records belong to more than one instance (`{0}` and `{1}`)")]
    MixedInstances(String, String),
    #[error("refusing to map a store that failed validation: {0}")]
    Tampered(IntegrityVerdict),
    #[error("payload of record {0} does not match its kind")]
    UndecodablePayload(Uuid),
}

/// "Add item to cart" becomes "AddItemToCart".
pub fn camel_label(name: &str) -> String {
    let label: String = name
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| {
            let mut chars = w.chars();
            let first = chars.next().map(|c| c.to_uppercase().collect::<String>()).unwrap_or_default();
            first + chars.as_str()
        })
        .collect();
    if label.is_empty() {
        "Activity".to_string()
    } else {
        label
    }
}

struct Builder {
    instance: String,
    doc: ProvDocument,
    agents: BTreeMap<String, String>,
}

impl Builder {
    fn id(&self, kind: &str, ordinal: usize) -> String {
        format!("adprov:{}/{kind}/{ordinal}", self.instance)
    }

    fn agent(&mut self, name: &str) -> String {
        if let Some(id) = self.agents.get(name) {
            return id.clone();
        }
        let id = format!("adprov:agent/{}", encode_local(name));
        self.doc.agents.push(ProvAgent {
            id: id.clone(),
            label: name.to_string(),
            attributes: Attributes::new(),
        });
        self.agents.insert(name.to_string(), id.clone());
        id
    }

    fn relate(&mut self, kind: RelationKind, subject: &str, object: &str) {
        self.doc.relations.push(ProvRelation::new(kind, subject, object));
    }
}

/// Maps the records of one instance to a PROV document.
///
/// Execution records become an Activity plus the Entity it wrote, linked by
/// wasGeneratedBy and associated with the resource Agent. Change records
/// become an `InsertActivity` or `DeleteActivity` associated with the
/// initiator. The inserted activity wasInformedBy its insertion; a delete
/// generates a tombstone Entity named after the removed activity. An insert
/// whose activity never ran generates a placeholder Entity the same way.
pub fn map_to_prov(records: &[ProvenanceRecord], verdict: &IntegrityVerdict) -> Result<ProvDocument, MappingError> {
    if !verdict.is_valid() {
        return Err(MappingError::Tampered(verdict.clone()));
    }
    let Some(first) = records.first() else {
        return Ok(ProvDocument::empty());
    };
    if let Some(other) = records.iter().find(|r| r.instance_id != first.instance_id) {
        return Err(MappingError::MixedInstances(first.instance_id.clone(), other.instance_id.clone()));
    }

    let mut b = Builder {
        instance: encode_local(&first.instance_id),
        doc: ProvDocument::empty(),
        agents: BTreeMap::new(),
    };

    // (record position, activity name, activity id) of every execution
    let mut executed: Vec<(usize, Option<String>, String)> = Vec::new();
    let mut changes: Vec<(usize, &ProvenanceRecord, ChangeEvent)> = Vec::new();

    for (pos, record) in records.iter().enumerate() {
        match record.kind {
            RecordKind::Execution => {
                let payload: ExecutionPayload = record
                    .execution()
                    .ok_or(MappingError::UndecodablePayload(record.record_id))?;
                let n = executed.len();
                let activity_id = b.id("execution", n);
                let entity_id = b.id("entry", n);
                let label = camel_label(payload.activity.as_deref().unwrap_or_default());

                let mut attributes = Attributes::new();
                if let Some(name) = &payload.activity {
                    attributes.insert("adprov:activity".into(), name.as_str().into());
                }
                attributes.insert("adprov:recordId".into(), record.record_id.to_string().as_str().into());
                b.doc.activities.push(ProvActivity {
                    id: activity_id.clone(),
                    label: label.clone(),
                    start: payload.timestamp,
                    end: payload.timestamp,
                    attributes,
                });

                let mut attributes = Attributes::new();
                attributes.insert("adprov:recordedAt".into(), ProvValue::DateTime(record.recorded_at));
                if let Some(t) = payload.timestamp {
                    attributes.insert("adprov:timestamp".into(), ProvValue::DateTime(t));
                }
                b.doc.entities.push(ProvEntity {
                    id: entity_id.clone(),
                    label: format!("{label}Entry"),
                    attributes,
                });
                b.relate(RelationKind::WasGeneratedBy, &entity_id, &activity_id);

                if let Some(resource) = &payload.resource {
                    let agent = b.agent(resource);
                    b.relate(RelationKind::WasAssociatedWith, &activity_id, &agent);
                }
                executed.push((pos, payload.activity.clone(), activity_id));
            }
            RecordKind::Change => {
                let change = record
                    .change_event()
                    .ok_or(MappingError::UndecodablePayload(record.record_id))?;
                changes.push((pos, record, change));
            }
        }
    }

    for (m, (pos, record, change)) in changes.into_iter().enumerate() {
        let activity_id = b.id("change", m);
        let mut attributes = Attributes::new();
        attributes.insert("adprov:target".into(), change.target_activity.as_str().into());
        attributes.insert("adprov:position".into(), change.position.to_string().as_str().into());
        attributes.insert("adprov:recordId".into(), record.record_id.to_string().as_str().into());
        if let Some(note) = &change.note {
            attributes.insert("adprov:note".into(), note.as_str().into());
        }
        b.doc.activities.push(ProvActivity {
            id: activity_id.clone(),
            label: match change.change_type {
                ChangeType::Insert => "InsertActivity",
                ChangeType::Delete => "DeleteActivity",
            }
            .to_string(),
            start: Some(change.change_time),
            end: Some(change.change_time),
            attributes,
        });
        let agent = b.agent(&change.initiator);
        b.relate(RelationKind::WasAssociatedWith, &activity_id, &agent);

        let runs_target = |(_, name, _): &&(usize, Option<String>, String)| name.as_deref() == Some(&change.target_activity);
        // nearest execution of the target before the change record, else the first after it
        let adapted = match change.change_type {
            ChangeType::Insert => executed
                .iter()
                .filter(|e| e.0 < pos)
                .rev()
                .find(runs_target)
                .or_else(|| executed.iter().filter(|e| e.0 > pos).find(runs_target))
                .map(|(_, _, id)| id.clone()),
            ChangeType::Delete => None,
        };
        match adapted {
            Some(adapted) => b.relate(RelationKind::WasInformedBy, &adapted, &activity_id),
            None => {
                let kind = match change.change_type {
                    ChangeType::Insert => "placeholder",
                    ChangeType::Delete => "tombstone",
                };
                let entity_id = b.id(kind, m);
                let mut attributes = Attributes::new();
                attributes.insert("adprov:activity".into(), change.target_activity.as_str().into());
                attributes.insert("adprov:changedAt".into(), ProvValue::DateTime(change.change_time));
                b.doc.entities.push(ProvEntity {
                    id: entity_id.clone(),
                    label: camel_label(&change.target_activity),
                    attributes,
                });
                b.relate(RelationKind::WasGeneratedBy, &entity_id, &activity_id);
            }
        }
    }

    let doc = b.doc.normalized();
    debug_assert!(doc.problems().is_empty(), "{:?}", doc.problems());
    Ok(doc)
}
