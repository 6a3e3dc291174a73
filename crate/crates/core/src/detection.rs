//! Change detection for logs without explicit adaptation annotations.
//!
//! Each trace is aligned against every run of the process model with a
//! minimal insert/delete edit script (no substitutions). The closest run wins
//! and its script becomes the list of derived change events.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::adaptation::{annotate_log, validate_adaptation, AdaptationError, ChangeEvent, ChangePosition, ChangeType};
use crate::model::{enumerate_runs, ModelError, ProcessModel, Run};
use crate::timestamp::Timestamp;
use crate::xes::{EventLog, Trace};

/// Marker written to the note of every derived change event.
pub const DERIVED_NOTE: &str = "derived=true";
pub const DEFAULT_MAX_RUNS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditKind {
    Insert,
    Delete,
}

/// One edit turning the reference run into the observed trace.
///
/// For an insert, `trace_position` is the index of the inserted event in the
/// trace. For a delete, it is the trace index before which the model
/// activity is missing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EditOp {
    pub kind: EditKind,
    pub label: String,
    pub trace_position: usize,
}

impl fmt::Display for EditOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            EditKind::Insert => "insert",
            EditKind::Delete => "delete",
        };
        write!(f, "{kind}({}, {})", self.label, self.trace_position)
    }
}

/// Minimal insert/delete script from `reference` to `observed`.
///
/// The length is always `|reference| + |observed| - 2 * LCS`. Among the
/// minimal scripts, the one produced takes at each step a delete if that
/// stays optimal, else an insert, else a match; edits therefore land as
/// early as possible, deletes before inserts.
pub fn edit_script<R: AsRef<str>, O: AsRef<str>>(reference: &[R], observed: &[O]) -> Vec<EditOp> {
    let n = reference.len();
    let m = observed.len();
    let width = m + 1;
    // dist[i * width + j]: edit distance between reference[i..] and observed[j..]
    let mut dist = vec![0usize; (n + 1) * width];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            dist[i * width + j] = if i == n {
                m - j
            } else if j == m {
                n - i
            } else if reference[i].as_ref() == observed[j].as_ref() {
                dist[(i + 1) * width + j + 1]
            } else {
                1 + dist[(i + 1) * width + j].min(dist[i * width + j + 1])
            };
        }
    }

    let mut script = Vec::with_capacity(dist[0]);
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let here = dist[i * width + j];
        if i < n && dist[(i + 1) * width + j] + 1 == here {
            script.push(EditOp {
                kind: EditKind::Delete,
                label: reference[i].as_ref().to_string(),
                trace_position: j,
            });
            i += 1;
        } else if j < m && dist[i * width + j + 1] + 1 == here {
            script.push(EditOp {
                kind: EditKind::Insert,
                label: observed[j].as_ref().to_string(),
                trace_position: j,
            });
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    script
}

/// Applies a script produced by [`edit_script`] to its reference sequence.
/// Returns `None` if the script does not fit the reference.
pub fn apply_script<R: AsRef<str>>(reference: &[R], script: &[EditOp]) -> Option<Vec<String>> {
    let mut out = Vec::with_capacity(reference.len() + script.len());
    let mut next = 0;
    for op in script {
        match op.kind {
            EditKind::Delete => {
                while out.len() < op.trace_position {
                    out.push(reference.get(next)?.as_ref().to_string());
                    next += 1;
                }
                if out.len() != op.trace_position || reference.get(next)?.as_ref() != op.label {
                    return None;
                }
                next += 1;
            }
            EditKind::Insert => {
                while out.len() < op.trace_position {
                    out.push(reference.get(next)?.as_ref().to_string());
                    next += 1;
                }
                if out.len() != op.trace_position {
                    return None;
                }
                out.push(op.label.clone());
            }
        }
    }
    out.extend(reference[next..].iter().map(|s| s.as_ref().to_string()));
    Some(out)
}

/// Facets that cannot be recovered from an unannotated log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionDefaults {
    pub initiator: String,
    /// Change time for every derived event. `None` uses the earliest event
    /// timestamp of the trace, or the Unix epoch when the trace has none.
    pub change_time: Option<Timestamp>,
    pub max_runs: usize,
}

impl DetectionDefaults {
    pub fn new(initiator: &str) -> Self {
        DetectionDefaults {
            initiator: initiator.to_string(),
            change_time: None,
            max_runs: DEFAULT_MAX_RUNS,
        }
    }
}

impl Default for DetectionDefaults {
    fn default() -> Self {
        Self::new("unknown")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DetectionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Adaptation(#[from] AdaptationError),
    #[error("trace {0} has no instance id")]
    MissingInstanceId(usize),
}

/// Closest run of the model to `observed`: minimal script length, ties
/// going to the lexicographically smallest run.
pub fn best_run<'a>(runs: &'a [Run], observed: &[&str]) -> Option<(&'a Run, Vec<EditOp>)> {
    let mut best: Option<(&Run, Vec<EditOp>)> = None;
    for run in runs {
        let script = edit_script(&run.steps, observed);
        if best.as_ref().is_none_or(|(_, b)| script.len() < b.len()) {
            best = Some((run, script));
        }
    }
    best
}

/// Derives the change events of one trace against the model.
pub fn detect_changes(
    model: &ProcessModel,
    trace: &Trace,
    defaults: &DetectionDefaults,
) -> Result<Vec<ChangeEvent>, DetectionError> {
    let runs = enumerate_runs(model, defaults.max_runs)?;
    let observed = trace.activities();
    let Some((_, script)) = best_run(&runs, &observed) else {
        return Ok(Vec::new());
    };
    let instance_id = trace.instance_id().unwrap_or_default().to_string();
    let change_time = defaults.change_time.unwrap_or_else(|| {
        trace
            .events
            .iter()
            .filter_map(|e| e.timestamp())
            .min()
            .unwrap_or_else(Timestamp::epoch)
    });

    Ok(script
        .into_iter()
        .map(|op| ChangeEvent {
            instance_id: instance_id.clone(),
            change_type: match op.kind {
                EditKind::Insert => ChangeType::Insert,
                EditKind::Delete => ChangeType::Delete,
            },
            target_activity: op.label,
            position: match op.trace_position {
                0 => ChangePosition::AtIndex(0),
                p => ChangePosition::AfterActivity(observed[p - 1].to_string()),
            },
            initiator: defaults.initiator.clone(),
            change_time,
            note: Some(DERIVED_NOTE.to_string()),
        })
        .collect())
}

/// Runs detection on every trace and writes the results into a copy of the
/// log as adaptation annotations.
pub fn derive_annotated_log(
    model: &ProcessModel,
    log: &EventLog,
    defaults: &DetectionDefaults,
) -> Result<EventLog, DetectionError> {
    let mut changes = Vec::new();
    for (t, trace) in log.traces.iter().enumerate() {
        if trace.instance_id().is_none() {
            return Err(DetectionError::MissingInstanceId(t));
        }
        changes.extend(detect_changes(model, trace, defaults)?);
    }
    let annotated = annotate_log(log, &changes)?;
    debug_assert!(validate_adaptation(&annotated).is_empty());
    Ok(annotated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::extract_change_events;
    use crate::model::parse_model;
    use crate::xes::{Attribute, Event, Extension, CONCEPT_NAME};

    fn op(kind: EditKind, label: &str, pos: usize) -> EditOp {
        EditOp {
            kind,
            label: label.into(),
            trace_position: pos,
        }
    }

    fn shop_model() -> ProcessModel {
        parse_model(
            r#"{"name":"shop","activities":["Add item to cart","Checkout"],
            "edges":[["Add item to cart","Checkout"]],"start":"Add item to cart","end":"Checkout"}"#,
        )
        .unwrap()
    }

    fn trace(id: &str, labels: &[&str]) -> Trace {
        Trace {
            attributes: vec![Attribute::string(CONCEPT_NAME, id)],
            events: labels
                .iter()
                .map(|l| Event::new(vec![Attribute::string(CONCEPT_NAME, *l)]))
                .collect(),
        }
    }

    #[test]
    fn inserted_activity() {
        let script = edit_script(
            &["Add item to cart", "Checkout"],
            &["Add item to cart", "Go to cart", "Checkout"],
        );
        assert_eq!(script, vec![op(EditKind::Insert, "Go to cart", 1)]);
    }

    #[test]
    fn identity() {
        assert!(edit_script(&["A", "B"], &["A", "B"]).is_empty());
        assert!(edit_script::<&str, &str>(&[], &[]).is_empty());
    }

    #[test]
    fn delete_comes_before_insert() {
        let script = edit_script(&["A", "B"], &["B", "A"]);
        assert_eq!(script, vec![op(EditKind::Delete, "A", 0), op(EditKind::Insert, "A", 1)]);
        assert_eq!(apply_script(&["A", "B"], &script).unwrap(), vec!["B", "A"]);
    }

    #[test]
    fn earliest_position_wins() {
        assert_eq!(edit_script(&["A", "A"], &["A"]), vec![op(EditKind::Delete, "A", 0)]);
    }

    #[test]
    fn apply_rejects_mismatched_script() {
        assert!(apply_script(&["A"], &[op(EditKind::Delete, "B", 0)]).is_none());
    }

    #[test]
    fn detects_the_shopping_insert() {
        let changes = detect_changes(
            &shop_model(),
            &trace("shop-1", &["Add item to cart", "Go to cart", "Checkout"]),
            &DetectionDefaults::default(),
        )
        .unwrap();
        assert_eq!(changes.len(), 1);
        assert_eq!(
            changes[0].triple(),
            (
                ChangeType::Insert,
                "Go to cart",
                &ChangePosition::AfterActivity("Add item to cart".into())
            )
        );
        assert_eq!(changes[0].note.as_deref(), Some(DERIVED_NOTE));
        assert_eq!(changes[0].initiator, "unknown");
    }

    #[test]
    fn conforming_trace_has_no_changes() {
        let changes = detect_changes(
            &shop_model(),
            &trace("shop-1", &["Add item to cart", "Checkout"]),
            &DetectionDefaults::default(),
        )
        .unwrap();
        assert!(changes.is_empty());
    }

    #[test]
    fn leading_delete_is_at_index_zero() {
        let changes =
            detect_changes(&shop_model(), &trace("s", &["Checkout"]), &DetectionDefaults::default()).unwrap();
        assert_eq!(changes[0].change_type, ChangeType::Delete);
        assert_eq!(changes[0].position, ChangePosition::AtIndex(0));
    }

    #[test]
    fn derived_log_round_trips_through_extraction() {
        let log = EventLog {
            extensions: vec![Extension::concept()],
            traces: vec![
                trace("a", &["Add item to cart", "Go to cart", "Checkout"]),
                trace("b", &["Add item to cart", "Checkout"]),
            ],
            ..EventLog::default()
        };
        let annotated = derive_annotated_log(&shop_model(), &log, &DetectionDefaults::default()).unwrap();
        let extracted = extract_change_events(&annotated).unwrap();
        assert_eq!(extracted.len(), 1);
        assert_eq!(extracted["a"][0].target_activity, "Go to cart");
    }

    #[test]
    fn unadapted_log_stays_unannotated() {
        let log = EventLog {
            extensions: vec![Extension::concept()],
            traces: vec![trace("b", &["Add item to cart", "Checkout"])],
            ..EventLog::default()
        };
        let annotated = derive_annotated_log(&shop_model(), &log, &DetectionDefaults::default()).unwrap();
        assert_eq!(annotated, log);
    }
}
