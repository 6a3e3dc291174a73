//! Acyclic process models and their complete runs.
//!
//! Models are read from a small JSON flow-graph format:
//!
//! ```json
//! { "name": "shop", "activities": ["A", "B"], "edges": [["A", "B"]], "start": "A", "end": "B" }
//! ```
//!
//! Branching edges have exclusive-choice semantics; there is no parallelism.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model JSON: {0}")]
    Json(String),
    #[error("model has no activities")]
    Empty,
    #[error("edge {from:?} -> {to:?} references undeclared activity {missing:?}")]
    DanglingEdge { from: String, to: String, missing: String },
    #[error("{role} activity {label:?} is not declared")]
    UndeclaredEndpoint { role: &'static str, label: String },
    #[error("start activity {0:?} has an incoming edge")]
    StartHasIncoming(String),
    #[error("end activity {0:?} has an outgoing edge")]
    EndHasOutgoing(String),
    #[error("model contains a cycle through {0:?}")]
    Cycle(Vec<String>),
    #[error("activity {0:?} lies on no start-to-end path")]
    Unreachable(String),
    #[error("model admits {count} runs, more than the budget of {limit}")]
    RunBudgetExceeded { limit: usize, count: u128 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelJson {
    name: String,
    activities: Vec<String>,
    edges: Vec<(String, String)>,
    start: String,
    end: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessModel {
    name: String,
    activities: BTreeSet<String>,
    edges: BTreeSet<(String, String)>,
    start: String,
    end: String,
    successors: BTreeMap<String, Vec<String>>,
}

/// One complete start-to-end activity sequence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Run {
    pub steps: Vec<String>,
}

impl ProcessModel {
    pub fn new<I, E>(name: &str, activities: I, edges: E, start: &str, end: &str) -> Result<Self, ModelError>
    where
        I: IntoIterator,
        I::Item: Into<String>,
        E: IntoIterator<Item = (String, String)>,
    {
        let activities: BTreeSet<String> = activities.into_iter().map(Into::into).collect();
        let edges: BTreeSet<(String, String)> = edges.into_iter().collect();
        if activities.is_empty() {
            return Err(ModelError::Empty);
        }
        for (role, label) in [("start", start), ("end", end)] {
            if !activities.contains(label) {
                return Err(ModelError::UndeclaredEndpoint {
                    role,
                    label: label.to_string(),
                });
            }
        }
        for (from, to) in &edges {
            for endpoint in [from, to] {
                if !activities.contains(endpoint) {
                    return Err(ModelError::DanglingEdge {
                        from: from.clone(),
                        to: to.clone(),
                        missing: endpoint.clone(),
                    });
                }
            }
        }
        if edges.iter().any(|(_, to)| to == start) {
            return Err(ModelError::StartHasIncoming(start.to_string()));
        }
        if edges.iter().any(|(from, _)| from == end) {
            return Err(ModelError::EndHasOutgoing(end.to_string()));
        }

        let mut successors: BTreeMap<String, Vec<String>> =
            activities.iter().map(|a| (a.clone(), Vec::new())).collect();
        let mut predecessors: BTreeMap<&str, Vec<&str>> = activities.iter().map(|a| (a.as_str(), Vec::new())).collect();
        for (from, to) in &edges {
            successors.get_mut(from).unwrap().push(to.clone());
            predecessors.get_mut(to.as_str()).unwrap().push(from);
        }

        // Kahn's algorithm; whatever is left over sits on a cycle.
        let mut indegree: BTreeMap<&str, usize> = predecessors.iter().map(|(k, v)| (*k, v.len())).collect();
        let mut queue: VecDeque<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
        let mut sorted = 0;
        while let Some(node) = queue.pop_front() {
            sorted += 1;
            for next in &successors[node] {
                let d = indegree.get_mut(next.as_str()).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push_back(next);
                }
            }
        }
        if sorted < activities.len() {
            let cyclic = indegree.into_iter().filter(|(_, d)| *d > 0).map(|(k, _)| k.to_string()).collect();
            return Err(ModelError::Cycle(cyclic));
        }

        let forward = reach(start, |n| successors[n].iter().map(String::as_str).collect());
        let backward = reach(end, |n| predecessors[n].clone());
        if let Some(stray) = activities.iter().find(|a| !forward.contains(a.as_str()) || !backward.contains(a.as_str())) {
            return Err(ModelError::Unreachable(stray.clone()));
        }

        Ok(ProcessModel {
            name: name.to_string(),
            activities,
            edges,
            start: start.to_string(),
            end: end.to_string(),
            successors,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn activities(&self) -> &BTreeSet<String> {
        &self.activities
    }

    pub fn edges(&self) -> &BTreeSet<(String, String)> {
        &self.edges
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn end(&self) -> &str {
        &self.end
    }

    pub fn successors(&self, activity: &str) -> &[String] {
        self.successors.get(activity).map_or(&[], Vec::as_slice)
    }

    /// Number of distinct start-to-end paths, saturating at `u128::MAX`.
    pub fn run_count(&self) -> u128 {
        let mut memo = BTreeMap::new();
        self.count_from(&self.start, &mut memo)
    }

    fn count_from<'a>(&'a self, node: &'a str, memo: &mut BTreeMap<&'a str, u128>) -> u128 {
        if node == self.end {
            return 1;
        }
        if let Some(&c) = memo.get(node) {
            return c;
        }
        let total = self
            .successors(node)
            .iter()
            .fold(0u128, |acc, next| acc.saturating_add(self.count_from(next, memo)));
        memo.insert(node, total);
        total
    }

    /// Serializes to the JSON model format.
    pub fn to_json(&self) -> String {
        let json = ModelJson {
            name: self.name.clone(),
            activities: self.activities.iter().cloned().collect(),
            edges: self.edges.iter().cloned().collect(),
            start: self.start.clone(),
            end: self.end.clone(),
        };
        serde_json::to_string(&json).expect("model JSON is always serializable")
    }
}

fn reach<'a>(from: &'a str, next: impl Fn(&'a str) -> Vec<&'a str>) -> BTreeSet<&'a str> {
    let mut seen = BTreeSet::from([from]);
    let mut stack = vec![from];
    while let Some(node) = stack.pop() {
        for n in next(node) {
            if seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen
}

/// Reads and validates a model in the JSON flow-graph format.
pub fn parse_model(text: &str) -> Result<ProcessModel, ModelError> {
    let json: ModelJson = serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
    ProcessModel::new(&json.name, json.activities, json.edges, &json.start, &json.end)
}

impl Run {
    /// True when the run starts at `start`, ends at `end` and follows edges.
    pub fn is_valid_for(&self, model: &ProcessModel) -> bool {
        self.steps.first().map(String::as_str) == Some(model.start())
            && self.steps.last().map(String::as_str) == Some(model.end())
            && self
                .steps
                .windows(2)
                .all(|w| model.edges().contains(&(w[0].clone(), w[1].clone())))
    }
}

/// All start-to-end runs in lexicographic order of their label sequences.
///
/// Fails instead of truncating when the model admits more than `max_runs`.
pub fn enumerate_runs(model: &ProcessModel, max_runs: usize) -> Result<Vec<Run>, ModelError> {
    let count = model.run_count();
    if count > max_runs as u128 {
        return Err(ModelError::RunBudgetExceeded { limit: max_runs, count });
    }
    let mut runs = Vec::with_capacity(count as usize);
    let mut path = vec![model.start().to_string()];
    walk(model, &mut path, &mut runs);
    Ok(runs)
}

// Successor lists are sorted and no run is a prefix of another (the end has
// no outgoing edge), so depth-first order is lexicographic order.
fn walk(model: &ProcessModel, path: &mut Vec<String>, runs: &mut Vec<Run>) {
    let last = path.last().unwrap().clone();
    if last == model.end() {
        runs.push(Run { steps: path.clone() });
        return;
    }
    for next in model.successors(&last) {
        path.push(next.clone());
        walk(model, path, runs);
        path.pop();
    }
}
