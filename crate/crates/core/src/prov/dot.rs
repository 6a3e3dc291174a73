use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{Attributes, ProvDocument, ProvError, ProvValue};
use crate::timestamp::Timestamp;

const FORMAT: &str = "DOT";

const ENTITY_STYLE: &str = "shape=ellipse, style=filled, fillcolor=\"#FFFC87\", color=\"#808080\"";
const ACTIVITY_STYLE: &str = "shape=box, style=filled, fillcolor=\"#9FB1FC\", color=\"#0000FF\"";
const AGENT_STYLE: &str = "shape=house, style=filled, fillcolor=\"#FED37F\"";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => {}
            c => out.push(c),
        }
    }
    out
}

fn timed_label(label: &str, times: impl IntoIterator<Item = (String, Timestamp)>) -> String {
    let mut lines = vec![escape(label)];
    lines.extend(times.into_iter().map(|(key, t)| escape(&format!("{key}: {t}"))));
    lines.join("\\n")
}

fn dated(attributes: &Attributes) -> Vec<(String, Timestamp)> {
    attributes
        .iter()
        .filter_map(|(k, v)| match v {
            ProvValue::DateTime(t) => Some((k.clone(), *t)),
            ProvValue::String(_) => None,
        })
        .collect()
}

/// Graphviz digraph with PROV shapes: entities as ellipses, activities as
/// boxes, agents as houses. Edges point from subject to object.
pub fn to_dot(doc: &ProvDocument) -> Result<String, ProvError> {
    doc.check()?;
    let doc = doc.clone().normalized();
    let mut out = String::from("digraph \"prov\" {\n  rankdir=BT;\n");
    out.push_str("  node [fontname=\"Helvetica\", fontsize=10];\n");
    out.push_str("  edge [fontname=\"Helvetica\", fontsize=8];\n");

    for e in &doc.entities {
        let label = timed_label(&e.label, dated(&e.attributes));
        let _ = writeln!(out, "  \"{}\" [{ENTITY_STYLE}, label=\"{label}\"];", escape(&e.id));
    }
    for a in &doc.activities {
        let mut times = Vec::new();
        if let Some(t) = a.start {
            times.push(("start".to_string(), t));
        }
        if let Some(t) = a.end.filter(|t| Some(*t) != a.start) {
            times.push(("end".to_string(), t));
        }
        times.extend(dated(&a.attributes));
        let label = timed_label(&a.label, times);
        let _ = writeln!(out, "  \"{}\" [{ACTIVITY_STYLE}, label=\"{label}\"];", escape(&a.id));
    }
    for a in &doc.agents {
        let label = timed_label(&a.label, dated(&a.attributes));
        let _ = writeln!(out, "  \"{}\" [{AGENT_STYLE}, label=\"{label}\"];", escape(&a.id));
    }
    for r in &doc.relations {
        let label = match &r.label {
            Some(l) => format!("{}\\n{}", r.kind, escape(l)),
            None => r.kind.to_string(),
        };
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{label}\"];",
            escape(&r.subject),
            escape(&r.object)
        );
    }
    out.push_str("}\n");
    Ok(out)
}

/// What a structurally valid digraph declares.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DotSummary {
    pub nodes: BTreeSet<String>,
    /// (from, to, label) in file order.
    pub edges: Vec<(String, String, Option<String>)>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    Arrow,
    Punct(char),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ProvError> {
    let err = |offset: usize, message: &str| ProvError::Syntax {
        format: FORMAT,
        offset,
        message: message.to_string(),
    };
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'/' if bytes.get(i + 1) == Some(&b'/') => {
                i = text[i..].find('\n').map_or(bytes.len(), |n| i + n);
            }
            b'#' => i = text[i..].find('\n').map_or(bytes.len(), |n| i + n),
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                i = text[i..].find("*/").map(|n| i + n + 2).ok_or_else(|| err(i, "unterminated comment"))?;
            }
            b'{' | b'}' | b'[' | b']' | b';' | b',' | b'=' => {
                tokens.push((i, Tok::Punct(c as char)));
                i += 1;
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                tokens.push((i, Tok::Arrow));
                i += 2;
            }
            b'-' if bytes.get(i + 1) == Some(&b'-') => return Err(err(i, "undirected edge in a digraph")),
            b'"' => {
                let start = i;
                let mut value = String::new();
                i += 1;
                loop {
                    match bytes.get(i) {
                        None => return Err(err(start, "unterminated string")),
                        Some(b'"') => {
                            i += 1;
                            break;
                        }
                        Some(b'\\') if matches!(bytes.get(i + 1), Some(b'"' | b'\\')) => {
                            value.push(bytes[i + 1] as char);
                            i += 2;
                        }
                        Some(_) => {
                            let ch = text[i..].chars().next().expect("inside text");
                            value.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                tokens.push((start, Tok::Id(value)));
            }
            c if c.is_ascii_alphanumeric() || c == b'_' || c == b'.' || c == b'-' || c >= 0x80 => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || matches!(bytes[i], b'_' | b'.') || bytes[i] >= 0x80) {
                    i += 1;
                }
                if i == start {
                    i += 1;
                }
                tokens.push((start, Tok::Id(text[start..i].to_string())));
            }
            _ => return Err(err(i, "unexpected character")),
        }
    }
    Ok(tokens)
}

/// Checks that `text` is a well-formed digraph in which every edge joins
/// declared nodes and no node is declared twice.
pub fn check_dot(text: &str) -> Result<DotSummary, ProvError> {
    let tokens = tokenize(text)?;
    let end = text.len();
    let err = |offset: usize, message: String| ProvError::Syntax {
        format: FORMAT,
        offset,
        message,
    };
    let mut pos = 0;
    let mut next = |pos: &mut usize| -> Option<(usize, Tok)> {
        let t = tokens.get(*pos).cloned();
        *pos += 1;
        t
    };

    match next(&mut pos) {
        Some((_, Tok::Id(k))) if k == "digraph" => {}
        Some((at, _)) => return Err(err(at, "expected `digraph`".into())),
        None => return Err(err(0, "empty document".into())),
    }
    let mut tok = next(&mut pos);
    if let Some((_, Tok::Id(_))) = tok {
        tok = next(&mut pos);
    }
    if !matches!(tok, Some((_, Tok::Punct('{')))) {
        return Err(err(tok.map_or(end, |t| t.0), "expected `{`".into()));
    }

    let mut summary = DotSummary::default();
    let mut pending_edges: Vec<(usize, String, String, Option<String>)> = Vec::new();

    // attribute list after `[`; returns the label if present
    let attr_list = |pos: &mut usize, next: &mut dyn FnMut(&mut usize) -> Option<(usize, Tok)>| -> Result<Option<String>, ProvError> {
        let mut label = None;
        loop {
            match next(pos) {
                Some((_, Tok::Punct(']'))) => return Ok(label),
                Some((at, Tok::Id(key))) => {
                    match next(pos) {
                        Some((_, Tok::Punct('='))) => {}
                        other => return Err(err(other.map_or(end, |t| t.0), format!("expected `=` after `{key}`"))),
                    }
                    match next(pos) {
                        Some((_, Tok::Id(value))) => {
                            if key == "label" {
                                label = Some(value);
                            }
                        }
                        _ => return Err(err(at, format!("missing value for `{key}`"))),
                    }
                    if let Some((_, Tok::Punct(',' | ';'))) = tokens.get(*pos) {
                        *pos += 1;
                    }
                }
                other => return Err(err(other.map_or(end, |t| t.0), "malformed attribute list".into())),
            }
        }
    };

    loop {
        let Some((at, tok)) = next(&mut pos) else {
            return Err(err(end, "missing closing `}`".into()));
        };
        match tok {
            Tok::Punct('}') => break,
            Tok::Punct(';') => continue,
            Tok::Id(id) if matches!(id.as_str(), "graph" | "node" | "edge") && matches!(tokens.get(pos), Some((_, Tok::Punct('[')))) => {
                pos += 1;
                attr_list(&mut pos, &mut next)?;
            }
            Tok::Id(id) if id == "subgraph" => return Err(err(at, "subgraphs are not supported".into())),
            Tok::Id(id) => match tokens.get(pos).cloned() {
                Some((_, Tok::Punct('='))) => {
                    pos += 1;
                    if !matches!(next(&mut pos), Some((_, Tok::Id(_)))) {
                        return Err(err(at, format!("missing value for `{id}`")));
                    }
                }
                Some((_, Tok::Arrow)) => {
                    let mut chain = vec![id];
                    while let Some((_, Tok::Arrow)) = tokens.get(pos) {
                        pos += 1;
                        match next(&mut pos) {
                            Some((_, Tok::Id(to))) => chain.push(to),
                            other => return Err(err(other.map_or(end, |t| t.0), "edge lacks a target".into())),
                        }
                    }
                    let label = if let Some((_, Tok::Punct('['))) = tokens.get(pos) {
                        pos += 1;
                        attr_list(&mut pos, &mut next)?
                    } else {
                        None
                    };
                    for pair in chain.windows(2) {
                        pending_edges.push((at, pair[0].clone(), pair[1].clone(), label.clone()));
                    }
                }
                _ => {
                    if let Some((_, Tok::Punct('['))) = tokens.get(pos) {
                        pos += 1;
                        attr_list(&mut pos, &mut next)?;
                    }
                    if !summary.nodes.insert(id.clone()) {
                        return Err(err(at, format!("node `{id}` declared twice")));
                    }
                }
            },
            other => return Err(err(at, format!("unexpected {other:?}"))),
        }
    }
    if let Some((at, _)) = tokens.get(pos) {
        return Err(err(*at, "content after the graph".into()));
    }
    for (at, from, to, label) in pending_edges {
        for endpoint in [&from, &to] {
            if !summary.nodes.contains(endpoint) {
                return Err(err(at, format!("edge endpoint `{endpoint}` is not declared")));
            }
        }
        summary.edges.push((from, to, label));
    }
    Ok(summary)
}
