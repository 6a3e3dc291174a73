use std::fmt::Write as _;

use super::{validate_log, Attribute, AttributeValue, EventLog, XesError};

/// Serializes a valid log to XES XML.
///
/// Output is byte-for-byte deterministic, uses LF line endings and two-space
/// indentation. Extensions come first, then globals, classifiers, log
/// attributes and traces.
pub fn serialize_xes(log: &EventLog) -> Result<String, XesError> {
    let violations = validate_log(log);
    if !violations.is_empty() {
        return Err(XesError::Invalid(violations));
    }

    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    write!(out, "<log xes.version=\"{}\"", escape(&log.version)).unwrap();
    if let Some(features) = &log.features {
        write!(out, " xes.features=\"{}\"", escape(features)).unwrap();
    }
    out.push_str(">\n");

    for ext in &log.extensions {
        writeln!(
            out,
            "  <extension name=\"{}\" prefix=\"{}\" uri=\"{}\"/>",
            escape(&ext.name),
            escape(&ext.prefix),
            escape(&ext.uri)
        )
        .unwrap();
    }
    for global in &log.globals {
        writeln!(out, "  <global scope=\"{}\">", escape(&global.scope)).unwrap();
        write_attributes(&mut out, &global.attributes, 2);
        out.push_str("  </global>\n");
    }
    for classifier in &log.classifiers {
        write!(
            out,
            "  <classifier name=\"{}\" keys=\"{}\"",
            escape(&classifier.name),
            escape(&classifier.keys)
        )
        .unwrap();
        if let Some(scope) = &classifier.scope {
            write!(out, " scope=\"{}\"", escape(scope)).unwrap();
        }
        out.push_str("/>\n");
    }
    write_attributes(&mut out, &log.attributes, 1);
    for trace in &log.traces {
        out.push_str("  <trace>\n");
        write_attributes(&mut out, &trace.attributes, 2);
        for event in &trace.events {
            out.push_str("    <event>\n");
            write_attributes(&mut out, &event.attributes, 3);
            out.push_str("    </event>\n");
        }
        out.push_str("  </trace>\n");
    }
    out.push_str("</log>\n");
    Ok(out)
}

fn write_attributes(out: &mut String, attributes: &[Attribute], depth: usize) {
    for attr in attributes {
        write_attribute(out, attr, depth);
    }
}

fn write_attribute(out: &mut String, attr: &Attribute, depth: usize) {
    let indent = "  ".repeat(depth);
    let tag = attr.value.tag();
    write!(out, "{indent}<{tag} key=\"{}\"", escape(&attr.key)).unwrap();
    if let Some(text) = attr.value.scalar_text() {
        write!(out, " value=\"{}\"", escape(&text)).unwrap();
    }
    match &attr.value {
        AttributeValue::List(items) => {
            out.push_str(">\n");
            write_attributes(out, &attr.nested, depth + 1);
            if items.is_empty() {
                writeln!(out, "{indent}  <values/>").unwrap();
            } else {
                writeln!(out, "{indent}  <values>").unwrap();
                write_attributes(out, items, depth + 2);
                writeln!(out, "{indent}  </values>").unwrap();
            }
            writeln!(out, "{indent}</{tag}>").unwrap();
        }
        AttributeValue::Container(children) if !children.is_empty() || !attr.nested.is_empty() => {
            out.push_str(">\n");
            write_attributes(out, children, depth + 1);
            write_attributes(out, &attr.nested, depth + 1);
            writeln!(out, "{indent}</{tag}>").unwrap();
        }
        _ if !attr.nested.is_empty() => {
            out.push_str(">\n");
            write_attributes(out, &attr.nested, depth + 1);
            writeln!(out, "{indent}</{tag}>").unwrap();
        }
        _ => out.push_str("/>\n"),
    }
}

pub(crate) fn format_float(f: f64) -> String {
    if f.is_nan() {
        "NaN".into()
    } else if f.is_infinite() {
        if f > 0.0 { "INF" } else { "-INF" }.into()
    } else {
        format!("{f:?}")
    }
}

/// Escapes text for a double-quoted XML attribute. Whitespace control
/// characters become character references so attribute-value normalization
/// on the reading side leaves them intact.
pub(crate) fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}
