use quick_xml::events::{BytesStart, Event as XmlEvent};
use quick_xml::{Reader, XmlVersion};

use super::{Attribute, AttributeValue, Classifier, Event, EventLog, Extension, Global, Trace, XesError};
use crate::timestamp::Timestamp;

enum Frame {
    Log(EventLog),
    Trace(Trace),
    Event(Event),
    Global(Global),
    Attr(Attribute),
    Values(Vec<Attribute>),
    /// Elements without children of interest (`extension`, `classifier`).
    Leaf,
}

impl Frame {
    fn name(&self) -> &'static str {
        match self {
            Frame::Log(_) => "log",
            Frame::Trace(_) => "trace",
            Frame::Event(_) => "event",
            Frame::Global(_) => "global",
            Frame::Attr(_) => "attribute",
            Frame::Values(_) => "values",
            Frame::Leaf => "declaration",
        }
    }
}

struct Parser<'a> {
    text: &'a str,
    stack: Vec<Frame>,
    done: Option<EventLog>,
    /// Byte offset of the element being handled, for error reporting.
    pos: usize,
}

/// Parses an XES document.
///
/// Trace, event and attribute order is preserved. Timestamps are normalized
/// to UTC milliseconds. Unknown extension declarations are kept as given.
pub fn parse_xes(document: &str) -> Result<EventLog, XesError> {
    let mut reader = Reader::from_str(document);
    reader.config_mut().check_end_names = true;
    let mut parser = Parser {
        text: document,
        stack: Vec::new(),
        done: None,
        pos: 0,
    };

    loop {
        parser.pos = reader.buffer_position() as usize;
        let event = match reader.read_event() {
            Ok(e) => e,
            Err(err) => {
                let (line, column) = line_col(document, reader.error_position() as usize);
                return Err(XesError::Xml {
                    line,
                    column,
                    message: err.to_string(),
                });
            }
        };
        match event {
            XmlEvent::Start(tag) => parser.open(&tag, false)?,
            XmlEvent::Empty(tag) => parser.open(&tag, true)?,
            XmlEvent::End(_) => parser.close()?,
            XmlEvent::Eof => break,
            XmlEvent::Text(_)
            | XmlEvent::CData(_)
            | XmlEvent::Comment(_)
            | XmlEvent::Decl(_)
            | XmlEvent::PI(_)
            | XmlEvent::DocType(_)
            | XmlEvent::GeneralRef(_) => {}
        }
    }

    if !parser.stack.is_empty() {
        let (line, column) = line_col(document, document.len());
        return Err(XesError::Xml {
            line,
            column,
            message: "unexpected end of document".into(),
        });
    }
    parser.done.ok_or_else(|| XesError::Structure {
        element: "log".into(),
        line: 1,
        column: 1,
        message: "document has no <log> root".into(),
    })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text.as_bytes()[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let line_start = before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
    let column = String::from_utf8_lossy(&before[line_start..]).chars().count() + 1;
    (line, column)
}

impl Parser<'_> {
    fn error(&self, element: &str, message: impl Into<String>) -> XesError {
        let (line, column) = line_col(self.text, self.pos);
        XesError::Structure {
            element: element.to_string(),
            line,
            column,
            message: message.into(),
        }
    }

    fn attrs(&self, tag: &BytesStart, element: &str) -> Result<Vec<(String, String)>, XesError> {
        let mut out = Vec::new();
        for attr in tag.attributes() {
            let attr = attr.map_err(|e| self.error(element, e.to_string()))?;
            let key = attr.key.as_ref().to_string();
            let value = attr
                .normalized_value(XmlVersion::Implicit1_0)
                .map_err(|e| self.error(element, e.to_string()))?
                .into_owned();
            out.push((key, value));
        }
        Ok(out)
    }

    fn open(&mut self, tag: &BytesStart, empty: bool) -> Result<(), XesError> {
        let name = tag.name().as_ref().to_string();
        let attrs = self.attrs(tag, &name)?;
        let get = |k: &str| attrs.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone());
        let require = |k: &str| get(k).ok_or_else(|| self.error(&name, format!("missing `{k}` attribute")));

        let frame = match name.as_str() {
            "log" => {
                if !self.stack.is_empty() || self.done.is_some() {
                    return Err(self.error(&name, "<log> must be the document root"));
                }
                Frame::Log(EventLog {
                    version: get("xes.version").unwrap_or_else(|| super::XES_VERSION.to_string()),
                    features: get("xes.features"),
                    ..EventLog::default()
                })
            }
            "extension" => {
                let ext = Extension {
                    name: require("name")?,
                    prefix: require("prefix")?,
                    uri: require("uri")?,
                };
                match self.stack.last_mut() {
                    Some(Frame::Log(log)) => log.extensions.push(ext),
                    _ => return Err(self.error(&name, "extension declared outside <log>")),
                }
                Frame::Leaf
            }
            "classifier" => {
                let classifier = Classifier {
                    name: require("name")?,
                    keys: require("keys")?,
                    scope: get("scope"),
                };
                match self.stack.last_mut() {
                    Some(Frame::Log(log)) => log.classifiers.push(classifier),
                    _ => return Err(self.error(&name, "classifier declared outside <log>")),
                }
                Frame::Leaf
            }
            "global" => {
                if !matches!(self.stack.last(), Some(Frame::Log(_))) {
                    return Err(self.error(&name, "global declared outside <log>"));
                }
                Frame::Global(Global {
                    scope: get("scope").unwrap_or_else(|| "event".into()),
                    attributes: Vec::new(),
                })
            }
            "trace" => {
                if !matches!(self.stack.last(), Some(Frame::Log(_))) {
                    return Err(self.error(&name, "trace outside <log>"));
                }
                Frame::Trace(Trace::default())
            }
            "event" => {
                if !matches!(self.stack.last(), Some(Frame::Trace(_))) {
                    return Err(self.error(&name, "event outside <trace>"));
                }
                Frame::Event(Event::default())
            }
            "values" => match self.stack.last() {
                Some(Frame::Attr(Attribute {
                    value: AttributeValue::List(_),
                    ..
                })) => Frame::Values(Vec::new()),
                _ => return Err(self.error(&name, "<values> outside a list attribute")),
            },
            "string" | "date" | "int" | "float" | "boolean" | "id" | "list" | "container" => {
                match self.stack.last() {
                    Some(Frame::Leaf) | None => {
                        return Err(self.error(&name, "attribute outside log, trace, event or global"))
                    }
                    _ => {}
                }
                let key = require("key")?;
                let value = self.scalar(&name, get("value"))?;
                Frame::Attr(Attribute::new(key, value))
            }
            other => return Err(self.error(other, "unknown XES element")),
        };

        self.stack.push(frame);
        if empty {
            self.close()?;
        }
        Ok(())
    }

    fn scalar(&self, tag: &str, raw: Option<String>) -> Result<AttributeValue, XesError> {
        let raw = match tag {
            "list" => return Ok(AttributeValue::List(Vec::new())),
            "container" => return Ok(AttributeValue::Container(Vec::new())),
            _ => raw.ok_or_else(|| self.error(tag, "missing `value` attribute"))?,
        };
        let bad = |what: &str| self.error(tag, format!("invalid {what} value `{raw}`"));
        Ok(match tag {
            "string" => AttributeValue::String(raw.clone()),
            "id" => AttributeValue::Id(raw.clone()),
            "int" => AttributeValue::Int(raw.trim().parse().map_err(|_| bad("int"))?),
            "float" => AttributeValue::Float(parse_float(&raw).ok_or_else(|| bad("float"))?),
            "boolean" => AttributeValue::Boolean(match raw.trim().to_ascii_lowercase().as_str() {
                "true" | "1" => true,
                "false" | "0" => false,
                _ => return Err(bad("boolean")),
            }),
            "date" => AttributeValue::Date(Timestamp::parse(&raw).map_err(|_| bad("date"))?),
            _ => unreachable!("attribute tags are matched by the caller"),
        })
    }

    fn close(&mut self) -> Result<(), XesError> {
        let frame = self
            .stack
            .pop()
            .ok_or_else(|| self.error("?", "closing tag without opening tag"))?;
        let parent = self.stack.last_mut();
        match (frame, parent) {
            (Frame::Log(log), None) => self.done = Some(log),
            (Frame::Leaf, _) => {}
            (Frame::Trace(trace), Some(Frame::Log(log))) => log.traces.push(trace),
            (Frame::Event(event), Some(Frame::Trace(trace))) => trace.events.push(event),
            (Frame::Global(global), Some(Frame::Log(log))) => log.globals.push(global),
            (Frame::Values(values), Some(Frame::Attr(attr))) => {
                if let AttributeValue::List(items) = &mut attr.value {
                    items.extend(values);
                }
            }
            (Frame::Attr(attr), Some(parent)) => match parent {
                Frame::Log(log) => log.attributes.push(attr),
                Frame::Trace(trace) => trace.attributes.push(attr),
                Frame::Event(event) => event.attributes.push(attr),
                Frame::Global(global) => global.attributes.push(attr),
                Frame::Values(values) => values.push(attr),
                Frame::Attr(owner) => match &mut owner.value {
                    AttributeValue::Container(children) => children.push(attr),
                    _ => owner.nested.push(attr),
                },
                Frame::Leaf => unreachable!("leaf frames never receive children"),
            },
            (frame, _) => {
                let name = frame.name();
                return Err(self.error(name, "element closed in an invalid position"));
            }
        }
        Ok(())
    }
}

pub(crate) fn parse_float(raw: &str) -> Option<f64> {
    match raw.trim() {
        "NaN" => Some(f64::NAN),
        "INF" | "+INF" => Some(f64::INFINITY),
        "-INF" => Some(f64::NEG_INFINITY),
        other => other.parse().ok().filter(|f: &f64| f.is_finite()),
    }
}
