use std::fmt::Write as _;

use super::{Attributes, ProvActivity, ProvAgent, ProvDocument, ProvEntity, ProvError, ProvRelation, ProvValue, RelationKind, BUILTIN_PREFIXES};
use crate::timestamp::Timestamp;

const FORMAT: &str = "PROV-N";

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn attribute_list(label: Option<&str>, attributes: &Attributes) -> String {
    let mut pairs = Vec::new();
    if let Some(label) = label {
        pairs.push(format!("prov:label={}", quote(label)));
    }
    for (key, value) in attributes {
        pairs.push(match value {
            ProvValue::String(s) => format!("{key}={}", quote(s)),
            ProvValue::DateTime(t) => format!("{key}=\"{t}\" %% xsd:dateTime"),
        });
    }
    if pairs.is_empty() {
        String::new()
    } else {
        format!(", [{}]", pairs.join(", "))
    }
}

fn time_or_marker(t: Option<Timestamp>) -> String {
    t.map_or_else(|| "-".to_string(), |t| t.to_string())
}

/// PROV-N text with every section sorted by id.
pub fn serialize_provn(doc: &ProvDocument) -> Result<String, ProvError> {
    doc.check()?;
    let doc = doc.clone().normalized();
    let mut out = String::from("document\n");
    for (prefix, uri) in &doc.namespaces {
        if !BUILTIN_PREFIXES.contains(&prefix.as_str()) {
            let _ = writeln!(out, "  prefix {prefix} <{uri}>");
        }
    }

    let mut sections: Vec<Vec<String>> = Vec::new();
    sections.push(
        doc.entities
            .iter()
            .map(|e| format!("entity({}{})", e.id, attribute_list(Some(&e.label), &e.attributes)))
            .collect(),
    );
    sections.push(
        doc.activities
            .iter()
            .map(|a| {
                format!(
                    "activity({}, {}, {}{})",
                    a.id,
                    time_or_marker(a.start),
                    time_or_marker(a.end),
                    attribute_list(Some(&a.label), &a.attributes)
                )
            })
            .collect(),
    );
    sections.push(
        doc.agents
            .iter()
            .map(|a| format!("agent({}{})", a.id, attribute_list(Some(&a.label), &a.attributes)))
            .collect(),
    );
    sections.push(
        doc.relations
            .iter()
            .map(|r| {
                let marker = match r.kind {
                    RelationKind::WasInformedBy => "",
                    _ => ", -",
                };
                format!(
                    "{}({}, {}{marker}{})",
                    r.kind,
                    r.subject,
                    r.object,
                    attribute_list(r.label.as_deref(), &Attributes::new())
                )
            })
            .collect(),
    );

    for section in sections.into_iter().filter(|s| !s.is_empty()) {
        out.push('\n');
        for line in section {
            let _ = writeln!(out, "  {line}");
        }
    }
    out.push_str("endDocument\n");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String),
    Str(String),
    Iri(String),
    Punct(char),
    TypeMarker,
}

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '/' | '%' | ':' | '+')
}

impl<'a> Lexer<'a> {
    fn error(&self, offset: usize, message: impl Into<String>) -> ProvError {
        ProvError::Syntax {
            format: FORMAT,
            offset,
            message: message.into(),
        }
    }

    fn skip_trivia(&mut self) {
        loop {
            let rest = &self.text[self.pos..];
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with("//") {
                self.pos += trimmed.find('\n').unwrap_or(trimmed.len());
            } else if trimmed.starts_with("/*") {
                self.pos += trimmed.find("*/").map_or(trimmed.len(), |i| i + 2);
            } else {
                return;
            }
        }
    }

    fn next(&mut self) -> Result<Option<(usize, Token)>, ProvError> {
        self.skip_trivia();
        let start = self.pos;
        let Some(c) = self.text[start..].chars().next() else {
            return Ok(None);
        };
        let token = match c {
            '(' | ')' | '[' | ']' | ',' | ';' | '=' => {
                self.pos += 1;
                Token::Punct(c)
            }
            '%' if self.text[start..].starts_with("%%") => {
                self.pos += 2;
                Token::TypeMarker
            }
            '<' => {
                let end = self.text[start..]
                    .find('>')
                    .ok_or_else(|| self.error(start, "unterminated IRI"))?;
                self.pos = start + end + 1;
                Token::Iri(self.text[start + 1..start + end].to_string())
            }
            '"' => {
                let mut value = String::new();
                let mut chars = self.text[start + 1..].char_indices();
                loop {
                    match chars.next() {
                        None => return Err(self.error(start, "unterminated string")),
                        Some((i, '"')) => {
                            self.pos = start + 1 + i + 1;
                            break;
                        }
                        Some((_, '\\')) => match chars.next() {
                            Some((_, 'n')) => value.push('\n'),
                            Some((_, 'r')) => value.push('\r'),
                            Some((_, 't')) => value.push('\t'),
                            Some((_, 'b')) => value.push('\u{8}'),
                            Some((_, 'f')) => value.push('\u{c}'),
                            Some((_, c @ ('"' | '\'' | '\\'))) => value.push(c),
                            _ => return Err(self.error(start, "invalid escape in string")),
                        },
                        Some((i, '\n' | '\r')) => return Err(self.error(start + 1 + i, "line break in string")),
                        Some((_, c)) => value.push(c),
                    }
                }
                Token::Str(value)
            }
            '\'' => {
                let end = self.text[start + 1..]
                    .find('\'')
                    .ok_or_else(|| self.error(start, "unterminated qualified name literal"))?;
                self.pos = start + 1 + end + 1;
                Token::Word(self.text[start + 1..start + 1 + end].to_string())
            }
            c if is_word_char(c) => {
                let len = self.text[start..]
                    .find(|c: char| !is_word_char(c))
                    .unwrap_or(self.text.len() - start);
                self.pos += len;
                Token::Word(self.text[start..start + len].to_string())
            }
            c => return Err(self.error(start, format!("unexpected character `{c}`"))),
        };
        Ok(Some((start, token)))
    }
}

/// Argument of an expression: a name, a time, or `-`.
#[derive(Debug)]
enum Arg {
    Word(usize, String),
    Attrs(Vec<(String, ProvValue)>),
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<(usize, Token)>,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<Option<&(usize, Token)>, ProvError> {
        if self.peeked.is_none() {
            self.peeked = self.lexer.next()?;
        }
        Ok(self.peeked.as_ref())
    }

    fn bump(&mut self) -> Result<(usize, Token), ProvError> {
        self.peek()?;
        self.peeked
            .take()
            .ok_or_else(|| self.lexer.error(self.lexer.text.len(), "unexpected end of document"))
    }

    fn expect_punct(&mut self, want: char) -> Result<(), ProvError> {
        match self.bump()? {
            (_, Token::Punct(c)) if c == want => Ok(()),
            (at, other) => Err(self.lexer.error(at, format!("expected `{want}`, found {other:?}"))),
        }
    }

    fn word(&mut self) -> Result<(usize, String), ProvError> {
        match self.bump()? {
            (at, Token::Word(w)) => Ok((at, w)),
            (at, other) => Err(self.lexer.error(at, format!("expected a name, found {other:?}"))),
        }
    }

    fn attributes(&mut self) -> Result<Vec<(String, ProvValue)>, ProvError> {
        let mut pairs = Vec::new();
        if matches!(self.peek()?, Some((_, Token::Punct(']')))) {
            self.bump()?;
            return Ok(pairs);
        }
        loop {
            let (_, key) = self.word()?;
            self.expect_punct('=')?;
            let value = match self.bump()? {
                (at, Token::Str(s)) => {
                    if matches!(self.peek()?, Some((_, Token::TypeMarker))) {
                        self.bump()?;
                        let (type_at, ty) = self.word()?;
                        if ty != "xsd:dateTime" {
                            return Err(self.lexer.error(type_at, format!("unsupported literal type `{ty}`")));
                        }
                        ProvValue::DateTime(
                            Timestamp::parse(&s).map_err(|e| self.lexer.error(at, e.to_string()))?,
                        )
                    } else {
                        ProvValue::String(s)
                    }
                }
                (at, other) => return Err(self.lexer.error(at, format!("expected a literal, found {other:?}"))),
            };
            pairs.push((key, value));
            match self.bump()? {
                (_, Token::Punct(',')) => continue,
                (_, Token::Punct(']')) => return Ok(pairs),
                (at, other) => return Err(self.lexer.error(at, format!("expected `,` or `]`, found {other:?}"))),
            }
        }
    }

    fn arguments(&mut self) -> Result<Vec<Arg>, ProvError> {
        self.expect_punct('(')?;
        let mut args = Vec::new();
        loop {
            match self.bump()? {
                (_, Token::Punct('[')) => args.push(Arg::Attrs(self.attributes()?)),
                (at, Token::Word(w)) => args.push(Arg::Word(at, w)),
                (at, other) => return Err(self.lexer.error(at, format!("unexpected {other:?} in arguments"))),
            }
            match self.bump()? {
                (_, Token::Punct(',')) => continue,
                // optional relation identifier
                (_, Token::Punct(';')) if args.len() == 1 => {
                    args.clear();
                    continue;
                }
                (_, Token::Punct(')')) => return Ok(args),
                (at, other) => return Err(self.lexer.error(at, format!("expected `,` or `)`, found {other:?}"))),
            }
        }
    }
}

struct Expression {
    at: usize,
    positional: Vec<(usize, String)>,
    label: Option<String>,
    attributes: Attributes,
}

fn split(at: usize, args: Vec<Arg>, lexer: &Lexer) -> Result<Expression, ProvError> {
    let mut positional = Vec::new();
    let mut label = None;
    let mut attributes = Attributes::new();
    let count = args.len();
    for (i, arg) in args.into_iter().enumerate() {
        match arg {
            Arg::Word(at, w) => positional.push((at, w)),
            Arg::Attrs(pairs) if i + 1 == count => {
                for (key, value) in pairs {
                    match (key.as_str(), value) {
                        ("prov:label", ProvValue::String(s)) => label = Some(s),
                        ("prov:label", _) => return Err(lexer.error(at, "prov:label must be a string")),
                        (_, value) => {
                            if attributes.insert(key.clone(), value).is_some() {
                                return Err(lexer.error(at, format!("duplicate attribute `{key}`")));
                            }
                        }
                    }
                }
            }
            Arg::Attrs(_) => return Err(lexer.error(at, "attribute list must come last")),
        }
    }
    Ok(Expression {
        at,
        positional,
        label,
        attributes,
    })
}

fn optional_time(arg: Option<&(usize, String)>, lexer: &Lexer) -> Result<Option<Timestamp>, ProvError> {
    match arg {
        None => Ok(None),
        Some((_, w)) if w == "-" => Ok(None),
        Some((at, w)) => Timestamp::parse(w).map(Some).map_err(|e| lexer.error(*at, e.to_string())),
    }
}

/// Parses the PROV-N subset written by [`serialize_provn`] and checks the
/// result for structural validity.
pub fn parse_provn(text: &str) -> Result<ProvDocument, ProvError> {
    let mut p = Parser {
        lexer: Lexer { text, pos: 0 },
        peeked: None,
    };
    match p.bump()? {
        (_, Token::Word(w)) if w == "document" => {}
        (at, _) => return Err(p.lexer.error(at, "expected `document`")),
    }
    let mut doc = ProvDocument::empty();
    doc.namespaces.retain(|prefix, _| BUILTIN_PREFIXES.contains(&prefix.as_str()));

    loop {
        let (at, keyword) = p.word()?;
        match keyword.as_str() {
            "endDocument" => break,
            "prefix" => {
                let (_, prefix) = p.word()?;
                let uri = match p.bump()? {
                    (_, Token::Iri(uri)) => uri,
                    (at, _) => return Err(p.lexer.error(at, "expected an IRI")),
                };
                if doc.namespaces.insert(prefix.clone(), uri).is_some() {
                    return Err(p.lexer.error(at, format!("prefix `{prefix}` declared twice")));
                }
            }
            name => {
                let args = p.arguments()?;
                let e = split(at, args, &p.lexer)?;
                let lexer = &p.lexer;
                let arity_error = |expected: &str| lexer.error(e.at, format!("{name} expects {expected}"));
                match name {
                    "entity" | "agent" => {
                        let [(_, id)] = <[_; 1]>::try_from(e.positional).map_err(|_| arity_error("one identifier"))?;
                        let label = e.label.unwrap_or_default();
                        if name == "entity" {
                            doc.entities.push(ProvEntity {
                                id,
                                label,
                                attributes: e.attributes,
                            });
                        } else {
                            doc.agents.push(ProvAgent {
                                id,
                                label,
                                attributes: e.attributes,
                            });
                        }
                    }
                    "activity" => {
                        if e.positional.len() != 1 && e.positional.len() != 3 {
                            return Err(arity_error("an identifier and optional start and end times"));
                        }
                        doc.activities.push(ProvActivity {
                            id: e.positional[0].1.clone(),
                            label: e.label.unwrap_or_default(),
                            start: optional_time(e.positional.get(1), lexer)?,
                            end: optional_time(e.positional.get(2), lexer)?,
                            attributes: e.attributes,
                        });
                    }
                    other => {
                        let kind = RelationKind::from_name(other)
                            .ok_or_else(|| lexer.error(at, format!("unknown expression `{other}`")))?;
                        if !e.attributes.is_empty() {
                            return Err(lexer.error(at, "relation attributes other than prov:label are not supported"));
                        }
                        let max = if kind == RelationKind::WasInformedBy { 2 } else { 3 };
                        if e.positional.len() < 2 || e.positional.len() > max {
                            return Err(arity_error("a subject and an object"));
                        }
                        if e.positional[2..].iter().any(|(_, w)| w != "-") {
                            return Err(lexer.error(at, "optional relation arguments are not supported"));
                        }
                        doc.relations.push(ProvRelation {
                            kind,
                            subject: e.positional[0].1.clone(),
                            object: e.positional[1].1.clone(),
                            label: e.label,
                        });
                    }
                }
            }
        }
    }
    if let Some((at, _)) = p.peek()? {
        let at = *at;
        return Err(p.lexer.error(at, "content after endDocument"));
    }
    doc.check()?;
    Ok(doc.normalized())
}
