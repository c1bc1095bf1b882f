//! Line-oriented N-Triples reader for the subset the snapshot builder needs:
//! IRIs, blank nodes, and plain, language-tagged or typed literals.

use std::io::BufRead;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Iri(String),
    /// blank node label including the `_:` prefix
    Blank(String),
    Literal {
        value: String,
        lang: Option<String>,
        datatype: Option<String>,
    },
}

impl Term {
    /// Identifier usable as a subject or entity key.
    pub fn node_id(&self) -> Option<&str> {
        match self {
            Term::Iri(s) | Term::Blank(s) => Some(s),
            Term::Literal { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub subject: Term,
    pub predicate: String,
    pub object: Term,
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
}

impl Cursor {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        self.pos += 1;
        c
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.bump();
        }
    }

    fn expect(&mut self, c: char) -> Result<(), String> {
        match self.bump() {
            Some(x) if x == c => Ok(()),
            Some(x) => Err(format!("expected `{c}`, found `{x}`")),
            None => Err(format!("expected `{c}`, found end of line")),
        }
    }

    fn iri(&mut self) -> Result<String, String> {
        self.expect('<')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('>') => break,
                Some('\\') => out.push(self.escape()?),
                Some(c) if c == ' ' || c == '<' || c == '"' => {
                    return Err(format!("invalid character `{c}` in IRI"))
                }
                Some(c) => out.push(c),
                None => return Err("unterminated IRI".into()),
            }
        }
        if out.is_empty() {
            return Err("empty IRI".into());
        }
        Ok(out)
    }

    fn blank(&mut self) -> Result<String, String> {
        self.expect('_')?;
        self.expect(':')?;
        let mut out = String::from("_:");
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.') {
                out.push(c);
                self.bump();
            } else {
                break;
            }
        }
        // a trailing '.' belongs to the statement terminator
        while out.ends_with('.') {
            out.pop();
            self.pos -= 1;
        }
        if out.len() == 2 {
            return Err("empty blank node label".into());
        }
        Ok(out)
    }

    fn hex(&mut self, n: usize) -> Result<char, String> {
        let digits: String = (0..n).filter_map(|_| self.bump()).collect();
        let code = u32::from_str_radix(&digits, 16).map_err(|_| format!("bad unicode escape `{digits}`"))?;
        char::from_u32(code).ok_or_else(|| format!("invalid code point {code:#x}"))
    }

    fn escape(&mut self) -> Result<char, String> {
        match self.bump() {
            Some('t') => Ok('\t'),
            Some('b') => Ok('\u{8}'),
            Some('n') => Ok('\n'),
            Some('r') => Ok('\r'),
            Some('f') => Ok('\u{c}'),
            Some('"') => Ok('"'),
            Some('\'') => Ok('\''),
            Some('\\') => Ok('\\'),
            Some('u') => self.hex(4),
            Some('U') => self.hex(8),
            Some(c) => Err(format!("unknown escape `\\{c}`")),
            None => Err("dangling escape".into()),
        }
    }

    fn literal(&mut self) -> Result<Term, String> {
        self.expect('"')?;
        let mut value = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => value.push(self.escape()?),
                Some(c) => value.push(c),
                None => return Err("unterminated literal".into()),
            }
        }
        let (mut lang, mut datatype) = (None, None);
        match self.peek() {
            Some('@') => {
                self.bump();
                let mut tag = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        tag.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                if tag.is_empty() {
                    return Err("empty language tag".into());
                }
                lang = Some(tag.to_ascii_lowercase());
            }
            Some('^') => {
                self.bump();
                self.expect('^')?;
                datatype = Some(self.iri()?);
            }
            _ => {}
        }
        Ok(Term::Literal { value, lang, datatype })
    }

    fn node(&mut self) -> Result<Term, String> {
        match self.peek() {
            Some('<') => self.iri().map(Term::Iri),
            Some('_') => self.blank().map(Term::Blank),
            Some('"') => self.literal(),
            Some(c) => Err(format!("unexpected `{c}`")),
            None => Err("unexpected end of line".into()),
        }
    }
}

/// Parses one line; `Ok(None)` for blank and comment lines.
pub fn parse_line(line: &str) -> Result<Option<Statement>, String> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let mut cur = Cursor {
        chars: trimmed.chars().collect(),
        pos: 0,
    };
    let subject = cur.node()?;
    if matches!(subject, Term::Literal { .. }) {
        return Err("literal in subject position".into());
    }
    cur.skip_ws();
    let predicate = cur.iri()?;
    cur.skip_ws();
    let object = cur.node()?;
    cur.skip_ws();
    cur.expect('.')?;
    cur.skip_ws();
    match cur.bump() {
        None | Some('#') => Ok(Some(Statement {
            subject,
            predicate,
            object,
        })),
        Some(c) => Err(format!("trailing content starting at `{c}`")),
    }
}

/// Reads every statement; the first malformed line aborts with its
/// 1-based line number.
pub fn read<R: BufRead>(reader: R, source: &str) -> Result<Vec<Statement>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        match parse_line(&line) {
            Ok(Some(s)) => out.push(s),
            Ok(None) => {}
            Err(message) => {
                return Err(Error::Syntax {
                    path: source.to_string(),
                    line: i + 1,
                    message,
                })
            }
        }
    }
    Ok(out)
}

fn escape_into(out: &mut String, s: &str) {
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
}

fn write_term(out: &mut String, t: &Term) {
    match t {
        Term::Iri(i) => {
            out.push('<');
            out.push_str(i);
            out.push('>');
        }
        Term::Blank(b) => out.push_str(b),
        Term::Literal { value, lang, datatype } => {
            out.push('"');
            escape_into(out, value);
            out.push('"');
            if let Some(l) = lang {
                out.push('@');
                out.push_str(l);
            } else if let Some(d) = datatype {
                out.push_str("^^<");
                out.push_str(d);
                out.push('>');
            }
        }
    }
}

/// Serializes one statement as an N-Triples line (without newline).
pub fn format_statement(s: &Statement) -> String {
    let mut out = String::new();
    write_term(&mut out, &s.subject);
    out.push_str(" <");
    out.push_str(&s.predicate);
    out.push_str("> ");
    write_term(&mut out, &s.object);
    out.push_str(" .");
    out
}
