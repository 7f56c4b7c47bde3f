//! Lenient extraction of list and dict literals from model output.
//!
//! Models wrap their answer in prose, so both parsers scan for the first
//! opening bracket that starts a well-formed literal and ignore the rest.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("no bracketed list of quoted strings found in output")]
    NoList,
    #[error("no brace-delimited map of quoted keys to numbers found in output")]
    NoMap,
}

/// Extracts the first `['a', "b", ...]` literal, keeps entries that are in
/// `allowed`, drops repeats and truncates to `k`. Model order is kept.
pub fn parse_relation_list<S: AsRef<str>>(text: &str, allowed: &[S], k: usize) -> Result<Vec<String>, ParseError> {
    let items = first_literal(text, '[', parse_list_body).ok_or(ParseError::NoList)?;
    let allowed: BTreeSet<&str> = allowed.iter().map(AsRef::as_ref).collect();
    let mut out: Vec<String> = Vec::new();
    for item in items {
        if out.len() == k {
            break;
        }
        if allowed.contains(item.as_str()) && !out.contains(&item) {
            out.push(item);
        }
    }
    Ok(out)
}

/// Extracts the first `{"key": number, ...}` literal. Values are clamped to
/// `[0, 1]`, keys outside `candidates` are dropped and candidates the model
/// left out score `0.0`.
pub fn parse_score_map<S: AsRef<str>>(text: &str, candidates: &[S]) -> Result<BTreeMap<String, f64>, ParseError> {
    let entries = first_literal(text, '{', parse_map_body).ok_or(ParseError::NoMap)?;
    let mut scores: BTreeMap<String, f64> = candidates.iter().map(|c| (c.as_ref().to_owned(), 0.0)).collect();
    for (key, value) in entries {
        if let Some(slot) = scores.get_mut(&key) {
            *slot = value.clamp(0.0, 1.0);
        }
    }
    Ok(scores)
}

fn first_literal<T>(text: &str, open: char, mut body: impl FnMut(&mut Cursor) -> Option<T>) -> Option<T> {
    for (idx, _) in text.match_indices(open) {
        let mut cursor = Cursor::new(&text[idx + open.len_utf8()..]);
        if let Some(v) = body(&mut cursor) {
            return Some(v);
        }
    }
    None
}

fn parse_list_body(c: &mut Cursor) -> Option<Vec<String>> {
    let mut items = Vec::new();
    c.skip_ws();
    if c.eat(']') {
        return Some(items);
    }
    loop {
        c.skip_ws();
        items.push(c.quoted()?);
        c.skip_ws();
        if c.eat(',') {
            c.skip_ws();
            // trailing comma
            if c.eat(']') {
                return Some(items);
            }
            continue;
        }
        return c.eat(']').then_some(items);
    }
}

fn parse_map_body(c: &mut Cursor) -> Option<Vec<(String, f64)>> {
    let mut entries = Vec::new();
    c.skip_ws();
    if c.eat('}') {
        return Some(entries);
    }
    loop {
        c.skip_ws();
        let key = c.quoted()?;
        c.skip_ws();
        if !c.eat(':') {
            return None;
        }
        c.skip_ws();
        let value = c.number()?;
        entries.push((key, value));
        c.skip_ws();
        if c.eat(',') {
            c.skip_ws();
            if c.eat('}') {
                return Some(entries);
            }
            continue;
        }
        return c.eat('}').then_some(entries);
    }
}

struct Cursor<'a> {
    rest: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(rest: &'a str) -> Self {
        Self { rest }
    }

    fn peek(&self) -> Option<char> {
        self.rest.chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.rest = &self.rest[c.len_utf8()..];
        Some(c)
    }

    fn eat(&mut self, want: char) -> bool {
        if self.peek() == Some(want) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start();
    }

    /// Single- or double-quoted string with backslash escapes.
    fn quoted(&mut self) -> Option<String> {
        let quote = self.peek().filter(|c| *c == '"' || *c == '\'')?;
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump()? {
                '\\' => {
                    let escaped = self.bump()?;
                    out.push(match escaped {
                        'n' => '\n',
                        't' => '\t',
                        other => other,
                    });
                }
                c if c == quote => return Some(out),
                '\n' => return None,
                c => out.push(c),
            }
        }
    }

    fn number(&mut self) -> Option<f64> {
        let len = self
            .rest
            .char_indices()
            .take_while(|(_, c)| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'))
            .count();
        let token = &self.rest[..len];
        let value: f64 = token.parse().ok()?;
        if !value.is_finite() {
            return None;
        }
        self.rest = &self.rest[len..];
        Some(value)
    }
}
