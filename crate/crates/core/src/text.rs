//! Plain-text format for polynomial systems.
//!
//! ```text
//! # DZ2
//! vars: x1, x2, x3
//! x1^4
//! x1^2*x2 + x2^4
//! x3 + x3^2 - 7*x1^3 - 8*x1^2
//! ```
//!
//! One polynomial per line. Coefficients are decimals (an exponent such as
//! `1.5e-7` is accepted) or `p/q` rationals. Without a `vars:` header the
//! variables are ordered by first appearance.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::poly::{variables, Monomial, PolySystem, Polynomial};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseWarning {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.col, self.message)
    }
}

#[derive(Debug, Clone)]
pub struct ParsedSystem {
    pub system: PolySystem,
    pub warnings: Vec<ParseWarning>,
}

type RawTerm = (f64, Vec<(String, u32)>);

struct LineParser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    warnings: &'a mut Vec<ParseWarning>,
}

impl<'a> LineParser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            line: self.line,
            col: self.pos + 1,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits")
    }

    fn polynomial(&mut self) -> Result<Vec<RawTerm>, ParseError> {
        let mut terms = Vec::new();
        let mut sign = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                -1.0
            }
            Some(b'+') => {
                self.pos += 1;
                1.0
            }
            _ => 1.0,
        };
        loop {
            let (c, mono) = self.term()?;
            terms.push((sign * c, mono));
            match self.peek() {
                None => return Ok(terms),
                Some(b'+') => sign = 1.0,
                Some(b'-') => sign = -1.0,
                Some(ch) => return self.err(format!("expected '+', '-' or end of line, found '{}'", ch as char)),
            }
            self.pos += 1;
        }
    }

    fn term(&mut self) -> Result<RawTerm, ParseError> {
        match self.peek() {
            Some(ch) if ch.is_ascii_digit() || ch == b'.' => {
                let c = self.coefficient()?;
                if self.peek() == Some(b'*') {
                    self.pos += 1;
                    Ok((c, self.monomial()?))
                } else {
                    Ok((c, Vec::new()))
                }
            }
            Some(ch) if ch.is_ascii_alphabetic() => Ok((1.0, self.monomial()?)),
            Some(ch) => self.err(format!("expected a term, found '{}'", ch as char)),
            None => self.err("expected a term, found end of line"),
        }
    }

    fn coefficient(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        let int_part = self.digits();
        let mut is_integer = true;
        if self.src.get(self.pos) == Some(&b'.') {
            is_integer = false;
            self.pos += 1;
            self.digits();
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits().is_empty() {
                self.pos = save;
            } else {
                is_integer = false;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if is_integer && self.peek() == Some(b'/') {
            let col = start + 1;
            self.pos += 1;
            self.skip_ws();
            let den = self.digits();
            if den.is_empty() {
                return self.err("expected an integer denominator");
            }
            return self.rational(int_part, den, col);
        }
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                self.err(format!("invalid coefficient '{text}'"))
            }
        }
    }

    fn rational(&mut self, num: &str, den: &str, col: usize) -> Result<f64, ParseError> {
        let (Ok(p), Ok(q)) = (num.parse::<u64>(), den.parse::<u64>()) else {
            return self.err("rational coefficient out of range");
        };
        if q == 0 {
            return self.err("zero denominator");
        }
        let g = gcd(p, q);
        let (p, q) = (p / g, q / g);
        let value = p as f64 / q as f64;
        if !q.is_power_of_two() || p > (1u64 << 53) {
            self.warnings.push(ParseWarning {
                line: self.line,
                col,
                message: format!("{num}/{den} is not exactly representable; using {value:e}"),
            });
        }
        Ok(value)
    }

    fn monomial(&mut self) -> Result<Vec<(String, u32)>, ParseError> {
        let mut factors = Vec::new();
        loop {
            self.skip_ws();
            let start = self.pos;
            if !matches!(self.src.get(self.pos), Some(c) if c.is_ascii_alphabetic()) {
                return self.err("expected a variable name");
            }
            while matches!(self.src.get(self.pos), Some(c) if c.is_ascii_alphanumeric() || *c == b'_') {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii").to_string();
            let mut e = 1;
            if self.peek() == Some(b'^') {
                self.pos += 1;
                self.skip_ws();
                let d = self.digits();
                e = match d.parse::<u32>() {
                    Ok(v) => v,
                    Err(_) => return self.err("expected a natural exponent"),
                };
            }
            factors.push((name, e));
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                return Ok(factors);
            }
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Parses a system in the text format.
pub fn parse_system(text: &str) -> Result<ParsedSystem, ParseError> {
    let mut header: Option<Vec<String>> = None;
    let mut lines: Vec<(usize, Vec<RawTerm>)> = Vec::new();
    let mut warnings = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let body = raw.split('#').next().unwrap_or("");
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("vars:") {
            if header.is_some() || !lines.is_empty() {
                return Err(ParseError {
                    line: line_no,
                    col: 1,
                    message: "the vars: header must come once, before any equation".into(),
                });
            }
            let names: Vec<String> = rest
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            for (i, name) in names.iter().enumerate() {
                let valid = name.starts_with(|c: char| c.is_ascii_alphabetic())
                    && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                if !valid || names[..i].contains(name) {
                    return Err(ParseError {
                        line: line_no,
                        col: raw.find(name.as_str()).map_or(1, |c| c + 1),
                        message: format!("invalid or repeated variable '{name}' in header"),
                    });
                }
            }
            header = Some(names);
            continue;
        }
        let mut p = LineParser {
            src: body.as_bytes(),
            pos: 0,
            line: line_no,
            warnings: &mut warnings,
        };
        lines.push((line_no, p.polynomial()?));
    }
    if lines.is_empty() {
        return Err(ParseError {
            line: 1,
            col: 1,
            message: "no equations".into(),
        });
    }
    let names = match header {
        Some(h) => {
            for (line, terms) in &lines {
                for (_, mono) in terms {
                    if let Some((v, _)) = mono.iter().find(|(v, _)| !h.contains(v)) {
                        return Err(ParseError {
                            line: *line,
                            col: 1,
                            message: format!("variable '{v}' is not declared in the vars: header"),
                        });
                    }
                }
            }
            h
        }
        None => {
            let mut seen: Vec<String> = Vec::new();
            for (_, terms) in &lines {
                for (_, mono) in terms {
                    for (v, _) in mono {
                        if !seen.contains(v) {
                            seen.push(v.clone());
                        }
                    }
                }
            }
            seen
        }
    };
    let vars = variables(&names);
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let mut polys = Vec::new();
    for (line, terms) in lines {
        let poly = Polynomial::from_terms(
            vars.clone(),
            terms.into_iter().map(|(c, mono)| {
                let mut e = vec![0u32; names.len()];
                for (v, k) in mono {
                    e[index[v.as_str()]] += k;
                }
                (Monomial::new(e), c)
            }),
        );
        if poly.is_zero() {
            return Err(ParseError {
                line,
                col: 1,
                message: "identically zero equation".into(),
            });
        }
        polys.push(poly);
    }
    let system = PolySystem::new(polys).map_err(|e| ParseError {
        line: 1,
        col: 1,
        message: e.to_string(),
    })?;
    Ok(ParsedSystem { system, warnings })
}

/// Prints a system with a `vars:` header; [`parse_system`] reads it back
/// unchanged.
pub fn print_system(system: &PolySystem) -> String {
    let mut out = format!("vars: {}\n", system.vars().join(", "));
    for f in system.polys() {
        out.push_str(&f.to_string());
        out.push('\n');
    }
    out
}

/// Parses `"v1, v2, ..."` (commas and/or whitespace, optional brackets).
pub fn parse_point(text: &str) -> Result<Vec<f64>, ParseError> {
    let line = text.lines().find(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#')).unwrap_or("");
    let inner = line.trim().trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
    let mut out = Vec::new();
    let mut col = 1;
    for tok in inner.split(|c: char| c == ',' || c.is_whitespace()) {
        if tok.is_empty() {
            col += 1;
            continue;
        }
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ => {
                return Err(ParseError {
                    line: 1,
                    col,
                    message: format!("invalid coordinate '{tok}'"),
                })
            }
        }
        col += tok.len() + 1;
    }
    if out.is_empty() {
        return Err(ParseError {
            line: 1,
            col: 1,
            message: "empty point".into(),
        });
    }
    Ok(out)
}
