//! Extraction of numeric forecasts from free-form replies.
//!
//! Grammar: code-fence markers are ignored; the last bracketed list of
//! comma/whitespace separated numbers wins; without one, every standalone
//! number in reading order is taken. The located sequence must hold exactly
//! `horizon` numbers.

use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("reply contains no numbers")]
    NoNumbersFound,
    #[error("found {found} numbers, expected {expected}")]
    CountMismatch { found: usize, expected: usize },
    #[error("non-finite token `{0}`")]
    NonFiniteToken(String),
    #[error("reply is empty")]
    EmptyReply,
    #[error("horizon must be positive")]
    ZeroHorizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedForecast {
    pub values: Vec<f64>,
    /// Byte range of the matched list (or number run) in the reply.
    pub source_span: Range<usize>,
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$").expect("valid regex")
    })
}

fn scan_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?").expect("valid regex")
    })
}

fn bracket_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[([^\[\]]*)\]").expect("valid regex"))
}

fn is_non_finite_word(token: &str) -> bool {
    let t = token.trim_start_matches(['+', '-']).to_ascii_lowercase();
    matches!(t.as_str(), "nan" | "inf" | "infinity")
}

/// Replaces code-fence marker lines with spaces so byte offsets survive.
fn blank_fences(reply: &str) -> String {
    let mut out = String::with_capacity(reply.len());
    for line in reply.split_inclusive('\n') {
        if line.trim_start().starts_with("```") {
            let body = line.trim_end_matches(['\n', '\r']);
            out.extend(std::iter::repeat_n(' ', body.len()));
            out.push_str(&line[body.len()..]);
        } else {
            out.push_str(line);
        }
    }
    out
}

fn to_number(token: &str) -> Result<f64, ParseError> {
    let v: f64 = token
        .parse()
        .map_err(|_| ParseError::NonFiniteToken(token.to_string()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ParseError::NonFiniteToken(token.to_string()))
    }
}

/// Numbers of a bracket body, `Ok(None)` if the body is not a numeric list.
fn numeric_list(body: &str) -> Result<Option<Vec<f64>>, ParseError> {
    let tokens: Vec<&str> = body
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.is_empty() {
        return Ok(None);
    }
    if !tokens
        .iter()
        .all(|t| number_re().is_match(t) || is_non_finite_word(t))
    {
        return Ok(None);
    }
    tokens.into_iter().map(to_number).collect::<Result<_, _>>().map(Some)
}

fn standalone_numbers(text: &str) -> Result<Vec<(f64, Range<usize>)>, ParseError> {
    let bytes = text.as_bytes();
    let glued = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    let mut found = Vec::new();
    for m in scan_re().find_iter(text) {
        let before = m.start().checked_sub(1).map(|i| bytes[i]);
        let after = bytes.get(m.end()).copied();
        if before.is_some_and(|b| glued(b) || b == b'.') || after.is_some_and(glued) {
            continue;
        }
        found.push((to_number(m.as_str())?, m.range()));
    }
    Ok(found)
}

/// Extracts exactly `horizon` forecasts from `reply`.
pub fn parse_forecast(reply: &str, horizon: usize) -> Result<ParsedForecast, ParseError> {
    if horizon == 0 {
        return Err(ParseError::ZeroHorizon);
    }
    if reply.trim().is_empty() {
        return Err(ParseError::EmptyReply);
    }
    let text = blank_fences(reply);

    let mut last_list = None;
    for caps in bracket_re().captures_iter(&text) {
        if let Some(values) = numeric_list(&caps[1])? {
            last_list = Some((values, caps.get(0).expect("whole match").range()));
        }
    }

    let (values, source_span) = match last_list {
        Some(found) => found,
        None => {
            let numbers = standalone_numbers(&text)?;
            let (Some(first), Some(last)) = (numbers.first(), numbers.last()) else {
                return Err(ParseError::NoNumbersFound);
            };
            let span = first.1.start..last.1.end;
            (numbers.into_iter().map(|(v, _)| v).collect(), span)
        }
    };
    if values.len() != horizon {
        return Err(ParseError::CountMismatch {
            found: values.len(),
            expected: horizon,
        });
    }
    Ok(ParsedForecast {
        values,
        source_span,
    })
}

/// Bracketed list with shortest round-trip formatting of each value.
pub fn render_list(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
    format!("[{}]", items.join(", "))
}
