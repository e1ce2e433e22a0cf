//! Canonical text form: one term per line, `k | q | re im`.
//!
//! `q` is written as sorted `mode:exp` pairs. Exact coefficients print as
//! `num/den` (or integers), float ones as shortest round-trip decimals.
//! Blank lines and lines starting with `#` are ignored when parsing.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::field::{ScalarSeries, VectorField};
use crate::index::{ModeKey, MultiIndex, TruncationContext};
use crate::scalar::Scalar;

pub fn field_to_text<C: Scalar>(x: &VectorField<C>) -> String {
    let mut s = String::new();
    for ((k, q), c) in x.terms() {
        writeln!(s, "{k} | {q} | {}", c.to_text()).unwrap();
    }
    s
}

pub fn field_from_text<C: Scalar>(ctx: TruncationContext, text: &str) -> Result<VectorField<C>> {
    let mut out = VectorField::new(ctx);
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let wrap = |e: Error| Error::Parse { line: n + 1, msg: e.to_string() };
        let parts: Vec<&str> = line.split('|').collect();
        if parts.len() != 3 {
            return Err(Error::Parse { line: n + 1, msg: "expected 'k | q | coefficient'".into() });
        }
        let k: ModeKey = parts[0].parse().map_err(wrap)?;
        let q: MultiIndex = parts[1].parse().map_err(wrap)?;
        let c = C::parse_text(parts[2]).map_err(wrap)?;
        out.insert(k, q, c).map_err(wrap)?;
    }
    Ok(out)
}

pub fn series_to_text<C: Scalar>(f: &ScalarSeries<C>) -> String {
    let mut s = String::new();
    for (q, c) in f.terms() {
        writeln!(s, "{q} | {}", c.to_text()).unwrap();
    }
    s
}

pub fn series_from_text<C: Scalar>(ctx: TruncationContext, text: &str) -> Result<ScalarSeries<C>> {
    let mut out = ScalarSeries::new(ctx);
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let wrap = |e: Error| Error::Parse { line: n + 1, msg: e.to_string() };
        let (q, c) = line
            .split_once('|')
            .ok_or_else(|| Error::Parse { line: n + 1, msg: "expected 'q | coefficient'".into() })?;
        out.insert(q.parse().map_err(wrap)?, C::parse_text(c).map_err(wrap)?).map_err(wrap)?;
    }
    Ok(out)
}

/// Several fields in one document, each introduced by a `## name` header.
pub fn sections_to_text<C: Scalar>(sections: &[(String, &VectorField<C>)]) -> String {
    let mut s = String::new();
    for (name, f) in sections {
        writeln!(s, "## {name}").unwrap();
        s.push_str(&field_to_text(f));
    }
    s
}

pub fn sections_from_text<C: Scalar>(ctx: TruncationContext, text: &str) -> Result<Vec<(String, VectorField<C>)>> {
    let mut out: Vec<(String, String, usize)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if let Some(name) = line.trim().strip_prefix("## ") {
            out.push((name.trim().to_string(), String::new(), n));
        } else if let Some(last) = out.last_mut() {
            last.1.push_str(line);
            last.1.push('\n');
        } else if !line.trim().is_empty() && !line.trim().starts_with('#') {
            return Err(Error::Parse { line: n + 1, msg: "term before first section header".into() });
        }
    }
    out.into_iter()
        .map(|(name, body, start)| {
            let f = field_from_text(ctx, &body).map_err(|e| match e {
                Error::Parse { line, msg } => Error::Parse { line: line + start + 1, msg },
                other => other,
            })?;
            Ok((name, f))
        })
        .collect()
}
