//! Plain-text channel files.
//!
//! ```text
//! MAC
//! users 1
//! alphabet 2
//! outputs 2
//! prior 0.5 0.5
//! letter y1 0.9 0.2
//! letter y2 0.1 0.8
//! ```
//!
//! One `letter` line per output: its label followed by `W(y|x)` for every
//! flattened input. `#` starts a comment. Values are written in the shortest
//! decimal form that reads back to the same `f64`.

use std::fmt::Write as _;

use crate::channel::Mac;
use crate::error::{Error, Result};

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_f64(line: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| perr(line, format!("`{tok}` is not a number")))
}

fn parse_usize<'a>(
    line: usize,
    mut tok: impl Iterator<Item = &'a str>,
    key: &str,
) -> Result<usize> {
    match (tok.next().and_then(|t| t.parse().ok()), tok.next()) {
        (Some(v), None) => Ok(v),
        _ => Err(perr(
            line,
            format!("`{key}` needs exactly one non-negative integer"),
        )),
    }
}

/// Parses a channel file and validates the result.
pub fn parse_mac(text: &str) -> Result<Mac> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    match lines.next() {
        Some((_, "MAC")) => {}
        Some((n, _)) => return Err(perr(n, "expected `MAC` header")),
        None => return Err(perr(0, "empty channel file")),
    }

    let mut users = None;
    let mut alphabet = None;
    let mut outputs = None;
    let mut prior: Option<Vec<f64>> = None;
    let mut labels = Vec::new();
    let mut probs = Vec::new();
    let mut width = None;
    for (n, line) in lines {
        let mut tok = line.split_whitespace();
        let key = tok.next().unwrap_or_default();
        match key {
            "users" => users = Some(parse_usize(n, tok, key)?),
            "alphabet" => alphabet = Some(parse_usize(n, tok, key)?),
            "outputs" => outputs = Some(parse_usize(n, tok, key)?),
            "prior" => prior = Some(tok.map(|t| parse_f64(n, t)).collect::<Result<_>>()?),
            "letter" => {
                let label = tok.next().ok_or_else(|| perr(n, "letter without label"))?;
                let start = probs.len();
                for t in tok {
                    probs.push(parse_f64(n, t)?);
                }
                let w = probs.len() - start;
                if *width.get_or_insert(w) != w {
                    return Err(perr(n, format!("letter `{label}` has {w} probabilities")));
                }
                labels.push(label.to_string());
            }
            other => return Err(perr(n, format!("unknown key `{other}`"))),
        }
    }
    let users = users.ok_or_else(|| perr(0, "missing `users`"))?;
    let alphabet = alphabet.ok_or_else(|| perr(0, "missing `alphabet`"))?;
    let prior = prior.ok_or_else(|| perr(0, "missing `prior`"))?;
    if let Some(o) = outputs {
        if o != labels.len() {
            return Err(perr(
                0,
                format!("`outputs {o}` but {} letters", labels.len()),
            ));
        }
    }
    Mac::from_parts(users, alphabet, prior, labels, probs)
}

/// Serializes a channel; [`parse_mac`] reads it back bit-exactly.
pub fn mac_to_text(mac: &Mac) -> String {
    let mut out = String::with_capacity(64 + mac.len() * (8 + 24 * mac.inputs()));
    let _ = writeln!(out, "MAC");
    let _ = writeln!(out, "users {}", mac.users());
    let _ = writeln!(out, "alphabet {}", mac.alphabet());
    let _ = writeln!(out, "outputs {}", mac.len());
    out.push_str("prior");
    for p in mac.prior() {
        let _ = write!(out, " {p:?}");
    }
    out.push('\n');
    for (label, row) in mac.labels().iter().zip(mac.rows()) {
        let _ = write!(out, "letter {label}");
        for p in row {
            let _ = write!(out, " {p:?}");
        }
        out.push('\n');
    }
    out
}
