//! Plain-text economy files.
//!
//! ```text
//! # Example economy
//! lambda = 5
//! c = 1/3
//! c0 = 1/3
//! patience = 12
//!
//! index,mu,w
//! 1,1,75
//! 2,6,25
//! 3,3,15
//! ```
//!
//! Numbers may be written as fractions `a/b`. Lines starting with `#` are ignored.

use std::fmt::Write as _;

use thiserror::Error;

use super::{DestinationRecord, Economy, EconomyRecord};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing parameter `{0}`")]
    MissingKey(&'static str),
    #[error("missing `index,mu,w` table")]
    MissingTable,
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        msg: msg.into(),
    }
}

/// Parses a decimal number or a fraction `a/b`.
pub(crate) fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

/// Parses an economy file. The result still has to go through
/// [`validate_economy`](super::validate_economy).
pub fn parse_economy_text<S: Scalar>(input: &str) -> Result<EconomyRecord<S>, FormatError> {
    let mut lambda = None;
    let mut c = None;
    let mut c0 = None;
    let mut patience = None;
    let mut rows: Vec<DestinationRecord<S>> = Vec::new();
    let mut in_table = false;

    for (n, raw) in input.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if in_table {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != 3 {
                return Err(syntax(line_no, "expected 3 columns: index,mu,w"));
            }
            let index: usize = cells[0]
                .parse()
                .map_err(|_| syntax(line_no, format!("bad index `{}`", cells[0])))?;
            if index != rows.len() + 1 {
                return Err(syntax(line_no, format!("expected index {}, got {index}", rows.len() + 1)));
            }
            let mu = parse_number(cells[1]).ok_or_else(|| syntax(line_no, format!("bad mu `{}`", cells[1])))?;
            let w = parse_number(cells[2]).ok_or_else(|| syntax(line_no, format!("bad w `{}`", cells[2])))?;
            rows.push(DestinationRecord {
                demand_rate: S::lit(mu),
                net_earnings: S::lit(w),
            });
            continue;
        }
        if line.replace(' ', "") == "index,mu,w" {
            in_table = true;
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| syntax(line_no, "expected `key = value` or the `index,mu,w` header"))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "patience" => {
                let p: u32 = value
                    .parse()
                    .map_err(|_| syntax(line_no, format!("patience must be a positive integer, got `{value}`")))?;
                patience = Some(p);
            }
            "lambda" | "c" | "c0" => {
                let v = parse_number(value).ok_or_else(|| syntax(line_no, format!("bad number `{value}`")))?;
                let slot = match key {
                    "lambda" => &mut lambda,
                    "c" => &mut c,
                    _ => &mut c0,
                };
                *slot = Some(S::lit(v));
            }
            other => return Err(syntax(line_no, format!("unknown parameter `{other}`"))),
        }
    }

    if !in_table {
        return Err(FormatError::MissingTable);
    }
    Ok(EconomyRecord {
        destinations: rows,
        driver_rate: lambda.ok_or(FormatError::MissingKey("lambda"))?,
        driver_cost: c.ok_or(FormatError::MissingKey("c"))?,
        platform_cost: c0.ok_or(FormatError::MissingKey("c0"))?,
        patience: patience.ok_or(FormatError::MissingKey("patience"))?,
    })
}

/// Writes an economy in canonical order. Numbers use the shortest
/// representation that parses back to the same value.
pub fn write_economy_text<S: Scalar>(e: &Economy<S>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "lambda = {}", e.driver_rate());
    let _ = writeln!(out, "c = {}", e.driver_cost());
    let _ = writeln!(out, "c0 = {}", e.platform_cost());
    let _ = writeln!(out, "patience = {}", e.patience());
    out.push('\n');
    out.push_str("index,mu,w\n");
    for d in e.destinations() {
        let _ = writeln!(out, "{},{},{}", d.index, d.demand_rate, d.net_earnings);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::validate_economy;

    const EXAMPLE: &str = "# Example economy\nlambda = 5\nc = 1/3\nc0 = 1/3\npatience = 12\n\nindex,mu,w\n1,1,75\n2,6,25\n3,3,15\n";

    #[test]
    fn parses_fractions_and_comments() {
        let rec: EconomyRecord<f64> = parse_economy_text(EXAMPLE).unwrap();
        assert_eq!(rec.driver_rate, 5.0);
        assert_eq!(rec.driver_cost, 1.0 / 3.0);
        assert_eq!(rec.patience, 12);
        assert_eq!(rec.destinations.len(), 3);
        assert_eq!(rec.destinations[1].demand_rate, 6.0);
    }

    #[test]
    fn round_trips() {
        let e = validate_economy(&parse_economy_text::<f64>(EXAMPLE).unwrap()).unwrap();
        let text = write_economy_text(&e);
        let back = validate_economy(&parse_economy_text::<f64>(&text).unwrap()).unwrap();
        assert_eq!(back, e);
        assert_eq!(write_economy_text(&back), text);
    }

    #[test]
    fn reports_errors() {
        assert_eq!(
            parse_economy_text::<f64>("lambda = 1\nc = 1\nc0 = 0\npatience = 1\n"),
            Err(FormatError::MissingTable)
        );
        assert_eq!(
            parse_economy_text::<f64>("c = 1\nc0 = 0\npatience = 1\nindex,mu,w\n1,1,1\n"),
            Err(FormatError::MissingKey("lambda"))
        );
        assert!(matches!(
            parse_economy_text::<f64>("lambda = x\n"),
            Err(FormatError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_economy_text::<f64>("speed = 3\n"),
            Err(FormatError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_economy_text::<f64>("lambda = 1\nindex,mu,w\n2,1,1\n"),
            Err(FormatError::Syntax { line: 3, .. })
        ));
        assert!(parse_number("1/0").is_none());
        assert_eq!(parse_number(" 3 / 4 "), Some(0.75));
    }
}
