//! Numeric scenario values that may be written as `pi` expressions.

use std::f64::consts::PI;

use serde::Deserialize;

/// A number, or a string such as `"pi/2"`, `"-pi/3"`, `"2*pi/5"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Expr(String),
}

impl Scalar {
    pub fn value(&self) -> Result<f64, String> {
        match self {
            Scalar::Number(x) => Ok(*x),
            Scalar::Expr(s) => parse_expr(s),
        }
    }
}

/// Evaluates `[sign] factor (('*' | '/') factor)*` where a factor is a
/// decimal literal or `pi`.
pub fn parse_expr(text: &str) -> Result<f64, String> {
    let bad = || format!("cannot read {text:?} as a number (expected forms like 1.5, pi, -pi/3, 2*pi/5)");
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.strip_prefix('+').unwrap_or(&s)),
    };
    if body.is_empty() {
        return Err(bad());
    }
    let factor = |tok: &str| -> Result<f64, String> {
        match tok {
            "pi" | "PI" | "π" => Ok(PI),
            _ => tok.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad),
        }
    };

    let mut value = 1.0;
    let mut op = '*';
    let mut start = 0;
    for (i, c) in body.char_indices().chain(std::iter::once((body.len(), '*'))) {
        if c != '*' && c != '/' {
            continue;
        }
        let x = factor(&body[start..i])?;
        if op == '*' {
            value *= x;
        } else if x == 0.0 {
            return Err(format!("division by zero in {text:?}"));
        } else {
            value /= x;
        }
        op = c;
        start = i + c.len_utf8();
    }
    Ok(sign * value)
}
