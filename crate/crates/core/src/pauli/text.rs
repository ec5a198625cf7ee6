//! Line-oriented text form: `+1.2345678e+00 X0 Z3 Y7`, one term per line,
//! letters in ascending qubit order, terms in canonical order. The identity
//! is written as a bare `I`.

use super::{Letter, PauliString, PauliSum};
use crate::error::{Error, Result};

/// Formats `c` as `±d.ddddddde±ee`.
pub fn format_coefficient(c: f64) -> String {
    let s = format!("{:.7e}", c.abs());
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if c.is_sign_negative() { '-' } else { '+' };
    let esign = if exp < 0 { '-' } else { '+' };
    format!("{sign}{mantissa}e{esign}{:02}", exp.abs())
}

impl PauliSum {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, c) in self.sorted_terms() {
            out.push_str(&format_coefficient(c));
            out.push(' ');
            out.push_str(&p.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses the text form; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str, qubit_count: usize) -> Result<PauliSum> {
        let mut sum = PauliSum::new(qubit_count)?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::Parse(format!("line {}: {msg}", lineno + 1));
            let mut tokens = line.split_whitespace();
            let coeff: f64 = tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err("bad coefficient"))?;
            let mut p = PauliString::IDENTITY;
            for tok in tokens {
                if tok == "I" {
                    continue;
                }
                let (head, idx) = tok.split_at(1);
                let letter = match head {
                    "X" => Letter::X,
                    "Y" => Letter::Y,
                    "Z" => Letter::Z,
                    _ => return Err(err(&format!("unknown letter in `{tok}`"))),
                };
                let q: usize = idx
                    .parse()
                    .map_err(|_| err(&format!("bad index in `{tok}`")))?;
                if q >= qubit_count {
                    return Err(err(&format!("qubit {q} out of range")));
                }
                if p.letter(q) != Letter::I {
                    return Err(err(&format!("qubit {q} repeated")));
                }
                p.set(q, letter);
            }
            sum.add_term(p, coeff);
        }
        Ok(sum)
    }
}
