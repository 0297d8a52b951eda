//! Privacy amount and the closed-form detection and leak formulas.

use std::fmt;

use crate::error::{Error, Result};

/// Which part of Alice's input Bob narrows down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scope {
    /// One attribute.
    Attribute,
    /// Every attribute of one example.
    Example,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Attribute => "attribute",
            Scope::Example => "example",
        })
    }
}

impl std::str::FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "attribute" => Ok(Scope::Attribute),
            "example" => Ok(Scope::Example),
            _ => Err(Error::Parse(format!("unknown scope {s:?}"))),
        }
    }
}

/// An interval length `amount` that localizes a value with `confidence`
/// percent certainty.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyReport {
    pub amount: f64,
    pub confidence: f64,
    pub method: String,
}

impl PrivacyReport {
    pub fn new(amount: f64, confidence: f64, method: impl Into<String>) -> Result<Self> {
        if !(amount >= 0.0) {
            return Err(Error::Param(format!("privacy amount {amount} must be >= 0")));
        }
        check_confidence(confidence)?;
        Ok(Self { amount, confidence, method: method.into() })
    }
}

fn check_confidence(c: f64) -> Result<()> {
    if !(c > 0.0 && c <= 100.0) {
        return Err(Error::Range { value: c, lo: 0.0, hi: 100.0 });
    }
    Ok(())
}

/// Interval length at `c`% confidence for uniform noise on `[-delta, delta]`.
pub fn privacy_amount_uniform(delta: f64, c: f64) -> Result<f64> {
    check_confidence(c)?;
    if !(delta >= 0.0) {
        return Err(Error::Param(format!("delta {delta} must be >= 0")));
    }
    Ok(2.0 * c * delta / 100.0)
}

fn check_params(n: usize, n2: usize, k: usize) -> Result<()> {
    if n == 0 || k == 0 {
        return Err(Error::Param("n and k must be positive".into()));
    }
    if n2 < 1 || n2 > n {
        return Err(Error::Param(format!("n2={n2} outside 1..={n}")));
    }
    Ok(())
}

/// Probability that one execution catches Bob when he narrows an attribute
/// (or a whole example) from `2^n1` to `2^(n1 - n2)`. `n1` only labels the
/// privacy level and does not enter the result.
pub fn detection_probability(n: usize, _n1: usize, n2: usize, k: usize, scope: Scope) -> Result<f64> {
    check_params(n, n2, k)?;
    let measured = match scope {
        Scope::Attribute => n2 - 1,
        Scope::Example => n2 * k - 1,
    };
    Ok(measured as f64 / (2 * n * k) as f64)
}

/// Expected number of examples Bob reads at level `2^(n1 - n2)` before the
/// first detection ends the protocol. Equals `(1 - p) / p` for the
/// example-scope detection probability `p`; infinite when `p = 0`.
pub fn expected_leak_count(n: usize, n2: usize, k: usize) -> Result<f64> {
    check_params(n, n2, k)?;
    let (n, n2, k) = (n as f64, n2 as f64, k as f64);
    if n2 * k - 1.0 == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 * n / n2 + 2.0 * n / (n2 * (n2 * k - 1.0)) - 1.0)
}

/// One row of the formula table printed by the CLI.
#[derive(Debug, Clone, PartialEq)]
pub struct FormulaRow {
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub k: usize,
    pub attribute_detection: f64,
    pub example_detection: f64,
    pub expected_leaks: f64,
}

pub fn formula_row(n: usize, n1: usize, n2: usize, k: usize) -> Result<FormulaRow> {
    Ok(FormulaRow {
        n,
        n1,
        n2,
        k,
        attribute_detection: detection_probability(n, n1, n2, k, Scope::Attribute)?,
        example_detection: detection_probability(n, n1, n2, k, Scope::Example)?,
        expected_leaks: expected_leak_count(n, n2, k)?,
    })
}
