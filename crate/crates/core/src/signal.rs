//! Finite, non-empty real vectors and their text/JSON encodings.

use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense real vector with at least one entry, all finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Signal(Vec<f64>);

impl Signal {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptySignal);
        }
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Signal(entries))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Signal::new(vec![0.0; n])
    }

    /// The `k`-th standard basis vector (0-based) of length `n`.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::invalid(format!("basis index {k} out of range for n = {n}")));
        }
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        Signal::new(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Signal::new(self.0.iter().map(|v| v * c).collect())
    }

    /// Parses either a JSON array of numbers or whitespace-separated tokens.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('[') {
            let values: Vec<f64> = serde_json::from_str(trimmed)?;
            return Signal::new(values);
        }
        let values = text
            .split_whitespace()
            .map(|tok| tok.parse::<f64>().map_err(|_| Error::Parse(format!("not a number: `{tok}`"))))
            .collect::<Result<Vec<_>>>()?;
        Signal::new(values)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Signal::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("finite floats always serialize")
    }

    /// One value per line, 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.0.len() * 24);
        for v in &self.0 {
            out.push_str(&crate::lab::csv::fmt_f64(*v));
            out.push('\n');
        }
        out
    }
}

impl TryFrom<Vec<f64>> for Signal {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Signal::new(v)
    }
}

impl From<Signal> for Vec<f64> {
    fn from(s: Signal) -> Self {
        s.0
    }
}

impl Deref for Signal {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn l1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

/// Euclidean norm with scaling to avoid overflow/underflow.
pub fn l2(x: &[f64]) -> f64 {
    let scale = linf(x);
    if scale == 0.0 {
        return 0.0;
    }
    let ss: f64 = x.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * ss.sqrt()
}

pub fn linf(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub(crate) fn check_len(x: &[f64], expected: usize) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: x.len() });
    }
    Ok(())
}
