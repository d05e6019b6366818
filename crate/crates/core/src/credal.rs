//! Hypothesis sets, credibility functions and the probability axioms.
//!
//! The hypothesis set is finite and indexed. Events are unions of atoms, so
//! an event's probability is the sum of its atoms' entries and the axioms
//! reduce to a check on the atomic vector.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, fmt_g17};

/// Default tolerance on `|sum - 1|`.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Ordered, non-empty list of distinct hypothesis labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct HypothesisSet {
    labels: Vec<String>,
}

impl HypothesisSet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::invalid("hypothesis set must be non-empty"));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for label in &labels {
            if label.is_empty() {
                return Err(Error::invalid("hypothesis labels must be non-empty"));
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::invalid(format!(
                    "duplicate hypothesis label {label:?}"
                )));
            }
        }
        Ok(Self { labels })
    }

    /// Labels `H0, H1, ...`.
    pub fn indexed(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("H{i}")))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

impl TryFrom<Vec<String>> for HypothesisSet {
    type Error = Error;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        Self::new(labels)
    }
}

impl From<HypothesisSet> for Vec<String> {
    fn from(set: HypothesisSet) -> Self {
        set.labels
    }
}

/// A credibility function: one value in `[0, 1]` per hypothesis.
///
/// Nothing forces the entries to sum to one; whether they do is exactly what
/// [`Credibility::is_probabilistic`] and the dominance checker examine.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Credibility {
    values: Vec<f64>,
}

impl Credibility {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid(
                "credibility must cover at least one hypothesis",
            ));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::invalid(format!(
                    "credibility entry {i} is not finite"
                )));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!(
                    "credibility entry {i} = {v} lies outside [0, 1]"
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_probabilistic(&self, eps: f64) -> bool {
        is_probabilistic(&self.values, eps).expect("credibility entries are finite")
    }
}

impl From<ProbabilityVector> for Credibility {
    fn from(p: ProbabilityVector) -> Self {
        Self { values: p.values }
    }
}

/// Non-negative entries summing to one (within [`DEFAULT_EPS`]).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbabilityVector {
    values: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(values, DEFAULT_EPS)
    }

    pub fn with_tolerance(values: Vec<f64>, eps: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("probability vector must be non-empty"));
        }
        if !is_probabilistic(&values, eps)? {
            return Err(Error::invalid(format!(
                "entries must be non-negative and sum to 1 within {eps:e}"
            )));
        }
        Ok(Self { values })
    }

    /// Caller guarantees the invariants.
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(is_probabilistic(&values, DEFAULT_EPS).unwrap_or(false));
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    /// Probability of the event made of the given atoms.
    pub fn event(&self, atoms: &[usize]) -> Result<f64> {
        let n = self.values.len();
        let mut seen = HashSet::new();
        let mut picked = Vec::with_capacity(atoms.len());
        for &a in atoms {
            if a >= n {
                return Err(Error::Index { index: a, len: n });
            }
            if seen.insert(a) {
                picked.push(self.values[a]);
            }
        }
        Ok(compensated_sum(picked))
    }
}

impl Deref for ProbabilityVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// True iff every entry is `>= 0` and `|sum - 1| <= eps`.
pub fn is_probabilistic(values: &[f64], eps: f64) -> Result<bool> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("entry {i} is not finite")));
    }
    if values.iter().any(|&v| v < 0.0) {
        return Ok(false);
    }
    let sum = compensated_sum(values.iter().copied());
    Ok((sum - 1.0).abs() <= eps)
}

/// The credibility function of an agent certain that hypothesis `j` is best.
pub fn ideal_credibility(j: usize, n: usize) -> Result<ProbabilityVector> {
    if j >= n {
        return Err(Error::Index { index: j, len: n });
    }
    let mut values = vec![0.0; n];
    values[j] = 1.0;
    Ok(ProbabilityVector { values })
}

pub fn uniform(n: usize) -> Result<ProbabilityVector> {
    if n == 0 {
        return Err(Error::invalid("uniform distribution needs n >= 1"));
    }
    Ok(ProbabilityVector {
        values: vec![1.0 / n as f64; n],
    })
}

/// Reads a `label,value` CSV (with header) into labels and raw values.
pub fn read_labeled_csv<R: Read>(reader: R) -> Result<(HypothesisSet, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "label" || &headers[1] != "value" {
        return Err(Error::invalid(format!(
            "expected header `label,value`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let raw = &record[1];
        let value: f64 = raw
            .parse()
            .map_err(|_| Error::invalid(format!("row {}: cannot parse value {raw:?}", row + 1)))?;
        labels.push(record[0].to_string());
        values.push(value);
    }
    Ok((HypothesisSet::new(labels)?, values))
}

pub fn write_labeled_csv<W: Write>(
    writer: W,
    labels: &HypothesisSet,
    values: &[f64],
) -> Result<()> {
    if labels.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: labels.len(),
            found: values.len(),
        });
    }
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["label", "value"])?;
    for (label, &v) in labels.labels().iter().zip(values) {
        wtr.write_record([label.as_str(), fmt_g17(v).as_str()])?;
    }
    wtr.flush()?;
    Ok(())
}
