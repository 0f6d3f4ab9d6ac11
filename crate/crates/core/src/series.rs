//! Observation data: times (days), values and per-point standard deviations.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A validated, time-ordered series.
///
/// Invariants: equal lengths, `n >= 1`, all entries finite, sigmas strictly
/// positive, times strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TimeSeries<T> {
    times: Vec<T>,
    values: Vec<T>,
    sigmas: Vec<T>,
}

impl<T: Real> TimeSeries<T> {
    /// Build from columns that must already be strictly increasing in time.
    pub fn new(times: Vec<T>, values: Vec<T>, sigmas: Vec<T>) -> Result<Self> {
        let n = times.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        for len in [values.len(), sigmas.len()] {
            if len != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        for i in 0..n {
            let bad = |message: &str| Error::InvalidObservation {
                index: i,
                message: message.to_string(),
            };
            if !times[i].is_finite() || !values[i].is_finite() || !sigmas[i].is_finite() {
                return Err(bad("non-finite entry"));
            }
            if sigmas[i] <= T::zero() {
                return Err(bad("sigma must be strictly positive"));
            }
            if i > 0 && times[i] <= times[i - 1] {
                return Err(bad("times must be strictly increasing"));
            }
        }
        Ok(Self {
            times,
            values,
            sigmas,
        })
    }

    /// Stable-sort rows by time, then validate. Exact duplicate times are
    /// rejected.
    pub fn from_unsorted(times: Vec<T>, values: Vec<T>, sigmas: Vec<T>) -> Result<Self> {
        if times.len() != values.len() || times.len() != sigmas.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                found: values.len().min(sigmas.len()),
            });
        }
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].partial_cmp(&times[b]).unwrap_or(std::cmp::Ordering::Equal));
        for w in order.windows(2) {
            if times[w[0]] == times[w[1]] {
                return Err(Error::DuplicateTime {
                    line: w[1] + 2,
                    time: times[w[1]].to_f64_lossy(),
                });
            }
        }
        let pick = |col: &[T]| order.iter().map(|&i| col[i]).collect::<Vec<_>>();
        Self::new(pick(&times), pick(&values), pick(&sigmas))
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn sigmas(&self) -> &[T] {
        &self.sigmas
    }

    /// Inverse-variance weights `1 / sigma_i^2`.
    pub fn weights(&self) -> Vec<T> {
        self.sigmas.iter().map(|&s| (s * s).recip()).collect()
    }

    /// Same times and sigmas with new values.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidObservation {
                index: i,
                message: "non-finite value".into(),
            });
        }
        Ok(Self {
            times: self.times.clone(),
            values,
            sigmas: self.sigmas.clone(),
        })
    }

    pub fn span(&self) -> T {
        self.times[self.len() - 1] - self.times[0]
    }

    /// Render as `t,y,sigma` CSV using shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,y,sigma\n");
        for i in 0..self.len() {
            let _ = writeln!(out, "{},{},{}", self.times[i], self.values[i], self.sigmas[i]);
        }
        out
    }

    /// Cast to another precision.
    pub fn cast<U: Real>(&self) -> Result<TimeSeries<U>> {
        let conv = |v: &[T]| v.iter().map(|x| U::lit(x.to_f64_lossy())).collect();
        TimeSeries::new(conv(&self.times), conv(&self.values), conv(&self.sigmas))
    }
}

fn parse_cell<T: Real>(cell: &str, line: usize, column: &str) -> Result<T> {
    let trimmed = cell.trim();
    let value: f64 = trimmed.parse().map_err(|_| Error::MalformedRow {
        line,
        message: format!("column `{column}`: `{trimmed}` is not a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::MalformedRow {
            line,
            message: format!("column `{column}`: value must be finite"),
        });
    }
    Ok(T::lit(value))
}

/// Parse a `t,y,sigma` CSV document. Rows may be in any order; they are
/// stably sorted by time. Line numbers in errors are 1-based and count the
/// header.
pub fn parse_timeseries<T: Real>(text: &str) -> Result<TimeSeries<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header = reader.headers().map_err(|e| Error::BadHeader {
        line: 1,
        found: e.to_string(),
    })?;
    let names: Vec<&str> = header.iter().collect();
    if names != ["t", "y", "sigma"] {
        if names.is_empty() || (names.len() == 1 && names[0].is_empty()) {
            return Err(Error::EmptyInput);
        }
        return Err(Error::BadHeader {
            line: 1,
            found: names.join(","),
        });
    }

    let (mut times, mut values, mut sigmas, mut lines) = (vec![], vec![], vec![], vec![]);
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::MalformedRow {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        if record.len() != 3 {
            return Err(Error::MalformedRow {
                line,
                message: format!("expected 3 columns, found {}", record.len()),
            });
        }
        let t: T = parse_cell(&record[0], line, "t")?;
        let y: T = parse_cell(&record[1], line, "y")?;
        let s: T = parse_cell(&record[2], line, "sigma")?;
        if s <= T::zero() {
            return Err(Error::NonPositiveSigma {
                line,
                value: s.to_f64_lossy(),
            });
        }
        times.push(t);
        values.push(y);
        sigmas.push(s);
        lines.push(line);
    }
    if times.is_empty() {
        return Err(Error::EmptyInput);
    }

    // Report duplicates against the original line numbers.
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].partial_cmp(&times[b]).unwrap_or(std::cmp::Ordering::Equal));
    for w in order.windows(2) {
        if times[w[0]] == times[w[1]] {
            let i = w[0].max(w[1]);
            return Err(Error::DuplicateTime {
                line: lines[i],
                time: times[i].to_f64_lossy(),
            });
        }
    }
    TimeSeries::from_unsorted(times, values, sigmas)
}
