//! Error statistics of one method's column against another's.

use std::collections::HashMap;
use std::io::Write;

use crate::error::CliError;
use crate::sweep::Row;

pub const SUMMARY_HEADER: [&str; 6] = [
    "method",
    "reference",
    "points",
    "max_rel_error",
    "mean_rel_error",
    "min_diff",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub method: String,
    pub reference: String,
    /// Grid points where both sides have a value.
    pub points: usize,
    pub max_rel_error: Option<f64>,
    pub mean_rel_error: Option<f64>,
    /// Smallest signed `value - reference`.
    pub min_diff: Option<f64>,
}

/// Pass/fail thresholds. `None` disables a check.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Gate {
    pub max_rel_error: Option<f64>,
    pub min_diff: Option<f64>,
}

impl Gate {
    /// One message per violated threshold.
    pub fn violations(&self, summaries: &[Summary]) -> Vec<String> {
        let mut out = Vec::new();
        for s in summaries {
            if let (Some(tol), Some(e)) = (self.max_rel_error, s.max_rel_error) {
                if e > tol {
                    out.push(format!(
                        "{} vs {}: max relative error {e} > {tol}",
                        s.method, s.reference
                    ));
                }
            }
            if let (Some(floor), Some(d)) = (self.min_diff, s.min_diff) {
                if d < floor {
                    out.push(format!(
                        "{} vs {}: min difference {d} < {floor}",
                        s.method, s.reference
                    ));
                }
            }
        }
        out
    }
}

type Key = (u64, u64);

fn key(r: &Row) -> Key {
    (r.lambda1.to_bits(), r.lambda2.to_bits())
}

fn column<'a>(rows: &'a [Row], method: &str, origin: &str) -> Result<Vec<&'a Row>, CliError> {
    let col: Vec<&Row> = rows.iter().filter(|r| r.method == method).collect();
    if col.is_empty() {
        return Err(CliError::GridMismatch(format!(
            "{origin} has no rows for method {method}"
        )));
    }
    let mut seen = HashMap::new();
    for r in &col {
        if seen.insert(key(r), ()).is_some() {
            return Err(CliError::GridMismatch(format!(
                "{origin}: method {method} repeats point λ₁={} λ₂={}",
                r.lambda1, r.lambda2
            )));
        }
    }
    Ok(col)
}

/// Compares `method` from `candidates` with `reference` from `references`.
/// Both columns must cover exactly the same `(λ₁, λ₂)` points.
pub fn compare_columns(
    candidates: &[Row],
    method: &str,
    references: &[Row],
    reference: &str,
) -> Result<Summary, CliError> {
    let cand = column(candidates, method, "candidate table")?;
    let refs: HashMap<Key, &Row> = column(references, reference, "reference table")?
        .into_iter()
        .map(|r| (key(r), r))
        .collect();
    if cand.len() != refs.len() {
        return Err(CliError::GridMismatch(format!(
            "{method} has {} points, {reference} has {}",
            cand.len(),
            refs.len()
        )));
    }
    let mut errors = Vec::new();
    let mut min_diff = f64::INFINITY;
    for c in cand {
        let r = refs.get(&key(c)).ok_or_else(|| {
            CliError::GridMismatch(format!(
                "point λ₁={} λ₂={} of {method} is missing from {reference}",
                c.lambda1, c.lambda2
            ))
        })?;
        if let (true, true, Some(v), Some(rv)) = (c.is_ok(), r.is_ok(), c.value, r.value) {
            errors.push((v - rv).abs() / rv.abs());
            min_diff = min_diff.min(v - rv);
        }
    }
    let points = errors.len();
    let some = |x: f64| (points > 0).then_some(x);
    Ok(Summary {
        method: method.to_string(),
        reference: reference.to_string(),
        points,
        max_rel_error: some(errors.iter().copied().fold(0.0, f64::max)),
        mean_rel_error: some(errors.iter().sum::<f64>() / points.max(1) as f64),
        min_diff: some(min_diff),
    })
}

/// Methods of `rows` in order of first appearance.
pub fn methods_in(rows: &[Row]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in rows {
        if !out.contains(&r.method) {
            out.push(r.method.clone());
        }
    }
    out
}

pub fn write_summaries<W: Write>(summaries: &[Summary], out: W) -> Result<(), CliError> {
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for s in summaries {
        w.write_record([
            s.method.clone(),
            s.reference.clone(),
            s.points.to_string(),
            opt(s.max_rel_error),
            opt(s.mean_rel_error),
            opt(s.min_diff),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
