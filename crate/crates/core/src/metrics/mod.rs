//! Evaluation metrics.

mod anova;

pub use anova::{anova_oneway, f_survival, ln_gamma, regularized_incomplete_beta, AnovaResult};

use std::collections::HashMap;

use crate::{Error, Result};

/// Fraction of positions where `predictions` equals `truth`.
pub fn accuracy<T: PartialEq>(predictions: &[T], truth: &[T]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            what: "prediction count",
            expected: truth.len(),
            got: predictions.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Empty("accuracy inputs"));
    }
    let hits = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Incremental learning accuracy: the plain mean of per-iteration accuracies.
pub fn ila(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::Empty("accuracy series"));
    }
    if let Some(index) = series.iter().position(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::InvalidParameter(format!(
            "accuracy {} at iteration {index} is outside [0, 1]",
            series[index]
        )));
    }
    Ok(series.iter().sum::<f64>() / series.len() as f64)
}

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// Adjusted Rand index from the contingency table of two labelings.
///
/// When both partitions are trivial in the same way (all-in-one or
/// all-singletons) the index is defined as 1.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "labeling length",
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("labelings"));
    }
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&n| pairs(n)).sum();
    let sum_a: f64 = rows.values().map(|&n| pairs(n)).sum();
    let sum_b: f64 = cols.values().map(|&n| pairs(n)).sum();
    let expected = sum_a * sum_b / pairs(a.len() as u64).max(1.0);
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}
