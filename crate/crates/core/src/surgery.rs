//! Output-head surgery: priming-node injection and class-node instantiation.
//!
//! A new node's incoming weight from input `j` is the sum of the existing
//! nodes' weights from `j` divided by `big_n`; its bias follows the same rule.
//! Existing rows are never modified.

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::metrics::accuracy;
use crate::nn::{Classifier, DenseLayer};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadSurgeryParams {
    pub big_n: f64,
}

impl Default for HeadSurgeryParams {
    fn default() -> Self {
        Self { big_n: 1000.0 }
    }
}

impl HeadSurgeryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.big_n >= 1.0 && self.big_n.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "big_n must be a finite value >= 1, got {}",
                self.big_n
            )));
        }
        Ok(())
    }
}

/// Column sums of the first `rows` head rows divided by `big_n`, and the same for biases.
fn balanced_node(head: &DenseLayer, rows: usize, big_n: f64) -> (Vec<f64>, f64) {
    let mut weights = vec![0.0; head.in_dim()];
    for r in 0..rows {
        for (w, &v) in weights.iter_mut().zip(head.weights().row(r)) {
            *w += v;
        }
    }
    for w in &mut weights {
        *w /= big_n;
    }
    let bias = head.biases()[..rows].iter().sum::<f64>() / big_n;
    (weights, bias)
}

/// Appends the priming node to a trained, unprimed head of `k >= 1` classes.
pub fn add_priming_node(model: &Classifier, params: &HeadSurgeryParams) -> Result<Classifier> {
    params.validate()?;
    if model.is_primed() {
        return Err(Error::AlreadyPrimed);
    }
    let k = model.class_count();
    if k == 0 {
        return Err(Error::InvalidParameter("model has no class nodes".into()));
    }
    let mut primed = model.clone();
    let (weights, bias) = balanced_node(primed.head(), k, params.big_n);
    primed.head_mut().push_node(&weights, bias)?;
    primed.set_primed(true);
    Ok(primed)
}

/// Drops the priming node, restoring the unprimed head.
pub fn remove_priming_node(model: &Classifier) -> Result<Classifier> {
    if !model.is_primed() {
        return Err(Error::NotPrimed);
    }
    let mut out = model.clone();
    out.head_mut().pop_node();
    out.set_primed(false);
    Ok(out)
}

/// Replaces the priming node with `n_new` class nodes, each initialized from
/// the surviving class rows.
pub fn instantiate_class_nodes(
    model: &Classifier,
    n_new: usize,
    params: &HeadSurgeryParams,
) -> Result<Classifier> {
    params.validate()?;
    if n_new < 1 {
        return Err(Error::InvalidParameter("n_new must be at least 1".into()));
    }
    let mut out = remove_priming_node(model)?;
    let k = out.class_count();
    let (weights, bias) = balanced_node(out.head(), k, params.big_n);
    for _ in 0..n_new {
        out.head_mut().push_node(&weights, bias)?;
    }
    Ok(out)
}

/// Accuracy before surgery minus accuracy after, over `labels` given as node indices.
///
/// A prediction landing on a node the original model did not have counts as wrong.
pub fn priming_disruption(
    before: &Classifier,
    after: &Classifier,
    features: &Matrix,
    labels: &[usize],
) -> Result<f64> {
    let a = accuracy(&before.predict(features)?, labels)?;
    let b = accuracy(&after.predict(features)?, labels)?;
    Ok(a - b)
}
