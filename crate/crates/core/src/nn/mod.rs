//! Dense feed-forward classifier with a softmax head.

mod checkpoint;
mod layer;
mod model;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use layer::DenseLayer;
pub use model::{Classifier, ForwardPass, DEFAULT_HIDDEN};
pub use train::{cross_entropy, gradient, train, Gradients, TrainConfig};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Probabilities clamped to this floor before taking the log in the loss.
pub const LOG_CLAMP: f64 = 1e-12;

/// Output of [`softmax`]: positive entries summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    /// Wraps an existing distribution after checking it.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty("probability vector"));
        }
        if let Some(index) = probs.iter().position(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::NonFinite { index });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self(probs))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn argmax(&self) -> usize {
        crate::linalg::argmax(&self.0)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Result<ProbabilityVector> {
    if logits.is_empty() {
        return Err(Error::Empty("logits"));
    }
    if let Some(index) = logits.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut out = logits.to_vec();
    softmax_in_place(&mut out);
    Ok(ProbabilityVector(out))
}

pub(crate) fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetric_pair_is_half() {
        let p = softmax(&[0.0, 0.0]).unwrap();
        assert_eq!(p.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn one_two_three() {
        // e^k / (e + e^2 + e^3), evaluated by hand.
        let e = std::f64::consts::E;
        let z = e + e * e + e * e * e;
        let expected = [e / z, e * e / z, e * e * e / z];
        let p = softmax(&[1.0, 2.0, 3.0]).unwrap();
        for (got, want) in p.as_slice().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
        for (got, want) in p.as_slice().iter().zip([0.09003, 0.24473, 0.66524]) {
            assert!((got - want).abs() < 1e-5);
        }
    }

    #[test]
    fn large_inputs_do_not_overflow() {
        let p = softmax(&[1e4, -1e4, 0.0]).unwrap();
        assert!(p.as_slice().iter().all(|v| v.is_finite()));
        assert_eq!(p.argmax(), 0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(softmax(&[]), Err(Error::Empty(_))));
        assert!(matches!(
            softmax(&[1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    proptest! {
        #[test]
        fn normalized_and_order_preserving(xs in prop::collection::vec(-1e4f64..1e4, 1..12)) {
            let p = softmax(&xs).unwrap();
            let sum: f64 = p.as_slice().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(p.as_slice().iter().all(|v| *v >= 0.0 && *v <= 1.0));
            prop_assert_eq!(p.argmax(), crate::linalg::argmax(&xs));
        }

        #[test]
        fn shift_invariant(xs in prop::collection::vec(-50f64..50.0, 1..8), c in -100f64..100.0) {
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let a = softmax(&xs).unwrap();
            let b = softmax(&shifted).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
