//! Unknown-sample detection with a classification confidence threshold.
//!
//! A sample is known when its top softmax probability exceeds the mean of the
//! remaining probabilities times the threshold `ct`, where
//! `ct = (n_incr * l + a) / a_init + bias`.

use serde::{Deserialize, Serialize};

use crate::linalg::{argmax, Matrix};
use crate::nn::{Classifier, ProbabilityVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtParams {
    /// Classes added per iteration.
    pub n_incr: usize,
    /// 1-based iteration index.
    pub l: usize,
    pub a: f64,
    /// Base accuracy as a fraction in (0, 1].
    pub a_init: f64,
    pub bias: f64,
}

pub fn compute_ct(params: &CtParams) -> Result<f64> {
    if !(params.a_init > 0.0 && params.a_init <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "a_init must lie in (0, 1], got {}",
            params.a_init
        )));
    }
    if params.l < 1 || params.n_incr < 1 {
        return Err(Error::InvalidParameter(
            "iteration index and n_incr start at 1".into(),
        ));
    }
    if !(params.bias >= 0.0) || !params.a.is_finite() {
        return Err(Error::InvalidParameter(
            "bias must be non-negative and a finite".into(),
        ));
    }
    let ct = ((params.n_incr * params.l) as f64 + params.a) / params.a_init + params.bias;
    if !(ct > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be positive, got {ct}"
        )));
    }
    Ok(ct)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SampleFlag {
    Known,
    Unknown,
}

/// Ratio test on the raw probabilities. One occurrence of the maximum (the
/// lowest index) is removed before averaging the rest.
pub fn flag_probs(probs: &[f64], ct: f64) -> Result<SampleFlag> {
    if probs.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two probabilities to compare".into(),
        ));
    }
    if !(ct > 0.0) {
        return Err(Error::InvalidParameter(format!("ct must be positive, got {ct}")));
    }
    let top = argmax(probs);
    let rest: f64 = probs
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != top)
        .map(|(_, p)| p)
        .sum();
    let mean_rest = rest / (probs.len() - 1) as f64;
    Ok(if probs[top] > mean_rest * ct {
        SampleFlag::Known
    } else {
        SampleFlag::Unknown
    })
}

pub fn flag_sample(probs: &ProbabilityVector, ct: f64) -> Result<SampleFlag> {
    flag_probs(probs.as_slice(), ct)
}

/// Partition of a tested batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub flags: Vec<SampleFlag>,
    /// Indices with [`SampleFlag::Unknown`], ascending.
    pub unknown_samples: Vec<usize>,
    /// Argmax node for known samples, `None` for unknown ones.
    pub known_predictions: Vec<Option<usize>>,
}

impl DetectionResult {
    pub fn known_samples(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, f)| **f == SampleFlag::Known)
            .map(|(i, _)| i)
    }
}

/// Flags every row of `samples` using all output nodes of a primed model.
pub fn detect_unknowns(model: &Classifier, samples: &Matrix, ct: f64) -> Result<DetectionResult> {
    if !model.is_primed() {
        return Err(Error::NotPrimed);
    }
    if samples.rows() == 0 {
        return Err(Error::Empty("samples"));
    }
    let pass = model.forward(samples)?;
    let mut flags = Vec::with_capacity(samples.rows());
    let mut unknown_samples = Vec::new();
    let mut known_predictions = Vec::with_capacity(samples.rows());
    for (i, probs) in pass.probabilities.iter_rows().enumerate() {
        let flag = flag_probs(probs, ct)?;
        match flag {
            SampleFlag::Known => known_predictions.push(Some(argmax(probs))),
            SampleFlag::Unknown => {
                known_predictions.push(None);
                unknown_samples.push(i);
            }
        }
        flags.push(flag);
    }
    Ok(DetectionResult {
        flags,
        unknown_samples,
        known_predictions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvmDecision {
    Class(usize),
    Unknown,
}

/// Single-threshold baseline: the argmax class if its probability reaches `sigma`.
pub fn evm_threshold(probs: &ProbabilityVector, sigma: f64) -> Result<EvmDecision> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must lie in (0, 1], got {sigma}"
        )));
    }
    let top = probs.argmax();
    Ok(if probs.as_slice()[top] >= sigma {
        EvmDecision::Class(top)
    } else {
        EvmDecision::Unknown
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::DenseLayer;
    use proptest::prelude::*;

    fn ct(n_incr: usize, l: usize, a: f64, a_init: f64) -> f64 {
        compute_ct(&CtParams {
            n_incr,
            l,
            a,
            a_init,
            bias: 0.0,
        })
        .unwrap()
    }

    fn pv(p: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(p.to_vec()).unwrap()
    }

    #[test]
    fn ct_values() {
        assert!((ct(1, 1, 9.0, 0.9) - 100.0 / 9.0).abs() < 1e-9);
        assert_eq!(ct(1, 1, 10.0, 1.0), 11.0);
        assert_eq!(ct(2, 5, 10.0, 1.0), 20.0);
        let biased = compute_ct(&CtParams {
            n_incr: 1,
            l: 1,
            a: 10.0,
            a_init: 1.0,
            bias: 2.5,
        })
        .unwrap();
        assert_eq!(biased, 13.5);
    }

    #[test]
    fn ct_rejects_bad_params() {
        let base = CtParams {
            n_incr: 1,
            l: 1,
            a: 9.0,
            a_init: 0.9,
            bias: 0.0,
        };
        assert!(compute_ct(&CtParams { a_init: 0.0, ..base }).is_err());
        assert!(compute_ct(&CtParams { a_init: -0.5, ..base }).is_err());
        assert!(compute_ct(&CtParams { l: 0, ..base }).is_err());
    }

    #[test]
    fn flag_examples() {
        let c = 100.0 / 9.0;
        assert_eq!(flag_sample(&pv(&[0.97, 0.01, 0.01, 0.01]), c).unwrap(), SampleFlag::Known);
        assert_eq!(flag_sample(&pv(&[0.25; 4]), c).unwrap(), SampleFlag::Unknown);
        assert_eq!(flag_sample(&pv(&[0.9, 0.1]), 5.0).unwrap(), SampleFlag::Known);
        assert!(flag_sample(&pv(&[1.0]), 5.0).is_err());
    }

    #[test]
    fn tied_maximum_removes_one_occurrence() {
        // p' = {0.4, 0.2}, mean 0.3; 0.4 > 0.3 * 1.2 but not > 0.3 * 1.4.
        assert_eq!(flag_probs(&[0.4, 0.4, 0.2], 1.2).unwrap(), SampleFlag::Known);
        assert_eq!(flag_probs(&[0.4, 0.4, 0.2], 1.4).unwrap(), SampleFlag::Unknown);
    }

    #[test]
    fn evm_examples() {
        assert_eq!(evm_threshold(&pv(&[0.7, 0.2, 0.1]), 0.5).unwrap(), EvmDecision::Class(0));
        assert_eq!(evm_threshold(&pv(&[0.4, 0.35, 0.25]), 0.5).unwrap(), EvmDecision::Unknown);
        assert_eq!(evm_threshold(&pv(&[0.0, 1.0, 0.0]), 1.0).unwrap(), EvmDecision::Class(1));
        assert!(evm_threshold(&pv(&[0.5, 0.5]), 0.0).is_err());
        assert!(evm_threshold(&pv(&[0.5, 0.5]), 1.5).is_err());
    }

    #[test]
    fn detect_requires_primed_model() {
        let m = Classifier::new(2, &[], 3, 0).unwrap();
        assert!(matches!(
            detect_unknowns(&m, &Matrix::zeros(1, 2), 10.0),
            Err(Error::NotPrimed)
        ));
    }

    #[test]
    fn tiny_threshold_flags_everything_known() {
        let head = DenseLayer::new(
            Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap(),
            vec![0.0; 3],
        )
        .unwrap();
        let m = Classifier::from_layers(vec![], head, true).unwrap();
        let x = Matrix::from_rows(&[[0.0, 0.0], [5.0, 0.0], [0.3, 0.2]]).unwrap();
        let r = detect_unknowns(&m, &x, 1e-9).unwrap();
        assert!(r.unknown_samples.is_empty());
        assert_eq!(r.known_predictions[1], Some(0));
        let strict = detect_unknowns(&m, &x, 1e9).unwrap();
        assert_eq!(strict.unknown_samples, vec![0, 1, 2]);
    }

    fn simplex(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.001f64..1.0, len).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn flag_is_monotone_in_ct(p in simplex(5), c1 in 0.01f64..50.0, c2 in 0.01f64..50.0) {
            let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            if flag_probs(&p, hi).unwrap() == SampleFlag::Known {
                prop_assert_eq!(flag_probs(&p, lo).unwrap(), SampleFlag::Known);
            }
        }

        #[test]
        fn ct_increases_with_iteration(l in 1usize..100, n_incr in 1usize..5, a in 9.0f64..10.0, a_init in 0.1f64..1.0) {
            prop_assert!(ct(n_incr, l + 1, a, a_init) > ct(n_incr, l, a, a_init));
            prop_assert!(ct(n_incr + 1, l, a, a_init) >= ct(n_incr, l, a, a_init));
        }

        #[test]
        fn one_hot_agrees_with_evm(len in 2usize..8, hot in 0usize..8, sigma in 0.01f64..=1.0, c in 0.01f64..1e6) {
            let hot = hot % len;
            let mut p = vec![0.0; len];
            p[hot] = 1.0;
            prop_assert_eq!(flag_probs(&p, c).unwrap(), SampleFlag::Known);
            prop_assert_eq!(evm_threshold(&pv(&p), sigma).unwrap(), EvmDecision::Class(hot));
        }

        #[test]
        fn detection_partitions_batch(rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 1..20), c in 0.5f64..20.0) {
            let m = crate::surgery::add_priming_node(
                &Classifier::new(3, &[4], 2, 1).unwrap(),
                &crate::surgery::HeadSurgeryParams::default(),
            ).unwrap();
            let x = Matrix::from_rows(&rows).unwrap();
            let r = detect_unknowns(&m, &x, c).unwrap();
            prop_assert_eq!(r.flags.len(), rows.len());
            let known: Vec<usize> = r.known_samples().collect();
            prop_assert_eq!(known.len() + r.unknown_samples.len(), rows.len());
            for i in &r.unknown_samples {
                prop_assert!(!known.contains(i));
                prop_assert!(r.known_predictions[*i].is_none());
            }
        }
    }
}
