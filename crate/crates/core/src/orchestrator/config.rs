use serde::{Deserialize, Serialize};

use crate::nn::{TrainConfig, DEFAULT_HIDDEN};
use crate::surgery::HeadSurgeryParams;
use crate::{Error, Result};

pub const DEFAULT_REPLAY_PER_CLASS: usize = 20;

/// Inputs of one incremental run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_init: usize,
    pub n_incr: usize,
    pub n_total: usize,
    /// Constant `a` of the threshold formula.
    pub ct_a: f64,
    pub ct_bias: f64,
    /// Fixed base accuracy in (0, 1]; measured from the initial model when unset.
    pub a_init: Option<f64>,
    /// Replace `a_init` with each iteration's post-retrain accuracy.
    pub remeasure_a_init: bool,
    pub replay_per_class: usize,
    pub hidden: Vec<usize>,
    pub initial_train: TrainConfig,
    pub retrain: TrainConfig,
    pub surgery: HeadSurgeryParams,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_init: 5,
            n_incr: 1,
            n_total: 10,
            ct_a: 10.0,
            ct_bias: 0.0,
            a_init: None,
            remeasure_a_init: false,
            replay_per_class: DEFAULT_REPLAY_PER_CLASS,
            hidden: DEFAULT_HIDDEN.to_vec(),
            initial_train: TrainConfig::default(),
            retrain: TrainConfig {
                epochs: 5,
                ..TrainConfig::default()
            },
            surgery: HeadSurgeryParams::default(),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// `ceil((n_total - n_init) / n_incr)`.
    pub fn iteration_count(&self) -> usize {
        (self.n_total.saturating_sub(self.n_init)).div_ceil(self.n_incr.max(1))
    }

    /// Every violated constraint, in field order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n_init == 0 {
            out.push("n_init must be at least 1".to_string());
        }
        if self.n_incr == 0 {
            out.push("n_incr must be at least 1".to_string());
        }
        if self.n_init > self.n_total {
            out.push(format!(
                "n_init ({}) exceeds n_total ({})",
                self.n_init, self.n_total
            ));
        }
        if !self.ct_a.is_finite() {
            out.push(format!("ct_a must be finite, got {}", self.ct_a));
        }
        if !(self.ct_bias >= 0.0 && self.ct_bias.is_finite()) {
            out.push(format!("ct_bias must be finite and >= 0, got {}", self.ct_bias));
        }
        if let Some(a) = self.a_init {
            if !(a > 0.0 && a <= 1.0) {
                out.push(format!("a_init must lie in (0, 1], got {a}"));
            }
        }
        if self.hidden.contains(&0) {
            out.push("hidden layer widths must be positive".to_string());
        }
        for (name, cfg) in [("initial_train", &self.initial_train), ("retrain", &self.retrain)] {
            if let Err(e) = cfg.validate() {
                out.push(format!("{name}: {e}"));
            }
        }
        if let Err(e) = self.surgery.validate() {
            out.push(format!("surgery: {e}"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(v.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iteration_counts() {
        let c = |n_init, n_incr, n_total| ExperimentConfig {
            n_init,
            n_incr,
            n_total,
            ..ExperimentConfig::default()
        };
        assert_eq!(c(5, 1, 8).iteration_count(), 3);
        assert_eq!(c(5, 1, 50).iteration_count(), 45);
        assert_eq!(c(5, 3, 10).iteration_count(), 2);
        assert_eq!(c(5, 1, 5).iteration_count(), 0);
    }

    #[test]
    fn collects_all_violations() {
        let cfg = ExperimentConfig {
            n_init: 9,
            n_total: 6,
            n_incr: 0,
            ..ExperimentConfig::default()
        };
        let v = cfg.violations();
        assert_eq!(v.len(), 2, "{v:?}");
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }
}
