//! Incremental class learning driven by a classification confidence threshold.
//!
//! A classifier trained on an initial set of classes is primed with an extra
//! output node, tested on a pool that mixes known-class test data with data
//! from classes it has never seen, and flags every sample whose top softmax
//! probability fails to dominate the remaining probabilities by a threshold
//! factor. Flagged samples are clustered, the priming node is replaced by one
//! node per cluster, and the network is retrained on the caught samples plus a
//! small replay of known-class data.
//!
//! Module map:
//!
//! - [`nn`]: dense ReLU classifier, softmax, cross-entropy, SGD, checkpoints.
//! - [`surgery`]: priming-node injection and class-node instantiation.
//! - [`detector`]: threshold computation and unknown-sample flagging.
//! - [`clustering`]: Gaussian affinity, Jacobi eigensolver, spectral k-means.
//! - [`orchestrator`]: the incremental loop and the full-retrain control.
//! - [`metrics`]: accuracy, incremental learning accuracy, ARI, one-way ANOVA.
//! - [`data`]: IDX and embedding-CSV loaders, blob fixtures, stratified splits.

mod binio;
pub mod clustering;
pub mod data;
pub mod detector;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod orchestrator;
pub mod seed;
pub mod surgery;

pub use clustering::{spectral_cluster, ClusterAssignment};
pub use data::{BlobSpec, LabeledDataset};
pub use detector::{compute_ct, CtParams, DetectionResult, SampleFlag};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use metrics::{accuracy, adjusted_rand_index, anova_oneway, ila};
pub use nn::{Classifier, ProbabilityVector, TrainConfig};
pub use orchestrator::{
    full_retrain_baseline, run_experiment, ExperimentConfig, IterationReport, RunLog,
};
pub use surgery::HeadSurgeryParams;
