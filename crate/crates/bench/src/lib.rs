//! Fixtures shared by the benchmarks.

use cct_core::data::{split_train_test, synth_blobs, BlobSpec};
use cct_core::{Classifier, LabeledDataset, Matrix};

/// Split blob dataset with `dim = 16`, separation 10 and unit spread.
pub fn blobs(n_classes: usize, per_class: usize, seed: u64) -> LabeledDataset {
    let ds = synth_blobs(&BlobSpec {
        n_classes,
        per_class,
        dim: 16,
        center_separation: 10.0,
        cluster_std: 1.0,
        seed,
    })
    .expect("valid blob spec");
    split_train_test(&ds, 0.2, seed).expect("blob classes are large enough to split")
}

pub fn classifier(input_dim: usize, class_count: usize) -> Classifier {
    Classifier::new(input_dim, &cct_core::nn::DEFAULT_HIDDEN, class_count, 1).expect("valid shape")
}

/// Symmetric positive semi-definite `n x n` matrix.
pub fn gram(n: usize, seed: u64) -> Matrix {
    let cols = 8;
    let data = (0..n * cols)
        .map(|i| (cct_core::seed::derive(seed, 0, i as u64) >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
        .collect();
    let x = Matrix::from_vec(n, cols, data).expect("buffer length matches");
    x.matmul(&x.transpose()).expect("inner dimensions agree")
}
