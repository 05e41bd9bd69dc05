//! Spectral clustering of caught samples.
//!
//! Gaussian affinities over the embeddings, the `k` smallest eigenvectors of
//! the symmetric normalized Laplacian (row-normalized), then k-means.

mod eigen;
mod kmeans;

pub use eigen::{symmetric_eigen, SymmetricEigen, JACOBI_TOLERANCE};
pub use kmeans::{inertia, kmeans, MAX_LLOYD_ITERATIONS};

use serde::{Deserialize, Serialize};

use crate::linalg::{squared_distance, Matrix};
use crate::{Error, Result};

/// Per-sample cluster ids in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub k: usize,
}

impl ClusterAssignment {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Kernel bandwidth for [`build_affinity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Sigma {
    /// Median pairwise Euclidean distance.
    Auto,
    Fixed(f64),
}

/// Symmetric affinity matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix(Matrix);

impl AffinityMatrix {
    /// Validates a hand-built affinity matrix.
    pub fn from_matrix(m: Matrix) -> Result<Self> {
        let n = m.rows();
        if m.cols() != n {
            return Err(Error::DimensionMismatch {
                what: "affinity columns",
                expected: n,
                got: m.cols(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParameter(format!(
                        "affinity ({i}, {j}) = {v} outside [0, 1]"
                    )));
                }
                if (v - m[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "affinity is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.rows()
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// `A_ij = exp(-||x_i - x_j||^2 / (2 sigma^2))`.
pub fn build_affinity(embeddings: &Matrix, sigma: Sigma) -> Result<AffinityMatrix> {
    let n = embeddings.rows();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "affinity needs at least two samples".into(),
        ));
    }
    let mut sq = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d = squared_distance(embeddings.row(i), embeddings.row(j));
            sq[(i, j)] = d;
            sq[(j, i)] = d;
        }
    }
    let sigma = match sigma {
        Sigma::Fixed(s) if s > 0.0 && s.is_finite() => s,
        Sigma::Fixed(s) => {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {s}"
            )))
        }
        Sigma::Auto => {
            let mut dists: Vec<f64> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .map(|(i, j)| sq[(i, j)].sqrt())
                .collect();
            let m = median(&mut dists);
            if m == 0.0 {
                return Err(Error::DegenerateSigma);
            }
            m
        }
    };
    let scale = 1.0 / (2.0 * sigma * sigma);
    for v in sq.as_mut_slice() {
        *v = (-*v * scale).exp();
    }
    Ok(AffinityMatrix(sq))
}

/// `I - D^{-1/2} A D^{-1/2}`.
pub fn normalized_laplacian(affinity: &AffinityMatrix) -> Result<Matrix> {
    let a = affinity.as_matrix();
    let n = a.rows();
    let mut inv_sqrt = Vec::with_capacity(n);
    for i in 0..n {
        let d: f64 = a.row(i).iter().sum();
        if d <= 0.0 {
            return Err(Error::IsolatedVertex(i));
        }
        inv_sqrt.push(1.0 / d.sqrt());
    }
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            l[(i, j)] = delta - inv_sqrt[i] * a[(i, j)] * inv_sqrt[j];
        }
    }
    Ok(l)
}

/// Rows of the `k` smallest Laplacian eigenvectors, scaled to unit length.
pub fn spectral_embed(affinity: &AffinityMatrix, k: usize) -> Result<Matrix> {
    let n = affinity.size();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "embedding dimension {k} must lie in 1..={n}"
        )));
    }
    let eig = symmetric_eigen(&normalized_laplacian(affinity)?)?;
    let mut u = Matrix::zeros(n, k);
    for i in 0..n {
        for c in 0..k {
            u[(i, c)] = eig.vectors[(i, c)];
        }
        let norm = u.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in u.row_mut(i) {
                *v /= norm;
            }
        }
    }
    Ok(u)
}

/// Affinity with automatic sigma, spectral embedding, then seeded k-means.
pub fn spectral_cluster(embeddings: &Matrix, k: usize, seed: u64) -> Result<ClusterAssignment> {
    let n = embeddings.rows();
    if k == 0 || n < k {
        return Err(Error::InvalidParameter(format!(
            "cannot form {k} clusters from {n} samples"
        )));
    }
    if k == 1 {
        return Ok(ClusterAssignment {
            labels: vec![0; n],
            k,
        });
    }
    let affinity = build_affinity(embeddings, Sigma::Auto)?;
    let embedded = spectral_embed(&affinity, k)?;
    kmeans(&embedded, k, seed)
}
