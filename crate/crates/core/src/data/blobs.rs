use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::linalg::Matrix;
use crate::{Error, Result};

/// Isotropic Gaussian blobs, one per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub n_classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub center_separation: f64,
    pub cluster_std: f64,
    pub seed: u64,
}

impl BlobSpec {
    /// Class `c` sits on axis `c mod dim` at distance
    /// `center_separation * (1 + c / dim)` from the origin, so with
    /// `dim >= n_classes` the centers are `center_separation * e_c`.
    pub fn center(&self, class: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        c[class % self.dim] = self.center_separation * (1 + class / self.dim) as f64;
        c
    }

    fn validate(&self) -> Result<()> {
        if self.n_classes == 0 || self.per_class == 0 || self.dim == 0 {
            return Err(Error::InvalidParameter(
                "blob counts and dimension must be positive".into(),
            ));
        }
        if !(self.center_separation > 0.0 && self.cluster_std > 0.0) {
            return Err(Error::InvalidParameter(
                "center_separation and cluster_std must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Samples are grouped by class in id order.
pub fn synth_blobs(spec: &BlobSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let noise = Normal::new(0.0, spec.cluster_std)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_classes * spec.per_class;
    let mut data = Vec::with_capacity(n * spec.dim);
    let mut labels = Vec::with_capacity(n);
    for class in 0..spec.n_classes {
        let center = spec.center(class);
        for _ in 0..spec.per_class {
            data.extend(center.iter().map(|&m| m + noise.sample(&mut rng)));
            labels.push(class);
        }
    }
    LabeledDataset::new(Matrix::from_vec(n, spec.dim, data)?, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::squared_distance;

    fn spec(n_classes: usize, per_class: usize, dim: usize) -> BlobSpec {
        BlobSpec {
            n_classes,
            per_class,
            dim,
            center_separation: 10.0,
            cluster_std: 1.0,
            seed: 17,
        }
    }

    #[test]
    fn counts() {
        let ds = synth_blobs(&spec(4, 50, 4)).unwrap();
        assert_eq!(ds.len(), 200);
        assert!(ds.indices_by_class().iter().all(|c| c.len() == 50));
    }

    #[test]
    fn deterministic_bytes() {
        let a = synth_blobs(&spec(3, 20, 5)).unwrap();
        let b = synth_blobs(&spec(3, 20, 5)).unwrap();
        let bits = |d: &LabeledDataset| d.features().as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn nearest_center_separates_two_classes() {
        // Centers are 10*sqrt(2) apart; the midpoint is ~7.07 sigma from each,
        // so the error rate is far below 1e-3.
        let s = BlobSpec { per_class: 1000, ..spec(2, 0, 2) };
        let ds = synth_blobs(&s).unwrap();
        let centers: Vec<Vec<f64>> = (0..2).map(|c| s.center(c)).collect();
        let correct = ds
            .features()
            .iter_rows()
            .zip(ds.labels())
            .filter(|(x, &y)| {
                let guess = if squared_distance(x, &centers[0]) <= squared_distance(x, &centers[1]) { 0 } else { 1 };
                guess == y
            })
            .count();
        assert!(correct as f64 / ds.len() as f64 >= 0.999);
    }

    #[test]
    fn wraps_axes_when_classes_exceed_dim() {
        let s = spec(5, 1, 2);
        assert_eq!(s.center(3), vec![0.0, 20.0]);
        assert_eq!(s.center(4), vec![30.0, 0.0]);
    }
}
