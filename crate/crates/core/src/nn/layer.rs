use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::{Error, Result};

/// Affine map `z = W x + b` with `W` stored row-major as `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    weights: Matrix,
    biases: Vec<f64>,
}

impl DenseLayer {
    pub fn new(weights: Matrix, biases: Vec<f64>) -> Result<Self> {
        if biases.len() != weights.rows() {
            return Err(Error::DimensionMismatch {
                what: "bias length",
                expected: weights.rows(),
                got: biases.len(),
            });
        }
        if !weights.is_finite() || biases.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter("layer parameters must be finite".into()));
        }
        Ok(Self { weights, biases })
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            weights: Matrix::zeros(out_dim, in_dim),
            biases: vec![0.0; out_dim],
        }
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for weights and biases.
    pub fn random<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let limit = 1.0 / (in_dim as f64).sqrt();
        let mut layer = Self::zeros(in_dim, out_dim);
        for w in layer.weights.as_mut_slice() {
            *w = rng.random_range(-limit..=limit);
        }
        for b in &mut layer.biases {
            *b = rng.random_range(-limit..=limit);
        }
        layer
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Matrix {
        &mut self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    /// Appends one output node.
    pub fn push_node(&mut self, weights: &[f64], bias: f64) -> Result<()> {
        if weights.len() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                what: "node weight length",
                expected: self.in_dim(),
                got: weights.len(),
            });
        }
        let mut data = std::mem::replace(&mut self.weights, Matrix::zeros(0, 0)).into_vec();
        data.extend_from_slice(weights);
        self.weights = Matrix::from_vec(self.biases.len() + 1, weights.len(), data)?;
        self.biases.push(bias);
        Ok(())
    }

    /// Removes the last output node and returns its `(weights, bias)`.
    pub fn pop_node(&mut self) -> Option<(Vec<f64>, f64)> {
        let bias = self.biases.pop()?;
        let in_dim = self.in_dim();
        let mut data = std::mem::replace(&mut self.weights, Matrix::zeros(0, 0)).into_vec();
        let row = data.split_off(data.len() - in_dim);
        self.weights =
            Matrix::from_vec(self.biases.len(), in_dim, data).expect("shape preserved by pop");
        Some((row, bias))
    }

    /// All parameters, weights first then biases.
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.as_slice().iter().chain(self.biases.iter())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights
            .as_mut_slice()
            .iter_mut()
            .chain(self.biases.iter_mut())
    }

    /// Row-wise `z = x W^T + b` over a batch.
    pub(crate) fn affine(&self, inputs: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(inputs.rows(), self.out_dim());
        for (i, x) in inputs.iter_rows().enumerate() {
            let z = out.row_mut(i);
            for (o, zo) in z.iter_mut().enumerate() {
                let w = self.weights.row(o);
                *zo = self.biases[o] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_then_pop_restores_layer() {
        let mut layer = DenseLayer::new(
            Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap(),
            vec![0.5, -0.5],
        )
        .unwrap();
        let before = layer.clone();
        layer.push_node(&[7.0, 8.0], 9.0).unwrap();
        assert_eq!(layer.out_dim(), 3);
        assert_eq!(layer.weights().row(2), &[7.0, 8.0]);
        assert_eq!(layer.pop_node(), Some((vec![7.0, 8.0], 9.0)));
        assert_eq!(layer, before);
    }

    #[test]
    fn rejects_mismatched_bias() {
        assert!(DenseLayer::new(Matrix::zeros(2, 3), vec![0.0]).is_err());
    }
}
