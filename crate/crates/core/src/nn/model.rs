use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{softmax_in_place, DenseLayer};
use crate::linalg::{argmax, Matrix};
use crate::{Error, Result};

/// Hidden widths used when a caller does not pick an architecture.
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];

/// ReLU hidden stack followed by a softmax head.
///
/// `primed` is set while the last head row is the priming node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    hidden: Vec<DenseLayer>,
    head: DenseLayer,
    primed: bool,
}

/// Result of a batched forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub logits: Matrix,
    pub probabilities: Matrix,
    /// Activations of the last hidden layer, or the inputs for a head-only model.
    pub penultimate: Matrix,
}

impl Classifier {
    /// Randomly initialized classifier.
    pub fn new(input_dim: usize, hidden: &[usize], class_count: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || class_count == 0 || hidden.contains(&0) {
            return Err(Error::InvalidParameter(
                "layer sizes and class count must be positive".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(hidden.len());
        let mut fan_in = input_dim;
        for &width in hidden {
            layers.push(DenseLayer::random(fan_in, width, &mut rng));
            fan_in = width;
        }
        let head = DenseLayer::random(fan_in, class_count, &mut rng);
        Ok(Self {
            hidden: layers,
            head,
            primed: false,
        })
    }

    /// Assembles a classifier from explicit layers, checking that shapes chain.
    pub fn from_layers(hidden: Vec<DenseLayer>, head: DenseLayer, primed: bool) -> Result<Self> {
        let mut prev = None;
        for layer in hidden.iter().chain(std::iter::once(&head)) {
            if let Some(out) = prev {
                if layer.in_dim() != out {
                    return Err(Error::DimensionMismatch {
                        what: "layer input width",
                        expected: out,
                        got: layer.in_dim(),
                    });
                }
            }
            prev = Some(layer.out_dim());
        }
        if head.out_dim() == 0 {
            return Err(Error::InvalidParameter("head has no nodes".into()));
        }
        if primed && head.out_dim() < 2 {
            return Err(Error::InvalidParameter(
                "a primed head needs at least one class node besides the priming node".into(),
            ));
        }
        Ok(Self {
            hidden,
            head,
            primed,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.hidden
            .first()
            .map_or(self.head.in_dim(), DenseLayer::in_dim)
    }

    /// Number of output nodes, including the priming node if present.
    pub fn class_count(&self) -> usize {
        self.head.out_dim()
    }

    pub fn is_primed(&self) -> bool {
        self.primed
    }

    pub(crate) fn set_primed(&mut self, primed: bool) {
        self.primed = primed;
    }

    pub fn hidden(&self) -> &[DenseLayer] {
        &self.hidden
    }

    pub fn head(&self) -> &DenseLayer {
        &self.head
    }

    pub fn head_mut(&mut self) -> &mut DenseLayer {
        &mut self.head
    }

    /// Hidden layers in order, then the head.
    pub fn layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.hidden.iter().chain(std::iter::once(&self.head))
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut DenseLayer> {
        self.hidden.iter_mut().chain(std::iter::once(&mut self.head))
    }

    pub fn parameter_count(&self) -> usize {
        self.layers().map(|l| l.out_dim() * (l.in_dim() + 1)).sum()
    }

    fn check_input(&self, inputs: &Matrix) -> Result<()> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "feature dimension",
                expected: self.input_dim(),
                got: inputs.cols(),
            });
        }
        Ok(())
    }

    /// Activations `[inputs, h_1, .., h_L]` and the head logits.
    pub(crate) fn activations(&self, inputs: &Matrix) -> (Vec<Matrix>, Matrix) {
        let mut acts = Vec::with_capacity(self.hidden.len() + 1);
        acts.push(inputs.clone());
        for layer in &self.hidden {
            let mut z = layer.affine(acts.last().expect("non-empty"));
            for v in z.as_mut_slice() {
                *v = v.max(0.0);
            }
            acts.push(z);
        }
        let logits = self.head.affine(acts.last().expect("non-empty"));
        (acts, logits)
    }

    pub fn forward(&self, inputs: &Matrix) -> Result<ForwardPass> {
        self.check_input(inputs)?;
        let (mut acts, logits) = self.activations(inputs);
        let mut probabilities = logits.clone();
        for i in 0..probabilities.rows() {
            softmax_in_place(probabilities.row_mut(i));
        }
        let penultimate = acts.pop().expect("non-empty");
        Ok(ForwardPass {
            logits,
            probabilities,
            penultimate,
        })
    }

    /// Last hidden activations only.
    pub fn embed(&self, inputs: &Matrix) -> Result<Matrix> {
        self.check_input(inputs)?;
        let mut h = inputs.clone();
        for layer in &self.hidden {
            h = layer.affine(&h);
            for v in h.as_mut_slice() {
                *v = v.max(0.0);
            }
        }
        Ok(h)
    }

    /// Argmax output node per row.
    pub fn predict(&self, inputs: &Matrix) -> Result<Vec<usize>> {
        self.check_input(inputs)?;
        let (_, logits) = self.activations(inputs);
        Ok(logits.iter_rows().map(argmax).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_net() -> Classifier {
        // 2-2-2: hidden W=[[1,-1],[0.5,2]], b=[0,-1]; head W=[[1,0],[-1,1]], b=[0.5,0].
        let hidden = DenseLayer::new(
            Matrix::from_rows(&[[1.0, -1.0], [0.5, 2.0]]).unwrap(),
            vec![0.0, -1.0],
        )
        .unwrap();
        let head = DenseLayer::new(
            Matrix::from_rows(&[[1.0, 0.0], [-1.0, 1.0]]).unwrap(),
            vec![0.5, 0.0],
        )
        .unwrap();
        Classifier::from_layers(vec![hidden], head, false).unwrap()
    }

    #[test]
    fn hand_computed_forward() {
        // x = (2, 1): z1 = (1, 2), h = (1, 2); logits = (1.5, 1).
        let net = hand_net();
        let x = Matrix::from_rows(&[[2.0, 1.0]]).unwrap();
        let out = net.forward(&x).unwrap();
        assert_eq!(out.penultimate.as_slice(), &[1.0, 2.0]);
        assert_eq!(out.logits.as_slice(), &[1.5, 1.0]);
        let p0 = 1.0 / (1.0 + (-0.5f64).exp());
        assert!((out.probabilities[(0, 0)] - p0).abs() < 1e-15);
        assert!((out.probabilities[(0, 1)] - (1.0 - p0)).abs() < 1e-15);
    }

    #[test]
    fn relu_clips_negative_units() {
        // x = (0, 1): z1 = (-1, 1), h = (0, 1); logits = (0.5, 1).
        let net = hand_net();
        let x = Matrix::from_rows(&[[0.0, 1.0]]).unwrap();
        let out = net.forward(&x).unwrap();
        assert_eq!(out.penultimate.as_slice(), &[0.0, 1.0]);
        assert_eq!(out.logits.as_slice(), &[0.5, 1.0]);
    }

    #[test]
    fn zero_weights_give_uniform_output() {
        let net = Classifier::from_layers(
            vec![DenseLayer::zeros(3, 4)],
            DenseLayer::zeros(4, 5),
            false,
        )
        .unwrap();
        let x = Matrix::from_rows(&[[1.0, -2.0, 3.0], [0.1, 0.2, 0.3]]).unwrap();
        let out = net.forward(&x).unwrap();
        for v in out.probabilities.as_slice() {
            assert!((v - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn batch_rows_are_normalized() {
        let net = Classifier::new(4, &[8, 8], 3, 11).unwrap();
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| (0..4).map(|j| (i * 4 + j) as f64 * 0.1 - 1.0).collect())
            .collect();
        let out = net.forward(&Matrix::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(out.probabilities.rows(), 10);
        for row in out.probabilities.iter_rows() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let net = Classifier::new(4, &[8], 3, 0).unwrap();
        let x = Matrix::zeros(2, 5);
        assert!(matches!(
            net.forward(&x),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn from_layers_checks_chaining() {
        let r = Classifier::from_layers(
            vec![DenseLayer::zeros(3, 4)],
            DenseLayer::zeros(5, 2),
            false,
        );
        assert!(r.is_err());
    }
}
