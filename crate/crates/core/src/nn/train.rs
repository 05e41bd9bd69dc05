use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{softmax_in_place, Classifier, DenseLayer, LOG_CLAMP};
use crate::linalg::Matrix;
use crate::{Error, Result};

/// Mini-batch SGD settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 30,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// A zero learning rate is accepted and leaves the model untouched.
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "epochs and batch_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Gradients of the mean cross-entropy, shaped like the model's layers.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub loss: f64,
    pub hidden: Vec<DenseLayer>,
    pub head: DenseLayer,
}

impl Gradients {
    /// Same order as [`Classifier::layers`].
    pub fn layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.hidden.iter().chain(std::iter::once(&self.head))
    }
}

fn check_labels(labels: &[usize], class_count: usize) -> Result<()> {
    if let Some(&label) = labels.iter().find(|&&l| l >= class_count) {
        return Err(Error::LabelOutOfRange { label, class_count });
    }
    Ok(())
}

/// Mean cross-entropy of `probabilities` against `labels`.
pub fn cross_entropy(probabilities: &Matrix, labels: &[usize]) -> f64 {
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| -probabilities[(i, y)].max(LOG_CLAMP).ln())
        .sum();
    total / labels.len() as f64
}

/// Backpropagated gradients of the batch-mean cross-entropy.
pub fn gradient(model: &Classifier, batch: &Matrix, labels: &[usize]) -> Result<Gradients> {
    if batch.rows() == 0 {
        return Err(Error::Empty("batch"));
    }
    if labels.len() != batch.rows() {
        return Err(Error::DimensionMismatch {
            what: "label count",
            expected: batch.rows(),
            got: labels.len(),
        });
    }
    if batch.cols() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "feature dimension",
            expected: model.input_dim(),
            got: batch.cols(),
        });
    }
    check_labels(labels, model.class_count())?;
    Ok(backward(model, batch, labels))
}

fn backward(model: &Classifier, batch: &Matrix, labels: &[usize]) -> Gradients {
    let n = batch.rows();
    let (acts, mut delta) = model.activations(batch);
    for i in 0..n {
        softmax_in_place(delta.row_mut(i));
    }
    let loss = cross_entropy(&delta, labels);

    // dL/dz for the head: (p - onehot) / n.
    let scale = 1.0 / n as f64;
    for (i, &y) in labels.iter().enumerate() {
        let row = delta.row_mut(i);
        row[y] -= 1.0;
        for v in row.iter_mut() {
            *v *= scale;
        }
    }

    let layers: Vec<&DenseLayer> = model.layers().collect();
    let mut grads: Vec<DenseLayer> = Vec::with_capacity(layers.len());
    for li in (0..layers.len()).rev() {
        let layer = layers[li];
        let input = &acts[li];
        let mut g = DenseLayer::zeros(layer.in_dim(), layer.out_dim());
        {
            let gw = g.weights_mut();
            for i in 0..n {
                let x = input.row(i);
                for (o, &d) in delta.row(i).iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (w, &xv) in gw.row_mut(o).iter_mut().zip(x) {
                        *w += d * xv;
                    }
                }
            }
        }
        for i in 0..n {
            for (b, &d) in g.biases_mut().iter_mut().zip(delta.row(i)) {
                *b += d;
            }
        }
        if li > 0 {
            // Propagate through W, then through the ReLU of the layer below.
            let mut prev = Matrix::zeros(n, layer.in_dim());
            for i in 0..n {
                let out = prev.row_mut(i);
                for (o, &d) in delta.row(i).iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (p, &w) in out.iter_mut().zip(layer.weights().row(o)) {
                        *p += d * w;
                    }
                }
                for (p, &a) in out.iter_mut().zip(input.row(i)) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        grads.push(g);
    }
    grads.reverse();
    let head = grads.pop().expect("head gradient");
    Gradients {
        loss,
        hidden: grads,
        head,
    }
}

fn sgd_step(model: &mut Classifier, grads: &Gradients, lr: f64) {
    for (layer, g) in model.layers_mut().zip(grads.layers()) {
        for (p, d) in layer.params_mut().zip(g.params()) {
            *p -= lr * d;
        }
    }
}

/// Trains a copy of `model` with seeded mini-batch SGD.
///
/// Returns the trained copy and the mean loss of every epoch, accumulated over
/// the batches of that epoch as they were visited.
pub fn train(
    model: &Classifier,
    features: &Matrix,
    labels: &[usize],
    cfg: &TrainConfig,
) -> Result<(Classifier, Vec<f64>)> {
    cfg.validate()?;
    if features.rows() == 0 {
        return Err(Error::Empty("training data"));
    }
    if labels.len() != features.rows() {
        return Err(Error::DimensionMismatch {
            what: "label count",
            expected: features.rows(),
            got: labels.len(),
        });
    }
    if features.cols() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "feature dimension",
            expected: model.input_dim(),
            got: features.cols(),
        });
    }
    check_labels(labels, model.class_count())?;

    let mut model = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..features.rows()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut batch_labels = Vec::with_capacity(cfg.batch_size);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = features.select_rows(chunk);
            batch_labels.clear();
            batch_labels.extend(chunk.iter().map(|&i| labels[i]));
            let grads = backward(&model, &batch, &batch_labels);
            epoch_loss += grads.loss * chunk.len() as f64;
            if cfg.learning_rate > 0.0 {
                sgd_step(&mut model, &grads, cfg.learning_rate);
            }
        }
        history.push(epoch_loss / features.rows() as f64);
    }
    Ok((model, history))
}
