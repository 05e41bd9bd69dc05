//! Binary model checkpoints.
//!
//! Layout, all integers little-endian `u32`, all reals little-endian IEEE-754
//! `f64` bit patterns:
//!
//! ```text
//! b"CCTM" | version | class_count | primed (0/1) | layer_count
//! per layer: in_dim | out_dim | weights (row-major) | biases
//! ```
//!
//! The last layer is the softmax head.

use std::path::Path;

use super::{Classifier, DenseLayer};
use crate::binio::{put_f64s, put_u32, Reader};
use crate::linalg::Matrix;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"CCTM";
pub const CHECKPOINT_VERSION: u32 = 1;

impl Classifier {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + self.parameter_count() * 8);
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, CHECKPOINT_VERSION as usize);
        put_u32(&mut out, self.class_count());
        put_u32(&mut out, usize::from(self.is_primed()));
        put_u32(&mut out, self.hidden().len() + 1);
        for layer in self.layers() {
            put_u32(&mut out, layer.in_dim());
            put_u32(&mut out, layer.out_dim());
            put_f64s(&mut out, layer.weights().as_slice());
            put_f64s(&mut out, layer.biases());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err("bad magic".into());
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(format!("unsupported checkpoint version {version}"));
        }
        let class_count = r.u32()? as usize;
        let primed = match r.u32()? {
            0 => false,
            1 => true,
            other => return Err(format!("bad primed flag {other}")),
        };
        let layer_count = r.u32()? as usize;
        if layer_count == 0 {
            return Err("checkpoint has no layers".into());
        }
        let mut layers = Vec::with_capacity(layer_count);
        for _ in 0..layer_count {
            let in_dim = r.u32()? as usize;
            let out_dim = r.u32()? as usize;
            let weights = r.f64s(in_dim * out_dim)?;
            let biases = r.f64s(out_dim)?;
            let weights = Matrix::from_vec(out_dim, in_dim, weights).map_err(|e| e.to_string())?;
            layers.push(DenseLayer::new(weights, biases).map_err(|e| e.to_string())?);
        }
        r.finish()?;
        let head = layers.pop().expect("layer_count >= 1");
        if head.out_dim() != class_count {
            return Err(format!(
                "class_count {class_count} disagrees with head width {}",
                head.out_dim()
            ));
        }
        Classifier::from_layers(layers, head, primed).map_err(|e| e.to_string())
    }
}

pub fn save_checkpoint(model: &Classifier, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Classifier> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Classifier::from_bytes(&bytes).map_err(|m| Error::format(path, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let model = Classifier::new(5, &[7, 3], 4, 42).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.cctm");
        save_checkpoint(&model, &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.to_bytes(), model.to_bytes());

        let x = Matrix::from_rows(&[[0.1, 0.2, 0.3, 0.4, 0.5]]).unwrap();
        let a = model.forward(&x).unwrap();
        let b = loaded.forward(&x).unwrap();
        let bits = |m: &Matrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.probabilities), bits(&b.probabilities));
    }

    #[test]
    fn rejects_corruption() {
        let model = Classifier::new(2, &[], 2, 0).unwrap();
        let mut bytes = model.to_bytes();
        assert!(Classifier::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(Classifier::from_bytes(&bytes).is_err());
    }
}
