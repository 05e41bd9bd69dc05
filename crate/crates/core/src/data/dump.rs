//! Canonical on-disk dataset form.
//!
//! Little-endian layout:
//!
//! ```text
//! b"CCTD" | version u32 | rows u32 | cols u32
//! features: rows*cols f64 bit patterns, row-major
//! labels: rows u32
//! split flag u32 (0/1); if 1, per class: n_train u32, indices, n_test u32, indices
//! ```

use std::path::Path;

use super::{ClassSplit, LabeledDataset};
use crate::linalg::Matrix;
use crate::binio::{put_f64s, put_u32, Reader};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"CCTD";
pub const DATASET_VERSION: u32 = 1;

impl LabeledDataset {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, DATASET_VERSION as usize);
        put_u32(&mut out, self.len());
        put_u32(&mut out, self.dim());
        put_f64s(&mut out, self.features().as_slice());
        for &l in self.labels() {
            put_u32(&mut out, l);
        }
        match self.splits() {
            None => put_u32(&mut out, 0),
            Some(splits) => {
                put_u32(&mut out, 1);
                for s in splits {
                    for part in [&s.train, &s.test] {
                        put_u32(&mut out, part.len());
                        for &i in part.iter() {
                            put_u32(&mut out, i);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err("bad magic".into());
        }
        let version = r.u32()?;
        if version != DATASET_VERSION {
            return Err(format!("unsupported dataset version {version}"));
        }
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let features = r.f64s(rows * cols)?;
        let labels = (0..rows)
            .map(|_| r.u32().map(|v| v as usize))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let features = Matrix::from_vec(rows, cols, features).map_err(|e| e.to_string())?;
        let class_count = labels.iter().max().map_or(0, |m| m + 1);
        let splits = match r.u32()? {
            0 => None,
            1 => {
                let read_list = |r: &mut Reader| -> std::result::Result<Vec<usize>, String> {
                    let n = r.u32()? as usize;
                    (0..n).map(|_| r.u32().map(|v| v as usize)).collect()
                };
                let mut splits = Vec::with_capacity(class_count);
                for _ in 0..class_count {
                    let train = read_list(&mut r)?;
                    let test = read_list(&mut r)?;
                    splits.push(ClassSplit { train, test });
                }
                Some(splits)
            }
            other => return Err(format!("bad split flag {other}")),
        };
        r.finish()?;
        LabeledDataset::from_parts(features, labels, splits).map_err(|e| e.to_string())
    }
}

pub fn save_dataset(dataset: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, dataset.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    LabeledDataset::from_bytes(&bytes).map_err(|m| Error::format(path, m))
}
