//! IDX (MNIST/EMNIST family) loader.
//!
//! Big-endian header: a magic word whose third byte is the element type
//! (`0x08` = unsigned byte) and fourth byte the dimension count, followed by
//! one `u32` per dimension and the raw elements.

use std::path::Path;

use super::LabeledDataset;
use crate::linalg::Matrix;
use crate::{Error, Result};

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

struct IdxFile {
    dims: Vec<usize>,
    data: Vec<u8>,
}

fn read_idx(path: &Path, magic: u32) -> Result<IdxFile> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let word = |at: usize| -> Result<u32> {
        bytes
            .get(at..at + 4)
            .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
            .ok_or_else(|| Error::format(path, "truncated header"))
    };
    let found = word(0)?;
    if found != magic {
        return Err(Error::format(
            path,
            format!("bad magic 0x{found:08x}, expected 0x{magic:08x}"),
        ));
    }
    let ndim = (magic & 0xff) as usize;
    let dims = (0..ndim)
        .map(|k| word(4 + 4 * k).map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let header = 4 + 4 * ndim;
    let expected: usize = dims.iter().product();
    let body = &bytes[header..];
    if body.len() < expected {
        return Err(Error::format(
            path,
            format!("truncated: {} of {expected} data bytes", body.len()),
        ));
    }
    if body.len() > expected {
        return Err(Error::format(
            path,
            format!("{} trailing bytes", body.len() - expected),
        ));
    }
    Ok(IdxFile {
        dims,
        data: body.to_vec(),
    })
}

/// Loads an image/label IDX pair. Pixels are scaled by 1/255 and images are
/// flattened row-major; label values are mapped to dense ids in ascending order.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let images = read_idx(images_path, IDX_IMAGE_MAGIC)?;
    let labels = read_idx(labels_path, IDX_LABEL_MAGIC)?;
    let (n_images, n_labels) = (images.dims[0], labels.dims[0]);
    if n_images != n_labels {
        return Err(Error::Dataset(format!(
            "count mismatch: {} has {n_images} images but {} has {n_labels} labels",
            images_path.display(),
            labels_path.display()
        )));
    }
    let dim = images.dims[1] * images.dims[2];
    let features: Vec<f64> = images.data.iter().map(|&p| f64::from(p) / 255.0).collect();
    let features = Matrix::from_vec(n_images, dim, features)?;

    let mut values: Vec<u8> = labels.data.clone();
    values.sort_unstable();
    values.dedup();
    let mut dense = [usize::MAX; 256];
    for (id, &v) in values.iter().enumerate() {
        dense[v as usize] = id;
    }
    let ids = labels.data.iter().map(|&v| dense[v as usize]).collect();
    LabeledDataset::new(features, ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_pair(dir: &Path, n_images: u32, n_labels: u32, image_magic: u32) -> (std::path::PathBuf, std::path::PathBuf) {
        let mut img = Vec::new();
        img.extend_from_slice(&image_magic.to_be_bytes());
        img.extend_from_slice(&n_images.to_be_bytes());
        img.extend_from_slice(&3u32.to_be_bytes());
        img.extend_from_slice(&3u32.to_be_bytes());
        for k in 0..n_images as usize * 9 {
            img.push((k * 13) as u8);
        }
        let mut lab = Vec::new();
        lab.extend_from_slice(&IDX_LABEL_MAGIC.to_be_bytes());
        lab.extend_from_slice(&n_labels.to_be_bytes());
        for k in 0..n_labels {
            lab.push(7 - k as u8);
        }
        let ip = dir.join("images");
        let lp = dir.join("labels");
        std::fs::write(&ip, img).unwrap();
        std::fs::write(&lp, lab).unwrap();
        (ip, lp)
    }

    #[test]
    fn two_three_by_three_images() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = write_pair(dir.path(), 2, 2, IDX_IMAGE_MAGIC);
        let ds = load_idx(&ip, &lp).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 9);
        // Byte k of the body holds k * 13.
        assert_eq!(ds.features()[(0, 1)], 13.0 / 255.0);
        assert_eq!(ds.features()[(1, 8)], 221.0 / 255.0);
        // Raw labels 7 and 6 map to dense ids by ascending value.
        assert_eq!(ds.labels(), &[1, 0]);
    }

    #[test]
    fn count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = write_pair(dir.path(), 2, 3, IDX_IMAGE_MAGIC);
        let err = load_idx(&ip, &lp).unwrap_err();
        assert!(err.to_string().contains("count mismatch"), "{err}");
    }

    #[test]
    fn wrong_magic_names_file() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = write_pair(dir.path(), 2, 2, 0x0000_0804);
        let err = load_idx(&ip, &lp).unwrap_err();
        assert!(matches!(err, Error::Format { ref path, .. } if path == &ip));
        assert!(err.to_string().contains("magic"));
    }

    #[test]
    fn truncated_body() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = write_pair(dir.path(), 2, 2, IDX_IMAGE_MAGIC);
        let bytes = std::fs::read(&ip).unwrap();
        std::fs::write(&ip, &bytes[..bytes.len() - 1]).unwrap();
        assert!(load_idx(&ip, &lp).unwrap_err().to_string().contains("truncated"));
    }
}
