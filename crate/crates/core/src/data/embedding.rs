use std::path::Path;

use super::LabeledDataset;
use crate::linalg::Matrix;
use crate::{Error, Result};

/// Reads rows of `label,f1,..,fd` with no header.
pub fn load_embedding_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;

    let mut raw_labels = Vec::new();
    let mut values = Vec::new();
    let mut dim = None;
    for record in reader.records() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        if record.len() < 2 {
            return Err(parse_err("expected a label and at least one feature".into()));
        }
        let d = record.len() - 1;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(parse_err(format!("ragged row: {d} features, expected {expected}")));
            }
            Some(_) => {}
        }
        raw_labels.push(record[0].to_owned());
        for field in record.iter().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(format!("non-numeric feature {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(format!("non-finite feature {field:?}")));
            }
            values.push(v);
        }
    }
    let dim = dim.ok_or_else(|| Error::format(path, "empty file"))?;
    let features = Matrix::from_vec(raw_labels.len(), dim, values)?;
    LabeledDataset::from_raw_labels(features, &raw_labels)
}
