use std::collections::HashMap;
use std::hash::Hash;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::Matrix;
use crate::{Error, Result};

/// Train/test sample indices of one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Feature rows with dense class ids `0..class_count`, optionally split per class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Matrix,
    labels: Vec<usize>,
    class_count: usize,
    splits: Option<Vec<ClassSplit>>,
}

impl LabeledDataset {
    /// Every id in `0..=max(labels)` must occur at least once.
    pub fn new(features: Matrix, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::DimensionMismatch {
                what: "label count",
                expected: features.rows(),
                got: labels.len(),
            });
        }
        if labels.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let class_count = labels.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; class_count];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Dataset(format!(
                "class ids must be dense; id {missing} has no samples"
            )));
        }
        Ok(Self {
            features,
            labels,
            class_count,
            splits: None,
        })
    }

    /// Maps arbitrary label values to dense ids in first-appearance order.
    pub fn from_raw_labels<L: Eq + Hash + Clone>(features: Matrix, raw: &[L]) -> Result<Self> {
        let mut ids: HashMap<L, usize> = HashMap::new();
        let labels = raw
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l.clone()).or_insert(next)
            })
            .collect();
        Self::new(features, labels)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn class_ids(&self) -> Vec<usize> {
        (0..self.class_count).collect()
    }

    pub fn splits(&self) -> Option<&[ClassSplit]> {
        self.splits.as_deref()
    }

    fn split(&self, class: usize) -> Result<&ClassSplit> {
        let splits = self
            .splits
            .as_ref()
            .ok_or_else(|| Error::Dataset("dataset has no train/test split".into()))?;
        splits
            .get(class)
            .ok_or_else(|| Error::Dataset(format!("no class {class}")))
    }

    pub fn train_indices(&self, class: usize) -> Result<&[usize]> {
        Ok(&self.split(class)?.train)
    }

    pub fn test_indices(&self, class: usize) -> Result<&[usize]> {
        Ok(&self.split(class)?.test)
    }

    /// Sample indices of every class, in row order.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.class_count];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// Attaches per-class splits after checking they partition every class.
    pub fn with_splits(mut self, splits: Vec<ClassSplit>) -> Result<Self> {
        if splits.len() != self.class_count {
            return Err(Error::Dataset(format!(
                "{} splits for {} classes",
                splits.len(),
                self.class_count
            )));
        }
        let mut seen = vec![false; self.len()];
        for (class, split) in splits.iter().enumerate() {
            for &i in split.train.iter().chain(&split.test) {
                if i >= self.len() || seen[i] || self.labels[i] != class {
                    return Err(Error::Dataset(format!(
                        "split of class {class} has invalid or repeated sample {i}"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Dataset(format!("sample {i} is in no split")));
        }
        self.splits = Some(splits);
        Ok(self)
    }

    /// Renames classes so that old class `order[k]` becomes class `k`.
    pub fn reorder_classes(&self, order: &[usize]) -> Result<Self> {
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != self.class_ids() {
            return Err(Error::Dataset(
                "class order must be a permutation of the class ids".into(),
            ));
        }
        let mut new_id = vec![0; self.class_count];
        for (k, &old) in order.iter().enumerate() {
            new_id[old] = k;
        }
        let labels = self.labels.iter().map(|&l| new_id[l]).collect();
        let splits = self
            .splits
            .as_ref()
            .map(|s| order.iter().map(|&old| s[old].clone()).collect());
        Ok(Self {
            features: self.features.clone(),
            labels,
            class_count: self.class_count,
            splits,
        })
    }

    /// Seeded random class order, applied through [`Self::reorder_classes`].
    pub fn shuffle_classes(&self, seed: u64) -> Result<Self> {
        let mut order = self.class_ids();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        self.reorder_classes(&order)
    }

    pub(crate) fn from_parts(
        features: Matrix,
        labels: Vec<usize>,
        splits: Option<Vec<ClassSplit>>,
    ) -> Result<Self> {
        let ds = Self::new(features, labels)?;
        match splits {
            Some(s) => ds.with_splits(s),
            None => Ok(ds),
        }
    }
}

/// Stratified split: each class sends `round(n * test_fraction)` samples to
/// test, clamped so both sides keep at least one sample.
pub fn split_train_test(
    dataset: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut splits = Vec::with_capacity(dataset.class_count());
    for (class, mut members) in dataset.indices_by_class().into_iter().enumerate() {
        let n = members.len();
        if n < 2 {
            return Err(Error::Dataset(format!(
                "class {class} has {n} sample(s); at least 2 are needed to stratify"
            )));
        }
        let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
        members.shuffle(&mut rng);
        let mut test = members.split_off(n - n_test);
        members.sort_unstable();
        test.sort_unstable();
        splits.push(ClassSplit {
            train: members,
            test,
        });
    }
    dataset.clone().with_splits(splits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(per_class: &[usize]) -> LabeledDataset {
        let labels: Vec<usize> = per_class
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
            .collect();
        let rows: Vec<[f64; 1]> = (0..labels.len()).map(|i| [i as f64]).collect();
        LabeledDataset::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap()
    }

    #[test]
    fn eighty_twenty() {
        let ds = split_train_test(&grid(&[100, 100, 100]), 0.2, 1).unwrap();
        for c in 0..3 {
            assert_eq!(ds.train_indices(c).unwrap().len(), 80);
            assert_eq!(ds.test_indices(c).unwrap().len(), 20);
        }
    }

    #[test]
    fn two_sample_class_splits_one_one() {
        let ds = split_train_test(&grid(&[2, 5]), 0.5, 0).unwrap();
        assert_eq!(ds.train_indices(0).unwrap().len(), 1);
        assert_eq!(ds.test_indices(0).unwrap().len(), 1);
    }

    #[test]
    fn singleton_class_rejected() {
        assert!(split_train_test(&grid(&[1, 5]), 0.5, 0).is_err());
    }

    #[test]
    fn split_is_seeded() {
        let base = grid(&[30, 30]);
        let a = split_train_test(&base, 0.3, 4).unwrap();
        let b = split_train_test(&base, 0.3, 4).unwrap();
        let c = split_train_test(&base, 0.3, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sparse_labels_rejected() {
        let r = LabeledDataset::new(Matrix::zeros(2, 1), vec![0, 2]);
        assert!(r.is_err());
    }

    #[test]
    fn raw_labels_keep_first_appearance_order() {
        let ds = LabeledDataset::from_raw_labels(Matrix::zeros(4, 1), &["b", "a", "b", "c"]).unwrap();
        assert_eq!(ds.labels(), &[0, 1, 0, 2]);
    }

    #[test]
    fn reorder_moves_splits_with_classes() {
        let ds = split_train_test(&grid(&[4, 6]), 0.5, 0).unwrap();
        let swapped = ds.reorder_classes(&[1, 0]).unwrap();
        assert_eq!(swapped.train_indices(0).unwrap(), ds.train_indices(1).unwrap());
        assert_eq!(swapped.labels()[0], 1);
        assert!(ds.reorder_classes(&[0, 0]).is_err());
    }
}
