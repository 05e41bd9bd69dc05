//! Datasets: loaders, the blob fixture, and stratified train/test splits.

mod blobs;
mod dataset;
mod dump;
mod embedding;
mod idx;

pub use blobs::{synth_blobs, BlobSpec};
pub use dataset::{split_train_test, ClassSplit, LabeledDataset};
pub use dump::{load_dataset, save_dataset, DATASET_VERSION};
pub use embedding::load_embedding_csv;
pub use idx::{load_idx, IDX_IMAGE_MAGIC, IDX_LABEL_MAGIC};
