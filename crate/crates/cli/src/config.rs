//! TOML run configuration: parsing, defaults, validation.

use std::path::{Path, PathBuf};

use cct_core::data::{load_embedding_csv, load_idx, split_train_test, synth_blobs, BlobSpec};
use cct_core::nn::{TrainConfig, DEFAULT_HIDDEN};
use cct_core::orchestrator::DEFAULT_REPLAY_PER_CLASS;
use cct_core::{ExperimentConfig, HeadSurgeryParams, LabeledDataset};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Idx,
    EmbeddingCsv,
    Blobs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub kind: Option<DatasetKind>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub split_seed: u64,
    /// Permutes the class order before the schedule starts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_order_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_classes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_separation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_test_fraction() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CtSection {
    #[serde(default = "default_ct_a")]
    pub a: f64,
    #[serde(default)]
    pub bias: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_init: Option<f64>,
}

fn default_ct_a() -> f64 {
    10.0
}

impl Default for CtSection {
    fn default() -> Self {
        Self {
            a: default_ct_a(),
            bias: 0.0,
            a_init: None,
        }
    }
}

/// Partial training settings layered over a base [`TrainConfig`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub seed: Option<u64>,
}

impl TrainSection {
    fn over(&self, base: TrainConfig) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            epochs: self.epochs.unwrap_or(base.epochs),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            seed: self.seed.unwrap_or(base.seed),
        }
    }

    fn filled(cfg: TrainConfig) -> Self {
        Self {
            learning_rate: Some(cfg.learning_rate),
            epochs: Some(cfg.epochs),
            batch_size: Some(cfg.batch_size),
            seed: Some(cfg.seed),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurgerySection {
    pub big_n: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub n_init: Option<usize>,
    #[serde(default = "one")]
    pub n_incr: usize,
    pub n_total: Option<usize>,
    #[serde(default = "default_replay")]
    pub replay_per_class: usize,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub remeasure_a_init: bool,
    #[serde(default)]
    pub ct: CtSection,
    #[serde(default)]
    pub initial_train: TrainSection,
    #[serde(default)]
    pub retrain: TrainSection,
    #[serde(default)]
    pub surgery: SurgerySection,
}

fn one() -> usize {
    1
}

fn default_replay() -> usize {
    DEFAULT_REPLAY_PER_CLASS
}

fn default_hidden() -> Vec<usize> {
    DEFAULT_HIDDEN.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub plot: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn yes() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            plot: true,
        }
    }
}

/// The whole file. Relative paths are resolved against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub dataset: DatasetSection,
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub ct_a: Option<f64>,
    pub no_plot: bool,
}

/// Configuration problems; every entry is reported.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0.join("\n"))
    }
}

impl std::error::Error for ConfigErrors {}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigErrors> {
        toml::from_str(text).map_err(|e| ConfigErrors(vec![e.message().to_string()]))
    }

    /// Reads the file and makes its paths absolute.
    pub fn load(path: &Path) -> Result<Self, ConfigErrors> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigErrors(vec![format!("cannot read {}: {e}", path.display())]))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.dataset.images, &mut cfg.dataset.labels, &mut cfg.dataset.path]
            .into_iter()
            .flatten()
        {
            *p = resolve(base, p);
        }
        cfg.output.dir = resolve(base, &cfg.output.dir);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.experiment.seed = seed;
        }
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        if let Some(a) = o.ct_a {
            self.experiment.ct.a = a;
        }
        if o.no_plot {
            self.output.plot = false;
        }
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        let e = &self.experiment;
        let defaults = ExperimentConfig::default();
        ExperimentConfig {
            n_init: e.n_init.unwrap_or(0),
            n_incr: e.n_incr,
            n_total: e.n_total.unwrap_or(0),
            ct_a: e.ct.a,
            ct_bias: e.ct.bias,
            a_init: e.ct.a_init,
            remeasure_a_init: e.remeasure_a_init,
            replay_per_class: e.replay_per_class,
            hidden: e.hidden.clone(),
            initial_train: e.initial_train.over(defaults.initial_train),
            retrain: e.retrain.over(defaults.retrain),
            surgery: HeadSurgeryParams {
                big_n: e.surgery.big_n.unwrap_or(defaults.surgery.big_n),
            },
            seed: e.seed,
        }
    }

    /// Same settings with every default written out.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        let cfg = self.experiment_config();
        out.experiment.initial_train = TrainSection::filled(cfg.initial_train);
        out.experiment.retrain = TrainSection::filled(cfg.retrain);
        out.experiment.surgery.big_n = Some(cfg.surgery.big_n);
        out
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let d = &self.dataset;
        if !(d.test_fraction > 0.0 && d.test_fraction < 1.0) {
            v.push(format!("dataset.test_fraction must lie in (0, 1), got {}", d.test_fraction));
        }
        let need_file = |v: &mut Vec<String>, key: &str, p: &Option<PathBuf>| match p {
            None => v.push(format!("dataset.{key} is required")),
            Some(p) if !p.is_file() => {
                v.push(format!("dataset.{key}: file not found: {}", p.display()))
            }
            Some(_) => {}
        };
        let forbid = |v: &mut Vec<String>, kind: &str, keys: &[(&str, bool)]| {
            for (key, present) in keys {
                if *present {
                    v.push(format!("dataset.{key} does not apply to kind {kind}"));
                }
            }
        };
        let blob_keys = [
            ("n_classes", d.n_classes.is_some()),
            ("per_class", d.per_class.is_some()),
            ("dim", d.dim.is_some()),
            ("center_separation", d.center_separation.is_some()),
            ("cluster_std", d.cluster_std.is_some()),
            ("seed", d.seed.is_some()),
        ];
        match d.kind {
            None => v.push("dataset.kind is required (idx, embedding_csv or blobs)".into()),
            Some(DatasetKind::Idx) => {
                need_file(&mut v, "images", &d.images);
                need_file(&mut v, "labels", &d.labels);
                forbid(&mut v, "idx", &[("path", d.path.is_some())]);
                forbid(&mut v, "idx", &blob_keys);
            }
            Some(DatasetKind::EmbeddingCsv) => {
                need_file(&mut v, "path", &d.path);
                forbid(
                    &mut v,
                    "embedding_csv",
                    &[("images", d.images.is_some()), ("labels", d.labels.is_some())],
                );
                forbid(&mut v, "embedding_csv", &blob_keys);
            }
            Some(DatasetKind::Blobs) => {
                forbid(
                    &mut v,
                    "blobs",
                    &[
                        ("images", d.images.is_some()),
                        ("labels", d.labels.is_some()),
                        ("path", d.path.is_some()),
                    ],
                );
                for (key, val) in [("n_classes", d.n_classes), ("per_class", d.per_class), ("dim", d.dim)] {
                    match val {
                        None => v.push(format!("dataset.{key} is required")),
                        Some(0) => v.push(format!("dataset.{key} must be positive")),
                        Some(_) => {}
                    }
                }
                for (key, val) in [("center_separation", d.center_separation), ("cluster_std", d.cluster_std)] {
                    match val {
                        None => v.push(format!("dataset.{key} is required")),
                        Some(x) if !(x > 0.0 && x.is_finite()) => {
                            v.push(format!("dataset.{key} must be positive, got {x}"))
                        }
                        Some(_) => {}
                    }
                }
                if let (Some(n), Some(total)) = (d.n_classes, self.experiment.n_total) {
                    if total > n {
                        v.push(format!("experiment.n_total ({total}) exceeds dataset.n_classes ({n})"));
                    }
                }
            }
        }
        let e = &self.experiment;
        if e.n_init.is_none() {
            v.push("experiment.n_init is required".into());
        }
        if e.n_total.is_none() {
            v.push("experiment.n_total is required".into());
        }
        if e.n_init.is_some() && e.n_total.is_some() {
            v.extend(self.experiment_config().violations().into_iter().map(|m| format!("experiment: {m}")));
        }
        v
    }

    pub fn validate(&self) -> Result<(), ConfigErrors> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(v))
        }
    }

    /// Loads or generates the dataset, splits it and applies the class order.
    pub fn build_dataset(&self) -> cct_core::Result<LabeledDataset> {
        let d = &self.dataset;
        let missing = |key: &str| cct_core::Error::Dataset(format!("dataset.{key} is not set"));
        let raw = match d.kind.ok_or_else(|| missing("kind"))? {
            DatasetKind::Idx => load_idx(
                d.images.as_ref().ok_or_else(|| missing("images"))?,
                d.labels.as_ref().ok_or_else(|| missing("labels"))?,
            )?,
            DatasetKind::EmbeddingCsv => load_embedding_csv(d.path.as_ref().ok_or_else(|| missing("path"))?)?,
            DatasetKind::Blobs => synth_blobs(&BlobSpec {
                n_classes: d.n_classes.ok_or_else(|| missing("n_classes"))?,
                per_class: d.per_class.ok_or_else(|| missing("per_class"))?,
                dim: d.dim.ok_or_else(|| missing("dim"))?,
                center_separation: d.center_separation.ok_or_else(|| missing("center_separation"))?,
                cluster_std: d.cluster_std.ok_or_else(|| missing("cluster_std"))?,
                seed: d.seed.unwrap_or(0),
            })?,
        };
        let split = split_train_test(&raw, d.test_fraction, d.split_seed)?;
        match d.class_order_seed {
            Some(seed) => split.shuffle_classes(seed),
            None => Ok(split),
        }
    }
}
