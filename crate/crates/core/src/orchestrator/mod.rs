//! The incremental loop: prime, test a mixed pool, catch unknowns, cluster,
//! grow the head, retrain on caught samples plus replay.
//!
//! Class ids are taken in dataset order: the first `n_init` ids are known from
//! the start and the rest arrive `n_incr` at a time.

mod config;

pub use config::{ExperimentConfig, DEFAULT_REPLAY_PER_CLASS};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::{spectral_cluster, ClusterAssignment};
use crate::data::LabeledDataset;
use crate::detector::{compute_ct, detect_unknowns, CtParams};
use crate::linalg::Matrix;
use crate::metrics::{accuracy, ila};
use crate::nn::{train, Classifier, TrainConfig};
use crate::seed::derive;
use crate::surgery::{add_priming_node, instantiate_class_nodes};
use crate::{Error, Result};

const STREAM_MODEL: u64 = 1;
const STREAM_INITIAL_TRAIN: u64 = 2;
const STREAM_POOL: u64 = 3;
const STREAM_CLUSTER: u64 = 4;
const STREAM_REPLAY: u64 = 5;
const STREAM_RETRAIN: u64 = 6;
const STREAM_BASELINE: u64 = 7;

/// Clusters smaller than this are reported as thin.
pub const THIN_CLUSTER: usize = 3;

/// Model and bookkeeping carried between iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub model: Classifier,
    pub known_classes: Vec<usize>,
    pub unknown_classes: Vec<usize>,
    /// 1-based index of the next iteration.
    pub iteration: usize,
    pub a_init: f64,
    /// Evaluation only: the true class each output node stands for, if any.
    pub node_classes: Vec<Option<usize>>,
    /// Dataset rows each output node is rehearsed with.
    pub memory: Vec<Vec<usize>>,
}

/// Mixed test pool of one iteration. `truth` never reaches the detector.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPool {
    pub rows: Vec<usize>,
    pub features: Matrix,
    pub truth: Vec<usize>,
    pub new_classes: Vec<usize>,
}

/// Rows and node labels drawn for rehearsal.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReplaySample {
    pub rows: Vec<usize>,
    pub labels: Vec<usize>,
}

impl ReplaySample {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub ct_value: f64,
    pub tested_count: usize,
    /// Pool samples drawn from already-known classes.
    pub known_tested_count: usize,
    pub flagged_unknown_count: usize,
    /// Known-class samples flagged unknown.
    pub false_unknown_count: usize,
    pub caught_per_cluster: Vec<usize>,
    pub replay_count: usize,
    pub retrain_sample_count: usize,
    pub post_accuracy: f64,
    /// Accuracy on the test splits of the initial classes only.
    pub initial_class_accuracy: f64,
    pub class_count: usize,
    pub new_classes: Vec<usize>,
    /// Majority true class per new cluster, used for evaluation only.
    pub cluster_to_truth: Vec<Option<usize>>,
    pub empty_clusters: Vec<usize>,
    pub thin_clusters: Vec<usize>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub config: ExperimentConfig,
    /// Test accuracy of the initial model on its own classes.
    pub initial_accuracy: f64,
    /// Base accuracy used by the first threshold.
    pub a_init: f64,
    pub reports: Vec<IterationReport>,
    /// Mean post-retrain accuracy; undefined without iterations.
    pub ila: Option<f64>,
    pub final_class_count: usize,
}

impl RunLog {
    pub fn post_accuracies(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.post_accuracy).collect()
    }
}

fn require_schedule(dataset: &LabeledDataset, config: &ExperimentConfig) -> Result<()> {
    config.validate()?;
    if dataset.splits().is_none() {
        return Err(Error::Experiment("dataset has no train/test splits".into()));
    }
    if dataset.class_count() < config.n_total {
        return Err(Error::Experiment(format!(
            "n_total is {} but the dataset has {} classes",
            config.n_total,
            dataset.class_count()
        )));
    }
    for class in 0..config.n_total {
        if dataset.train_indices(class)?.is_empty() || dataset.test_indices(class)?.is_empty() {
            return Err(Error::Experiment(format!("class {class} has an empty split")));
        }
    }
    Ok(())
}

fn gather(
    classes: &[usize],
    pick: impl Fn(usize) -> Result<Vec<usize>>,
) -> Result<Vec<usize>> {
    let mut rows = Vec::new();
    for &c in classes {
        rows.extend(pick(c)?);
    }
    Ok(rows)
}

fn train_rows(dataset: &LabeledDataset, classes: &[usize]) -> Result<Vec<usize>> {
    gather(classes, |c| Ok(dataset.train_indices(c)?.to_vec()))
}

fn test_rows(dataset: &LabeledDataset, classes: &[usize]) -> Result<Vec<usize>> {
    gather(classes, |c| Ok(dataset.test_indices(c)?.to_vec()))
}

fn seeded(cfg: &TrainConfig, base: u64, stream: u64, index: u64) -> TrainConfig {
    TrainConfig {
        seed: derive(base, stream, derive(cfg.seed, 0, index)),
        ..*cfg
    }
}

/// Accuracy on the test rows of `classes`, reading predictions through the node map.
fn mapped_accuracy(
    model: &Classifier,
    node_classes: &[Option<usize>],
    dataset: &LabeledDataset,
    classes: &[usize],
) -> Result<f64> {
    let rows = test_rows(dataset, classes)?;
    let predicted: Vec<Option<usize>> = model
        .predict(&dataset.features().select_rows(&rows))?
        .into_iter()
        .map(|node| node_classes.get(node).copied().flatten())
        .collect();
    let truth: Vec<Option<usize>> = rows.iter().map(|&r| Some(dataset.labels()[r])).collect();
    accuracy(&predicted, &truth)
}

fn fit(model: &Classifier, dataset: &LabeledDataset, rows: &[usize], labels: &[usize], cfg: &TrainConfig) -> Result<Classifier> {
    let features = dataset.features().select_rows(rows);
    Ok(train(model, &features, labels, cfg)?.0)
}

/// Trains the initial classifier on the first `n_init` classes and measures its base accuracy.
pub fn initial_train(dataset: &LabeledDataset, config: &ExperimentConfig) -> Result<IterationState> {
    require_schedule(dataset, config)?;
    let known: Vec<usize> = (0..config.n_init).collect();
    let model = Classifier::new(
        dataset.dim(),
        &config.hidden,
        config.n_init,
        derive(config.seed, STREAM_MODEL, 0),
    )?;
    let rows = train_rows(dataset, &known)?;
    let labels: Vec<usize> = rows.iter().map(|&r| dataset.labels()[r]).collect();
    let cfg = seeded(&config.initial_train, config.seed, STREAM_INITIAL_TRAIN, 0);
    let model = fit(&model, dataset, &rows, &labels, &cfg)?;

    let node_classes: Vec<Option<usize>> = known.iter().copied().map(Some).collect();
    let measured = mapped_accuracy(&model, &node_classes, dataset, &known)?;
    let a_init = match config.a_init {
        Some(a) => a,
        None if measured > 0.0 => measured,
        None => {
            return Err(Error::Experiment(
                "initial model scored 0 on its test split; set a_init explicitly".into(),
            ))
        }
    };
    let memory = known
        .iter()
        .map(|&c| Ok(dataset.train_indices(c)?.to_vec()))
        .collect::<Result<_>>()?;
    Ok(IterationState {
        model,
        known_classes: known,
        unknown_classes: (config.n_init..config.n_total).collect(),
        iteration: 1,
        a_init,
        node_classes,
        memory,
    })
}

/// Test splits of the known classes plus the full train splits of the next
/// `n_incr` unknown classes, shuffled by seed.
pub fn build_test_pool(
    state: &IterationState,
    dataset: &LabeledDataset,
    config: &ExperimentConfig,
) -> Result<TestPool> {
    if state.unknown_classes.is_empty() {
        return Err(Error::Experiment("no unknown classes remain".into()));
    }
    let take = config.n_incr.min(state.unknown_classes.len());
    let new_classes = state.unknown_classes[..take].to_vec();
    let mut rows = test_rows(dataset, &state.known_classes)?;
    rows.extend(train_rows(dataset, &new_classes)?);
    rows.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(derive(config.seed, STREAM_POOL, state.iteration as u64));
    rows.shuffle(&mut rng);
    Ok(TestPool {
        features: dataset.features().select_rows(&rows),
        truth: rows.iter().map(|&r| dataset.labels()[r]).collect(),
        rows,
        new_classes,
    })
}

/// Draws up to `per_group` members of every group without replacement,
/// labelling each draw with its group index.
fn sample_groups(groups: &[Vec<usize>], per_group: usize, seed: u64) -> ReplaySample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ReplaySample::default();
    for (g, members) in groups.iter().enumerate() {
        let mut picked: Vec<usize> = members
            .choose_multiple(&mut rng, per_group.min(members.len()))
            .copied()
            .collect();
        picked.sort_unstable();
        out.labels.extend(std::iter::repeat_n(g, picked.len()));
        out.rows.extend(picked);
    }
    out
}

/// Uniform per-class replay from the train splits of `known_classes`,
/// labelled with the true class ids.
pub fn sample_replay(
    dataset: &LabeledDataset,
    known_classes: &[usize],
    replay_per_class: usize,
    seed: u64,
) -> Result<ReplaySample> {
    let groups = known_classes
        .iter()
        .map(|&c| Ok(dataset.train_indices(c)?.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let mut sample = sample_groups(&groups, replay_per_class, seed);
    for l in &mut sample.labels {
        *l = known_classes[*l];
    }
    Ok(sample)
}

/// Majority true class of each cluster, ties to the lower id.
fn majority_truth(assignment: &ClusterAssignment, truth: &[usize]) -> Vec<Option<usize>> {
    let mut tallies: Vec<std::collections::BTreeMap<usize, usize>> = vec![Default::default(); assignment.k];
    for (&c, &t) in assignment.labels.iter().zip(truth) {
        *tallies[c].entry(t).or_default() += 1;
    }
    tallies
        .into_iter()
        .map(|tally| {
            let best = tally.values().copied().max()?;
            tally.into_iter().find(|&(_, n)| n == best).map(|(class, _)| class)
        })
        .collect()
}

fn cluster_caught(
    embeddings: &Matrix,
    k: usize,
    seed: u64,
    diagnostics: &mut Vec<String>,
) -> Result<ClusterAssignment> {
    let n = embeddings.rows();
    if n < k {
        diagnostics.push(format!("caught {n} sample(s) for {k} cluster(s)"));
        return Ok(ClusterAssignment {
            labels: (0..n).collect(),
            k,
        });
    }
    match spectral_cluster(embeddings, k, seed) {
        Err(Error::DegenerateSigma) => {
            diagnostics.push("caught samples share one embedding; split round-robin".into());
            Ok(ClusterAssignment {
                labels: (0..n).map(|i| i % k).collect(),
                k,
            })
        }
        other => other,
    }
}

/// One pass of the loop. Returns the advanced state and its report.
pub fn run_iteration(
    state: &IterationState,
    dataset: &LabeledDataset,
    config: &ExperimentConfig,
) -> Result<(IterationState, IterationReport)> {
    let l = state.iteration;
    let pool = build_test_pool(state, dataset, config)?;
    let k_new = pool.new_classes.len();
    let old_nodes = state.model.class_count();
    let mut diagnostics = Vec::new();

    let primed = add_priming_node(&state.model, &config.surgery)?;
    let ct_value = compute_ct(&CtParams {
        n_incr: config.n_incr,
        l,
        a: config.ct_a,
        a_init: state.a_init,
        bias: config.ct_bias,
    })?;
    let detection = detect_unknowns(&primed, &pool.features, ct_value)?;
    let caught = &detection.unknown_samples;
    let is_new = |class: usize| pool.new_classes.contains(&class);
    let known_tested_count = pool.truth.iter().filter(|&&t| !is_new(t)).count();
    let false_unknown_count = caught.iter().filter(|&&i| !is_new(pool.truth[i])).count();

    let caught_features = pool.features.select_rows(caught);
    let assignment = if caught.is_empty() {
        diagnostics.push("no samples flagged unknown".into());
        ClusterAssignment {
            labels: Vec::new(),
            k: k_new,
        }
    } else {
        let embeddings = primed.embed(&caught_features)?;
        let seed = derive(config.seed, STREAM_CLUSTER, l as u64);
        cluster_caught(&embeddings, k_new, seed, &mut diagnostics)?
    };
    let caught_per_cluster = assignment.sizes();
    let empty_clusters: Vec<usize> = (0..k_new).filter(|&c| caught_per_cluster[c] == 0).collect();
    let thin_clusters: Vec<usize> = (0..k_new)
        .filter(|&c| (1..THIN_CLUSTER).contains(&caught_per_cluster[c]))
        .collect();
    if !empty_clusters.is_empty() {
        diagnostics.push(format!("empty clusters {empty_clusters:?}"));
    }

    let grown = instantiate_class_nodes(&primed, k_new, &config.surgery)?;

    let replay = sample_groups(
        &state.memory,
        config.replay_per_class,
        derive(config.seed, STREAM_REPLAY, l as u64),
    );
    let mut rows: Vec<usize> = caught.iter().map(|&i| pool.rows[i]).collect();
    let mut labels: Vec<usize> = assignment.labels.iter().map(|&c| old_nodes + c).collect();
    rows.extend_from_slice(&replay.rows);
    labels.extend_from_slice(&replay.labels);
    let retrain_sample_count = rows.len();
    let model = if rows.is_empty() {
        diagnostics.push("nothing to retrain on".into());
        grown
    } else {
        let cfg = seeded(&config.retrain, config.seed, STREAM_RETRAIN, l as u64);
        fit(&grown, dataset, &rows, &labels, &cfg)?
    };

    let caught_truth: Vec<usize> = caught.iter().map(|&i| pool.truth[i]).collect();
    let cluster_to_truth = majority_truth(&assignment, &caught_truth);
    let mut node_classes = state.node_classes.clone();
    node_classes.extend_from_slice(&cluster_to_truth);
    let mut memory = state.memory.clone();
    for c in 0..k_new {
        memory.push(
            caught
                .iter()
                .zip(&assignment.labels)
                .filter(|&(_, &a)| a == c)
                .map(|(&i, _)| pool.rows[i])
                .collect(),
        );
    }

    let mut known_classes = state.known_classes.clone();
    known_classes.extend_from_slice(&pool.new_classes);
    let post_accuracy = mapped_accuracy(&model, &node_classes, dataset, &known_classes)?;
    let initial: Vec<usize> = (0..config.n_init).collect();
    let initial_class_accuracy = mapped_accuracy(&model, &node_classes, dataset, &initial)?;
    let a_init = if config.remeasure_a_init && post_accuracy > 0.0 {
        post_accuracy
    } else {
        state.a_init
    };

    let report = IterationReport {
        iteration: l,
        ct_value,
        tested_count: pool.rows.len(),
        known_tested_count,
        flagged_unknown_count: caught.len(),
        false_unknown_count,
        caught_per_cluster,
        replay_count: replay.len(),
        retrain_sample_count,
        post_accuracy,
        initial_class_accuracy,
        class_count: model.class_count(),
        new_classes: pool.new_classes.clone(),
        cluster_to_truth,
        empty_clusters,
        thin_clusters,
        diagnostics,
    };
    let next = IterationState {
        model,
        known_classes,
        unknown_classes: state.unknown_classes[k_new..].to_vec(),
        iteration: l + 1,
        a_init,
        node_classes,
        memory,
    };
    Ok((next, report))
}

/// Runs every iteration and returns the log with the final state.
pub fn run_experiment_with_state(
    dataset: &LabeledDataset,
    config: &ExperimentConfig,
) -> Result<(RunLog, IterationState)> {
    let mut state = initial_train(dataset, config)?;
    let initial_accuracy = mapped_accuracy(&state.model, &state.node_classes, dataset, &state.known_classes)?;
    let a_init = state.a_init;
    let mut reports = Vec::with_capacity(config.iteration_count());
    for _ in 0..config.iteration_count() {
        let (next, report) = run_iteration(&state, dataset, config)?;
        state = next;
        reports.push(report);
    }
    let log = finish_log(config, initial_accuracy, a_init, reports, state.model.class_count())?;
    Ok((log, state))
}

pub fn run_experiment(dataset: &LabeledDataset, config: &ExperimentConfig) -> Result<RunLog> {
    Ok(run_experiment_with_state(dataset, config)?.0)
}

fn finish_log(
    config: &ExperimentConfig,
    initial_accuracy: f64,
    a_init: f64,
    reports: Vec<IterationReport>,
    final_class_count: usize,
) -> Result<RunLog> {
    let series: Vec<f64> = reports.iter().map(|r| r.post_accuracy).collect();
    let ila = if series.is_empty() { None } else { Some(ila(&series)?) };
    Ok(RunLog {
        config: config.clone(),
        initial_accuracy,
        a_init,
        reports,
        ila,
        final_class_count,
    })
}

/// Control run: each iteration trains a fresh model on every train sample of
/// every known class with true labels.
pub fn full_retrain_baseline(dataset: &LabeledDataset, config: &ExperimentConfig) -> Result<RunLog> {
    require_schedule(dataset, config)?;
    if config.iteration_count() == 0 {
        return Err(Error::Experiment("no iterations to run".into()));
    }
    let fresh = |classes: &[usize], index: u64| -> Result<(Classifier, usize)> {
        let model = Classifier::new(
            dataset.dim(),
            &config.hidden,
            classes.len(),
            derive(config.seed, STREAM_MODEL, index),
        )?;
        let rows = train_rows(dataset, classes)?;
        let labels: Vec<usize> = rows.iter().map(|&r| dataset.labels()[r]).collect();
        let cfg = seeded(&config.initial_train, config.seed, STREAM_BASELINE, index);
        Ok((fit(&model, dataset, &rows, &labels, &cfg)?, rows.len()))
    };
    let identity = |n: usize| -> Vec<Option<usize>> { (0..n).map(Some).collect() };

    let initial: Vec<usize> = (0..config.n_init).collect();
    let (model, _) = fresh(&initial, 0)?;
    let initial_accuracy = mapped_accuracy(&model, &identity(config.n_init), dataset, &initial)?;

    let mut reports = Vec::new();
    let mut known = initial.clone();
    let mut final_class_count = config.n_init;
    for l in 1..=config.iteration_count() {
        let upto = (config.n_init + l * config.n_incr).min(config.n_total);
        let new_classes: Vec<usize> = (known.len()..upto).collect();
        known.extend_from_slice(&new_classes);
        let (model, count) = fresh(&known, l as u64)?;
        let nodes = identity(known.len());
        reports.push(IterationReport {
            iteration: l,
            ct_value: 0.0,
            tested_count: 0,
            known_tested_count: 0,
            flagged_unknown_count: 0,
            false_unknown_count: 0,
            caught_per_cluster: Vec::new(),
            replay_count: 0,
            retrain_sample_count: count,
            post_accuracy: mapped_accuracy(&model, &nodes, dataset, &known)?,
            initial_class_accuracy: mapped_accuracy(&model, &nodes, dataset, &initial)?,
            class_count: model.class_count(),
            cluster_to_truth: new_classes.iter().copied().map(Some).collect(),
            new_classes,
            empty_clusters: Vec::new(),
            thin_clusters: Vec::new(),
            diagnostics: Vec::new(),
        });
        final_class_count = model.class_count();
    }
    finish_log(config, initial_accuracy, initial_accuracy, reports, final_class_count)
}

#[cfg(test)]
mod tests;
