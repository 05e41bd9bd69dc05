use super::*;
use crate::data::{split_train_test, synth_blobs, BlobSpec};

fn blobs(n_classes: usize, per_class: usize, seed: u64) -> LabeledDataset {
    let ds = synth_blobs(&BlobSpec {
        n_classes,
        per_class,
        dim: 16,
        center_separation: 10.0,
        cluster_std: 1.0,
        seed,
    })
    .unwrap();
    split_train_test(&ds, 0.2, seed).unwrap()
}

fn config(n_init: usize, n_incr: usize, n_total: usize) -> ExperimentConfig {
    ExperimentConfig {
        n_init,
        n_incr,
        n_total,
        hidden: vec![16, 16],
        initial_train: TrainConfig {
            epochs: 15,
            ..TrainConfig::default()
        },
        retrain: TrainConfig {
            epochs: 10,
            ..TrainConfig::default()
        },
        ..ExperimentConfig::default()
    }
}

#[test]
fn initial_model_fits_blobs() {
    let ds = blobs(5, 60, 1);
    let state = initial_train(&ds, &config(5, 1, 5)).unwrap();
    assert_eq!(state.model.class_count(), 5);
    assert!(state.a_init >= 0.95, "a_init {}", state.a_init);
    assert!(state.unknown_classes.is_empty());
    let again = initial_train(&ds, &config(5, 1, 5)).unwrap();
    assert_eq!(again, state);
}

#[test]
fn zero_iterations_when_everything_is_known() {
    let ds = blobs(5, 40, 1);
    let log = run_experiment(&ds, &config(5, 1, 5)).unwrap();
    assert!(log.reports.is_empty());
    assert_eq!(log.ila, None);
    assert!(full_retrain_baseline(&ds, &config(5, 1, 5)).is_err());
}

#[test]
fn schedule_guards() {
    let ds = blobs(4, 20, 0);
    assert!(initial_train(&ds, &config(3, 1, 6)).is_err());
    let unsplit = synth_blobs(&BlobSpec {
        n_classes: 4,
        per_class: 10,
        dim: 2,
        center_separation: 10.0,
        cluster_std: 1.0,
        seed: 0,
    })
    .unwrap();
    assert!(initial_train(&unsplit, &config(2, 1, 4)).is_err());
}

#[test]
fn pool_composition() {
    let ds = blobs(6, 50, 2);
    let cfg = config(3, 2, 6);
    let state = initial_train(&ds, &cfg).unwrap();
    let pool = build_test_pool(&state, &ds, &cfg).unwrap();
    assert_eq!(pool.new_classes, vec![3, 4]);
    assert_eq!(pool.rows.len(), 3 * 10 + 2 * 40);
    let again = build_test_pool(&state, &ds, &cfg).unwrap();
    assert_eq!(again, pool);
    let mut sorted = pool.rows.clone();
    sorted.sort_unstable();
    assert_ne!(sorted, pool.rows);
}

#[test]
fn replay_counts() {
    let ds = blobs(6, 50, 2);
    assert!(sample_replay(&ds, &[0, 1], 0, 0).unwrap().is_empty());
    let r = sample_replay(&ds, &[0, 1, 2, 3, 4], 20, 5).unwrap();
    assert_eq!(r.len(), 100);
    for c in 0..5 {
        assert_eq!(r.labels.iter().filter(|&&l| l == c).count(), 20);
    }
    let mut uniq = r.rows.clone();
    uniq.dedup();
    assert_eq!(uniq.len(), 100);
    assert_eq!(sample_replay(&ds, &[0], 1000, 5).unwrap().len(), 40);
    assert_eq!(sample_replay(&ds, &[0, 1, 2, 3, 4], 20, 5).unwrap(), r);
}

#[test]
fn majority_vote_ties_to_lower_id() {
    let a = ClusterAssignment {
        labels: vec![0, 0, 1, 1, 0],
        k: 3,
    };
    assert_eq!(majority_truth(&a, &[7, 4, 2, 2, 7]), vec![Some(7), Some(2), None]);
    assert_eq!(majority_truth(&ClusterAssignment { labels: vec![0, 0], k: 1 }, &[5, 3]), vec![Some(3)]);
}

#[test]
fn full_run_invariants() {
    let ds = blobs(6, 60, 3);
    let cfg = config(3, 1, 6);
    let (log, state) = run_experiment_with_state(&ds, &cfg).unwrap();
    assert_eq!(log.reports.len(), 3);
    assert_eq!(log.final_class_count, 6);
    assert_eq!(state.model.class_count(), 6);
    for (l, r) in log.reports.iter().enumerate() {
        let l = l + 1;
        assert_eq!(r.iteration, l);
        assert_eq!(r.class_count, 3 + l);
        assert_eq!(r.retrain_sample_count, r.caught_per_cluster.iter().sum::<usize>() + r.replay_count);
        assert!(r.retrain_sample_count <= r.tested_count + r.replay_count);
        assert!((0.0..=1.0).contains(&r.post_accuracy));
    }
    let mut all = state.known_classes.clone();
    all.extend(&state.unknown_classes);
    assert_eq!(all, (0..6).collect::<Vec<_>>());
    let expected = ila(&log.post_accuracies()).unwrap();
    assert_eq!(log.ila, Some(expected));
    assert_eq!(run_experiment(&ds, &cfg).unwrap(), log);

    let base = full_retrain_baseline(&ds, &cfg).unwrap();
    for (b, c) in base.reports.iter().zip(&log.reports) {
        assert!(b.retrain_sample_count > c.retrain_sample_count);
    }
}

#[test]
fn partial_final_increment() {
    let ds = blobs(10, 30, 4);
    let cfg = config(5, 3, 10);
    let log = run_experiment(&ds, &cfg).unwrap();
    assert_eq!(log.reports.len(), 2);
    assert_eq!(log.reports[1].new_classes, vec![8, 9]);
    assert_eq!(log.reports[1].caught_per_cluster.len(), 2);
    assert_eq!(log.final_class_count, 10);
}

#[test]
fn new_class_labels_never_reach_training() {
    // Swapping the ids of the two classes learned together leaves every
    // weight untouched; only the evaluation mapping follows the swap.
    let ds = blobs(5, 40, 6);
    let cfg = config(3, 2, 5);
    let swapped = ds.reorder_classes(&[0, 1, 2, 4, 3]).unwrap();
    let (a, sa) = run_experiment_with_state(&ds, &cfg).unwrap();
    let (b, sb) = run_experiment_with_state(&swapped, &cfg).unwrap();
    assert_eq!(sa.model, sb.model);
    assert_eq!(a.reports[0].caught_per_cluster, b.reports[0].caught_per_cluster);
    let flip = |m: &[Option<usize>]| -> Vec<Option<usize>> {
        m.iter().map(|c| c.map(|c| match c { 3 => 4, 4 => 3, c => c })).collect()
    };
    assert_eq!(flip(&a.reports[0].cluster_to_truth), b.reports[0].cluster_to_truth);
    assert_eq!(a.ila, b.ila);
}

#[test]
fn no_unknowns_still_grows_the_head() {
    let ds = blobs(4, 40, 7);
    // ct = (1 - 0.999) / 1, so every sample passes as known.
    let cfg = ExperimentConfig {
        ct_a: -0.999,
        a_init: Some(1.0),
        ..config(3, 1, 4)
    };
    let (next, report) = run_iteration(&initial_train(&ds, &cfg).unwrap(), &ds, &cfg).unwrap();
    assert_eq!(report.flagged_unknown_count, 0);
    assert_eq!(report.empty_clusters, vec![0]);
    assert_eq!(next.model.class_count(), 4);
    assert_eq!(report.cluster_to_truth, vec![None]);
}
