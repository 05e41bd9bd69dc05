use cct_core::data::{split_train_test, synth_blobs, BlobSpec};
use cct_core::{run_experiment, ExperimentConfig};

fn final_original_accuracy(replay_per_class: usize, seed: u64) -> f64 {
    let ds = synth_blobs(&BlobSpec {
        n_classes: 8,
        per_class: 150,
        dim: 16,
        center_separation: 10.0,
        cluster_std: 1.0,
        seed,
    })
    .unwrap();
    let ds = split_train_test(&ds, 0.2, seed).unwrap();
    let cfg = ExperimentConfig {
        n_init: 3,
        n_incr: 1,
        n_total: 8,
        replay_per_class,
        seed,
        ..ExperimentConfig::default()
    };
    let log = run_experiment(&ds, &cfg).unwrap();
    log.reports.last().unwrap().initial_class_accuracy
}

#[test]
fn replay_reduces_forgetting() {
    let with: Vec<f64> = (0..10).map(|s| final_original_accuracy(20, s)).collect();
    let without: Vec<f64> = (0..10).map(|s| final_original_accuracy(0, s)).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let wins = with.iter().zip(&without).filter(|(a, b)| a >= b).count();
    assert!(mean(&with) >= mean(&without), "{with:?} vs {without:?}");
    assert!(wins >= 8, "replay matched or beat no replay on {wins}/10 seeds");
    eprintln!("with {:.4} without {:.4}", mean(&with), mean(&without));
}
