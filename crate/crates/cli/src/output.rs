//! Files written by `run` and `compare`.
//!
//! Reals are printed with Rust's shortest round-trip formatting so that the
//! CSV rows reproduce the in-memory values exactly.

use std::path::Path;

use anyhow::{Context, Result};
use cct_core::orchestrator::{IterationReport, RunLog};
use serde::Serialize;

use crate::config::RunConfigFile;
use crate::plot::{render, Panel, Series};

pub const ITERATIONS_HEADER: &str =
    "iteration,ct_value,tested,flagged_unknown,false_unknown,retrain_samples,post_accuracy";

pub const COMPARE_HEADER: &str =
    "iteration,cct_post_accuracy,cct_retrain_samples,baseline_post_accuracy,baseline_retrain_samples";

pub fn iterations_csv(reports: &[IterationReport]) -> String {
    let mut out = String::from(ITERATIONS_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.iteration,
            r.ct_value,
            r.tested_count,
            r.flagged_unknown_count,
            r.false_unknown_count,
            r.retrain_sample_count,
            r.post_accuracy
        ));
    }
    out
}

pub fn compare_csv(cct: &RunLog, baseline: &RunLog) -> String {
    let mut out = String::from(COMPARE_HEADER);
    out.push('\n');
    for (c, b) in cct.reports.iter().zip(&baseline.reports) {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            c.iteration, c.post_accuracy, c.retrain_sample_count, b.post_accuracy, b.retrain_sample_count
        ));
    }
    out
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a RunConfigFile,
    ila: Option<f64>,
    initial_accuracy: f64,
    a_init: f64,
    final_class_count: usize,
    iterations: &'a [IterationReport],
}

/// Deterministic summary; timing lives in a separate file.
pub fn summary_json(config: &RunConfigFile, log: &RunLog) -> String {
    let s = Summary {
        config,
        ila: log.ila,
        initial_accuracy: log.initial_accuracy,
        a_init: log.a_init,
        final_class_count: log.final_class_count,
        iterations: &log.reports,
    };
    let mut text = serde_json::to_string_pretty(&s).expect("summary serializes");
    text.push('\n');
    text
}

pub fn timing_json(entries: &[(&str, f64)]) -> String {
    let map: serde_json::Map<String, serde_json::Value> = entries
        .iter()
        .map(|(k, v)| (format!("{k}_seconds"), serde_json::json!(v)))
        .collect();
    let mut text = serde_json::to_string_pretty(&map).expect("timing serializes");
    text.push('\n');
    text
}

fn accuracy_points(log: &RunLog) -> Vec<(f64, f64)> {
    log.reports.iter().map(|r| (r.iteration as f64, r.post_accuracy)).collect()
}

pub fn accuracy_svg(log: &RunLog) -> String {
    render(&[Panel {
        title: "Post-retrain accuracy",
        x_label: "iteration",
        y_label: "accuracy",
        y_range: Some((0.0, 1.0)),
        series: vec![Series {
            name: "CCT",
            points: accuracy_points(log),
        }],
    }])
}

pub fn compare_svg(cct: &RunLog, baseline: &RunLog) -> String {
    let samples = |log: &RunLog| -> Vec<(f64, f64)> {
        log.reports
            .iter()
            .map(|r| (r.iteration as f64, r.retrain_sample_count as f64))
            .collect()
    };
    render(&[
        Panel {
            title: "Accuracy",
            x_label: "iteration",
            y_label: "accuracy",
            y_range: Some((0.0, 1.0)),
            series: vec![
                Series { name: "CCT", points: accuracy_points(cct) },
                Series { name: "full retrain", points: accuracy_points(baseline) },
            ],
        },
        Panel {
            title: "Samples processed",
            x_label: "iteration",
            y_label: "retrain samples",
            y_range: None,
            series: vec![
                Series { name: "CCT", points: samples(cct) },
                Series { name: "full retrain", points: samples(baseline) },
            ],
        },
    ])
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}
