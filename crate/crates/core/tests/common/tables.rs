//! Handcrafted results rendered through the table functions, for golden files.

use std::collections::BTreeMap;
use std::path::PathBuf;

use controversy_core::corpus::{DatasetSplit, SplitName, SplitStats};
use controversy_core::eval::{AgreementReport, EvalReport, Metric, ModelEval, Prf};
use controversy_core::experiments::tables::{agreement_table, metric_table, split_table, temporal_table, topic_table};
use controversy_core::experiments::{AveragedRow, DeltaRow, TemporalResult};

const MODELS: [&str; 4] = ["tfidf-margin", "lm", "cnn", "han"];

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.txt"))
}

pub fn cells(line: &str) -> Vec<&str> {
    line.split("  ").map(str::trim).filter(|c| !c.is_empty()).collect()
}

pub fn is_rule(line: &str) -> bool {
    line.chars().all(|c| c == '=' || c == '-')
}

/// Cells of the first non-rule line.
pub fn header(table: &str) -> Vec<&str> {
    table.lines().find(|l| !is_rule(l)).map(cells).unwrap_or_default()
}

/// First cell of every non-rule line after the header.
pub fn row_names(table: &str) -> Vec<&str> {
    table
        .lines()
        .filter(|l| !is_rule(l))
        .skip(1)
        .filter_map(|l| cells(l).first().copied())
        .collect()
}

fn model_eval(model: &str, p: f64, r: f64, auc: Option<f64>) -> ModelEval {
    ModelEval {
        model: model.into(),
        n: 200,
        prf: Prf {
            precision: p,
            recall: r,
            f1: 2.0 * p * r / (p + r),
            no_predicted_positives: false,
            no_actual_positives: false,
            zero_f1: false,
        },
        auc,
        intervals: BTreeMap::new(),
    }
}

fn report(rows: &[(f64, f64, Option<f64>)]) -> EvalReport {
    EvalReport {
        n: 200,
        seed: 0,
        resamples: 1000,
        level: 0.95,
        workers: 1,
        models: MODELS
            .iter()
            .zip(rows)
            .map(|(m, &(p, r, a))| model_eval(m, p, r, a))
            .collect(),
        significance: BTreeMap::new(),
    }
}

fn split(name: SplitName, seeds: usize, total: usize, controversial: usize, general_web: usize) -> DatasetSplit {
    DatasetSplit {
        name,
        seed_ids: Vec::new(),
        ids: Vec::new(),
        stats: SplitStats {
            seeds,
            total,
            controversial,
            general_web,
        },
    }
}

pub fn splits() -> String {
    split_table(&[
        split(SplitName::Train, 420, 5600, 1960, 1344),
        split(SplitName::Validation, 15, 200, 68, 50),
        split(SplitName::Test, 15, 200, 71, 46),
    ])
}

pub fn temporal() -> String {
    let within = report(&[
        (0.75, 0.70, Some(0.80)),
        (0.68, 0.66, Some(0.74)),
        (0.72, 0.78, Some(0.83)),
        (0.70, 0.81, Some(0.85)),
    ]);
    let between = report(&[
        (0.77, 0.20, Some(0.62)),
        (0.60, 0.30, Some(0.58)),
        (0.71, 0.74, Some(0.82)),
        (0.69, 0.80, Some(0.84)),
    ]);
    let delta = within
        .models
        .iter()
        .zip(&between.models)
        .map(|(w, b)| DeltaRow {
            model: w.model.clone(),
            change: Metric::ALL
                .iter()
                .map(|&m| {
                    (
                        m,
                        Some((b.value(m).unwrap() - w.value(m).unwrap()) / w.value(m).unwrap()),
                    )
                })
                .collect(),
        })
        .collect();
    temporal_table(&TemporalResult {
        within_label: "'18/'18".into(),
        between_label: "'09/'18".into(),
        test_size: 200,
        within_fits: Vec::new(),
        between_fits: Vec::new(),
        within,
        between,
        delta,
    })
}

pub fn topics() -> String {
    let values = [
        (0.61, 0.55, 0.578, Some(0.70)),
        (0.58, 0.52, 0.548, None),
        (0.66, 0.63, 0.645, Some(0.74)),
        (0.64, 0.69, 0.664, Some(0.76)),
    ];
    let rows: Vec<AveragedRow> = MODELS
        .iter()
        .zip(values)
        .map(|(m, (precision, recall, f1, auc))| AveragedRow {
            model: m.to_string(),
            precision,
            recall,
            f1,
            auc,
        })
        .collect();
    topic_table(&rows)
}

pub fn domain() -> String {
    metric_table(&report(&[
        (0.55, 0.48, Some(0.66)),
        (0.51, 0.57, Some(0.63)),
        (0.62, 0.60, Some(0.71)),
        (0.59, 0.66, Some(0.72)),
    ]))
}

pub fn agreement() -> String {
    let values = [
        (0.12, -0.05, 0.21),
        (0.09, -0.11, 0.18),
        (0.31, -0.24, 0.27),
        (0.28, -0.20, 0.25),
    ];
    let rows: Vec<AgreementReport> = MODELS
        .iter()
        .zip(values)
        .map(|(m, (a, c, d))| AgreementReport {
            model: m.to_string(),
            n: 500,
            mean_annotation: Some(a),
            certainty: Some(c),
            disagreement: Some(d),
        })
        .collect();
    agreement_table(&rows)
}

/// Golden name and rendering of every fixture.
pub fn all() -> Vec<(&'static str, String)> {
    vec![
        ("splits", splits()),
        ("temporal", temporal()),
        ("topics", topics()),
        ("domain", domain()),
        ("agreement", agreement()),
    ]
}
