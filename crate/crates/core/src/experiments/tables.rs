//! Plain-text renderings of the experiment tables.

use crate::corpus::{DatasetSplit, SplitName};
use crate::eval::{AgreementReport, EvalReport, Metric};
use crate::models::ModelKind;

use super::run::{AveragedRow, TemporalResult};

/// Row label of a model name in tables.
pub fn display_name(model: &str) -> String {
    match ModelKind::parse(model) {
        Some(ModelKind::TfidfMargin) => "TfIdf-SVM".into(),
        Some(k) => k.display().into(),
        None => model.into(),
    }
}

fn is_lexical(model: &str) -> bool {
    ModelKind::parse(model).is_some_and(|k| !k.is_neural())
}

fn number(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "n/a".into())
}

/// `▲3%`, `▼72%`, `0%`; `n/a` when undefined.
pub fn format_delta(change: Option<f64>) -> String {
    let Some(c) = change else { return "n/a".into() };
    let pct = (c * 100.0).round();
    if pct == 0.0 {
        "0%".into()
    } else if pct > 0.0 {
        format!("▲{pct:.0}%")
    } else {
        format!("▼{:.0}%", -pct)
    }
}

enum Line {
    Rule(char),
    Cells(Vec<String>),
}

/// Column-aligned grid: first column left-aligned, the rest right-aligned.
fn grid(lines: &[Line]) -> String {
    let width = |s: &str| s.chars().count();
    let cols = lines
        .iter()
        .filter_map(|l| match l {
            Line::Cells(c) => Some(c.len()),
            Line::Rule(_) => None,
        })
        .max()
        .unwrap_or(0);
    let mut widths = vec![0; cols];
    for l in lines {
        if let Line::Cells(cells) = l {
            for (i, c) in cells.iter().enumerate() {
                widths[i] = widths[i].max(width(c));
            }
        }
    }
    let total = widths.iter().sum::<usize>() + 2 * cols.saturating_sub(1);
    let mut out = String::new();
    for l in lines {
        match l {
            Line::Rule(c) => out.extend(std::iter::repeat_n(*c, total)),
            Line::Cells(cells) => {
                let mut row = String::new();
                for (i, c) in cells.iter().enumerate() {
                    let pad = widths[i] - width(c);
                    if i > 0 {
                        row.push_str("  ");
                    }
                    if i == 0 {
                        row.push_str(c);
                        row.extend(std::iter::repeat_n(' ', pad));
                    } else {
                        row.extend(std::iter::repeat_n(' ', pad));
                        row.push_str(c);
                    }
                }
                out.push_str(row.trim_end());
            }
        }
        out.push('\n');
    }
    out
}

/// Model rows with a rule between the lexical and the neural group.
fn grouped(models: &[String], row: impl Fn(usize) -> Vec<String>) -> Vec<Line> {
    let mut lines = Vec::new();
    for (i, m) in models.iter().enumerate() {
        if i > 0 && is_lexical(&models[i - 1]) && !is_lexical(m) {
            lines.push(Line::Rule('-'));
        }
        lines.push(Line::Cells(row(i)));
    }
    lines
}

fn percent(part: usize, total: usize) -> String {
    if total == 0 {
        format!("{part} (n/a)")
    } else {
        format!("{part} ({:.0}%)", 100.0 * part as f64 / total as f64)
    }
}

/// Dataset statistics per split.
pub fn split_table(splits: &[DatasetSplit]) -> String {
    let mut lines = vec![
        Line::Rule('='),
        Line::Cells(
            ["Set", "Seeds", "Total", "Controversial", "General Web"]
                .map(String::from)
                .to_vec(),
        ),
        Line::Rule('-'),
    ];
    for name in SplitName::ALL {
        if let Some(s) = splits.iter().find(|s| s.name == name) {
            let st = &s.stats;
            lines.push(Line::Cells(vec![
                name.title().into(),
                st.seeds.to_string(),
                st.total.to_string(),
                percent(st.controversial, st.total),
                percent(st.general_web, st.total),
            ]));
        }
    }
    lines.push(Line::Rule('='));
    grid(&lines)
}

fn metric_rows(models: &[String], values: impl Fn(usize, Metric) -> Option<f64>) -> Vec<Line> {
    let mut lines = vec![
        Line::Rule('='),
        Line::Cells(["Model", "Precision", "Recall", "F1", "AUC"].map(String::from).to_vec()),
        Line::Rule('-'),
    ];
    lines.extend(grouped(models, |i| {
        let mut r = vec![display_name(&models[i])];
        r.extend(Metric::ALL.iter().map(|&m| number(values(i, m))));
        r
    }));
    lines.push(Line::Rule('='));
    lines
}

/// Precision, recall, F1 and AUC per model (comparison and domain layouts).
pub fn metric_table(report: &EvalReport) -> String {
    let models: Vec<String> = report.models.iter().map(|m| m.model.clone()).collect();
    grid(&metric_rows(&models, |i, m| report.models[i].value(m)))
}

/// Fold-averaged metrics per model.
pub fn topic_table(rows: &[AveragedRow]) -> String {
    let models: Vec<String> = rows.iter().map(|r| r.model.clone()).collect();
    grid(&metric_rows(&models, |i, m| {
        let r = &rows[i];
        match m {
            Metric::Precision => Some(r.precision),
            Metric::Recall => Some(r.recall),
            Metric::F1 => Some(r.f1),
            Metric::Auc => r.auc,
        }
    }))
}

/// Within-period, between-period and relative change for each metric.
pub fn temporal_table(result: &TemporalResult) -> String {
    let mut head = vec!["Model".to_string()];
    let mut sub = vec!["Train/Test:".to_string()];
    for m in Metric::ALL {
        head.extend([m.label().to_string(), String::new(), String::new()]);
        sub.extend([result.within_label.clone(), result.between_label.clone(), "Δ".into()]);
    }
    let mut lines = vec![Line::Rule('='), Line::Cells(head), Line::Cells(sub), Line::Rule('-')];
    let models: Vec<String> = result.within.models.iter().map(|m| m.model.clone()).collect();
    lines.extend(grouped(&models, |i| {
        let (w, b, d) = (&result.within.models[i], &result.between.models[i], &result.delta[i]);
        let mut r = vec![display_name(&w.model)];
        for m in Metric::ALL {
            r.push(number(w.value(m)));
            r.push(number(b.value(m)));
            r.push(format_delta(d.change.get(&m).copied().flatten()));
        }
        r
    }));
    lines.push(Line::Rule('='));
    grid(&lines)
}

/// Spearman correlations of model error with the annotations.
pub fn agreement_table(rows: &[AgreementReport]) -> String {
    let mut lines = vec![
        Line::Rule('='),
        Line::Cells(
            ["Model", "mean annotation", "certainty", "disagreement"]
                .map(String::from)
                .to_vec(),
        ),
        Line::Rule('-'),
    ];
    let models: Vec<String> = rows.iter().map(|r| r.model.clone()).collect();
    lines.extend(grouped(&models, |i| {
        let r = &rows[i];
        vec![
            display_name(&r.model),
            number(r.mean_annotation),
            number(r.certainty),
            number(r.disagreement),
        ]
    }));
    lines.push(Line::Rule('='));
    grid(&lines)
}
