//! Experiment specifications and the reproducible report envelope.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{read_jsonl_file, AnnotationRecord};
use crate::eval::{AnnotationScale, BootstrapConfig};
use crate::models::{ModelKind, ModelSpec};

use super::data::{Dataset, DatasetFingerprint};
use super::run::{AgreementResult, ComparisonResult, DomainResult, Runner, TemporalResult, TopicResult};
use super::tables;
use super::ExperimentError;

/// Package version plus `git describe` output when built from a checkout.
pub const VERSION: &str = env!("CONTROVERSY_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[serde(alias = "comparison")]
    BaselineComparison,
    Temporal,
    #[serde(alias = "topic")]
    TopicCv,
    Domain,
    Agreement,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Option<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
    }
}

/// Documents in JSONL, optionally with a JSON array of splits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataRef {
    pub documents: PathBuf,
    #[serde(default)]
    pub splits: Option<PathBuf>,
    #[serde(default)]
    pub name: Option<String>,
}

fn all_models() -> Vec<ModelKind> {
    ModelKind::ALL.to_vec()
}

fn ten() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Training data; for `temporal` the current (test) period.
    pub dataset: DataRef,
    /// Earlier-period training data for `temporal`.
    #[serde(default)]
    pub reference: Option<DataRef>,
    /// External test pages for `baseline-comparison` and `agreement`.
    #[serde(default)]
    pub external: Option<DataRef>,
    /// Annotation JSONL (`{"id", "scores"}`) for `agreement`.
    #[serde(default)]
    pub annotations: Option<PathBuf>,
    #[serde(default = "all_models")]
    pub models: Vec<ModelKind>,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    #[serde(default)]
    pub scale: AnnotationScale,
    #[serde(default = "ten")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub concurrent: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?;
        let mut spec: ExperimentSpec =
            serde_json::from_str(&text).map_err(|e| ExperimentError::Format(format!("{}: {e}", path.display())))?;
        spec.resolve(path.parent().unwrap_or(Path::new(".")));
        Ok(spec)
    }

    /// Makes relative paths relative to `base`.
    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for r in [Some(&mut self.dataset), self.reference.as_mut(), self.external.as_mut()]
            .into_iter()
            .flatten()
        {
            fix(&mut r.documents);
            if let Some(s) = r.splits.as_mut() {
                fix(s);
            }
        }
        if let Some(a) = self.annotations.as_mut() {
            fix(a);
        }
        if let Some(e) = self.model.embeddings.as_mut() {
            fix(e);
        }
        if let Some(o) = self.output.as_mut() {
            fix(o);
        }
    }

    fn required<'a, T>(&self, v: &'a Option<T>, what: &str) -> Result<&'a T, ExperimentError> {
        let kind = serde_json::to_value(self.kind)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        v.as_ref()
            .ok_or_else(|| ExperimentError::Usage(format!("{kind} experiment needs `{what}`")))
    }

    /// Every referenced path must exist before anything runs.
    pub fn check_paths(&self) -> Result<(), ExperimentError> {
        let mut paths: Vec<&Path> = Vec::new();
        for r in [Some(&self.dataset), self.reference.as_ref(), self.external.as_ref()]
            .into_iter()
            .flatten()
        {
            paths.push(&r.documents);
            paths.extend(r.splits.as_deref());
        }
        paths.extend(self.annotations.as_deref());
        paths.extend(self.model.embeddings.as_deref());
        match paths.into_iter().find(|p| !p.exists()) {
            Some(p) => Err(ExperimentError::Usage(format!("{} does not exist", p.display()))),
            None => Ok(()),
        }
    }

    /// SHA-256 of everything that shapes results except file locations.
    pub fn config_hash(&self) -> String {
        let mut model = self.model.clone();
        model.embeddings = model
            .embeddings
            .map(|p| PathBuf::from(p.file_name().unwrap_or_default()));
        let canonical = serde_json::json!({
            "kind": self.kind,
            "models": self.models,
            "model": model,
            "bootstrap": self.bootstrap,
            "scale": self.scale,
            "folds": self.folds,
            "seed": self.seed,
        });
        format!("{:x}", Sha256::digest(canonical.to_string().as_bytes()))
    }

    pub fn runner(&self) -> Runner {
        Runner {
            models: self.models.clone(),
            model: self.model.clone(),
            bootstrap: self.bootstrap,
            seed: self.seed,
            concurrent: self.concurrent,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentResult {
    BaselineComparison(ComparisonResult),
    Temporal(TemporalResult),
    TopicCv(TopicResult),
    Domain(DomainResult),
    Agreement(AgreementResult),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub config_hash: String,
    pub datasets: Vec<DatasetFingerprint>,
    pub result: ExperimentResult,
}

fn load(r: &DataRef, default_name: &str) -> Result<Dataset, ExperimentError> {
    let name = r.name.clone().unwrap_or_else(|| default_name.to_string());
    Dataset::load(&name, &r.documents, r.splits.as_deref())
}

/// Loads the referenced data, runs the experiment and wraps the result.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport, ExperimentError> {
    spec.check_paths()?;
    let runner = spec.runner();
    let dataset = load(&spec.dataset, "dataset")?;
    let mut datasets = vec![dataset.fingerprint()];
    let result = match spec.kind {
        ExperimentKind::BaselineComparison => {
            let external = load(spec.required(&spec.external, "external")?, "external")?;
            datasets.push(external.fingerprint());
            ExperimentResult::BaselineComparison(runner.baseline_comparison(&dataset, &external)?)
        }
        ExperimentKind::Temporal => {
            let reference = load(spec.required(&spec.reference, "reference")?, "reference")?;
            datasets.push(reference.fingerprint());
            ExperimentResult::Temporal(runner.temporal(&dataset, &reference)?)
        }
        ExperimentKind::TopicCv => ExperimentResult::TopicCv(runner.topic_cv(&dataset, spec.folds)?),
        ExperimentKind::Domain => ExperimentResult::Domain(runner.domain(&dataset)?),
        ExperimentKind::Agreement => {
            let external = load(spec.required(&spec.external, "external")?, "external")?;
            let annotations: Vec<AnnotationRecord> = read_jsonl_file(spec.required(&spec.annotations, "annotations")?)?;
            datasets.push(external.fingerprint());
            ExperimentResult::Agreement(runner.agreement(&dataset, &external, &annotations, &spec.scale)?)
        }
    };
    Ok(ExperimentReport {
        version: VERSION.to_string(),
        kind: spec.kind,
        seed: spec.seed,
        config_hash: spec.config_hash(),
        datasets,
        result,
    })
}

pub fn load_report(path: &Path) -> Result<ExperimentReport, ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::Format(format!("{}: {e}", path.display())))
}

impl ExperimentReport {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports contain only finite numbers and string keys");
        s.push('\n');
        s
    }

    /// Caption plus table in the experiment's layout.
    pub fn render_table(&self) -> String {
        let (caption, table) = match &self.result {
            ExperimentResult::BaselineComparison(r) => (
                format!(
                    "Comparison on an external test set (n={}, trained on {} pages).",
                    r.test_size, r.train_size
                ),
                tables::metric_table(&r.eval),
            ),
            ExperimentResult::Temporal(r) => (
                format!(
                    "Temporal stability (n={}). {} trains and tests on one period; {} trains on the earlier period.",
                    r.test_size, r.within_label, r.between_label
                ),
                tables::temporal_table(r),
            ),
            ExperimentResult::TopicCv(r) => (
                format!(
                    "Cross-topic stability. Metrics are averaged across {} leave-one-out topic folds.",
                    r.k
                ),
                tables::topic_table(&r.averaged),
            ),
            ExperimentResult::Domain(r) => (
                format!(
                    "Cross-domain stability. Trained on {} Wikipedia pages, tested on {} general web pages.",
                    r.train_size, r.test_size
                ),
                tables::metric_table(&r.eval),
            ),
            ExperimentResult::Agreement(r) => (
                format!(
                    "Spearman correlations of estimated probability distance from true label (N={}).",
                    r.n
                ),
                tables::agreement_table(&r.rows),
            ),
        };
        format!("{caption}\n{table}")
    }

    /// Writes `report.json` and `report.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), ExperimentError> {
        let io = |e: std::io::Error| ExperimentError::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join("report.json"), self.to_json()).map_err(io)?;
        std::fs::write(dir.join("report.txt"), self.render_table()).map_err(io)?;
        Ok(())
    }
}
