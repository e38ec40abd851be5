mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use chrono::{TimeZone, Utc};
use common::{crawl_oracle, eval_oracle, tables};
use controversy_core::corpus::{
    read_jsonl_file, write_jsonl_file, AnnotationRecord, Document, Label, Source, SplitName,
};
use controversy_core::eval::{auc, bootstrap_ci, prf, spearman, BootstrapConfig, Metric, PredictionSet};
use controversy_core::experiments::synthetic::{
    domain_corpus, drift_corpus, separable_corpus, topic_corpus, DomainParams, DriftParams, SeparableParams,
    TopicParams,
};
use controversy_core::experiments::{
    run_experiment, DataRef, Dataset, ExperimentKind, ExperimentReport, ExperimentSpec, Runner,
};
use controversy_core::models::{
    cnn_logits, fit, han_forward, Classifier, CnnConfig, CnnModel, HanConfig, HanModel, ModelKind, ModelSpec,
    TrainConfig,
};
use controversy_core::tensor::{grad_check, Mode, ParamSet};
use controversy_core::text::{
    load_embeddings, write_w2v_binary, EmbeddingFormat, EmbeddingTable, EncodedDocument, Vocabulary,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check<'a> = Box<dyn FnOnce() -> Outcome + 'a>;

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn report_line(line: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").unwrap();
    out.flush().unwrap();
}

fn vocab(n: usize) -> Vocabulary {
    Vocabulary::from_tokens((0..n).map(|i| format!("w{i}")))
}

fn parameter_count(params: &ParamSet<f64>) -> usize {
    params.entries().iter().map(|e| e.value.data().len()).sum()
}

/// Predicted/actual vectors whose confusion table has the given cells.
fn confusion(tp: usize, fp: usize, fn_: usize, tn: usize) -> (Vec<bool>, Vec<bool>) {
    let mut predicted = Vec::new();
    let mut actual = Vec::new();
    for (n, p, a) in [
        (tp, true, true),
        (fp, true, false),
        (fn_, false, true),
        (tn, false, false),
    ] {
        predicted.extend(std::iter::repeat_n(p, n));
        actual.extend(std::iter::repeat_n(a, n));
    }
    (predicted, actual)
}

fn criterion_1() -> Outcome {
    let mut notes = Vec::new();
    for (model, precision, recall, f1) in [("CNN", 0.627, 0.840, 0.718), ("HAN", 0.632, 0.745, 0.684)] {
        let tp = 100_000usize;
        let fp = (tp as f64 * (1.0 / precision - 1.0)).round() as usize;
        let fn_ = (tp as f64 * (1.0 / recall - 1.0)).round() as usize;
        let (predicted, actual) = confusion(tp, fp, fn_, 50_000);
        let got = prf(&predicted, &actual).map_err(|e| e.to_string())?;
        ensure(
            (got.precision - precision).abs() < 5e-4 && (got.recall - recall).abs() < 5e-4,
            || format!("{model}: reconstructed P/R {:.4}/{:.4}", got.precision, got.recall),
        )?;
        ensure((got.f1 - f1).abs() <= 1e-3, || {
            format!("{model}: F1 {:.4}, expected {f1}", got.f1)
        })?;
        notes.push(format!("{model} F1 {:.4}", got.f1));
    }
    Ok(notes.join(", "))
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut sizes = (0, 0);
    let sentences = vec![vec![2, 3, 4], vec![5, 6, 7, 3]];
    let flat: Vec<usize> = sentences.concat();
    for seed in 0..5u64 {
        let table = || EmbeddingTable::random(vocab(8), 3, &mut ChaCha8Rng::seed_from_u64(seed));
        let label = (seed % 2) as usize;

        let cnn_config = CnnConfig {
            windows: vec![2, 3],
            filters: 3,
            dropout: 0.5,
        };
        let cnn =
            CnnModel::new(cnn_config, table(), &mut ChaCha8Rng::seed_from_u64(seed + 1)).map_err(|e| e.to_string())?;
        let params = cnn.params.cast::<f64>();
        sizes.0 = parameter_count(&params);
        ensure(sizes.0 <= 200, || format!("CNN toy graph has {} parameters", sizes.0))?;
        let report = grad_check(
            &params,
            |g| {
                let mut drop = ChaCha8Rng::seed_from_u64(seed);
                let logits = cnn_logits(g, &cnn.ids, &flat, 0.5, Mode::Train, &mut drop)?;
                let ce = g.softmax_cross_entropy(logits, label)?;
                let w = g.param(cnn.ids.dense_w);
                let sq = g.sum_squares(w);
                let reg = g.scale(sq, 1e-3);
                g.add(ce, reg)
            },
            1e-6,
        )
        .map_err(|e| e.to_string())?;
        ensure(report.passes(1e-4), || format!("CNN seed {seed}: {:?}", report.params))?;
        worst = worst.max(report.max_error());

        let han = HanModel::new(
            HanConfig {
                hidden: 1,
                dropout: 0.5,
            },
            table(),
            &mut ChaCha8Rng::seed_from_u64(seed + 1),
        )
        .map_err(|e| e.to_string())?;
        let mut params = han.params.cast::<f64>();
        for id in params.ids().collect::<Vec<_>>() {
            params.get_mut(id).data_mut().iter_mut().for_each(|v| *v *= 5.0);
        }
        sizes.1 = parameter_count(&params);
        ensure(sizes.1 <= 200, || format!("HAN toy graph has {} parameters", sizes.1))?;
        let report = grad_check(
            &params,
            |g| {
                let mut drop = ChaCha8Rng::seed_from_u64(seed);
                let out = han_forward(g, &han.ids, &sentences, 0.5, Mode::Train, &mut drop)?;
                g.softmax_cross_entropy(out.logits, label)
            },
            1e-4,
        )
        .map_err(|e| e.to_string())?;
        ensure(report.passes(1e-4), || format!("HAN seed {seed}: {:?}", report.params))?;
        worst = worst.max(report.max_error());
    }
    Ok(format!(
        "5 seeds, CNN {} / HAN {} parameters, max relative error {worst:.1e}",
        sizes.0, sizes.1
    ))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let table = EmbeddingTable::random(vocab(60), 16, &mut rng);
    let han = HanModel::new(
        HanConfig {
            hidden: 50,
            dropout: 0.5,
        },
        table,
        &mut rng,
    )
    .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut singletons = 0;
    for i in 0..100 {
        let sentences: Vec<Vec<usize>> = (0..rng.gen_range(1..=6))
            .map(|_| (0..rng.gen_range(1..=12)).map(|_| rng.gen_range(1..60)).collect())
            .collect();
        let doc = EncodedDocument {
            id: format!("r{i}"),
            length: sentences.iter().map(Vec::len).sum(),
            tokens: sentences.concat(),
            sentences,
            empty: false,
        };
        let p = han
            .predict_with_attention(&doc)
            .map_err(|e| e.to_string())?
            .ok_or("no prediction")?;
        for a in p.word_attention.iter().chain([&p.sentence_attention]) {
            worst = worst.max((a.iter().sum::<f64>() - 1.0).abs());
            if a.len() == 1 {
                singletons += 1;
                ensure(a[0] == 1.0, || format!("singleton attention {} in document {i}", a[0]))?;
            }
        }
    }
    ensure(worst <= 1e-6, || format!("attention sums deviate by {worst:e}"))?;
    Ok(format!(
        "100 documents, max |sum - 1| {worst:.1e}, {singletons} singleton distributions exactly 1"
    ))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let metrics = [
        (Metric::Precision, eval_oracle::OracleMetric::Precision),
        (Metric::Recall, eval_oracle::OracleMetric::Recall),
        (Metric::F1, eval_oracle::OracleMetric::F1),
        (Metric::Auc, eval_oracle::OracleMetric::Auc),
    ];
    let mut intervals = 0;
    for case in 0..1000u64 {
        let (scores, predicted, actual) = eval_oracle::random_instance(&mut rng, 200);
        let p = prf(&predicted, &actual).map_err(|e| e.to_string())?;
        ensure(
            (p.precision, p.recall, p.f1) == eval_oracle::prf(&predicted, &actual),
            || format!("prf differs on instance {case}"),
        )?;
        let full_auc = auc(&scores, &actual).ok();
        ensure(full_auc == eval_oracle::auc(&scores, &actual), || {
            format!("auc differs on instance {case}")
        })?;
        if scores.len() >= 3 {
            let other: Vec<f64> = (0..scores.len()).map(|_| f64::from(rng.gen_range(0..7))).collect();
            let got = spearman(&scores, &other).map_err(|e| e.to_string())?;
            ensure(got == eval_oracle::spearman(&scores, &other), || {
                format!("spearman differs on instance {case}")
            })?;
        }
        let ids = (0..scores.len()).map(|i| i.to_string()).collect();
        let set = PredictionSet::new("m", "t", ids, scores.clone(), predicted.clone(), actual.clone());
        let config = BootstrapConfig {
            resamples: 50,
            level: 0.95,
            seed: case,
            workers: 1,
        };
        for (metric, oracle) in metrics {
            let got = bootstrap_ci(&set, metric, &config).ok().map(|i| (i.lower, i.upper));
            let want = if metric == Metric::Auc && full_auc.is_none() {
                None
            } else {
                eval_oracle::bootstrap(oracle, &scores, &predicted, &actual, 50, 0.95, case)
            };
            ensure(got == want, || {
                format!("bootstrap {metric:?} differs on instance {case}: {got:?} vs {want:?}")
            })?;
            intervals += usize::from(got.is_some());
        }
    }
    Ok(format!(
        "1000 instances exact, {intervals} identical bootstrap intervals"
    ))
}

fn neural_spec(dim: usize) -> ModelSpec {
    ModelSpec {
        embedding_dim: dim,
        train: TrainConfig {
            epochs: 5,
            batch_size: 64,
            learning_rate: 1e-3,
            l2: 1e-3,
            ..TrainConfig::default()
        },
        ..ModelSpec::default()
    }
}

fn split_docs(d: &Dataset, name: SplitName) -> Vec<&Document> {
    d.splits
        .iter()
        .find(|s| s.name == name)
        .map(|s| s.select(&d.documents))
        .unwrap_or_default()
}

fn criterion_5() -> Outcome {
    let data = separable_corpus(&SeparableParams::default(), 5);
    let train = split_docs(&data, SplitName::Train);
    let validation = split_docs(&data, SplitName::Validation);
    let test = split_docs(&data, SplitName::Test);
    let spec = neural_spec(50);
    ensure(spec.cnn.dropout == 0.5 && spec.han.dropout == 0.5, || {
        "dropout is not 0.5".into()
    })?;
    let mut notes = Vec::new();
    for kind in [ModelKind::Cnn, ModelKind::Han] {
        let started = Instant::now();
        let (model, report) = fit(kind, &spec, &train, &validation).map_err(|e| e.to_string())?;
        let epochs = report.log.as_ref().map_or(0, |l| l.epochs.len());
        ensure(epochs <= 5, || format!("{kind:?} ran {epochs} epochs"))?;
        let set = model
            .prediction_set(kind.name(), "test", &test)
            .map_err(|e| e.to_string())?;
        let f1 = prf(&set.predicted, &set.actual).map_err(|e| e.to_string())?.f1;
        ensure(f1 >= 0.95, || format!("{} held-out F1 {f1:.3}", kind.display()))?;
        notes.push(format!(
            "{} F1 {f1:.3} after {epochs} epochs in {:.0}s",
            kind.display(),
            started.elapsed().as_secs_f64()
        ));
    }
    Ok(format!("{} documents; {}", data.documents.len(), notes.join(", ")))
}

fn criterion_6() -> Outcome {
    let params = DriftParams::default();
    let drift = drift_corpus(&params, 11);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("vectors.bin");
    write_w2v_binary(
        std::fs::File::create(&path).map_err(|e| e.to_string())?,
        &drift.embeddings,
    )
    .map_err(|e| e.to_string())?;
    let runner = Runner {
        models: ModelKind::ALL.to_vec(),
        model: ModelSpec {
            embeddings: Some(path),
            vocabulary_from_embeddings: true,
            ..neural_spec(params.dim)
        },
        bootstrap: BootstrapConfig {
            resamples: 100,
            ..BootstrapConfig::default()
        },
        seed: 6,
        concurrent: false,
    };
    let r = runner.temporal(&drift.new, &drift.old).map_err(|e| e.to_string())?;
    let drop = |model: &str| -> Result<f64, String> {
        let row = r
            .delta
            .iter()
            .find(|d| d.model == model)
            .ok_or(format!("no {model} row"))?;
        row.change[&Metric::Recall]
            .map(|c| -c)
            .ok_or(format!("{model} recall change undefined"))
    };
    let lexical = [drop("tfidf-margin")?, drop("lm")?];
    let neural = [drop("cnn")?, drop("han")?];
    let summary = format!(
        "recall drop TfIdf {:.0}%, LM {:.0}% vs CNN {:.0}%, HAN {:.0}%",
        100.0 * lexical[0],
        100.0 * lexical[1],
        100.0 * neural[0],
        100.0 * neural[1]
    );
    let min_lexical = lexical.iter().copied().fold(f64::INFINITY, f64::min);
    let max_neural = neural.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ensure(min_lexical > max_neural, || summary.clone())?;
    Ok(summary)
}

fn criterion_7() -> Outcome {
    let started = Instant::now();
    for seed in 0..20 {
        crawl_oracle::verify_random_graph(700 + seed)?;
    }
    Ok(format!(
        "20 random fixture graphs in {:.1}s",
        started.elapsed().as_secs_f64()
    ))
}

fn write_dataset(dir: &Path, name: &str, d: &Dataset) -> Result<DataRef, String> {
    let documents = dir.join(format!("{name}.jsonl"));
    let splits = dir.join(format!("{name}.splits.json"));
    write_jsonl_file(&documents, &d.documents).map_err(|e| e.to_string())?;
    std::fs::write(&splits, serde_json::to_string(&d.splits).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    Ok(DataRef {
        documents,
        splits: Some(splits),
        name: Some(name.into()),
    })
}

fn small_model_spec() -> ModelSpec {
    ModelSpec {
        embedding_dim: 16,
        cnn: CnnConfig {
            filters: 8,
            ..CnnConfig::default()
        },
        han: HanConfig {
            hidden: 8,
            dropout: 0.5,
        },
        train: TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        },
        ..ModelSpec::default()
    }
}

/// One spec per experiment kind over small synthetic corpora.
fn experiment_specs(dir: &Path) -> Result<Vec<ExperimentSpec>, String> {
    let separable = |documents, seed| {
        separable_corpus(
            &SeparableParams {
                documents,
                ..SeparableParams::default()
            },
            seed,
        )
    };
    let train = write_dataset(dir, "train", &separable(300, 1))?;
    let external_data = separable(120, 2);
    let external = write_dataset(dir, "external", &external_data)?;

    let drift_params = DriftParams {
        documents_per_year: 300,
        dim: 16,
        ..DriftParams::default()
    };
    let drift = drift_corpus(&drift_params, 3);
    let vectors = dir.join("vectors.bin");
    write_w2v_binary(
        std::fs::File::create(&vectors).map_err(|e| e.to_string())?,
        &drift.embeddings,
    )
    .map_err(|e| e.to_string())?;
    let new = write_dataset(dir, "new", &drift.new)?;
    let old = write_dataset(dir, "old", &drift.old)?;

    let topic_params = TopicParams {
        per_topic: 30,
        negatives: 90,
        ..TopicParams::default()
    };
    let topics = write_dataset(dir, "topics", &topic_corpus(&topic_params, 4))?;
    let domain_params = DomainParams {
        wiki_documents: 300,
        web_documents: 100,
        ..DomainParams::default()
    };
    let domain = write_dataset(dir, "domain", &domain_corpus(&domain_params, 5))?;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let annotations: Vec<AnnotationRecord> = external_data
        .documents
        .iter()
        .map(|d| AnnotationRecord {
            id: d.id.clone(),
            scores: (0..rng.gen_range(3..=5))
                .map(|_| f64::from(rng.gen_range(1..=4)))
                .collect(),
        })
        .collect();
    let annotation_path = dir.join("annotations.jsonl");
    write_jsonl_file(&annotation_path, &annotations).map_err(|e| e.to_string())?;

    let base = |kind, dataset| ExperimentSpec {
        kind,
        dataset,
        reference: None,
        external: None,
        annotations: None,
        models: ModelKind::ALL.to_vec(),
        model: small_model_spec(),
        bootstrap: BootstrapConfig {
            resamples: 200,
            ..BootstrapConfig::default()
        },
        scale: Default::default(),
        folds: 3,
        seed: 8,
        concurrent: false,
        output: None,
    };
    let mut temporal = base(ExperimentKind::Temporal, new);
    temporal.reference = Some(old);
    temporal.model.embeddings = Some(vectors);
    temporal.model.vocabulary_from_embeddings = true;
    let mut comparison = base(ExperimentKind::BaselineComparison, train.clone());
    comparison.external = Some(external.clone());
    let mut agreement = base(ExperimentKind::Agreement, train);
    agreement.external = Some(external);
    agreement.annotations = Some(annotation_path);
    Ok(vec![
        comparison,
        temporal,
        base(ExperimentKind::TopicCv, topics),
        base(ExperimentKind::Domain, domain),
        agreement,
    ])
}

fn criterion_8(reports: &mut Vec<ExperimentReport>) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut bytes = 0;
    for spec in experiment_specs(dir.path())? {
        let first = run_experiment(&spec).map_err(|e| e.to_string())?;
        let second = run_experiment(&spec).map_err(|e| e.to_string())?;
        ensure(first.to_json() == second.to_json(), || {
            format!("{:?} report differs between runs", spec.kind)
        })?;
        let out = dir.path().join(format!("{:?}", spec.kind));
        first.write(&out).map_err(|e| e.to_string())?;
        let written = std::fs::read(out.join("report.json")).map_err(|e| e.to_string())?;
        ensure(written == second.to_json().into_bytes(), || {
            format!("{:?} report file differs", spec.kind)
        })?;
        bytes += written.len();
        reports.push(first);
    }
    Ok(format!(
        "5 experiment kinds, all 4 models, {bytes} report bytes reproduced"
    ))
}

fn sample_documents() -> Vec<Document> {
    let texts = [
        "Plain text.",
        "Ünïcödé “quotes” and\ttabs\nnew lines",
        "",
        "emoji 🙂 and \\ backslash \"quote\"",
    ];
    (0..40)
        .map(|i| Document {
            id: format!("{i:016x}"),
            url: format!("https://example.org/page_{i}?q=a&b=c"),
            title: format!("Title {i}"),
            text: texts[i % texts.len()].repeat(1 + i % 3),
            label: Label::from_positive(i % 3 == 0),
            source: if i % 2 == 0 {
                Source::Wikipedia
            } else {
                Source::GeneralWeb
            },
            hop: (i % 3) as u8,
            topic: (i % 4 == 0).then(|| format!("Topic {}", i % 5)),
            snapshot_year: if i % 2 == 0 { 2018 } else { 2009 },
            fetched_at: Utc
                .timestamp_opt(1_500_000_000 + i as i64 * 7919, (i as u32) * 1_000_123)
                .unwrap(),
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (words, dim) = (50, 7);
    let mut original = format!("{words} {dim}\n").into_bytes();
    for w in 0..words {
        original.extend_from_slice(format!("word{w}").as_bytes());
        original.push(b' ');
        for _ in 0..dim {
            original.extend_from_slice(&rng.gen_range(-5f32..5.0).to_le_bytes());
        }
        original.push(b'\n');
    }
    let path = dir.path().join("vectors.bin");
    std::fs::write(&path, &original).map_err(|e| e.to_string())?;
    let vocab = Vocabulary::from_tokens((0..words).map(|w| format!("word{w}")));
    let loaded = load_embeddings(&path, &vocab, dim, EmbeddingFormat::Binary, &mut rng).map_err(|e| e.to_string())?;
    let mut written = Vec::new();
    write_w2v_binary(&mut written, &loaded.table).map_err(|e| e.to_string())?;
    ensure(written == original, || {
        "w2v binary bytes differ after a round trip".into()
    })?;

    let data = separable_corpus(
        &SeparableParams {
            documents: 200,
            ..SeparableParams::default()
        },
        9,
    );
    let train = split_docs(&data, SplitName::Train);
    let validation = split_docs(&data, SplitName::Validation);
    let test = split_docs(&data, SplitName::Test);
    for kind in ModelKind::ALL {
        let (model, _) = fit(kind, &small_model_spec(), &train, &validation).map_err(|e| e.to_string())?;
        let file = dir.path().join(format!("{}.ctrv", kind.name()));
        model.save(&file).map_err(|e| e.to_string())?;
        let back = Classifier::load(&file).map_err(|e| e.to_string())?;
        let a = model.predict_documents(&test).map_err(|e| e.to_string())?;
        let b = back.predict_documents(&test).map_err(|e| e.to_string())?;
        ensure(a.len() == b.len(), || format!("{kind:?}: prediction count differs"))?;
        for (x, y) in a.iter().zip(&b) {
            ensure(x.score.to_bits() == y.score.to_bits() && x.label == y.label, || {
                format!("{kind:?}: {} vs {} after reload", x.score, y.score)
            })?;
        }
    }

    let docs = sample_documents();
    let jsonl = dir.path().join("documents.jsonl");
    write_jsonl_file(&jsonl, &docs).map_err(|e| e.to_string())?;
    let back: Vec<Document> = read_jsonl_file(&jsonl).map_err(|e| e.to_string())?;
    ensure(back == docs, || "documents differ after a JSONL round trip".into())?;
    let again = dir.path().join("again.jsonl");
    write_jsonl_file(&again, &back).map_err(|e| e.to_string())?;
    ensure(std::fs::read(&jsonl).ok() == std::fs::read(&again).ok(), || {
        "JSONL bytes differ".into()
    })?;
    Ok(format!(
        "w2v {} bytes, 4 checkpoints bit-identical, {} documents field-exact",
        original.len(),
        docs.len()
    ))
}

fn criterion_10(reports: &[ExperimentReport]) -> Outcome {
    for (name, rendered) in tables::all() {
        let golden = std::fs::read_to_string(tables::golden_path(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(rendered == golden, || {
            format!("{name} table differs from its golden file")
        })?;
    }
    let golden_of = |kind: ExperimentKind| match kind {
        ExperimentKind::Temporal => "temporal",
        ExperimentKind::TopicCv => "topics",
        ExperimentKind::Agreement => "agreement",
        ExperimentKind::Domain | ExperimentKind::BaselineComparison => "domain",
    };
    for report in reports {
        let name = golden_of(report.kind);
        let golden = std::fs::read_to_string(tables::golden_path(name)).map_err(|e| e.to_string())?;
        let rendered = report.render_table();
        let table: String = rendered.lines().skip(1).map(|l| format!("{l}\n")).collect();
        let header_rows = |t: &str| -> Vec<Vec<String>> {
            t.lines()
                .take_while(|l| !l.starts_with('-'))
                .filter(|l| !tables::is_rule(l))
                .map(|l| {
                    tables::cells(l)
                        .into_iter()
                        .map(|c| {
                            if c.starts_with('\'') {
                                "'yy/'yy".into()
                            } else {
                                c.to_string()
                            }
                        })
                        .collect()
                })
                .collect()
        };
        ensure(header_rows(&table) == header_rows(&golden), || {
            format!("{:?} header differs from {name} golden:\n{table}", report.kind)
        })?;
        ensure(tables::row_names(&table) == tables::row_names(&golden), || {
            format!("{:?} rows differ from {name} golden:\n{table}", report.kind)
        })?;
    }
    Ok(format!(
        "5 golden layouts match; {} experiment reports share their column sets",
        reports.len()
    ))
}

#[test]
fn acceptance() {
    report_line("");
    let mut reports = Vec::new();
    let criteria: Vec<(&str, Check)> = vec![
        ("metric formula cross-check", Box::new(criterion_1)),
        ("gradient suite", Box::new(criterion_2)),
        ("attention invariants", Box::new(criterion_3)),
        ("oracle equivalence", Box::new(criterion_4)),
        ("end-to-end learnability", Box::new(criterion_5)),
        ("robustness ordering", Box::new(criterion_6)),
        ("crawler correctness", Box::new(criterion_7)),
        ("determinism", Box::new(|| criterion_8(&mut reports))),
    ];
    let mut failed = Vec::new();
    let mut run = |n: usize, name: &str, f: Check| {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => report_line(&format!("criterion {n:>2} PASS  {name}: {detail} [{secs:.1}s]")),
            Err(e) => {
                report_line(&format!("criterion {n:>2} FAIL  {name}: {e} [{secs:.1}s]"));
                failed.push(n);
            }
        }
    };
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        run(i + 1, name, f);
    }
    run(9, "format fidelity", Box::new(criterion_9));
    run(10, "table shapes", Box::new(|| criterion_10(&reports)));
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
