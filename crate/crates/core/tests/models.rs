use controversy_core::models::{
    attend, cnn_input, cnn_logits, han_forward, train_neural, AttentionIds, CnnConfig, CnnModel, HanConfig, HanModel,
    TrainConfig,
};
use controversy_core::tensor::{grad_check, Graph, Mode, ParamSet, Tensor};
use controversy_core::text::{encode_document, EmbeddingTable, EncodeLimits, EncodedDocument, Vocabulary};
use rand::rngs::mock::StepRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vocab(n: usize) -> Vocabulary {
    Vocabulary::from_tokens((0..n).map(|i| format!("w{i}")))
}

fn table(n: usize, dim: usize, seed: u64) -> EmbeddingTable {
    EmbeddingTable::random(vocab(n), dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn small_cnn(seed: u64, windows: Vec<usize>, filters: usize, dim: usize) -> CnnModel {
    let config = CnnConfig {
        windows,
        filters,
        dropout: 0.5,
    };
    CnnModel::new(config, table(8, dim, seed), &mut ChaCha8Rng::seed_from_u64(seed + 1)).unwrap()
}

fn small_han(seed: u64, hidden: usize, dim: usize) -> HanModel {
    let config = HanConfig { hidden, dropout: 0.5 };
    HanModel::new(config, table(8, dim, seed), &mut ChaCha8Rng::seed_from_u64(seed + 1)).unwrap()
}

fn get(params: &ParamSet<f32>, name: &str) -> (Vec<usize>, Vec<f64>) {
    let t = params.get(params.id(name).unwrap());
    (t.shape().to_vec(), t.data().iter().map(|&v| f64::from(v)).collect())
}

fn matvec(w: &(Vec<usize>, Vec<f64>), x: &[f64]) -> Vec<f64> {
    let (rows, cols) = (w.0[0], w.0[1]);
    assert_eq!(cols, x.len());
    (0..rows)
        .map(|r| (0..cols).map(|c| w.1[r * cols + c] * x[c]).sum())
        .collect()
}

fn softmax(v: &[f64]) -> Vec<f64> {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn embed(params: &ParamSet<f32>, name: &str, token: usize) -> Vec<f64> {
    let (shape, data) = get(params, name);
    data[token * shape[1]..(token + 1) * shape[1]].to_vec()
}

fn cnn_oracle(m: &CnnModel, tokens: &[usize]) -> Vec<f64> {
    let p = &m.params;
    let mut features = Vec::new();
    for &h in &m.config.windows {
        let (ws, w) = get(p, &format!("cnn.conv{h}.w"));
        let (_, b) = get(p, &format!("cnn.conv{h}.b"));
        let filters = ws[0];
        let mut best = vec![f64::NEG_INFINITY; filters];
        for t in 0..=tokens.len() - h {
            let window: Vec<f64> = tokens[t..t + h]
                .iter()
                .flat_map(|&k| embed(p, "cnn.embedding", k))
                .collect();
            for f in 0..filters {
                let pre: f64 = (0..window.len()).map(|c| w[f * ws[1] + c] * window[c]).sum::<f64>() + b[f];
                best[f] = best[f].max(pre.max(0.0));
            }
        }
        features.extend(best);
    }
    let mut logits = matvec(&get(p, "cnn.dense.w"), &features);
    let (_, b) = get(p, "cnn.dense.b");
    logits.iter_mut().zip(&b).for_each(|(l, b)| *l += b);
    softmax(&logits)
}

fn gru_oracle(p: &ParamSet<f32>, prefix: &str, xs: &[Vec<f64>], reverse: bool) -> Vec<Vec<f64>> {
    let m = |n: &str| get(p, &format!("{prefix}.{n}"));
    let (wz, wr, wh, uz, ur, uh) = (m("w_z"), m("w_r"), m("w_h"), m("u_z"), m("u_r"), m("u_h"));
    let (bz, br, bh) = (m("b_z").1, m("b_r").1, m("b_h").1);
    let hidden = bz.len();
    let mut h = vec![0.0; hidden];
    let mut out = vec![Vec::new(); xs.len()];
    let order: Vec<usize> = if reverse {
        (0..xs.len()).rev().collect()
    } else {
        (0..xs.len()).collect()
    };
    for t in order {
        let x = &xs[t];
        let (a, b) = (matvec(&wz, x), matvec(&uz, &h));
        let z: Vec<f64> = (0..hidden).map(|i| sigmoid(a[i] + b[i] + bz[i])).collect();
        let (a, b) = (matvec(&wr, x), matvec(&ur, &h));
        let r: Vec<f64> = (0..hidden).map(|i| sigmoid(a[i] + b[i] + br[i])).collect();
        let rh: Vec<f64> = (0..hidden).map(|i| r[i] * h[i]).collect();
        let (a, b) = (matvec(&wh, x), matvec(&uh, &rh));
        let cand: Vec<f64> = (0..hidden).map(|i| (a[i] + b[i] + bh[i]).tanh()).collect();
        h = (0..hidden).map(|i| (1.0 - z[i]) * h[i] + z[i] * cand[i]).collect();
        out[t] = h.clone();
    }
    out
}

fn bi_gru_oracle(p: &ParamSet<f32>, fwd: &str, bwd: &str, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let f = gru_oracle(p, fwd, xs, false);
    let b = gru_oracle(p, bwd, xs, true);
    f.into_iter()
        .zip(b)
        .map(|(mut f, b)| {
            f.extend(b);
            f
        })
        .collect()
}

fn attend_oracle(p: &ParamSet<f32>, prefix: &str, rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let w = get(p, &format!("{prefix}.w"));
    let (_, b) = get(p, &format!("{prefix}.b"));
    let (_, ctx) = get(p, &format!("{prefix}.context"));
    let scores: Vec<f64> = rows
        .iter()
        .map(|r| {
            let u: Vec<f64> = matvec(&w, r).iter().zip(&b).map(|(a, b)| (a + b).tanh()).collect();
            u.iter().zip(&ctx).map(|(a, b)| a * b).sum()
        })
        .collect();
    let alpha = softmax(&scores);
    let dim = rows[0].len();
    let pooled = (0..dim)
        .map(|j| rows.iter().zip(&alpha).map(|(r, a)| a * r[j]).sum())
        .collect();
    (pooled, alpha)
}

struct HanOracle {
    probs: Vec<f64>,
    word_attention: Vec<Vec<f64>>,
    sentence_attention: Vec<f64>,
}

fn han_oracle(m: &HanModel, sentences: &[Vec<usize>]) -> HanOracle {
    let p = &m.params;
    let mut svecs = Vec::new();
    let mut word_attention = Vec::new();
    for s in sentences {
        let xs: Vec<Vec<f64>> = s.iter().map(|&k| embed(p, "han.embedding", k)).collect();
        let ann = bi_gru_oracle(p, "han.word_fwd", "han.word_bwd", &xs);
        let (v, a) = attend_oracle(p, "han.word_att", &ann);
        svecs.push(v);
        word_attention.push(a);
    }
    let ann = bi_gru_oracle(p, "han.sent_fwd", "han.sent_bwd", &svecs);
    let (doc, sentence_attention) = attend_oracle(p, "han.sent_att", &ann);
    let mut logits = matvec(&get(p, "han.dense.w"), &doc);
    let (_, b) = get(p, "han.dense.b");
    logits.iter_mut().zip(&b).for_each(|(l, b)| *l += b);
    HanOracle {
        probs: softmax(&logits),
        word_attention,
        sentence_attention,
    }
}

fn eval_probs(g: &Graph<'_, f32>, logits: controversy_core::tensor::NodeId) -> Vec<f64> {
    softmax(&g.value(logits).data().iter().map(|&v| f64::from(v)).collect::<Vec<_>>())
}

fn random_tokens(rng: &mut ChaCha8Rng, n: usize, vocab: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(2..vocab + 2)).collect()
}

#[test]
fn cnn_matches_scalar_loops() {
    for seed in 0..5 {
        let m = small_cnn(seed, vec![2, 3, 4], 6, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 50);
        let n = 4 + seed as usize * 3;
        let tokens = random_tokens(&mut rng, n, 8);
        let mut g = Graph::new(&m.params);
        let logits = cnn_logits(&mut g, &m.ids, &tokens, 0.5, Mode::Eval, &mut StepRng::new(0, 0)).unwrap();
        let got = eval_probs(&g, logits);
        let want = cnn_oracle(&m, &tokens);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-5, "seed {seed}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn cnn_with_zero_parameters_is_uniform() {
    let mut m = small_cnn(3, vec![2, 3, 4], 4, 5);
    for id in m.params.ids().collect::<Vec<_>>() {
        m.params.get_mut(id).data_mut().iter_mut().for_each(|v| *v = 0.0);
    }
    let doc = encode_document("d", "w1 w2 w3 w4 w5", &vocab(8), EncodeLimits::default());
    assert_eq!(m.probability(&doc).unwrap(), Some(0.5));
}

#[test]
fn unigram_cnn_ignores_token_order() {
    let m = small_cnn(7, vec![1], 5, 4);
    let l = EncodeLimits::default();
    let a = encode_document("a", "w0 w1 w2 w3 w4 w5", &vocab(8), l);
    let b = encode_document("b", "w4 w2 w5 w0 w3 w1", &vocab(8), l);
    let (pa, pb) = (m.probability(&a).unwrap().unwrap(), m.probability(&b).unwrap().unwrap());
    assert!((pa - pb).abs() < 1e-7);
}

#[test]
fn cnn_detects_a_pattern_anywhere() {
    let m = small_cnn(11, vec![2], 5, 4);
    let l = EncodeLimits::default();
    let v = vocab(8);
    let base = "w3 w3 w3 w3 w3 w3";
    let early = encode_document("e", &format!("{base} w0 w1 {base} {base}"), &v, l);
    let late = encode_document("l", &format!("{base} {base} w0 w1 {base}"), &v, l);
    let (pe, pl) = (
        m.probability(&early).unwrap().unwrap(),
        m.probability(&late).unwrap().unwrap(),
    );
    assert!((pe - pl).abs() < 1e-7);
}

#[test]
fn short_documents_are_padded_to_the_widest_window() {
    let doc = encode_document("d", "w1", &vocab(8), EncodeLimits::default());
    assert_eq!(cnn_input(&doc, 4), vec![3, 0, 0, 0]);
    let m = small_cnn(2, vec![2, 3, 4], 4, 5);
    let p = m.probability(&doc).unwrap().unwrap();
    let want = cnn_oracle(&m, &[3, 0, 0, 0]);
    assert!((p - want[1]).abs() < 1e-5);
}

#[test]
fn han_matches_scalar_loops() {
    for seed in 0..5 {
        let m = small_han(seed, 3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 90);
        let sentences: Vec<Vec<usize>> = (0..1 + seed as usize % 3)
            .map(|_| {
                let n = rng.gen_range(1..6);
                random_tokens(&mut rng, n, 5)
            })
            .collect();
        let doc = EncodedDocument {
            id: "d".into(),
            sentences: sentences.clone(),
            tokens: sentences.concat(),
            length: sentences.concat().len(),
            empty: false,
        };
        let got = m.predict_with_attention(&doc).unwrap().unwrap();
        let want = han_oracle(&m, &sentences);
        assert!((got.probability - want.probs[1]).abs() < 1e-5, "seed {seed}");
        for (a, b) in got.sentence_attention.iter().zip(&want.sentence_attention) {
            assert!((a - b).abs() < 1e-5);
        }
        for (ga, wa) in got.word_attention.iter().zip(&want.word_attention) {
            for (a, b) in ga.iter().zip(wa) {
                assert!((a - b).abs() < 1e-5);
            }
        }
    }
}

#[test]
fn han_attention_distributions() {
    let m = small_han(4, 3, 4);
    let single = EncodedDocument {
        id: "s".into(),
        sentences: vec![vec![2]],
        tokens: vec![2],
        length: 1,
        empty: false,
    };
    let p = m.predict_with_attention(&single).unwrap().unwrap();
    assert!((p.word_attention[0][0] - 1.0).abs() < 1e-7);
    assert!((p.sentence_attention[0] - 1.0).abs() < 1e-7);

    let s = vec![2, 3, 4, 5];
    let dup = EncodedDocument {
        id: "d".into(),
        sentences: vec![s.clone(), vec![6, 2], s.clone()],
        tokens: vec![],
        length: 10,
        empty: false,
    };
    let p = m.predict_with_attention(&dup).unwrap().unwrap();
    assert_eq!(p.word_attention[0], p.word_attention[2]);
    for a in p.word_attention.iter().chain([&p.sentence_attention]) {
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!(a.iter().all(|&x| x > 0.0));
    }
}

#[test]
fn saturated_attention_returns_the_selected_row() {
    let rows: [[f64; 3]; 3] = [[0.3, 0.2, 0.5], [-1.0, -2.0, 1.0], [0.7, -0.1, -0.4]];
    for (k, row) in rows.iter().enumerate() {
        let mut ps = ParamSet::<f64>::new();
        let identity: Vec<f64> = (0..9).map(|i| if i % 4 == 0 { 1e3 } else { 0.0 }).collect();
        let ids = AttentionIds {
            proj_w: ps.add("w", Tensor::matrix(3, 3, identity).unwrap()),
            proj_b: ps.add("b", Tensor::vector(vec![0.0; 3]).unwrap()),
            context: ps.add(
                "c",
                Tensor::vector(row.iter().map(|v| 1e3 * v.signum()).collect()).unwrap(),
            ),
        };
        let mut g = Graph::new(&ps);
        let nodes: Vec<_> = rows
            .iter()
            .map(|r| g.input(Tensor::vector(r.to_vec()).unwrap()))
            .collect();
        let (pooled, alpha) = attend(&mut g, &nodes, &ids).unwrap();
        let mut expected = vec![0.0; 3];
        expected[k] = 1.0;
        assert_eq!(g.value(alpha).data(), expected.as_slice());
        assert_eq!(g.value(pooled).data(), row.as_slice());
    }
}

#[test]
fn cnn_gradients_match_finite_differences() {
    for seed in 0..5 {
        let m = small_cnn(seed, vec![2, 3], 3, 3);
        let params = m.params.cast::<f64>();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 7);
        let tokens = random_tokens(&mut rng, 6, 8);
        let label = (seed % 2) as usize;
        let report = grad_check(
            &params,
            |g| {
                let mut drop = ChaCha8Rng::seed_from_u64(seed);
                let logits = cnn_logits(g, &m.ids, &tokens, 0.5, Mode::Train, &mut drop)?;
                let ce = g.softmax_cross_entropy(logits, label)?;
                let w = g.param(m.ids.dense_w);
                let sq = g.sum_squares(w);
                let reg = g.scale(sq, 1e-3);
                g.add(ce, reg)
            },
            1e-6,
        )
        .unwrap();
        assert!(report.passes(1e-4), "seed {seed}: {:?}", report.params);
    }
}

#[test]
fn han_gradients_match_finite_differences() {
    for seed in 0..5 {
        let m = small_han(seed, 1, 3);
        // At the ±0.1 init most gradients sit near 1e-10, below finite-difference resolution.
        let mut params = m.params.cast::<f64>();
        for id in params.ids().collect::<Vec<_>>() {
            params.get_mut(id).data_mut().iter_mut().for_each(|v| *v *= 5.0);
        }
        let sentences = vec![vec![2, 3, 4], vec![5, 6], vec![3]];
        let label = (seed % 2) as usize;
        let report = grad_check(
            &params,
            |g| {
                let mut drop = ChaCha8Rng::seed_from_u64(seed);
                let out = han_forward(g, &m.ids, &sentences, 0.5, Mode::Train, &mut drop)?;
                g.softmax_cross_entropy(out.logits, label)
            },
            1e-4,
        )
        .unwrap();
        assert!(report.passes(1e-4), "seed {seed}: {:?}", report.params);
    }
}

fn toy_data(n: usize, seed: u64) -> Vec<(EncodedDocument, bool)> {
    let v = vocab(8);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = i % 2 == 0;
            let marker = if label { "w0" } else { "w1" };
            let mut words: Vec<String> = (0..8).map(|_| format!("w{}", rng.gen_range(2..8))).collect();
            words[rng.gen_range(0..8)] = marker.into();
            (
                encode_document(&format!("{i}"), &words.join(" "), &v, EncodeLimits::default()),
                label,
            )
        })
        .collect()
}

#[test]
fn training_is_reproducible_and_thread_count_changes_only_rounding() {
    let train = toy_data(40, 1);
    let val = toy_data(20, 2);
    let run = |threads: usize| {
        let mut m = small_cnn(5, vec![2, 3], 8, 6);
        let config = TrainConfig {
            epochs: 3,
            batch_size: 8,
            learning_rate: 1e-2,
            threads,
            patience: 10,
            ..TrainConfig::default()
        };
        let log = train_neural(&mut m, &train, &val, &config).unwrap();
        (m, log)
    };
    let (a, la) = run(1);
    let (b, lb) = run(1);
    assert_eq!(la, lb);
    for (x, y) in a.params.entries().iter().zip(b.params.entries()) {
        assert_eq!(x.value, y.value);
    }
    let (c, lc) = run(3);
    assert_eq!(la.best_epoch, lc.best_epoch);
    for (x, y) in a.params.entries().iter().zip(c.params.entries()) {
        for (p, q) in x.value.data().iter().zip(y.value.data()) {
            assert!((p - q).abs() < 1e-4, "{}: {p} vs {q}", x.name);
        }
    }
}

#[test]
fn training_learns_a_marker_token() {
    let train = toy_data(200, 3);
    let val = toy_data(60, 4);
    let mut m = small_cnn(6, vec![2, 3], 8, 6);
    let config = TrainConfig {
        epochs: 8,
        batch_size: 16,
        learning_rate: 1e-2,
        patience: 8,
        ..TrainConfig::default()
    };
    let log = train_neural(&mut m, &train, &val, &config).unwrap();
    assert!(log.best_val_f1.unwrap() > 0.9, "{log:?}");
    let mut h = small_han(6, 6, 6);
    let log = train_neural(&mut h, &train, &val, &config).unwrap();
    assert!(log.best_val_f1.unwrap() > 0.9, "{log:?}");
}

#[test]
fn padding_row_stays_frozen_during_training() {
    let train = toy_data(30, 5);
    let mut m = small_cnn(8, vec![4], 4, 4);
    let before = m.params.get(m.ids.embedding).row(0).to_vec();
    let config = TrainConfig {
        epochs: 2,
        batch_size: 5,
        learning_rate: 1e-2,
        ..TrainConfig::default()
    };
    train_neural(&mut m, &train, &[], &config).unwrap();
    assert_eq!(m.params.get(m.ids.embedding).row(0), &before[..]);
}

mod classifier {
    use chrono::{TimeZone, Utc};
    use controversy_core::corpus::{Document, Label, Source};
    use controversy_core::models::{fit, Classifier, ModelKind, ModelSpec, ThresholdMode, TrainConfig};
    use controversy_core::text::{EncodeLimits, VocabLimits};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn doc(i: usize, text: String, positive: bool) -> Document {
        Document {
            id: format!("d{i}"),
            url: format!("https://example.org/{i}"),
            title: format!("doc {i}"),
            text,
            label: Label::from_positive(positive),
            source: Source::Wikipedia,
            hop: 0,
            topic: None,
            snapshot_year: 2018,
            fetched_at: Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap(),
        }
    }

    fn corpus(n: usize, seed: u64) -> Vec<Document> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let positive = i % 2 == 0;
                let cue = if positive { "dispute" } else { "harmony" };
                let mut words: Vec<String> = (0..12).map(|_| format!("filler{}", rng.gen_range(0..20))).collect();
                for _ in 0..2 {
                    let k = rng.gen_range(0..words.len());
                    words[k] = cue.into();
                }
                doc(
                    i,
                    format!("{}. {}.", words[..6].join(" "), words[6..].join(" ")),
                    positive,
                )
            })
            .collect()
    }

    fn spec() -> ModelSpec {
        ModelSpec {
            embedding_dim: 8,
            vocabulary: VocabLimits {
                max_size: 1000,
                min_freq: 1,
            },
            limits: EncodeLimits {
                max_sentences: 5,
                max_words_per_sentence: 20,
                max_tokens: 40,
            },
            cnn: controversy_core::models::CnnConfig {
                filters: 6,
                ..Default::default()
            },
            han: controversy_core::models::HanConfig {
                hidden: 5,
                dropout: 0.5,
            },
            train: TrainConfig {
                epochs: 4,
                batch_size: 16,
                learning_rate: 1e-2,
                ..TrainConfig::default()
            },
            ..ModelSpec::default()
        }
    }

    #[test]
    fn every_kind_fits_predicts_and_round_trips_bit_identically() {
        let train = corpus(120, 1);
        let val = corpus(40, 2);
        let mut test = corpus(30, 3);
        test.push(doc(999, " ... ".into(), true));
        let tr: Vec<&Document> = train.iter().collect();
        let va: Vec<&Document> = val.iter().collect();
        let te: Vec<&Document> = test.iter().collect();
        let dir = tempfile::tempdir().unwrap();
        for kind in ModelKind::ALL {
            let (model, report) = fit(kind, &spec(), &tr, &va).unwrap();
            if kind.is_neural() {
                assert_eq!(model.threshold, 0.5);
                assert!(report.log.is_some());
            } else {
                assert_eq!(model.threshold_mode, ThresholdMode::Calibrated);
            }
            let preds = model.predict_documents(&te).unwrap();
            let last = preds.last().unwrap();
            assert!(last.empty && !last.label && last.score == 0.5, "{kind:?}");
            let set = model.prediction_set(kind.name(), "test", &te).unwrap();
            let correct = set.predicted.iter().zip(&set.actual).filter(|(p, a)| p == a).count();
            assert!(correct >= 27, "{kind:?}: {correct}/31 correct");

            let path = dir.path().join(format!("{}.ctrv", kind.name()));
            model.save(&path).unwrap();
            let back = Classifier::load(&path).unwrap();
            assert_eq!(back.kind, kind);
            assert_eq!(back.threshold.to_bits(), model.threshold.to_bits());
            let again = back.predict_documents(&te).unwrap();
            for (a, b) in preds.iter().zip(&again) {
                assert_eq!(a.score.to_bits(), b.score.to_bits(), "{kind:?}");
                assert_eq!(a.label, b.label);
            }
        }
    }

    #[test]
    fn tampered_vocabulary_hash_is_rejected() {
        let train = corpus(40, 4);
        let tr: Vec<&Document> = train.iter().collect();
        let (model, _) = fit(ModelKind::Lm, &spec(), &tr, &[]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ctrv");
        model.save(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let text = String::from_utf8_lossy(&bytes).to_string();
        let at = text.find("\"vocab_hash\":\"").unwrap() + 14;
        bytes[at] = if bytes[at] == b'0' { b'1' } else { b'0' };
        std::fs::write(&path, bytes).unwrap();
        assert!(Classifier::load(&path).is_err());
    }

    #[test]
    fn lexical_threshold_defaults_to_zero_without_both_validation_classes() {
        let train = corpus(40, 5);
        let tr: Vec<&Document> = train.iter().collect();
        let val: Vec<&Document> = tr.iter().copied().filter(|d| d.label.is_positive()).collect();
        let (model, _) = fit(ModelKind::TfidfMargin, &spec(), &tr, &val).unwrap();
        assert_eq!(model.threshold, 0.0);
        assert_eq!(model.threshold_mode, ThresholdMode::Default);
    }
}
