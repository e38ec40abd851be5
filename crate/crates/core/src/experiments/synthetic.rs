//! Generated corpora with known structure for end-to-end checks.

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{DatasetSplit, Document, Label, Source, SplitName, SplitStats};
use crate::tensor::Tensor;
use crate::text::{EmbeddingTable, Vocabulary};

use super::data::Dataset;

fn words(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Sentence of `len` tokens: each slot is a cue word with probability
/// `cue_rate` (when cues are given), a noise word otherwise.
fn sentence<R: Rng>(rng: &mut R, cues: &[String], noise: &[String], cue_rate: f64, len: usize) -> String {
    let out: Vec<&str> = (0..len)
        .map(|_| {
            if !cues.is_empty() && rng.gen_bool(cue_rate) {
                cues[rng.gen_range(0..cues.len())].as_str()
            } else {
                noise[rng.gen_range(0..noise.len())].as_str()
            }
        })
        .collect();
    out.join(" ")
}

fn paragraph(sentences: &[String]) -> String {
    sentences.iter().map(|s| format!("{s}.")).collect::<Vec<_>>().join(" ")
}

fn epoch() -> DateTime<Utc> {
    DateTime::<Utc>::UNIX_EPOCH
}

pub(crate) fn synthetic_document(
    corpus: &str,
    index: usize,
    text: String,
    positive: bool,
    source: Source,
    topic: Option<String>,
    year: i32,
) -> Document {
    let host = match source {
        Source::Wikipedia => "wiki.synthetic.invalid",
        Source::GeneralWeb => "web.synthetic.invalid",
    };
    let url = format!("https://{host}/{corpus}/{index}");
    Document {
        id: crate::corpus::document_id(&url),
        url,
        title: format!("{corpus} {index}"),
        text,
        label: Label::from_positive(positive),
        source,
        hop: 0,
        topic,
        snapshot_year: year,
        fetched_at: epoch(),
    }
}

/// Train/validation/test fractions; the test share is the remainder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.8,
            validation: 0.1,
        }
    }
}

/// Seeded random split where every document is its own seed.
pub fn random_splits(docs: &[Document], fractions: SplitFractions, seed: u64) -> Vec<DatasetSplit> {
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (docs.len() as f64 * fractions.train).round() as usize;
    let n_val = (docs.len() as f64 * fractions.validation).round() as usize;
    let parts = [
        (SplitName::Train, &order[..n_train]),
        (SplitName::Validation, &order[n_train..n_train + n_val]),
        (SplitName::Test, &order[n_train + n_val..]),
    ];
    parts.iter().map(|&(name, idx)| split_of(name, docs, idx)).collect()
}

pub(crate) fn split_of(name: SplitName, docs: &[Document], idx: &[usize]) -> DatasetSplit {
    let mut idx = idx.to_vec();
    idx.sort_unstable();
    let ids: Vec<String> = idx.iter().map(|&i| docs[i].id.clone()).collect();
    DatasetSplit {
        name,
        seed_ids: ids.clone(),
        stats: SplitStats::of(idx.iter().map(|&i| &docs[i])),
        ids,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparableParams {
    pub documents: usize,
    /// Size of each class's private vocabulary.
    pub class_words: usize,
    pub noise_words: usize,
    pub sentences: usize,
    pub words_per_sentence: usize,
    pub cue_rate: f64,
    pub year: i32,
}

impl Default for SeparableParams {
    fn default() -> Self {
        SeparableParams {
            documents: 2000,
            class_words: 50,
            noise_words: 200,
            sentences: 4,
            words_per_sentence: 10,
            cue_rate: 0.3,
            year: 2018,
        }
    }
}

/// Balanced corpus whose classes draw cue words from two disjoint
/// vocabularies (`pos*`, `neg*`) mixed with shared `noise*` words.
pub fn separable_corpus(params: &SeparableParams, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = words("pos", params.class_words);
    let neg = words("neg", params.class_words);
    let noise = words("noise", params.noise_words);
    let docs: Vec<Document> = (0..params.documents)
        .map(|i| {
            let positive = i % 2 == 0;
            let cues = if positive { &pos } else { &neg };
            let s: Vec<String> = (0..params.sentences)
                .map(|_| sentence(&mut rng, cues, &noise, params.cue_rate, params.words_per_sentence))
                .collect();
            synthetic_document(
                "separable",
                i,
                paragraph(&s),
                positive,
                Source::Wikipedia,
                None,
                params.year,
            )
        })
        .collect();
    let splits = random_splits(&docs, SplitFractions::default(), seed ^ 0x51);
    Dataset::new("separable", docs, splits)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftParams {
    pub documents_per_year: usize,
    pub cue_words: usize,
    pub noise_words: usize,
    pub sentences: usize,
    pub words_per_sentence: usize,
    pub cue_rate: f64,
    pub dim: usize,
    pub old_year: i32,
    pub new_year: i32,
}

impl Default for DriftParams {
    fn default() -> Self {
        DriftParams {
            documents_per_year: 1000,
            cue_words: 50,
            noise_words: 200,
            sentences: 4,
            words_per_sentence: 10,
            cue_rate: 0.3,
            dim: 50,
            old_year: 2009,
            new_year: 2018,
        }
    }
}

/// Two snapshots plus pretrained vectors. Old-year positives use `pos*`
/// cue words, new-year positives their synonyms `syn*`, which never occur
/// in the old snapshot; negatives are noise in both years. Each synonym's
/// vector is a small perturbation of its counterpart's, and cue vectors
/// share one direction that noise vectors lack.
#[derive(Clone, Debug)]
pub struct DriftCorpus {
    pub old: Dataset,
    pub new: Dataset,
    pub embeddings: EmbeddingTable,
    pub old_cues: Vec<String>,
    pub new_cues: Vec<String>,
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn drift_corpus(params: &DriftParams, seed: u64) -> DriftCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = words("pos", params.cue_words);
    let syn = words("syn", params.cue_words);
    let noise = words("noise", params.noise_words);
    let year = |name: &str, cues: &[String], year: i32, rng: &mut ChaCha8Rng| {
        let docs: Vec<Document> = (0..params.documents_per_year)
            .map(|i| {
                let positive = i % 2 == 0;
                let c: &[String] = if positive { cues } else { &[] };
                let s: Vec<String> = (0..params.sentences)
                    .map(|_| sentence(rng, c, &noise, params.cue_rate, params.words_per_sentence))
                    .collect();
                synthetic_document(name, i, paragraph(&s), positive, Source::Wikipedia, None, year)
            })
            .collect();
        let splits = random_splits(&docs, SplitFractions::default(), rng.gen());
        Dataset::new(name, docs, splits)
    };
    let old = year("drift-old", &pos, params.old_year, &mut rng);
    let new = year("drift-new", &syn, params.new_year, &mut rng);

    let d = params.dim;
    let scale = 0.15;
    let direction: Vec<f64> = {
        let v: Vec<f64> = (0..d).map(|_| gaussian(&mut rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect()
    };
    let vocab = Vocabulary::from_tokens(pos.iter().chain(&syn).chain(&noise).cloned());
    let mut data = vec![0f32; vocab.len() * d];
    let row = |rng: &mut ChaCha8Rng, shift: f64| -> Vec<f64> {
        (0..d).map(|j| scale * gaussian(rng) + shift * direction[j]).collect()
    };
    let bases: Vec<Vec<f64>> = (0..params.cue_words).map(|_| row(&mut rng, 0.6)).collect();
    for (i, base) in bases.iter().enumerate() {
        let p = vocab.index_of(&pos[i]).unwrap_or(0);
        let s = vocab.index_of(&syn[i]).unwrap_or(0);
        for j in 0..d {
            data[p * d + j] = base[j] as f32;
            data[s * d + j] = (base[j] + 0.02 * gaussian(&mut rng)) as f32;
        }
    }
    for w in &noise {
        let v = row(&mut rng, 0.0);
        let k = vocab.index_of(w).unwrap_or(0);
        for j in 0..d {
            data[k * d + j] = v[j] as f32;
        }
    }
    let matrix = Tensor::new(vec![vocab.len(), d], data).expect("shape matches data");
    DriftCorpus {
        old,
        new,
        embeddings: EmbeddingTable {
            vocab,
            matrix,
            trainable: true,
        },
        old_cues: pos,
        new_cues: syn,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainParams {
    pub wiki_documents: usize,
    pub web_documents: usize,
    pub cue_words: usize,
    pub noise_words: usize,
    pub boilerplate_words: usize,
    pub sentences: usize,
    pub words_per_sentence: usize,
    pub cue_rate: f64,
    /// Chance that a Wikipedia page carries one boilerplate sentence.
    pub wiki_boilerplate_rate: f64,
    /// Boilerplate sentences added to every general-web page.
    pub web_boilerplate_sentences: usize,
    pub year: i32,
}

impl Default for DomainParams {
    fn default() -> Self {
        DomainParams {
            wiki_documents: 1000,
            web_documents: 400,
            cue_words: 50,
            noise_words: 200,
            boilerplate_words: 60,
            sentences: 4,
            words_per_sentence: 10,
            cue_rate: 0.3,
            wiki_boilerplate_rate: 0.3,
            web_boilerplate_sentences: 12,
            year: 2018,
        }
    }
}

/// Wikipedia pages and general-web pages drawn from one content
/// distribution (positives carry `pos*` cues, negatives none); web pages
/// additionally carry many sentences of site boilerplate (`chrome*`),
/// vocabulary that occurs in Wikipedia pages only rarely and in both
/// classes. The train and validation splits hold Wikipedia pages; the test
/// split holds every web page plus a few Wikipedia pages.
pub fn domain_corpus(params: &DomainParams, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = words("pos", params.cue_words);
    let noise = words("noise", params.noise_words);
    let chrome = words("chrome", params.boilerplate_words);
    let total = params.wiki_documents + params.web_documents;
    let docs: Vec<Document> = (0..total)
        .map(|i| {
            let web = i >= params.wiki_documents;
            let positive = i % 2 == 0;
            let c: &[String] = if positive { &pos } else { &[] };
            let mut s: Vec<String> = (0..params.sentences)
                .map(|_| sentence(&mut rng, c, &noise, params.cue_rate, params.words_per_sentence))
                .collect();
            let extra = if web {
                params.web_boilerplate_sentences
            } else {
                usize::from(rng.gen_bool(params.wiki_boilerplate_rate))
            };
            for _ in 0..extra {
                let b = sentence(&mut rng, &[], &chrome, 0.0, params.words_per_sentence);
                let at = rng.gen_range(0..=s.len());
                s.insert(at, b);
            }
            let source = if web { Source::GeneralWeb } else { Source::Wikipedia };
            synthetic_document("domain", i, paragraph(&s), positive, source, None, params.year)
        })
        .collect();
    let wiki: Vec<usize> = (0..params.wiki_documents).collect();
    let web: Vec<usize> = (params.wiki_documents..total).collect();
    let mut order = wiki.clone();
    order.shuffle(&mut rng);
    let n_train = wiki.len() * 8 / 10;
    let n_val = wiki.len() / 10;
    let mut test: Vec<usize> = order[n_train + n_val..].to_vec();
    test.extend(&web);
    let splits = vec![
        split_of(SplitName::Train, &docs, &order[..n_train]),
        split_of(SplitName::Validation, &docs, &order[n_train..n_train + n_val]),
        split_of(SplitName::Test, &docs, &test),
    ];
    Dataset::new("domain", docs, splits)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicParams {
    pub topics: usize,
    /// Positive pages per topic; topic `t` gets `per_topic + t·growth`.
    pub per_topic: usize,
    pub growth: usize,
    pub negatives: usize,
    pub shared_cue_words: usize,
    pub topic_words: usize,
    pub noise_words: usize,
    pub sentences: usize,
    pub words_per_sentence: usize,
    pub cue_rate: f64,
    /// Every topic's pages (and every negative page) share one text.
    pub identical: bool,
    pub year: i32,
}

impl Default for TopicParams {
    fn default() -> Self {
        TopicParams {
            topics: 3,
            per_topic: 40,
            growth: 0,
            negatives: 120,
            shared_cue_words: 30,
            topic_words: 20,
            noise_words: 150,
            sentences: 3,
            words_per_sentence: 10,
            cue_rate: 0.3,
            identical: false,
            year: 2018,
        }
    }
}

/// Positives grouped by topic `Topic{t}`: shared cue words, topic-specific
/// words and noise. Negatives are noise and carry no topic.
pub fn topic_corpus(params: &TopicParams, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shared = words("cue", params.shared_cue_words);
    let noise = words("noise", params.noise_words);
    let mut docs = Vec::new();
    let fixed_pos = {
        let s: Vec<String> = (0..params.sentences)
            .map(|_| sentence(&mut rng, &shared, &noise, params.cue_rate, params.words_per_sentence))
            .collect();
        paragraph(&s)
    };
    let fixed_neg = {
        let s: Vec<String> = (0..params.sentences)
            .map(|_| sentence(&mut rng, &[], &noise, 0.0, params.words_per_sentence))
            .collect();
        paragraph(&s)
    };
    for t in 0..params.topics {
        let mut cues = shared.clone();
        cues.extend(words(&format!("topic{t}x"), params.topic_words));
        for _ in 0..params.per_topic + t * params.growth {
            let text = if params.identical {
                fixed_pos.clone()
            } else {
                let s: Vec<String> = (0..params.sentences)
                    .map(|_| sentence(&mut rng, &cues, &noise, params.cue_rate, params.words_per_sentence))
                    .collect();
                paragraph(&s)
            };
            let i = docs.len();
            docs.push(synthetic_document(
                "topic",
                i,
                text,
                true,
                Source::Wikipedia,
                Some(format!("Topic{t}")),
                params.year,
            ));
        }
    }
    for _ in 0..params.negatives {
        let text = if params.identical {
            fixed_neg.clone()
        } else {
            let s: Vec<String> = (0..params.sentences)
                .map(|_| sentence(&mut rng, &[], &noise, 0.0, params.words_per_sentence))
                .collect();
            paragraph(&s)
        };
        let i = docs.len();
        docs.push(synthetic_document(
            "topic",
            i,
            text,
            false,
            Source::Wikipedia,
            None,
            params.year,
        ));
    }
    let splits = random_splits(&docs, SplitFractions::default(), seed ^ 0x70);
    Dataset::new("topics", docs, splits)
}
