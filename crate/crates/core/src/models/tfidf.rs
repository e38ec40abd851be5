//! Linear max-margin classifier over l2-normalized tf-idf vectors.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::text::tokenize;

use super::ModelError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TfIdfConfig {
    /// Weight of ‖w‖² in the objective.
    pub lambda: f64,
    pub iterations: usize,
    /// Step size at iteration t is `learning_rate / √t`.
    pub learning_rate: f64,
}

impl Default for TfIdfConfig {
    fn default() -> Self {
        TfIdfConfig {
            lambda: 1e-4,
            iterations: 300,
            learning_rate: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    pub config: TfIdfConfig,
    pub terms: Vec<String>,
    pub document_frequency: Vec<u64>,
    pub num_documents: u64,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Objective value of the kept iterate.
    pub objective: f64,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

pub type SparseVector = Vec<(usize, f64)>;

fn counts(text: &str) -> BTreeMap<String, u64> {
    let mut c = BTreeMap::new();
    for t in tokenize(text) {
        *c.entry(t).or_insert(0) += 1;
    }
    c
}

impl TfIdfModel {
    pub fn rebuild_index(&mut self) {
        self.index = self.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    /// ln((1 + N) / (1 + df)) + 1
    pub fn idf(&self, term: usize) -> f64 {
        ((1.0 + self.num_documents as f64) / (1.0 + self.document_frequency[term] as f64)).ln() + 1.0
    }

    /// Raw-count tf times idf over known terms, sorted by term index.
    pub fn raw_features(&self, text: &str) -> SparseVector {
        let mut v: SparseVector = counts(text)
            .into_iter()
            .filter_map(|(t, c)| self.index.get(&t).map(|&i| (i, c as f64 * self.idf(i))))
            .collect();
        v.sort_by_key(|&(i, _)| i);
        v
    }

    /// l2-normalized tf-idf vector; empty when no known term occurs.
    pub fn features(&self, text: &str) -> SparseVector {
        let mut v = self.raw_features(text);
        let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|(_, x)| *x /= norm);
        }
        v
    }

    pub fn margin(&self, x: &[(usize, f64)]) -> f64 {
        x.iter().map(|&(i, v)| self.weights[i] * v).sum::<f64>() + self.bias
    }

    /// w·x + b; terms unseen in training contribute nothing.
    pub fn score(&self, text: &str) -> f64 {
        self.margin(&self.features(text))
    }

    pub fn term(&self, t: &str) -> Option<usize> {
        self.index.get(t).copied()
    }
}

fn objective(w: &[f64], b: f64, xs: &[SparseVector], ys: &[f64], lambda: f64) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| {
            let m = x.iter().map(|&(i, v)| w[i] * v).sum::<f64>() + b;
            (1.0 - y * m).max(0.0)
        })
        .sum::<f64>()
        / xs.len() as f64;
    hinge + lambda * w.iter().map(|v| v * v).sum::<f64>()
}

/// Full-batch subgradient descent on mean hinge loss + λ‖w‖², keeping the
/// iterate with the lowest objective.
pub fn tfidf_train(docs: &[(&str, bool)], config: &TfIdfConfig) -> Result<TfIdfModel, ModelError> {
    if docs.is_empty() {
        return Err(ModelError::Usage("tf-idf training corpus is empty".into()));
    }
    if docs.iter().all(|d| d.1) || docs.iter().all(|d| !d.1) {
        return Err(ModelError::Usage("tf-idf training needs both classes".into()));
    }
    let doc_counts: Vec<BTreeMap<String, u64>> = docs.iter().map(|(t, _)| counts(t)).collect();
    let mut df: BTreeMap<&str, u64> = BTreeMap::new();
    for c in &doc_counts {
        for t in c.keys() {
            *df.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut model = TfIdfModel {
        config: config.clone(),
        terms: df.keys().map(|t| t.to_string()).collect(),
        document_frequency: df.values().copied().collect(),
        num_documents: docs.len() as u64,
        weights: vec![0.0; df.len()],
        bias: 0.0,
        objective: 0.0,
        index: HashMap::new(),
    };
    model.rebuild_index();
    let xs: Vec<SparseVector> = docs.iter().map(|(t, _)| model.features(t)).collect();
    let ys: Vec<f64> = docs.iter().map(|&(_, y)| if y { 1.0 } else { -1.0 }).collect();
    let n = xs.len() as f64;

    let mut w = vec![0.0; model.terms.len()];
    let mut b = 0.0;
    let mut best = (objective(&w, b, &xs, &ys, config.lambda), w.clone(), b);
    let mut grad = vec![0.0; w.len()];
    for t in 1..=config.iterations {
        grad.iter_mut()
            .zip(&w)
            .for_each(|(g, &wi)| *g = 2.0 * config.lambda * wi);
        let mut grad_b = 0.0;
        for (x, &y) in xs.iter().zip(&ys) {
            let m = x.iter().map(|&(i, v)| w[i] * v).sum::<f64>() + b;
            if y * m < 1.0 {
                for &(i, v) in x {
                    grad[i] -= y * v / n;
                }
                grad_b -= y / n;
            }
        }
        let eta = config.learning_rate / (t as f64).sqrt();
        w.iter_mut().zip(&grad).for_each(|(wi, g)| *wi -= eta * g);
        b -= eta * grad_b;
        let obj = objective(&w, b, &xs, &ys, config.lambda);
        if obj < best.0 {
            best = (obj, w.clone(), b);
        }
    }
    model.objective = best.0;
    model.weights = best.1;
    model.bias = best.2;
    Ok(model)
}
