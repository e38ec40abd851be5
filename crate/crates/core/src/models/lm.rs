//! Unigram language-model classifier with Dirichlet smoothing.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::text::tokenize;

use super::ModelError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmConfig {
    pub mu: f64,
    /// When set, only these terms are counted and scored.
    pub lexicon: Option<BTreeSet<String>>,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            mu: 2000.0,
            lexicon: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmModel {
    pub config: LmConfig,
    pub terms: Vec<String>,
    pub positive_counts: Vec<u64>,
    pub negative_counts: Vec<u64>,
    pub positive_total: u64,
    pub negative_total: u64,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl LmModel {
    pub fn rebuild_index(&mut self) {
        self.index = self.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    /// Collection probability over both classes.
    pub fn background(&self, term: usize) -> f64 {
        (self.positive_counts[term] + self.negative_counts[term]) as f64
            / (self.positive_total + self.negative_total) as f64
    }

    /// (c(t) + μ·p_bg(t)) / (|c| + μ)
    pub fn probability(&self, term: usize, positive: bool) -> f64 {
        let (c, total) = if positive {
            (self.positive_counts[term], self.positive_total)
        } else {
            (self.negative_counts[term], self.negative_total)
        };
        (c as f64 + self.config.mu * self.background(term)) / (total as f64 + self.config.mu)
    }

    /// Mean per-token log-likelihood ratio over the document's tokens;
    /// tokens outside the model vocabulary add nothing but count toward
    /// the length. Empty documents score 0.
    pub fn score(&self, text: &str) -> f64 {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return 0.0;
        }
        let sum: f64 = tokens
            .iter()
            .filter_map(|t| self.index.get(t))
            .map(|&i| self.probability(i, true).ln() - self.probability(i, false).ln())
            .sum();
        sum / tokens.len() as f64
    }

    /// The same model with the class roles exchanged.
    pub fn swapped(&self) -> Self {
        let mut m = self.clone();
        std::mem::swap(&mut m.positive_counts, &mut m.negative_counts);
        std::mem::swap(&mut m.positive_total, &mut m.negative_total);
        m
    }
}

pub fn lm_train(docs: &[(&str, bool)], config: &LmConfig) -> Result<LmModel, ModelError> {
    if !(config.mu > 0.0 && config.mu.is_finite()) {
        return Err(ModelError::Usage(
            "smoothing mass mu must be positive and finite".into(),
        ));
    }
    if docs.iter().all(|d| d.1) || docs.iter().all(|d| !d.1) {
        return Err(ModelError::Usage("language-model training needs both classes".into()));
    }
    let mut table: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for (text, positive) in docs {
        for t in tokenize(text) {
            if config.lexicon.as_ref().is_some_and(|l| !l.contains(&t)) {
                continue;
            }
            let e = table.entry(t).or_insert((0, 0));
            if *positive {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
    }
    let positive_total: u64 = table.values().map(|c| c.0).sum();
    let negative_total: u64 = table.values().map(|c| c.1).sum();
    if positive_total == 0 || negative_total == 0 {
        return Err(ModelError::Usage("a class has no countable tokens".into()));
    }
    let mut m = LmModel {
        config: config.clone(),
        terms: table.keys().cloned().collect(),
        positive_counts: table.values().map(|c| c.0).collect(),
        negative_counts: table.values().map(|c| c.1).collect(),
        positive_total,
        negative_total,
        index: HashMap::new(),
    };
    m.rebuild_index();
    Ok(m)
}
