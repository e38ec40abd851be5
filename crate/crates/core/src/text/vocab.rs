use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{tokenize, TextError};

pub const PAD: usize = 0;
pub const OOV: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const OOV_TOKEN: &str = "<oov>";

/// Token↔index map with `<pad>` at 0 and `<oov>` at 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabFile", into = "VocabFile")]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    tokens: Vec<String>,
    counts: Vec<u64>,
}

impl From<VocabFile> for Vocabulary {
    fn from(f: VocabFile) -> Self {
        Vocabulary::from_parts(f.tokens, f.counts)
    }
}

impl From<Vocabulary> for VocabFile {
    fn from(v: Vocabulary) -> Self {
        VocabFile {
            tokens: v.tokens,
            counts: v.counts,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabLimits {
    pub max_size: usize,
    pub min_freq: u64,
}

impl Default for VocabLimits {
    fn default() -> Self {
        VocabLimits {
            max_size: 50_000,
            min_freq: 2,
        }
    }
}

impl Vocabulary {
    fn from_parts(tokens: Vec<String>, counts: Vec<u64>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { tokens, counts, index }
    }

    /// Vocabulary over explicit tokens (after the two reserved entries), in order.
    pub fn from_tokens<I: IntoIterator<Item = String>>(words: I) -> Self {
        let mut tokens = vec![PAD_TOKEN.to_string(), OOV_TOKEN.to_string()];
        let mut seen = std::collections::HashSet::new();
        for w in words {
            if seen.insert(w.clone()) {
                tokens.push(w);
            }
        }
        let counts = vec![0; tokens.len()];
        Vocabulary::from_parts(tokens, counts)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Index of a token, falling back to [`OOV`].
    pub fn encode(&self, token: &str) -> usize {
        match self.index.get(token) {
            Some(&i) if i > OOV => i,
            _ => OOV,
        }
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts.get(index).copied().unwrap_or(0)
    }

    /// Decodes indices back to tokens.
    pub fn decode(&self, indices: &[usize]) -> Vec<&str> {
        indices.iter().map(|&i| self.token(i).unwrap_or(OOV_TOKEN)).collect()
    }

    /// Appends tokens not yet present, with count 0, until the vocabulary
    /// holds `max_size` entries.
    pub fn extend<I: IntoIterator<Item = String>>(&mut self, words: I, max_size: usize) {
        for w in words {
            if self.tokens.len() >= max_size {
                break;
            }
            if !self.index.contains_key(&w) {
                self.index.insert(w.clone(), self.tokens.len());
                self.tokens.push(w);
                self.counts.push(0);
            }
        }
    }

    /// SHA-256 over the newline-joined token list.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        format!("{:x}", h.finalize())
    }
}

/// Frequency-ranked vocabulary (ties lexicographic) over tokenized texts.
/// `max_size` includes the two reserved entries.
pub fn build_vocabulary<'a, I>(texts: I, limits: VocabLimits) -> Result<Vocabulary, TextError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut freq: HashMap<String, u64> = HashMap::new();
    let mut docs = 0usize;
    for text in texts {
        docs += 1;
        for t in tokenize(text) {
            *freq.entry(t).or_insert(0) += 1;
        }
    }
    if docs == 0 {
        return Err(TextError::Usage(
            "cannot build a vocabulary from an empty corpus".into(),
        ));
    }
    let mut ranked: Vec<(String, u64)> = freq.into_iter().filter(|&(_, c)| c >= limits.min_freq).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(limits.max_size.saturating_sub(2));

    let mut tokens = vec![PAD_TOKEN.to_string(), OOV_TOKEN.to_string()];
    let mut counts = vec![0, 0];
    for (t, c) in ranked {
        tokens.push(t);
        counts.push(c);
    }
    Ok(Vocabulary::from_parts(tokens, counts))
}
