use serde::{Deserialize, Serialize};

use super::vocab::{Vocabulary, PAD};
use super::{split_sentences, tokenize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeLimits {
    pub max_sentences: usize,
    pub max_words_per_sentence: usize,
    pub max_tokens: usize,
}

impl Default for EncodeLimits {
    fn default() -> Self {
        EncodeLimits {
            max_sentences: 30,
            max_words_per_sentence: 50,
            max_tokens: 400,
        }
    }
}

/// Model-ready index sequences for one document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedDocument {
    pub id: String,
    /// Hierarchical form: non-empty sentences of token indices.
    pub sentences: Vec<Vec<usize>>,
    /// Flat form, right-padded with [`PAD`] to `max_tokens`.
    pub tokens: Vec<usize>,
    /// Number of real (non-padding) entries in `tokens`.
    pub length: usize,
    /// No tokens survived encoding; excluded from training, scored 0.5.
    pub empty: bool,
}

/// Maps a document's text to indices. Unknown tokens become OOV; truncation
/// keeps the prefix.
pub fn encode_document(id: &str, text: &str, vocab: &Vocabulary, limits: EncodeLimits) -> EncodedDocument {
    let sentences: Vec<Vec<usize>> = split_sentences(text)
        .iter()
        .map(|s| {
            tokenize(s)
                .iter()
                .take(limits.max_words_per_sentence)
                .map(|t| vocab.encode(t))
                .collect::<Vec<_>>()
        })
        .filter(|s| !s.is_empty())
        .take(limits.max_sentences)
        .collect();

    let mut tokens: Vec<usize> = tokenize(text)
        .iter()
        .take(limits.max_tokens)
        .map(|t| vocab.encode(t))
        .collect();
    let length = tokens.len();
    tokens.resize(limits.max_tokens, PAD);

    EncodedDocument {
        id: id.to_string(),
        empty: length == 0 || sentences.is_empty(),
        sentences,
        tokens,
        length,
    }
}
