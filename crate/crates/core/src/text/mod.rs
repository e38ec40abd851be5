//! Raw page text to model inputs.

mod embeddings;
mod encode;
mod tokenize;
mod vocab;

pub use embeddings::{
    embedding_words, load_embeddings, scan_binary, scan_text, write_w2v_binary, write_w2v_text, EmbeddingFormat,
    EmbeddingTable, LoadedEmbeddings, MISSING_INIT,
};
pub use encode::{encode_document, EncodeLimits, EncodedDocument};
pub use tokenize::{split_sentences, tokenize};
pub use vocab::{build_vocabulary, VocabLimits, Vocabulary, OOV, OOV_TOKEN, PAD, PAD_TOKEN};

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
