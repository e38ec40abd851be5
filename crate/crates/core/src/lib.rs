//! Controversy detection workbench.
//!
//! Builds a weakly labeled web corpus by snowball crawling from a list of
//! controversial seed pages, trains convolutional, hierarchical-attention,
//! tf-idf margin and unigram language-model classifiers on page text, and
//! measures robustness across time, topic and domain with bootstrap
//! intervals and human-agreement correlations.

pub mod corpus;
pub mod eval;
pub mod experiments;
pub mod models;
pub mod tensor;
pub mod text;
