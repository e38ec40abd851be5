//! Weakly labeled dataset construction: crawling, label propagation,
//! negative sampling, splitting and persistence.

mod crawl;
mod document;
mod fetch;
pub mod fixture;
mod html;
mod io;
mod propagate;
mod robots;
mod seeds;
mod split;

pub use crawl::{
    crawl_snowball, sample_negative_seeds, sample_negatives, CrawlOutcome, CrawlPolicy, CrawledPage, SkippedUrl,
};
pub use document::{document_id, AnnotationRecord, Document, Edge, Label, LinkClass, Polarity, SeedEntry, Source};
pub use fetch::{authority, FetchError, FetchedPage, Fetcher, HostThrottle, HttpFetcher};
pub use html::{classify_heading, parse_page, resolve_link, ParsedPage};
pub use io::{read_jsonl, read_jsonl_file, write_jsonl, write_jsonl_file, SCHEMA_VERSION};
pub use propagate::{build_dataset, nearest_source, normalize_url, propagate_labels, CrawledDataset};
pub use robots::RobotsRules;
pub use seeds::parse_seed_list;
pub use split::{split_dataset, DatasetSplit, SeedCounts, SplitName, SplitStats};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unsupported schema_version {found} (expected {expected})", expected = SCHEMA_VERSION)]
    SchemaVersion { line: usize, found: String },
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("random endpoint exhausted: {found} of {requested} distinct pages after bounded retries")]
    Exhausted { requested: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
