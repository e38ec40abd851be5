use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use url::Url;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Controversial,
    NonControversial,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Controversial
    }

    pub fn from_positive(positive: bool) -> Self {
        if positive {
            Label::Controversial
        } else {
            Label::NonControversial
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Wikipedia,
    GeneralWeb,
}

/// One page of the dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub id: String,
    pub url: String,
    pub title: String,
    pub text: String,
    pub label: Label,
    pub source: Source,
    pub hop: u8,
    pub topic: Option<String>,
    pub snapshot_year: i32,
    pub fetched_at: DateTime<Utc>,
}

/// Stable document id: the first 16 hex digits of SHA-256 over the URL.
pub fn document_id(url: &str) -> String {
    let digest = Sha256::digest(url.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    Controversial,
    RandomNegative,
}

/// Seed file entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedEntry {
    pub url: String,
    pub topic: Option<String>,
    pub polarity: Polarity,
}

impl SeedEntry {
    pub fn parsed_url(&self) -> Result<Url, url::ParseError> {
        Url::parse(&self.url)
    }
}

/// Per-annotator controversy scores for one document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub id: String,
    pub scores: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkClass {
    SeeAlso,
    References,
    ExternalLinks,
}

/// A followed hyperlink between two crawled pages.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub class: LinkClass,
}
