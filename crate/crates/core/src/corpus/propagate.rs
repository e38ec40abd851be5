//! Weak labeling: controversial seeds label everything they reach.

use std::collections::{HashMap, HashSet};

use url::Url;

use super::crawl::{crawl_snowball, sample_negative_seeds, CrawlOutcome, CrawlPolicy, SkippedUrl};
use super::fetch::Fetcher;
use super::{document_id, CorpusError, Document, Edge, Label, Polarity, SeedEntry};

/// Canonical string form of a URL as used for document ids.
pub fn normalize_url(raw: &str) -> Result<String, CorpusError> {
    let mut url = Url::parse(raw).map_err(|e| CorpusError::Usage(format!("invalid URL {raw:?}: {e}")))?;
    url.set_fragment(None);
    Ok(url.to_string())
}

/// Adjacency lists over document ids, in edge order.
pub fn adjacency(edges: &[Edge]) -> HashMap<&str, Vec<&str>> {
    let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
    for e in edges {
        adj.entry(e.from.as_str()).or_default().push(e.to.as_str());
    }
    adj
}

/// Multi-source BFS bounded by `max_hops`. Returns, for each reached id, the
/// distance and the index (into `sources`) of the nearest source, breaking
/// distance ties by the lowest index.
pub fn nearest_source(sources: &[String], edges: &[Edge], max_hops: u8) -> HashMap<String, (u8, usize)> {
    let adj = adjacency(edges);
    let mut best: HashMap<String, (u8, usize)> = HashMap::new();
    let mut layer: Vec<String> = Vec::new();
    for (i, s) in sources.iter().enumerate() {
        if !best.contains_key(s) {
            best.insert(s.clone(), (0, i));
            layer.push(s.clone());
        }
    }
    for d in 1..=max_hops {
        let mut next: Vec<String> = Vec::new();
        for node in &layer {
            let origin = best[node].1;
            for &t in adj.get(node.as_str()).map(Vec::as_slice).unwrap_or(&[]) {
                match best.get_mut(t) {
                    None => {
                        best.insert(t.to_string(), (d, origin));
                        next.push(t.to_string());
                    }
                    Some(entry) if entry.0 == d && origin < entry.1 => entry.1 = origin,
                    Some(_) => {}
                }
            }
        }
        layer = next;
    }
    best
}

/// Labels crawled pages: anything within `max_hops` of a controversial seed is
/// controversial and inherits that seed's topic; everything else is
/// non-controversial. Fails if a page is not reachable from any seed.
pub fn propagate_labels(
    outcome: &CrawlOutcome,
    seeds: &[SeedEntry],
    max_hops: u8,
    snapshot_year: i32,
) -> Result<Vec<Document>, CorpusError> {
    let mut seed_ids = Vec::with_capacity(seeds.len());
    for s in seeds {
        seed_ids.push(document_id(&normalize_url(&s.url)?));
    }
    let controversial: Vec<(String, Option<String>)> = seeds
        .iter()
        .zip(&seed_ids)
        .filter(|(s, _)| s.polarity == Polarity::Controversial)
        .map(|(s, id)| (id.clone(), s.topic.clone()))
        .collect();
    let sources: Vec<String> = controversial.iter().map(|(id, _)| id.clone()).collect();
    let positive = nearest_source(&sources, &outcome.edges, max_hops);
    let any = nearest_source(&seed_ids, &outcome.edges, max_hops);

    let mut docs = Vec::with_capacity(outcome.pages.len());
    for page in &outcome.pages {
        if !any.contains_key(&page.id) {
            return Err(CorpusError::Integrity(format!(
                "page {} is not reachable from any seed within {max_hops} hops",
                page.url
            )));
        }
        let (label, topic) = match positive.get(&page.id) {
            Some(&(_, origin)) => (Label::Controversial, controversial[origin].1.clone()),
            None => (Label::NonControversial, None),
        };
        docs.push(Document {
            id: page.id.clone(),
            url: page.url.clone(),
            title: page.title.clone(),
            text: page.text.clone(),
            label,
            source: page.source,
            hop: page.hop,
            topic,
            snapshot_year,
            fetched_at: page.fetched_at,
        });
    }
    Ok(docs)
}

/// A crawled, weakly labeled corpus.
#[derive(Clone, Debug, Default)]
pub struct CrawledDataset {
    /// Every seed crawled from: the given seeds, then sampled negatives.
    pub seeds: Vec<SeedEntry>,
    pub documents: Vec<Document>,
    pub edges: Vec<Edge>,
    pub skipped: Vec<SkippedUrl>,
}

/// Adds `negatives` random-endpoint seeds to `seeds`, crawls from all of them
/// under `policy` and labels the result.
pub fn build_dataset(
    seeds: &[SeedEntry],
    negatives: usize,
    random_endpoint: &Url,
    policy: &CrawlPolicy,
    fetcher: &dyn Fetcher,
) -> Result<CrawledDataset, CorpusError> {
    let mut all = seeds.to_vec();
    if negatives > 0 {
        let mut exclude = HashSet::new();
        for s in seeds {
            exclude.insert(s.url.clone());
            exclude.insert(normalize_url(&s.url)?);
        }
        all.extend(sample_negative_seeds(
            fetcher,
            random_endpoint,
            negatives,
            &exclude,
            policy,
        )?);
    }
    let outcome = crawl_snowball(&all, policy, fetcher)?;
    let documents = propagate_labels(&outcome, &all, policy.max_hops, policy.snapshot_year)?;
    Ok(CrawledDataset {
        seeds: all,
        documents,
        edges: outcome.edges,
        skipped: outcome.skipped,
    })
}
