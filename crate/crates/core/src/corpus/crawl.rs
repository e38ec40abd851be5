//! Breadth-first snowball crawler.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use url::Url;

use super::fetch::{authority, FetchError, FetchedPage, Fetcher, HostThrottle};
use super::html::parse_page;
use super::robots::RobotsRules;
use super::{document_id, CorpusError, Edge, LinkClass, Polarity, SeedEntry, Source};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrawlPolicy {
    pub max_hops: u8,
    pub follow: BTreeSet<LinkClass>,
    pub host_delay_ms: u64,
    pub max_pages: usize,
    pub timeout_ms: u64,
    pub retries: u32,
    /// Number of concurrent fetches.
    pub width: usize,
    pub respect_robots: bool,
    /// Host suffixes (or exact `host:port` authorities) that count as Wikipedia.
    pub wiki_hosts: Vec<String>,
    pub user_agent: String,
    pub snapshot_year: i32,
    /// Bound on random-endpoint draws per requested negative.
    pub max_draws_per_negative: usize,
}

impl Default for CrawlPolicy {
    fn default() -> Self {
        CrawlPolicy {
            max_hops: 2,
            follow: [LinkClass::SeeAlso, LinkClass::References, LinkClass::ExternalLinks].into(),
            host_delay_ms: 1000,
            max_pages: 100_000,
            timeout_ms: 30_000,
            retries: 2,
            width: 4,
            respect_robots: true,
            wiki_hosts: vec!["wikipedia.org".into()],
            user_agent: concat!("controversy-crawler/", env!("CARGO_PKG_VERSION")).into(),
            snapshot_year: 2018,
            max_draws_per_negative: 20,
        }
    }
}

impl CrawlPolicy {
    pub fn is_wiki(&self, url: &Url) -> bool {
        let Some(host) = url.host_str() else { return false };
        let auth = authority(url);
        self.wiki_hosts.iter().any(|h| {
            if h.contains(':') {
                auth == *h
            } else {
                host == h || host.ends_with(&format!(".{h}"))
            }
        })
    }

    pub fn source_of(&self, url: &Url) -> Source {
        if self.is_wiki(url) {
            Source::Wikipedia
        } else {
            Source::GeneralWeb
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.width == 0 {
            return Err(CorpusError::Usage("crawl width must be at least 1".into()));
        }
        if self.max_pages == 0 {
            return Err(CorpusError::Usage("max_pages must be positive".into()));
        }
        Ok(())
    }

    fn follows(&self, from_wiki: bool, class: LinkClass, target: &Url) -> bool {
        if !from_wiki || !self.follow.contains(&class) {
            return false;
        }
        // General-web pages enter the crawl only through citation links.
        class != LinkClass::SeeAlso || self.is_wiki(target)
    }
}

/// A fetched page before labeling.
#[derive(Clone, Debug, PartialEq)]
pub struct CrawledPage {
    pub id: String,
    pub url: String,
    pub title: String,
    pub text: String,
    pub hop: u8,
    pub source: Source,
    pub fetched_at: DateTime<Utc>,
    pub malformed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedUrl {
    pub url: String,
    pub hop: u8,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CrawlOutcome {
    /// Pages in breadth-first order; seeds first in seed order.
    pub pages: Vec<CrawledPage>,
    /// Followed links whose both endpoints were fetched, keyed by document id.
    pub edges: Vec<Edge>,
    pub skipped: Vec<SkippedUrl>,
}

impl CrawlOutcome {
    pub fn page(&self, id: &str) -> Option<&CrawledPage> {
        self.pages.iter().find(|p| p.id == id)
    }
}

struct Session<'a> {
    policy: &'a CrawlPolicy,
    fetcher: &'a dyn Fetcher,
    throttle: HostThrottle,
    robots: Mutex<HashMap<String, RobotsRules>>,
}

impl<'a> Session<'a> {
    fn new(policy: &'a CrawlPolicy, fetcher: &'a dyn Fetcher) -> Self {
        Session {
            policy,
            fetcher,
            throttle: HostThrottle::new(Duration::from_millis(policy.host_delay_ms)),
            robots: Mutex::new(HashMap::new()),
        }
    }

    fn get(&self, url: &Url) -> Result<FetchedPage, FetchError> {
        let mut attempt = 0;
        loop {
            self.throttle.wait(url);
            match self.fetcher.fetch(url) {
                Err(e) if e.is_transient() && attempt < self.policy.retries => attempt += 1,
                other => return other,
            }
        }
    }

    fn allowed(&self, url: &Url) -> bool {
        if !self.policy.respect_robots {
            return true;
        }
        let key = authority(url);
        if let Some(rules) = self.robots.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return rules.is_allowed(&path_and_query(url));
        }
        let rules = match url.join("/robots.txt") {
            Ok(robots_url) => match self.get(&robots_url) {
                Ok(page) => RobotsRules::parse(&page.body, &self.policy.user_agent),
                Err(_) => RobotsRules::allow_all(),
            },
            Err(_) => RobotsRules::allow_all(),
        };
        let allowed = rules.is_allowed(&path_and_query(url));
        self.robots
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .entry(key)
            .or_insert(rules);
        allowed
    }

    fn fetch_checked(&self, url: &Url) -> Result<FetchedPage, String> {
        if !self.allowed(url) {
            return Err("disallowed by robots.txt".into());
        }
        self.get(url).map_err(|e| e.to_string())
    }

    /// Fetches every URL with up to `width` workers; results keep input order.
    fn fetch_all(&self, urls: &[Url]) -> Vec<Result<FetchedPage, String>> {
        let width = self.policy.width.min(urls.len()).max(1);
        if width == 1 {
            return urls.iter().map(|u| self.fetch_checked(u)).collect();
        }
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Result<FetchedPage, String>>>> = urls.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|s| {
            for _ in 0..width {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= urls.len() {
                        break;
                    }
                    let r = self.fetch_checked(&urls[i]);
                    *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(r);
                });
            }
        });
        slots
            .into_iter()
            .map(|m| {
                m.into_inner()
                    .unwrap_or_else(|e| e.into_inner())
                    .unwrap_or_else(|| Err("fetch worker failed".into()))
            })
            .collect()
    }
}

fn path_and_query(url: &Url) -> String {
    match url.query() {
        Some(q) => format!("{}?{q}", url.path()),
        None => url.path().to_string(),
    }
}

/// Crawls breadth-first from `seeds`, fetching each URL once at its minimal
/// hop distance and never beyond `policy.max_hops`. Only Wikipedia pages are
/// expanded, and only through the link classes in `policy.follow`.
pub fn crawl_snowball(
    seeds: &[SeedEntry],
    policy: &CrawlPolicy,
    fetcher: &dyn Fetcher,
) -> Result<CrawlOutcome, CorpusError> {
    if seeds.is_empty() {
        return Err(CorpusError::Usage("seed list is empty".into()));
    }
    policy.validate()?;
    let session = Session::new(policy, fetcher);

    let mut discovered: HashSet<Url> = HashSet::new();
    let mut frontier: Vec<Url> = Vec::new();
    for seed in seeds {
        let mut url = seed
            .parsed_url()
            .map_err(|e| CorpusError::Usage(format!("invalid seed URL {:?}: {e}", seed.url)))?;
        url.set_fragment(None);
        if discovered.insert(url.clone()) {
            frontier.push(url);
        }
    }

    let mut out = CrawlOutcome::default();
    let mut fetched_ids: HashSet<String> = HashSet::new();
    let mut raw_edges: Vec<Edge> = Vec::new();
    let mut edge_set: HashSet<Edge> = HashSet::new();

    for hop in 0..=policy.max_hops {
        if frontier.is_empty() {
            break;
        }
        log::info!("crawl hop {hop}: fetching {} pages", frontier.len());
        let results = session.fetch_all(&frontier);
        let mut next = Vec::new();
        for (url, result) in frontier.iter().zip(results) {
            let page = match result {
                Ok(p) => p,
                Err(reason) => {
                    log::warn!("skipping {url}: {reason}");
                    out.skipped.push(SkippedUrl {
                        url: url.to_string(),
                        hop,
                        reason,
                    });
                    continue;
                }
            };
            let parsed = parse_page(&page.url, &page.body);
            if parsed.malformed {
                log::debug!("recovered from malformed HTML at {url}");
            }
            let id = document_id(url.as_str());
            let from_wiki = policy.is_wiki(url);
            if hop < policy.max_hops {
                for (class, target) in &parsed.links {
                    if !policy.follows(from_wiki, *class, target) || target == url {
                        continue;
                    }
                    let edge = Edge {
                        from: id.clone(),
                        to: document_id(target.as_str()),
                        class: *class,
                    };
                    if edge_set.insert(edge.clone()) {
                        raw_edges.push(edge);
                    }
                    if !discovered.contains(target) && discovered.len() < policy.max_pages {
                        discovered.insert(target.clone());
                        next.push(target.clone());
                    }
                }
            }
            fetched_ids.insert(id.clone());
            out.pages.push(CrawledPage {
                id,
                url: url.to_string(),
                title: parsed.title,
                text: parsed.text,
                hop,
                source: policy.source_of(url),
                fetched_at: Utc::now(),
                malformed: parsed.malformed,
            });
        }
        frontier = next;
    }
    out.edges = raw_edges
        .into_iter()
        .filter(|e| fetched_ids.contains(&e.from) && fetched_ids.contains(&e.to))
        .collect();
    Ok(out)
}

/// Draws `n` distinct articles from the random-article endpoint, redrawing
/// whenever a draw repeats an earlier one or lands in `exclude`.
pub fn sample_negative_seeds(
    fetcher: &dyn Fetcher,
    random_endpoint: &Url,
    n: usize,
    exclude: &HashSet<String>,
    policy: &CrawlPolicy,
) -> Result<Vec<SeedEntry>, CorpusError> {
    if n == 0 {
        return Err(CorpusError::Usage("number of negatives must be positive".into()));
    }
    let session = Session::new(policy, fetcher);
    let budget = n.saturating_mul(policy.max_draws_per_negative.max(1));
    let mut chosen: Vec<SeedEntry> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for _ in 0..budget {
        if chosen.len() == n {
            break;
        }
        let page = match session.get(random_endpoint) {
            Ok(p) => p,
            Err(e) => {
                log::warn!("random endpoint failed: {e}");
                continue;
            }
        };
        let mut url = page.url;
        url.set_fragment(None);
        let key = url.to_string();
        if exclude.contains(&key) || !seen.insert(key.clone()) {
            log::debug!("resampling: {key} already present");
            continue;
        }
        chosen.push(SeedEntry {
            url: key,
            topic: None,
            polarity: Polarity::RandomNegative,
        });
    }
    if chosen.len() < n {
        return Err(CorpusError::Exhausted {
            requested: n,
            found: chosen.len(),
        });
    }
    Ok(chosen)
}

/// Samples `n` random negative seeds and crawls their neighborhoods with the
/// same policy.
pub fn sample_negatives(
    fetcher: &dyn Fetcher,
    random_endpoint: &Url,
    n: usize,
    exclude: &HashSet<String>,
    policy: &CrawlPolicy,
) -> Result<(Vec<SeedEntry>, CrawlOutcome), CorpusError> {
    let seeds = sample_negative_seeds(fetcher, random_endpoint, n, exclude, policy)?;
    let outcome = crawl_snowball(&seeds, policy, fetcher)?;
    Ok((seeds, outcome))
}
