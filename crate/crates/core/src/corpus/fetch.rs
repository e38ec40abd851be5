//! Page fetching: the [`Fetcher`] abstraction, a live HTTP client, and the
//! per-host politeness gate.

use std::collections::HashMap;
use std::io::Read;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use url::Url;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FetchedPage {
    /// URL after following redirects.
    pub url: Url,
    pub body: String,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FetchError {
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
}

impl FetchError {
    pub fn is_transient(&self) -> bool {
        match self {
            FetchError::Status(code) => *code >= 500 || *code == 429,
            FetchError::Timeout | FetchError::Transport(_) => true,
        }
    }
}

pub trait Fetcher: Sync {
    fn fetch(&self, url: &Url) -> Result<FetchedPage, FetchError>;
}

/// Blocking HTTP client that follows redirects.
pub struct HttpFetcher {
    agent: ureq::Agent,
}

const MAX_BODY_BYTES: u64 = 16 * 1024 * 1024;

impl HttpFetcher {
    pub fn new(user_agent: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .user_agent(user_agent)
            .http_status_as_error(false)
            .build()
            .into();
        HttpFetcher { agent }
    }
}

impl Fetcher for HttpFetcher {
    fn fetch(&self, url: &Url) -> Result<FetchedPage, FetchError> {
        use ureq::ResponseExt;
        let mut resp = self.agent.get(url.as_str()).call().map_err(|e| match e {
            ureq::Error::Timeout(_) => FetchError::Timeout,
            other => FetchError::Transport(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(FetchError::Status(status));
        }
        let final_url = Url::parse(&resp.get_uri().to_string()).unwrap_or_else(|_| url.clone());
        let mut bytes = Vec::new();
        resp.body_mut()
            .as_reader()
            .take(MAX_BODY_BYTES)
            .read_to_end(&mut bytes)
            .map_err(|e| FetchError::Transport(e.to_string()))?;
        Ok(FetchedPage {
            url: final_url,
            body: String::from_utf8_lossy(&bytes).into_owned(),
        })
    }
}

/// Host key used for politeness and robots caching: `host[:port]`.
pub fn authority(url: &Url) -> String {
    match (url.host_str(), url.port()) {
        (Some(h), Some(p)) => format!("{h}:{p}"),
        (Some(h), None) => h.to_string(),
        _ => String::new(),
    }
}

/// Enforces a minimum delay between consecutive requests to the same host.
pub struct HostThrottle {
    delay: Duration,
    next: Mutex<HashMap<String, Instant>>,
}

impl HostThrottle {
    pub fn new(delay: Duration) -> Self {
        HostThrottle {
            delay,
            next: Mutex::new(HashMap::new()),
        }
    }

    pub fn wait(&self, url: &Url) {
        if self.delay.is_zero() {
            return;
        }
        let slot = {
            let mut next = self.next.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let entry = next.entry(authority(url)).or_insert(now);
            let slot = (*entry).max(now);
            *entry = slot + self.delay;
            slot
        };
        let now = Instant::now();
        if slot > now {
            std::thread::sleep(slot - now);
        }
    }
}
