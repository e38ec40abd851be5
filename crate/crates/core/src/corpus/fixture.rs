//! Deterministic local HTTP server hosting a small synthetic wiki and a
//! separate "general web" host, for offline crawler runs and tests.
//!
//! Wiki pages live under `/wiki/` on one listener, general-web pages under
//! `/web/` on a second listener, so the two have different authorities.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use url::Url;

use super::crawl::CrawlPolicy;
use super::{LinkClass, Polarity, SeedEntry};

pub const RANDOM_PATH: &str = "/wiki/Special:Random";
pub const SEED_LIST_PATH: &str = "/wiki/List_of_controversial_issues";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixtureLink {
    /// `None` places the link in the article body, outside any followed section.
    pub class: Option<LinkClass>,
    pub target: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixtureNode {
    pub title: String,
    pub wiki: bool,
    pub paragraphs: Vec<String>,
    pub links: Vec<FixtureLink>,
}

impl FixtureNode {
    pub fn path(&self) -> String {
        if self.wiki {
            format!("/wiki/{}", self.title)
        } else {
            format!("/web/{}", self.title)
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FixtureGraph {
    pub nodes: Vec<FixtureNode>,
    /// Seed nodes with their topic, in list order.
    pub seeds: Vec<(usize, String)>,
    /// Nodes answering 404.
    pub missing: BTreeSet<usize>,
    /// Nodes excluded by robots.txt.
    pub disallowed: BTreeSet<usize>,
    /// Nodes the random-article endpoint redirects to.
    pub random_pool: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixtureParams {
    pub wiki_pages: usize,
    pub web_pages: usize,
    pub seeds: usize,
    pub topics: Vec<String>,
    pub max_links_per_class: usize,
    pub missing_rate: f64,
    pub disallowed_rate: f64,
}

impl Default for FixtureParams {
    fn default() -> Self {
        FixtureParams {
            wiki_pages: 40,
            web_pages: 30,
            seeds: 4,
            topics: vec!["Politics".into(), "Science".into(), "Religion".into()],
            max_links_per_class: 3,
            missing_rate: 0.05,
            disallowed_rate: 0.05,
        }
    }
}

const WORDS: &[&str] = &[
    "policy", "debate", "history", "river", "court", "music", "energy", "church", "market", "climate", "vote",
    "island", "garden", "theory", "protest", "museum", "species", "treaty", "school", "bridge", "novel", "law",
];

fn paragraphs(rng: &mut ChaCha8Rng) -> Vec<String> {
    (0..rng.gen_range(1..=3))
        .map(|_| {
            let n = rng.gen_range(8..20);
            let words: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap_or(&"x")).collect();
            let mut s = words.join(" ");
            s.push('.');
            s
        })
        .collect()
}

impl FixtureGraph {
    pub fn add_wiki(&mut self, title: &str) -> usize {
        self.push(title, true)
    }

    pub fn add_web(&mut self, title: &str) -> usize {
        self.push(title, false)
    }

    fn push(&mut self, title: &str, wiki: bool) -> usize {
        self.nodes.push(FixtureNode {
            title: title.to_string(),
            wiki,
            paragraphs: vec![format!("Article about {}.", title.replace('_', " "))],
            links: Vec::new(),
        });
        self.nodes.len() - 1
    }

    pub fn link(&mut self, from: usize, class: Option<LinkClass>, to: usize) {
        self.nodes[from].links.push(FixtureLink { class, target: to });
    }

    pub fn add_seed(&mut self, node: usize, topic: &str) {
        self.seeds.push((node, topic.to_string()));
    }

    /// Random graph with wiki nodes first, then web nodes.
    pub fn random(params: &FixtureParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = FixtureGraph::default();
        for i in 0..params.wiki_pages {
            g.add_wiki(&format!("Article_{i}"));
        }
        for i in 0..params.web_pages {
            g.add_web(&format!("site_{i}"));
        }
        let wiki: Vec<usize> = (0..params.wiki_pages).collect();
        let web: Vec<usize> = (params.wiki_pages..params.wiki_pages + params.web_pages).collect();
        let all: Vec<usize> = (0..g.nodes.len()).collect();
        let k = params.max_links_per_class;
        for i in 0..g.nodes.len() {
            g.nodes[i].paragraphs = paragraphs(&mut rng);
            let mut links = Vec::new();
            for _ in 0..rng.gen_range(0..=k) {
                links.push(FixtureLink {
                    class: Some(LinkClass::SeeAlso),
                    target: *wiki.choose(&mut rng).unwrap_or(&0),
                });
            }
            for _ in 0..rng.gen_range(0..=k) {
                let pool = if rng.gen_bool(0.2) || web.is_empty() {
                    &wiki
                } else {
                    &web
                };
                links.push(FixtureLink {
                    class: Some(LinkClass::References),
                    target: *pool.choose(&mut rng).unwrap_or(&0),
                });
            }
            for _ in 0..rng.gen_range(0..=k) {
                let pool = if web.is_empty() { &wiki } else { &web };
                links.push(FixtureLink {
                    class: Some(LinkClass::ExternalLinks),
                    target: *pool.choose(&mut rng).unwrap_or(&0),
                });
            }
            for _ in 0..rng.gen_range(0..=2) {
                links.push(FixtureLink {
                    class: None,
                    target: *all.choose(&mut rng).unwrap_or(&0),
                });
            }
            links.shuffle(&mut rng);
            g.nodes[i].links = links;
        }
        let mut seed_nodes = wiki.clone();
        seed_nodes.shuffle(&mut rng);
        seed_nodes.truncate(params.seeds.min(wiki.len()));
        for (j, &s) in seed_nodes.iter().enumerate() {
            let topic = params
                .topics
                .get(j % params.topics.len().max(1))
                .cloned()
                .unwrap_or_default();
            g.seeds.push((s, topic));
        }
        for &i in &all {
            if seed_nodes.contains(&i) {
                continue;
            }
            let r: f64 = rng.gen();
            if r < params.missing_rate {
                g.missing.insert(i);
            } else if r < params.missing_rate + params.disallowed_rate {
                g.disallowed.insert(i);
            }
        }
        g.random_pool = wiki
            .iter()
            .copied()
            .filter(|i| !g.missing.contains(i) && !g.disallowed.contains(i))
            .collect();
        g
    }
}

struct Shared {
    graph: FixtureGraph,
    wiki_base: Url,
    web_base: Url,
    rng: Mutex<ChaCha8Rng>,
    log: Mutex<Vec<String>>,
    stop: AtomicBool,
}

impl Shared {
    fn node_url(&self, i: usize) -> Url {
        let node = &self.graph.nodes[i];
        let base = if node.wiki { &self.wiki_base } else { &self.web_base };
        base.join(&node.path()).unwrap_or_else(|_| base.clone())
    }

    fn render(&self, i: usize) -> String {
        let node = &self.graph.nodes[i];
        let mut html = format!(
            "<!DOCTYPE html><html><head><title>{t}</title><script>var tracking = 1;</script></head><body>\
             <nav><a href=\"/wiki/Main_Page\">Main page</a></nav><h1>{t}</h1>",
            t = node.title
        );
        for p in &node.paragraphs {
            html.push_str(&format!("<p>{p}</p>"));
        }
        let href = |target: usize| {
            let t = &self.graph.nodes[target];
            if t.wiki == node.wiki {
                t.path()
            } else {
                self.node_url(target).to_string()
            }
        };
        let body: Vec<_> = node.links.iter().filter(|l| l.class.is_none()).collect();
        if !body.is_empty() {
            html.push_str("<p>Related:");
            for l in body {
                html.push_str(&format!(
                    " <a href=\"{}\">{}</a>",
                    href(l.target),
                    self.graph.nodes[l.target].title
                ));
            }
            html.push_str("</p>");
        }
        for (class, heading) in [
            (LinkClass::SeeAlso, "See also"),
            (LinkClass::References, "References"),
            (LinkClass::ExternalLinks, "External links"),
        ] {
            let items: Vec<_> = node.links.iter().filter(|l| l.class == Some(class)).collect();
            if items.is_empty() {
                continue;
            }
            html.push_str(&format!("<h2>{heading}<span>[edit]</span></h2><ul>"));
            for l in items {
                html.push_str(&format!(
                    "<li><a href=\"{}\">{}</a></li>",
                    href(l.target),
                    self.graph.nodes[l.target].title
                ));
            }
            html.push_str("</ul>");
        }
        html.push_str("</body></html>");
        html
    }

    fn seed_list(&self) -> String {
        let mut html =
            String::from("<!DOCTYPE html><html><head><title>List of controversial issues</title></head><body>");
        let mut topics: Vec<&str> = Vec::new();
        for (_, t) in &self.graph.seeds {
            if !topics.contains(&t.as_str()) {
                topics.push(t);
            }
        }
        for topic in topics {
            html.push_str(&format!("<h2>{topic}</h2><ul>"));
            for (n, t) in &self.graph.seeds {
                if t == topic {
                    let node = &self.graph.nodes[*n];
                    html.push_str(&format!("<li><a href=\"{}\">{}</a></li>", node.path(), node.title));
                }
            }
            html.push_str("</ul>");
        }
        html.push_str("</body></html>");
        html
    }

    fn robots(&self, wiki: bool) -> String {
        let mut body = String::from("User-agent: *\n");
        for &i in &self.graph.disallowed {
            let node = &self.graph.nodes[i];
            if node.wiki == wiki {
                body.push_str(&format!("Disallow: {}$\n", node.path()));
            }
        }
        body
    }

    fn respond(&self, wiki: bool, path: &str) -> (u16, Vec<(String, String)>, String) {
        let base = if wiki { &self.wiki_base } else { &self.web_base };
        self.log.lock().unwrap_or_else(|e| e.into_inner()).push(
            base.join(path)
                .map(|u| u.to_string())
                .unwrap_or_else(|_| path.to_string()),
        );
        if path == "/robots.txt" {
            return (
                200,
                vec![("Content-Type".into(), "text/plain".into())],
                self.robots(wiki),
            );
        }
        if wiki && path == RANDOM_PATH && !self.graph.random_pool.is_empty() {
            let pick = {
                let mut rng = self.rng.lock().unwrap_or_else(|e| e.into_inner());
                self.graph.random_pool[rng.gen_range(0..self.graph.random_pool.len())]
            };
            return (
                302,
                vec![("Location".into(), self.node_url(pick).to_string())],
                String::new(),
            );
        }
        if wiki && path == SEED_LIST_PATH {
            return (200, vec![], self.seed_list());
        }
        let found = self
            .graph
            .nodes
            .iter()
            .position(|n| n.wiki == wiki && n.path() == path)
            .filter(|i| !self.graph.missing.contains(i));
        match found {
            Some(i) => (200, vec![], self.render(i)),
            None => (404, vec![], "<html><body><p>Not found</p></body></html>".into()),
        }
    }
}

fn handle(shared: &Shared, wiki: bool, stream: TcpStream) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" || line == "\n" {
            break;
        }
    }
    let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_string();
    let (status, headers, body) = shared.respond(wiki, &path);
    let reason = match status {
        200 => "OK",
        302 => "Found",
        _ => "Not Found",
    };
    let mut out = format!(
        "HTTP/1.1 {status} {reason}\r\nContent-Length: {}\r\nConnection: close\r\n",
        body.len()
    );
    if !headers.iter().any(|(k, _)| k == "Content-Type") {
        out.push_str("Content-Type: text/html; charset=utf-8\r\n");
    }
    for (k, v) in headers {
        out.push_str(&format!("{k}: {v}\r\n"));
    }
    out.push_str("\r\n");
    out.push_str(&body);
    let mut stream = stream;
    stream.write_all(out.as_bytes())?;
    stream.flush()
}

/// Running fixture server; stops when dropped.
pub struct FixtureServer {
    shared: Arc<Shared>,
    addrs: [SocketAddr; 2],
    threads: Vec<JoinHandle<()>>,
}

impl FixtureServer {
    pub fn start(graph: FixtureGraph, seed: u64) -> std::io::Result<Self> {
        let wiki = TcpListener::bind("127.0.0.1:0")?;
        let web = TcpListener::bind("127.0.0.1:0")?;
        let addrs = [wiki.local_addr()?, web.local_addr()?];
        let parse = |a: SocketAddr| Url::parse(&format!("http://{a}/")).map_err(std::io::Error::other);
        let shared = Arc::new(Shared {
            graph,
            wiki_base: parse(addrs[0])?,
            web_base: parse(addrs[1])?,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            log: Mutex::new(Vec::new()),
            stop: AtomicBool::new(false),
        });
        let mut threads = Vec::new();
        for (listener, is_wiki) in [(wiki, true), (web, false)] {
            let shared = Arc::clone(&shared);
            threads.push(std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if shared.stop.load(Ordering::SeqCst) {
                        break;
                    }
                    if let Ok(stream) = stream {
                        if let Err(e) = handle(&shared, is_wiki, stream) {
                            log::debug!("fixture connection error: {e}");
                        }
                    }
                }
            }));
        }
        Ok(FixtureServer { shared, addrs, threads })
    }

    pub fn graph(&self) -> &FixtureGraph {
        &self.shared.graph
    }

    pub fn wiki_base(&self) -> &Url {
        &self.shared.wiki_base
    }

    pub fn web_base(&self) -> &Url {
        &self.shared.web_base
    }

    pub fn url_of(&self, node: usize) -> Url {
        self.shared.node_url(node)
    }

    pub fn random_url(&self) -> Url {
        self.shared
            .wiki_base
            .join(RANDOM_PATH)
            .unwrap_or_else(|_| self.shared.wiki_base.clone())
    }

    pub fn seed_list_url(&self) -> Url {
        self.shared
            .wiki_base
            .join(SEED_LIST_PATH)
            .unwrap_or_else(|_| self.shared.wiki_base.clone())
    }

    pub fn seed_entries(&self) -> Vec<SeedEntry> {
        self.shared
            .graph
            .seeds
            .iter()
            .map(|(n, topic)| SeedEntry {
                url: self.url_of(*n).to_string(),
                topic: Some(topic.clone()),
                polarity: Polarity::Controversial,
            })
            .collect()
    }

    /// Crawl policy targeting this server: its wiki listener counts as
    /// Wikipedia and no politeness delay is applied.
    pub fn policy(&self) -> CrawlPolicy {
        CrawlPolicy {
            host_delay_ms: 0,
            timeout_ms: 5_000,
            wiki_hosts: vec![super::fetch::authority(&self.shared.wiki_base)],
            ..CrawlPolicy::default()
        }
    }

    /// Every requested URL, in arrival order.
    pub fn requests(&self) -> Vec<String> {
        self.shared.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        for addr in self.addrs {
            let _ = TcpStream::connect_timeout(&addr, Duration::from_millis(200));
        }
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}
