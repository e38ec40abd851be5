//! Independent breadth-first model of what a crawl of a fixture graph must
//! produce, computed directly from the graph structure.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use controversy_core::corpus::fixture::FixtureGraph;
use controversy_core::corpus::LinkClass;

pub struct OracleCrawl {
    /// node → hop, for fetched nodes only.
    pub hops: BTreeMap<usize, u8>,
    /// followed (from, to) pairs between fetched nodes.
    pub edges: BTreeSet<(usize, usize)>,
}

pub fn fetchable(g: &FixtureGraph, n: usize) -> bool {
    !g.missing.contains(&n) && !g.disallowed.contains(&n)
}

pub fn crawl(g: &FixtureGraph, seeds: &[usize], max_hops: u8) -> OracleCrawl {
    let mut dist: BTreeMap<usize, u8> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for &s in seeds {
        if let Entry::Vacant(e) = dist.entry(s) {
            e.insert(0);
            queue.push_back(s);
        }
    }
    let mut raw_edges = BTreeSet::new();
    while let Some(n) = queue.pop_front() {
        let d = dist[&n];
        if d >= max_hops || !fetchable(g, n) || !g.nodes[n].wiki {
            continue;
        }
        for link in &g.nodes[n].links {
            let Some(class) = link.class else { continue };
            let t = link.target;
            if t == n || (class == LinkClass::SeeAlso && !g.nodes[t].wiki) {
                continue;
            }
            raw_edges.insert((n, t));
            if let Entry::Vacant(e) = dist.entry(t) {
                e.insert(d + 1);
                queue.push_back(t);
            }
        }
    }
    let hops: BTreeMap<usize, u8> = dist.into_iter().filter(|(n, _)| fetchable(g, *n)).collect();
    let edges = raw_edges
        .into_iter()
        .filter(|(a, b)| hops.contains_key(a) && hops.contains_key(b))
        .collect();
    OracleCrawl { hops, edges }
}

/// node → index of the nearest source within `max_hops` (ties → lowest index).
pub fn nearest(edges: &BTreeSet<(usize, usize)>, sources: &[usize], max_hops: u8) -> BTreeMap<usize, usize> {
    let mut best: BTreeMap<usize, (u8, usize)> = BTreeMap::new();
    for (i, &s) in sources.iter().enumerate() {
        let mut dist: BTreeMap<usize, u8> = BTreeMap::from([(s, 0)]);
        let mut queue = VecDeque::from([s]);
        while let Some(n) = queue.pop_front() {
            let d = dist[&n];
            if d == max_hops {
                continue;
            }
            for &(a, b) in edges {
                if a == n && !dist.contains_key(&b) {
                    dist.insert(b, d + 1);
                    queue.push_back(b);
                }
            }
        }
        for (n, d) in dist {
            let better = match best.get(&n) {
                None => true,
                Some(&(bd, _)) => d < bd,
            };
            if better {
                best.insert(n, (d, i));
            }
        }
    }
    best.into_iter().map(|(n, (_, i))| (n, i)).collect()
}

pub fn discovered_count(g: &FixtureGraph, seeds: &[usize], max_hops: u8) -> usize {
    let mut dist: BTreeMap<usize, u8> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for &s in seeds {
        if dist.insert(s, 0).is_none() {
            queue.push_back(s);
        }
    }
    while let Some(n) = queue.pop_front() {
        let d = dist[&n];
        if d >= max_hops || !fetchable(g, n) || !g.nodes[n].wiki {
            continue;
        }
        for link in &g.nodes[n].links {
            let Some(class) = link.class else { continue };
            let t = link.target;
            if t == n || (class == LinkClass::SeeAlso && !g.nodes[t].wiki) || dist.contains_key(&t) {
                continue;
            }
            dist.insert(t, d + 1);
            queue.push_back(t);
        }
    }
    dist.keys().filter(|n| !g.disallowed.contains(n)).count()
}

/// Crawls a random fixture graph through the HTTP fixture server (controversial
/// seeds plus two sampled negatives), then checks hops, dedup, edges, labels,
/// topics and split leakage against the oracle.
pub fn verify_random_graph(seed: u64) -> Result<(), String> {
    use std::collections::{HashMap, HashSet};

    use controversy_core::corpus::fixture::{FixtureParams, FixtureServer, RANDOM_PATH};
    use controversy_core::corpus::{
        crawl_snowball, document_id, propagate_labels, sample_negative_seeds, split_dataset, HttpFetcher, Label,
        SeedCounts, Source,
    };

    let graph = FixtureGraph::random(&FixtureParams::default(), seed);
    let server = FixtureServer::start(graph.clone(), seed).map_err(|e| e.to_string())?;
    let mut policy = server.policy();
    policy.width = 1 + (seed % 3) as usize;
    let fetcher = HttpFetcher::new(&policy.user_agent, std::time::Duration::from_secs(5));

    let mut seeds = server.seed_entries();
    let exclude: HashSet<String> = seeds.iter().map(|s| s.url.clone()).collect();
    let negatives =
        sample_negative_seeds(&fetcher, &server.random_url(), 2, &exclude, &policy).map_err(|e| e.to_string())?;
    seeds.extend(negatives);

    let node_of: HashMap<String, usize> = (0..graph.nodes.len())
        .map(|n| (server.url_of(n).to_string(), n))
        .collect();
    let id_of = |n: usize| document_id(server.url_of(n).as_str());
    let seed_nodes: Vec<usize> = seeds.iter().map(|s| node_of[&s.url]).collect();
    let positive_nodes: Vec<usize> = graph.seeds.iter().map(|(n, _)| *n).collect();

    let before = server.requests().len();
    let outcome = crawl_snowball(&seeds, &policy, &fetcher).map_err(|e| e.to_string())?;
    let oracle = crawl(&graph, &seed_nodes, 2);

    let page_requests: Vec<String> = server.requests()[before..]
        .iter()
        .filter(|u| !u.ends_with("/robots.txt") && !u.ends_with(RANDOM_PATH))
        .cloned()
        .collect();
    let unique: HashSet<&String> = page_requests.iter().collect();
    if unique.len() != page_requests.len() {
        return Err(format!("graph {seed}: a URL was fetched more than once"));
    }
    if page_requests.len() != discovered_count(&graph, &seed_nodes, 2) {
        return Err(format!(
            "graph {seed}: {} page requests, oracle expects {}",
            page_requests.len(),
            discovered_count(&graph, &seed_nodes, 2)
        ));
    }

    let got_hops: BTreeMap<usize, u8> = outcome.pages.iter().map(|p| (node_of[&p.url], p.hop)).collect();
    if got_hops != oracle.hops {
        return Err(format!(
            "graph {seed}: hops differ\n got {got_hops:?}\nwant {:?}",
            oracle.hops
        ));
    }
    if outcome.pages.iter().any(|p| p.hop > 2) {
        return Err(format!("graph {seed}: hop limit exceeded"));
    }
    let got_edges: BTreeSet<(usize, usize)> = outcome
        .edges
        .iter()
        .map(|e| {
            let find = |id: &str| outcome.pages.iter().find(|p| p.id == id).map(|p| node_of[&p.url]);
            (find(&e.from).unwrap_or(usize::MAX), find(&e.to).unwrap_or(usize::MAX))
        })
        .collect();
    if got_edges != oracle.edges {
        return Err(format!("graph {seed}: edge sets differ"));
    }

    let docs = propagate_labels(&outcome, &seeds, 2, 2018).map_err(|e| e.to_string())?;
    let near_pos = nearest(&oracle.edges, &positive_nodes, 2);
    for d in &docs {
        let n = node_of[&d.url];
        let want = near_pos.get(&n);
        if d.label != Label::from_positive(want.is_some()) {
            return Err(format!("graph {seed}: label of {} differs from oracle", d.url));
        }
        let want_topic = want.map(|&i| graph.seeds[i].1.clone());
        if d.topic != want_topic {
            return Err(format!(
                "graph {seed}: topic of {} is {:?}, oracle {:?}",
                d.url, d.topic, want_topic
            ));
        }
        if (d.hop == 0) != seed_nodes.contains(&n) {
            return Err(format!("graph {seed}: hop 0 must mark exactly the seeds"));
        }
        if (d.source == Source::GeneralWeb) == graph.nodes[n].wiki {
            return Err(format!("graph {seed}: wrong source for {}", d.url));
        }
        if d.source == Source::GeneralWeb {
            let entered = outcome.edges.iter().any(|e| {
                e.to == d.id
                    && e.class != LinkClass::SeeAlso
                    && docs.iter().any(|s| s.id == e.from && s.source == Source::Wikipedia)
            });
            if !entered {
                return Err(format!(
                    "graph {seed}: general-web page {} entered without a citation link",
                    d.url
                ));
            }
        }
    }

    let fetched_seeds = docs.iter().filter(|d| d.hop == 0).count();
    let counts = SeedCounts {
        train: fetched_seeds - 2,
        validation: 1,
        test: 1,
    };
    let splits = split_dataset(&docs, &outcome.edges, counts, 2, seed).map_err(|e| e.to_string())?;
    let fetched_seed_nodes: Vec<usize> = seed_nodes
        .iter()
        .copied()
        .filter(|n| oracle.hops.contains_key(n))
        .collect();
    let owner = nearest(&oracle.edges, &fetched_seed_nodes, 2);
    let mut split_of: HashMap<String, usize> = HashMap::new();
    for (k, s) in splits.iter().enumerate() {
        for id in &s.ids {
            if split_of.insert(id.clone(), k).is_some() {
                return Err(format!("graph {seed}: document {id} appears in two splits"));
            }
        }
    }
    if split_of.len() != docs.len() {
        return Err(format!(
            "graph {seed}: split union has {} of {} documents",
            split_of.len(),
            docs.len()
        ));
    }
    for d in &docs {
        let seed_id = id_of(fetched_seed_nodes[owner[&node_of[&d.url]]]);
        if split_of[&d.id] != split_of[&seed_id] {
            return Err(format!("graph {seed}: {} leaked away from its seed's split", d.url));
        }
    }
    Ok(())
}
