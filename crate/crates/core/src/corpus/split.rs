//! Seed-level train/validation/test partitioning.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::propagate::nearest_source;
use super::{CorpusError, Document, Edge, Source};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Validation, SplitName::Test];

    pub fn title(self) -> &'static str {
        match self {
            SplitName::Train => "Train",
            SplitName::Validation => "Validation",
            SplitName::Test => "Test",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl SeedCounts {
    pub fn get(&self, name: SplitName) -> usize {
        match name {
            SplitName::Train => self.train,
            SplitName::Validation => self.validation,
            SplitName::Test => self.test,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub seeds: usize,
    pub total: usize,
    pub controversial: usize,
    pub general_web: usize,
}

impl SplitStats {
    pub fn of<'a>(docs: impl IntoIterator<Item = &'a Document>) -> Self {
        let mut s = SplitStats::default();
        for d in docs {
            s.total += 1;
            s.seeds += usize::from(d.hop == 0);
            s.controversial += usize::from(d.label.is_positive());
            s.general_web += usize::from(d.source == Source::GeneralWeb);
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub seed_ids: Vec<String>,
    pub ids: Vec<String>,
    pub stats: SplitStats,
}

impl DatasetSplit {
    /// Members of this split, in dataset order.
    pub fn select<'a>(&self, docs: &'a [Document]) -> Vec<&'a Document> {
        let ids: HashSet<&str> = self.ids.iter().map(String::as_str).collect();
        docs.iter().filter(|d| ids.contains(d.id.as_str())).collect()
    }
}

/// Assigns seeds to splits by a seeded shuffle; every other page joins the
/// split of its nearest seed (ties broken by dataset order). Seeds beyond the
/// requested counts, and the pages they own, are left out.
pub fn split_dataset(
    docs: &[Document],
    edges: &[Edge],
    counts: SeedCounts,
    max_hops: u8,
    rng_seed: u64,
) -> Result<Vec<DatasetSplit>, CorpusError> {
    let mut ids = HashSet::new();
    for d in docs {
        if !ids.insert(d.id.as_str()) {
            return Err(CorpusError::Integrity(format!("duplicate document id {}", d.id)));
        }
    }
    let seeds: Vec<String> = docs.iter().filter(|d| d.hop == 0).map(|d| d.id.clone()).collect();
    if seeds.len() < counts.total() {
        return Err(CorpusError::Usage(format!(
            "{} seeds requested but only {} available",
            counts.total(),
            seeds.len()
        )));
    }
    let nearest = nearest_source(&seeds, edges, max_hops);

    let mut order: Vec<usize> = (0..seeds.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(rng_seed));
    let mut owner: HashMap<usize, SplitName> = HashMap::new();
    let mut cursor = 0;
    let mut seed_lists: HashMap<SplitName, Vec<String>> = HashMap::new();
    for name in SplitName::ALL {
        let n = counts.get(name);
        for &i in &order[cursor..cursor + n] {
            if owner.insert(i, name).is_some() {
                return Err(CorpusError::Integrity(format!("seed {} assigned twice", seeds[i])));
            }
            seed_lists.entry(name).or_default().push(seeds[i].clone());
        }
        cursor += n;
    }

    let mut members: HashMap<SplitName, Vec<&Document>> = HashMap::new();
    for d in docs {
        let &(_, origin) = nearest
            .get(&d.id)
            .ok_or_else(|| CorpusError::Integrity(format!("document {} is not reachable from any seed", d.id)))?;
        if let Some(&name) = owner.get(&origin) {
            members.entry(name).or_default().push(d);
        }
    }

    Ok(SplitName::ALL
        .iter()
        .map(|&name| {
            let docs = members.remove(&name).unwrap_or_default();
            DatasetSplit {
                name,
                seed_ids: seed_lists.remove(&name).unwrap_or_default(),
                ids: docs.iter().map(|d| d.id.clone()).collect(),
                stats: SplitStats::of(docs.iter().copied()),
            }
        })
        .collect())
}
