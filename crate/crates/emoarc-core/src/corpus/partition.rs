//! Author-stratified corpus partitioning.
//!
//! The algorithm shuffles each author's stories with a seeded RNG and then
//! rounds the per-author proportional quotas to integers under the partition
//! capacity constraints, so every partition's share of an author stays
//! within one story of the exact proportion. A stored manifest, when
//! supplied, overrides the algorithm entirely.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Author, Partition, PartitionName, Story, StoryId};
use crate::error::{Error, Result};

/// Requested story counts per partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitTargets {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl SplitTargets {
    pub fn total(&self) -> usize {
        self.train + self.dev + self.test
    }

    fn get(&self, p: PartitionName) -> usize {
        match p {
            PartitionName::Train => self.train,
            PartitionName::Dev => self.dev,
            PartitionName::Test => self.test,
        }
    }
}

/// Deterministic author-stratified split.
///
/// Every partition receives, per author, a story count within ±1 of
/// `target_p · n_author / n_total`. Errors when the targets do not sum to
/// the corpus size or no rounding satisfies the capacity constraints.
pub fn stratified_split(
    stories: &[Story],
    targets: SplitTargets,
    seed: u64,
) -> Result<Vec<Partition>> {
    if targets.total() != stories.len() {
        return Err(Error::InfeasibleSplit(format!(
            "targets sum to {}, corpus has {} stories",
            targets.total(),
            stories.len()
        )));
    }
    if stories.is_empty() {
        return Err(Error::EmptyInput("no stories to split"));
    }
    let total = stories.len() as f64;

    let mut by_author: BTreeMap<Author, Vec<StoryId>> = BTreeMap::new();
    for s in stories {
        by_author
            .entry(s.author)
            .or_default()
            .push(s.story_id.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for ids in by_author.values_mut() {
        ids.sort();
        ids.shuffle(&mut rng);
    }

    // integer quota per (author, partition): floor of the exact share, then
    // hand out the remainders under partition capacities, at most one extra
    // per (author, partition) pair
    let authors: Vec<Author> = by_author.keys().copied().collect();
    let mut counts: BTreeMap<(Author, PartitionName), usize> = BTreeMap::new();
    let mut capacity: BTreeMap<PartitionName, isize> = PartitionName::ALL
        .iter()
        .map(|&p| (p, targets.get(p) as isize))
        .collect();
    let mut extras_needed: BTreeMap<Author, usize> = BTreeMap::new();
    let mut quota: BTreeMap<(Author, PartitionName), f64> = BTreeMap::new();
    for &a in &authors {
        let n_a = by_author[&a].len();
        let mut assigned = 0;
        for &p in &PartitionName::ALL {
            let q = targets.get(p) as f64 * n_a as f64 / total;
            let fl = q.floor() as usize;
            quota.insert((a, p), q);
            counts.insert((a, p), fl);
            *capacity.get_mut(&p).unwrap() -= fl as isize;
            assigned += fl;
        }
        extras_needed.insert(a, n_a - assigned);
    }
    // place extras: each goes to the unused partition with the most
    // remaining capacity (ties broken in train/dev/test order)
    for &a in &authors {
        let mut used: BTreeSet<PartitionName> = BTreeSet::new();
        for _ in 0..extras_needed[&a] {
            let pick = PartitionName::ALL
                .iter()
                .filter(|p| !used.contains(p) && capacity[p] > 0)
                .max_by_key(|p| capacity[p])
                .copied();
            let Some(p) = pick else {
                return Err(Error::InfeasibleSplit(format!(
                    "cannot place author {a} within ±1 of the proportional shares"
                )));
            };
            used.insert(p);
            *counts.get_mut(&(a, p)).unwrap() += 1;
            *capacity.get_mut(&p).unwrap() -= 1;
        }
    }
    debug_assert!(capacity.values().all(|&c| c == 0));
    debug_assert!(counts
        .iter()
        .all(|(k, &c)| (c as f64 - quota[k]).abs() <= 1.0));

    // hand out the shuffled stories author by author
    let mut sets: BTreeMap<PartitionName, BTreeSet<StoryId>> = PartitionName::ALL
        .iter()
        .map(|&p| (p, BTreeSet::new()))
        .collect();
    for &a in &authors {
        let ids = &by_author[&a];
        let mut offset = 0;
        for &p in &PartitionName::ALL {
            let take = counts[&(a, p)];
            for id in &ids[offset..offset + take] {
                sets.get_mut(&p).unwrap().insert(id.clone());
            }
            offset += take;
        }
    }
    Ok(PartitionName::ALL
        .iter()
        .map(|&p| Partition {
            name: p,
            story_ids: sets.remove(&p).unwrap(),
        })
        .collect())
}

/// Read a split manifest: `story_id<TAB>partition` per line.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<BTreeMap<StoryId, PartitionName>> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = BTreeMap::new();
    for (i, line) in content.lines().enumerate() {
        let lineno = i + 1;
        if line.is_empty() || (lineno == 1 && line.starts_with("story_id\t")) {
            continue;
        }
        let (id, part) = line.split_once('\t').ok_or_else(|| {
            Error::parse(path, lineno, "expected story_id<TAB>partition")
        })?;
        let part: PartitionName = part
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("unknown partition '{part}'")))?;
        if map.insert(StoryId::new(id), part).is_some() {
            return Err(Error::parse(path, lineno, format!("story '{id}' assigned twice")));
        }
    }
    Ok(map)
}

/// Write partitions as a manifest TSV, stories sorted by id.
pub fn export_manifest(partitions: &[Partition], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut rows: Vec<(StoryId, PartitionName)> = Vec::new();
    for p in partitions {
        for id in &p.story_ids {
            rows.push((id.clone(), p.name));
        }
    }
    rows.sort();
    let mut out = String::from("story_id\tpartition\n");
    for (id, p) in rows {
        out.push_str(&format!("{id}\t{p}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Turn a manifest into partitions over the given corpus. The manifest must
/// cover every story exactly once and name no unknown stories.
pub fn apply_manifest(
    stories: &[Story],
    manifest: &BTreeMap<StoryId, PartitionName>,
) -> Result<Vec<Partition>> {
    let known: BTreeSet<&StoryId> = stories.iter().map(|s| &s.story_id).collect();
    for id in manifest.keys() {
        if !known.contains(id) {
            return Err(Error::UnknownStory {
                story: id.to_string(),
            });
        }
    }
    let mut sets: BTreeMap<PartitionName, BTreeSet<StoryId>> = PartitionName::ALL
        .iter()
        .map(|&p| (p, BTreeSet::new()))
        .collect();
    for s in stories {
        let part = manifest.get(&s.story_id).ok_or_else(|| Error::InfeasibleSplit(format!(
            "manifest does not cover story '{}'",
            s.story_id
        )))?;
        sets.get_mut(part).unwrap().insert(s.story_id.clone());
    }
    Ok(PartitionName::ALL
        .iter()
        .map(|&p| Partition {
            name: p,
            story_ids: sets.remove(&p).unwrap(),
        })
        .collect())
}
