use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Entry;
use crate::error::{Error, Result};

pub const DEFAULT_FOLDS: usize = 5;

/// Fold index of every original recording. Replicas follow their source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, e: &Entry) -> Option<usize> {
        self.assignments.get(&e.source).copied()
    }

    /// Training entries (originals and replicas outside `fold`) and test
    /// entries (originals in `fold`; replicas are never tested).
    pub fn split<'a>(&self, entries: &'a [Entry], fold: usize) -> (Vec<&'a Entry>, Vec<&'a Entry>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for e in entries {
            match self.fold_of(e) {
                Some(f) if f == fold => {
                    if !e.replica {
                        test.push(e);
                    }
                }
                Some(_) => train.push(e),
                None => {}
            }
        }
        (train, test)
    }
}

/// Stratified k-fold assignment of the distinct source recordings.
///
/// Each class is shuffled with the seeded RNG and dealt round-robin, the
/// deal continuing where the previous class stopped so fold sizes stay
/// within one of each other.
pub fn kfold_split(entries: &[Entry], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Parameter(format!("k-fold needs k >= 2, got {k}")));
    }
    let mut by_class: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut seen = std::collections::BTreeSet::new();
    for e in entries.iter().filter(|e| !e.replica) {
        if seen.insert(e.id.as_str()) {
            by_class.entry(e.class.as_str()).or_default().push(e.id.as_str());
        }
    }
    if k > seen.len() {
        return Err(Error::Parameter(format!(
            "k = {k} exceeds the {} distinct recordings",
            seen.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = BTreeMap::new();
    let mut next = 0usize;
    for (class, mut ids) in by_class {
        if ids.len() < k {
            log::warn!("class {class:?} has {} members, fewer than k = {k}", ids.len());
        }
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        for id in ids {
            assignments.insert(id.to_string(), next % k);
            next += 1;
        }
    }
    Ok(FoldPlan { k, assignments })
}
