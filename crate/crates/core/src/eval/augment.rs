use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Entry;
use crate::error::{Error, Result};

/// How many replicas each class receives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AugmentPolicy {
    /// Fixed number of replicas added per class name.
    Additions { per_class: BTreeMap<String, usize> },
    /// Every class grows to twice the largest class count, within each
    /// group (`per_group`) or over the whole dataset.
    DoubleLargest { per_group: bool },
}

impl AugmentPolicy {
    /// Replica additions used for the four-class rhythm data.
    pub fn afib2017() -> Self {
        let per_class = [("Normal", 3000), ("AFib", 4000), ("Other", 5000), ("Noise", 3000)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        AugmentPolicy::Additions { per_class }
    }

    pub fn alarm2015(per_group: bool) -> Self {
        AugmentPolicy::DoubleLargest { per_group }
    }
}

/// Adds replicas of randomly chosen (with replacement) originals until each
/// class reaches the policy's target. Replica ids are `{source}#r{n}`.
/// Originals keep their order; replicas follow, grouped by class.
pub fn augment_replicate(entries: &[Entry], policy: &AugmentPolicy, seed: u64) -> Result<Vec<Entry>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let originals: Vec<&Entry> = entries.iter().filter(|e| !e.replica).collect();

    // (scope, class) -> members; scope is the group for per-group doubling.
    let mut classes: BTreeMap<(String, String), Vec<&Entry>> = BTreeMap::new();
    let scoped = matches!(policy, AugmentPolicy::DoubleLargest { per_group: true });
    for e in &originals {
        let scope = if scoped { e.group.clone() } else { String::new() };
        classes.entry((scope, e.class.clone())).or_default().push(e);
    }

    let mut additions: Vec<((String, String), usize)> = Vec::new();
    match policy {
        AugmentPolicy::Additions { per_class } => {
            for (class, &n) in per_class {
                additions.push(((String::new(), class.clone()), n));
            }
        }
        AugmentPolicy::DoubleLargest { .. } => {
            let mut largest: BTreeMap<&str, usize> = BTreeMap::new();
            for ((scope, _), members) in &classes {
                let m = largest.entry(scope.as_str()).or_default();
                *m = (*m).max(members.len());
            }
            for ((scope, class), members) in &classes {
                let target = 2 * largest[scope.as_str()];
                additions.push(((scope.clone(), class.clone()), target - members.len()));
            }
        }
    }

    let mut out: Vec<Entry> = originals.iter().map(|e| (*e).clone()).collect();
    let mut counter: BTreeMap<String, usize> = BTreeMap::new();
    for (key, n) in additions {
        if n == 0 {
            continue;
        }
        let members = classes.get(&key).filter(|m| !m.is_empty()).ok_or_else(|| {
            Error::Parameter(format!("cannot replicate empty class {:?}", key.1))
        })?;
        for _ in 0..n {
            let src = members.choose(&mut rng).expect("non-empty");
            let c = counter.entry(src.id.clone()).or_default();
            *c += 1;
            out.push(Entry {
                id: format!("{}#r{}", src.id, c),
                source: src.id.clone(),
                class: src.class.clone(),
                group: src.group.clone(),
                replica: true,
            });
        }
    }
    Ok(out)
}

/// Entry count per class.
pub fn class_counts(entries: &[Entry]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for e in entries {
        *m.entry(e.class.clone()).or_default() += 1;
    }
    m
}
