//! Exact enumeration of subset-minimal hitting sets.

use crate::error::{Error, Result};
use crate::problem::FeatureSet;

/// Search nodes allowed before giving up.
pub const DEFAULT_NODE_CAP: u64 = 10_000_000;

/// All subset-minimal hitting sets of `family` over features `1..=m`,
/// sorted. An empty family has the single hitting set `∅`; a family
/// containing `∅` has none.
pub fn minimal_hitting_sets(family: &[FeatureSet], m: usize) -> Result<Vec<FeatureSet>> {
    minimal_hitting_sets_capped(family, m, DEFAULT_NODE_CAP)
}

pub fn minimal_hitting_sets_capped(family: &[FeatureSet], m: usize, cap: u64) -> Result<Vec<FeatureSet>> {
    if m > 64 {
        return Err(Error::CapExceeded(format!("hitting sets over {m} features; at most 64 are supported")));
    }
    for s in family {
        s.check_range(m)?;
    }
    let mut sets: Vec<u64> = family.iter().map(FeatureSet::to_mask).collect();
    sets.sort_unstable();
    sets.dedup();
    // Supersets never change the minimal hitting sets.
    let all = sets.clone();
    sets.retain(|&s| !all.iter().any(|&o| o != s && o & s == o));
    if sets.contains(&0) {
        return Ok(Vec::new());
    }
    let mut search = Search { sets, nodes: 0, cap, out: Vec::new() };
    search.branch(0, 0)?;
    let mut out: Vec<FeatureSet> = search.out.into_iter().map(FeatureSet::from_mask).collect();
    out.sort();
    Ok(out)
}

struct Search {
    sets: Vec<u64>,
    nodes: u64,
    cap: u64,
    out: Vec<u64>,
}

impl Search {
    fn branch(&mut self, chosen: u64, excluded: u64) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.cap {
            return Err(Error::CombinatorialLimit { cap: self.cap });
        }
        // Each chosen element must keep a set that only it hits; adding
        // elements can only take such sets away.
        let mut private = 0u64;
        for &s in &self.sets {
            let hit = s & chosen;
            if hit.count_ones() == 1 {
                private |= hit;
            }
        }
        if private != chosen {
            return Ok(());
        }
        // Branch on the unhit set with the fewest usable elements; a
        // single usable element is a forced choice.
        let mut best: Option<u64> = None;
        for &s in &self.sets {
            if s & chosen != 0 {
                continue;
            }
            let usable = s & !excluded;
            if usable == 0 {
                return Ok(());
            }
            if best.is_none_or(|b| usable.count_ones() < b.count_ones()) {
                best = Some(usable);
            }
        }
        let Some(mut usable) = best else {
            self.out.push(chosen);
            return Ok(());
        };
        let mut excluded = excluded;
        while usable != 0 {
            let bit = usable & usable.wrapping_neg();
            usable &= !bit;
            self.branch(chosen | bit, excluded)?;
            excluded |= bit;
        }
        Ok(())
    }
}

/// True iff `set` intersects every member of `family`.
pub fn is_hitting_set(set: &FeatureSet, family: &[FeatureSet]) -> bool {
    family.iter().all(|s| s.intersects(set))
}
