//! Seed generation for dual enumeration.
//!
//! A seed is a candidate fixed set. Every found AXp `X` forbids seeds
//! containing all of `X`; every found CXp `Y` requires seeds to fix some
//! member of `Y`. Seeds come from a small DPLL search over these clauses.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::FeatureSet;

pub const MAX_SEED_FEATURES: usize = 128;
pub const DEFAULT_CONSTRAINT_CAP: usize = 100_000;
pub const DEFAULT_SEARCH_NODE_CAP: u64 = 10_000_000;

/// Which value each feature is tried with first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedPreference {
    /// Fixed first: seeds are subset-maximal.
    #[default]
    Maximal,
    /// Free first: seeds are subset-minimal.
    Minimal,
    Random(u64),
}

impl fmt::Display for SeedPreference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedPreference::Maximal => f.write_str("maximal"),
            SeedPreference::Minimal => f.write_str("minimal"),
            SeedPreference::Random(seed) => write!(f, "random:{seed}"),
        }
    }
}

impl FromStr for SeedPreference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maximal" => Ok(SeedPreference::Maximal),
            "minimal" => Ok(SeedPreference::Minimal),
            "random" => Ok(SeedPreference::Random(0)),
            _ => s
                .strip_prefix("random:")
                .and_then(|n| n.parse().ok())
                .map(SeedPreference::Random)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown seed preference `{s}`"))),
        }
    }
}

fn to_bits(set: &FeatureSet) -> u128 {
    set.iter().fold(0u128, |acc, i| acc | 1u128 << (i - 1))
}

fn from_bits(bits: u128) -> FeatureSet {
    (0..128).filter(|b| bits >> b & 1 == 1).map(|b| b + 1).collect()
}

pub struct SeedEngine {
    m: usize,
    universe: u128,
    /// Not all of these may be fixed.
    not_all_fixed: Vec<u128>,
    /// At least one of these must be fixed.
    some_fixed: Vec<u128>,
    preference: SeedPreference,
    rng: ChaCha8Rng,
    constraint_cap: usize,
    node_cap: u64,
}

impl SeedEngine {
    pub fn new(m: usize, preference: SeedPreference) -> Result<Self> {
        if m > MAX_SEED_FEATURES {
            return Err(Error::CapExceeded(format!(
                "seed search over {m} features; at most {MAX_SEED_FEATURES} are supported"
            )));
        }
        let seed = match preference {
            SeedPreference::Random(s) => s,
            _ => 0,
        };
        Ok(SeedEngine {
            m,
            universe: if m == 128 { u128::MAX } else { (1u128 << m) - 1 },
            not_all_fixed: Vec::new(),
            some_fixed: Vec::new(),
            preference,
            rng: ChaCha8Rng::seed_from_u64(seed),
            constraint_cap: DEFAULT_CONSTRAINT_CAP,
            node_cap: DEFAULT_SEARCH_NODE_CAP,
        })
    }

    pub fn with_constraint_cap(mut self, cap: usize) -> Self {
        self.constraint_cap = cap;
        self
    }

    pub fn with_node_cap(mut self, cap: u64) -> Self {
        self.node_cap = cap;
        self
    }

    pub fn num_constraints(&self) -> usize {
        self.not_all_fixed.len() + self.some_fixed.len()
    }

    fn push(&mut self, positive: bool, set: &FeatureSet) -> Result<()> {
        set.check_range(self.m)?;
        if self.num_constraints() >= self.constraint_cap {
            return Err(Error::SeedEngineOverflow { cap: self.constraint_cap });
        }
        let bits = to_bits(set);
        if positive {
            self.some_fixed.push(bits);
        } else {
            self.not_all_fixed.push(bits);
        }
        Ok(())
    }

    /// Records a found AXp: later seeds leave one of its features free.
    pub fn block_axp(&mut self, axp: &FeatureSet) -> Result<()> {
        self.push(false, axp)
    }

    /// Records a found CXp: later seeds fix one of its features.
    pub fn block_cxp(&mut self, cxp: &FeatureSet) -> Result<()> {
        self.push(true, cxp)
    }

    /// True iff `seed` satisfies every recorded clause.
    pub fn admits(&self, seed: &FeatureSet) -> bool {
        let s = to_bits(seed);
        self.not_all_fixed.iter().all(|&x| x & !s != 0) && self.some_fixed.iter().all(|&y| y & s != 0)
    }

    /// The next unexplored seed, or `None` once the space is exhausted.
    pub fn next_seed(&mut self) -> Result<Option<FeatureSet>> {
        let mut nodes = 0;
        Ok(self.search(0, 0, &mut nodes)?.map(from_bits))
    }

    /// Unit propagation; `None` on conflict.
    fn propagate(&self, mut fixed: u128, mut free: u128) -> Option<(u128, u128)> {
        loop {
            let mut changed = false;
            for &x in &self.not_all_fixed {
                let open = x & !fixed;
                if open & free != 0 {
                    continue;
                }
                match open.count_ones() {
                    0 => return None,
                    1 => {
                        free |= open;
                        changed = true;
                    }
                    _ => {}
                }
            }
            for &y in &self.some_fixed {
                if y & fixed != 0 {
                    continue;
                }
                let open = y & !free;
                match open.count_ones() {
                    0 => return None,
                    1 => {
                        fixed |= open;
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return Some((fixed, free));
            }
        }
    }

    fn search(&mut self, fixed: u128, free: u128, nodes: &mut u64) -> Result<Option<u128>> {
        *nodes += 1;
        if *nodes > self.node_cap {
            return Err(Error::CombinatorialLimit { cap: self.node_cap });
        }
        let Some((fixed, free)) = self.propagate(fixed, free) else {
            return Ok(None);
        };
        let open = self.universe & !(fixed | free);
        if open == 0 {
            return Ok(Some(fixed));
        }
        let bit = open & open.wrapping_neg();
        let fix_first = match self.preference {
            SeedPreference::Maximal => true,
            SeedPreference::Minimal => false,
            SeedPreference::Random(_) => self.rng.gen(),
        };
        for fix in [fix_first, !fix_first] {
            let found = if fix {
                self.search(fixed | bit, free, nodes)?
            } else {
                self.search(fixed, free | bit, nodes)?
            };
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_engine_prefers_extremes() {
        let mut max = SeedEngine::new(4, SeedPreference::Maximal).unwrap();
        assert_eq!(max.next_seed().unwrap(), Some(FeatureSet::full(4)));
        let mut min = SeedEngine::new(4, SeedPreference::Minimal).unwrap();
        assert_eq!(min.next_seed().unwrap(), Some(FeatureSet::new()));
    }

    #[test]
    fn seeds_respect_blocks_and_exhaust() {
        let mut engine = SeedEngine::new(3, SeedPreference::Maximal).unwrap();
        engine.block_axp(&FeatureSet::from([2])).unwrap();
        engine.block_axp(&FeatureSet::from([1, 3])).unwrap();
        let seed = engine.next_seed().unwrap().unwrap();
        assert_eq!(seed, FeatureSet::from([1]));
        assert!(engine.admits(&seed));
        engine.block_cxp(&FeatureSet::from([2, 3])).unwrap();
        assert_eq!(engine.next_seed().unwrap(), Some(FeatureSet::from([3])));
        engine.block_cxp(&FeatureSet::from([1, 2])).unwrap();
        assert_eq!(engine.next_seed().unwrap(), None);
    }

    #[test]
    fn every_preference_yields_admissible_seeds() {
        for pref in [SeedPreference::Maximal, SeedPreference::Minimal, SeedPreference::Random(3)] {
            let mut engine = SeedEngine::new(6, pref).unwrap();
            engine.block_axp(&FeatureSet::from([1, 2])).unwrap();
            engine.block_cxp(&FeatureSet::from([4, 5])).unwrap();
            engine.block_axp(&FeatureSet::from([4, 6])).unwrap();
            let seed = engine.next_seed().unwrap().unwrap();
            assert!(engine.admits(&seed), "{pref}: {seed}");
        }
    }

    #[test]
    fn constraint_cap() {
        let mut engine = SeedEngine::new(3, SeedPreference::Maximal).unwrap().with_constraint_cap(1);
        engine.block_axp(&FeatureSet::from([1])).unwrap();
        assert_eq!(engine.block_cxp(&FeatureSet::from([2])), Err(Error::SeedEngineOverflow { cap: 1 }));
    }

    #[test]
    fn preference_names() {
        assert_eq!("random:7".parse::<SeedPreference>().unwrap(), SeedPreference::Random(7));
        assert_eq!("maximal".parse::<SeedPreference>().unwrap().to_string(), "maximal");
        assert!("widest".parse::<SeedPreference>().is_err());
    }
}
