//! Enumeration of all explanations of both kinds.
//!
//! [`enumerate`] is a MARCO-style dual search: each seed is either shrunk
//! to a new AXp or its complement to a new CXp, and the find is recorded as
//! a blocking clause so no explanation is reported twice. Once the seed
//! space is exhausted both families are complete.
//!
//! [`brute_force_enumerate`] evaluates the predicates on every subset and is
//! the independent reference for small problems.

mod mhs;
mod seeds;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use mhs::{is_hitting_set, minimal_hitting_sets, minimal_hitting_sets_capped};
pub use seeds::{SeedEngine, SeedPreference, DEFAULT_CONSTRAINT_CAP, MAX_SEED_FEATURES};

use crate::error::{Error, Result};
use crate::msmp::{
    deletion_from, dichotomic_from, swift_from, Algorithm, ExplanationKind, Predicate, RunConfig, RunStats,
};
use crate::oracle::{CancelToken, Oracle, OracleQuery};
use crate::problem::{FeatureSet, Norm};

pub const DEFAULT_BRUTE_FORCE_CAP: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationFamily {
    pub kind: ExplanationKind,
    pub sets: Vec<FeatureSet>,
    pub complete: bool,
}

impl ExplanationFamily {
    /// A family with its sets in canonical (sorted, deduplicated) order.
    pub fn new(kind: ExplanationKind, mut sets: Vec<FeatureSet>, complete: bool) -> Self {
        sets.sort();
        sets.dedup();
        ExplanationFamily { kind, sets, complete }
    }

    pub fn contains(&self, set: &FeatureSet) -> bool {
        self.sets.binary_search(set).is_ok()
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn is_antichain(&self) -> bool {
        self.sets
            .iter()
            .all(|a| self.sets.iter().all(|b| a == b || !a.is_subset(b)))
    }
}

/// Exhaustive reference: queries the oracle on all `2^m` fixed sets and
/// keeps the subset-minimal weak explanations of each kind.
pub fn brute_force_enumerate(
    oracle: &dyn Oracle,
    epsilon: f64,
    norm: Norm,
    cap: usize,
) -> Result<(ExplanationFamily, ExplanationFamily)> {
    let m = oracle.num_features();
    if m > cap || m >= 63 {
        return Err(Error::CapExceeded(format!("brute-force enumeration over {m} features (cap {cap})")));
    }
    let full = (1u64 << m) - 1;
    let cancel = CancelToken::new();
    let mut robust = vec![false; 1 << m];
    for mask in 0..=full {
        let query = OracleQuery::new(FeatureSet::from_mask(mask), epsilon, norm)?;
        robust[mask as usize] = oracle.find_adv_ex(&query, &cancel)?.is_robust();
    }
    let waxp = |s: u64| robust[s as usize];
    let wcxp = |s: u64| !robust[(full & !s) as usize];
    Ok((
        ExplanationFamily::new(ExplanationKind::Axp, minimal_masks(full, waxp), true),
        ExplanationFamily::new(ExplanationKind::Cxp, minimal_masks(full, wcxp), true),
    ))
}

/// Satisfying masks none of whose proper submasks satisfy; deliberately
/// makes no monotonicity assumption.
fn minimal_masks(full: u64, holds: impl Fn(u64) -> bool) -> Vec<FeatureSet> {
    let mut out = Vec::new();
    for s in 0..=full {
        if !holds(s) {
            continue;
        }
        let mut minimal = true;
        let mut sub = s;
        while sub != 0 {
            sub = (sub - 1) & s;
            if holds(sub) {
                minimal = false;
                break;
            }
        }
        if minimal {
            out.push(FeatureSet::from_mask(s));
        }
    }
    out
}

/// Each family is exactly the minimal hitting sets of the other.
pub fn check_duality(axps: &ExplanationFamily, cxps: &ExplanationFamily) -> Result<bool> {
    if !axps.complete || !cxps.complete {
        return Err(Error::IncompleteFamily);
    }
    let m = axps.sets.iter().chain(&cxps.sets).filter_map(|s| s.iter().next_back()).max().unwrap_or(0);
    Ok(minimal_hitting_sets(&cxps.sets, m)? == axps.sets && minimal_hitting_sets(&axps.sets, m)? == cxps.sets)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationConfig {
    /// Extraction settings; `kind` is ignored.
    pub run: RunConfig,
    pub algorithm: Algorithm,
    /// Stop after this many explanations.
    pub limit: Option<usize>,
    pub preference: SeedPreference,
    pub constraint_cap: usize,
}

impl EnumerationConfig {
    pub fn new(run: RunConfig) -> Self {
        EnumerationConfig {
            run,
            algorithm: Algorithm::Swift,
            limit: None,
            preference: SeedPreference::Maximal,
            constraint_cap: DEFAULT_CONSTRAINT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discovery {
    pub kind: ExplanationKind,
    pub set: FeatureSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    /// Explanations in the order they were found.
    pub discoveries: Vec<Discovery>,
    pub axps: ExplanationFamily,
    pub cxps: ExplanationFamily,
    pub seeds: usize,
    pub stats: RunStats,
}

fn shrink(pred: &Predicate<'_>, w: &[usize], config: &EnumerationConfig, stats: &mut RunStats) -> Result<FeatureSet> {
    match config.algorithm {
        Algorithm::Deletion => deletion_from(pred, w),
        Algorithm::Dichotomic => dichotomic_from(pred, w),
        Algorithm::Swift => {
            let (set, fd) = swift_from(pred, w, &config.run)?;
            fd.apply(stats);
            Ok(set)
        }
    }
}

/// Dual enumeration of every AXp and CXp; see the module docs.
pub fn enumerate(oracle: &dyn Oracle, config: &EnumerationConfig) -> Result<Enumeration> {
    config.run.validate()?;
    if config.limit == Some(0) {
        return Err(Error::InvalidConfig("enumeration limit must be at least 1".into()));
    }
    let started = Instant::now();
    let run = &config.run;
    let axp = Predicate::new(oracle, ExplanationKind::Axp, run.epsilon, run.norm)?;
    let cxp = Predicate::new(oracle, ExplanationKind::Cxp, run.epsilon, run.norm)?;
    let m = axp.num_features();
    let order = run.ordering.resolve(m)?;
    let mut engine = SeedEngine::new(m, config.preference)?.with_constraint_cap(config.constraint_cap);
    let mut fd_stats = RunStats::default();
    let mut discoveries = Vec::new();
    let mut seeds = 0;
    let mut complete = false;

    loop {
        if config.limit.is_some_and(|l| discoveries.len() >= l) {
            break;
        }
        let Some(seed) = engine.next_seed()? else {
            complete = true;
            break;
        };
        seeds += 1;
        if axp.eval(&seed)? {
            let w: Vec<usize> = order.as_slice().iter().copied().filter(|&i| seed.contains(i)).collect();
            let set = shrink(&axp, &w, config, &mut fd_stats)?;
            engine.block_axp(&set)?;
            discoveries.push(Discovery { kind: ExplanationKind::Axp, set });
        } else {
            let w: Vec<usize> = order.as_slice().iter().copied().filter(|&i| !seed.contains(i)).collect();
            let set = shrink(&cxp, &w, config, &mut fd_stats)?;
            engine.block_cxp(&set)?;
            discoveries.push(Discovery { kind: ExplanationKind::Cxp, set });
        }
    }

    let family = |kind| {
        let sets = discoveries.iter().filter(|d| d.kind == kind).map(|d| d.set.clone()).collect();
        ExplanationFamily::new(kind, sets, complete)
    };
    let (a, c) = (axp.stats(), cxp.stats());
    let stats = RunStats {
        oracle_calls: a.oracle_calls + c.oracle_calls,
        parallel_rounds: a.parallel_rounds + c.parallel_rounds,
        cancelled_calls: a.cancelled_calls + c.cancelled_calls,
        late_results: a.late_results + c.late_results,
        fd_invocations: fd_stats.fd_invocations,
        fd_all_necessary: fd_stats.fd_all_necessary,
        explanation_size: discoveries.len(),
        num_features: m,
        freed_seed: None,
        wall_time: started.elapsed(),
    };
    Ok(Enumeration {
        axps: family(ExplanationKind::Axp),
        cxps: family(ExplanationKind::Cxp),
        discoveries,
        seeds,
        stats,
    })
}
