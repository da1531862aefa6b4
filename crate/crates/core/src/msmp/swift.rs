use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ExplanationKind, FreedChoice, Predicate, RunConfig, RunStats};
use crate::error::{Error, Result};
use crate::oracle::Oracle;
use crate::parallel::{Decision, DecisionRule, ProbeStatus};
use crate::problem::FeatureSet;

fn prefix_union(s: &FeatureSet, w: &[usize], j: usize) -> FeatureSet {
    s.union(&w[..j].iter().copied().collect())
}

/// Shortest `j` such that `pred(S ∪ W[..j])` holds, assuming it holds at
/// `j = |W|`. Each round probes up to `q` evenly spaced prefixes
/// concurrently.
pub fn find_transition_prefix(pred: &Predicate<'_>, s: &FeatureSet, w: &[usize], q: usize) -> Result<usize> {
    transition_in(pred, s, w, q, -1)
}

/// As [`find_transition_prefix`], with prefix `lo` already known to fail.
fn transition_in(pred: &Predicate<'_>, s: &FeatureSet, w: &[usize], q: usize, mut lo: isize) -> Result<usize> {
    let mut hi = w.len() as isize;
    while lo + 1 < hi {
        let gap = hi - lo;
        let omega = (q as isize).min(gap - 1);
        let mut positions: Vec<usize> =
            (1..=omega).map(|r| (lo + (r * gap + omega) / (omega + 1)) as usize).collect();
        positions.dedup();
        let probes: Vec<FeatureSet> = positions.iter().map(|&p| prefix_union(s, w, p)).collect();
        let outcome = pred.eval_batch(&probes, DecisionRule::BoundarySearch, q)?;
        let Decision::Boundary(t) = outcome.decision else {
            return Err(Error::OracleFailure("boundary batch returned a foreign decision".into()));
        };
        if t < positions.len() {
            hi = positions[t] as isize;
        }
        if t > 0 {
            lo = positions[t - 1] as isize;
        }
    }
    Ok(hi as usize)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FdOutcome {
    /// Every tested feature is necessary; they were moved to `S`.
    AllNecessary(Vec<usize>),
    /// This feature is redundant and was dropped from `W`.
    Freed(usize),
}

/// Tests the last `min(q, |W|)` features of `W` for necessity in one round.
/// On success they join `S`; otherwise one redundant feature leaves `W`.
pub fn feat_disjunct(
    pred: &Predicate<'_>,
    s: &mut FeatureSet,
    w: &mut Vec<usize>,
    q: usize,
    choice: FreedChoice,
) -> Result<FdOutcome> {
    let t = q.min(w.len());
    if t == 0 {
        return Err(Error::InvalidConfig("feature disjunction on an empty candidate list".into()));
    }
    let tested: Vec<usize> = w[w.len() - t..].to_vec();
    let whole = s.union(&w.iter().copied().collect());
    let probes: Vec<FeatureSet> = tested.iter().map(|&i| whole.without(i)).collect();
    let rule = match choice {
        FreedChoice::Last => DecisionRule::AllFalseCheck,
        FreedChoice::Seeded(_) => DecisionRule::CollectAll,
    };
    let outcome = pred.eval_batch(&probes, rule, q)?;
    let freed = match (outcome.decision, choice) {
        (Decision::AllFalse, _) => None,
        (Decision::LastTrue(k), _) => Some(tested[k]),
        (Decision::Collected, FreedChoice::Seeded(seed)) => {
            let redundant: Vec<usize> = outcome
                .results
                .iter()
                .zip(&tested)
                .filter(|(r, _)| matches!(r, ProbeStatus::Completed(v) if pred.polarity().truth(v)))
                .map(|(_, &i)| i)
                .collect();
            // Mix the round into the seed so repeated draws differ.
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (w.len() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            redundant.choose(&mut rng).copied()
        }
        (d, _) => return Err(Error::OracleFailure(format!("unexpected decision {d:?}"))),
    };
    match freed {
        None => {
            w.truncate(w.len() - t);
            for &i in &tested {
                s.insert(i);
            }
            Ok(FdOutcome::AllNecessary(tested))
        }
        Some(i) => {
            w.retain(|&x| x != i);
            Ok(FdOutcome::Freed(i))
        }
    }
}

/// Parallel extraction: dichotomic prefix search with `q` concurrent
/// probes per round, switching to feature disjunction once the candidate
/// list has shrunk to `(1 - δ)·m`.
pub fn swift_xplain(oracle: &dyn Oracle, config: &RunConfig) -> Result<(FeatureSet, RunStats)> {
    config.validate()?;
    let pred = Predicate::new(oracle, config.kind, config.epsilon, config.norm)?;
    let order = config.ordering.resolve(pred.num_features())?;
    pred.check_feasible()?;
    let (set, fd) = swift_from(&pred, order.as_slice(), config)?;
    let mut stats = pred.stats();
    fd.apply(&mut stats);
    stats.explanation_size = set.len();
    if let FreedChoice::Seeded(seed) = config.freed_choice {
        stats.freed_seed = Some(seed);
    }
    Ok((set, stats))
}

/// Feature-disjunction counters of one extraction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FdCounters {
    pub invocations: usize,
    pub all_necessary: usize,
}

impl FdCounters {
    pub fn apply(&self, stats: &mut RunStats) {
        stats.fd_invocations += self.invocations;
        stats.fd_all_necessary += self.all_necessary;
    }
}

/// The parallel search over the features of `w` only, assuming `pred(w)`
/// holds. `w` plays the role of `F` for the disjunction threshold.
pub fn swift_from(pred: &Predicate<'_>, w: &[usize], config: &RunConfig) -> Result<(FeatureSet, FdCounters)> {
    let q = config.processors;
    let mut fd = FdCounters::default();
    let mut s = FeatureSet::default();
    let mut w: Vec<usize> = w.to_vec();
    let threshold = (1.0 - config.fd_threshold) * w.len() as f64;
    // The empty set is never a WCXp, so only AXp mode asks.
    if pred.kind() == ExplanationKind::Axp {
        let empty = pred.eval_batch(&[s.clone()], DecisionRule::BoundarySearch, 1)?;
        if empty.decision == Decision::Boundary(0) {
            w.clear();
        }
    }
    let mut lo: isize = 0;
    let mut fd_mode = false;
    while !w.is_empty() {
        if config.fd_enabled && (fd_mode || w.len() as f64 <= threshold) {
            fd_mode = true;
            fd.invocations += 1;
            if let FdOutcome::AllNecessary(_) = feat_disjunct(pred, &mut s, &mut w, q, config.freed_choice)? {
                fd.all_necessary += 1;
            }
        } else {
            let j = transition_in(pred, &s, &w, q, lo)?;
            if j == 0 {
                break;
            }
            s.insert(w[j - 1]);
            w.truncate(j - 1);
        }
        lo = -1;
    }
    Ok((s, fd))
}
