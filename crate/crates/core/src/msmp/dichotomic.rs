use super::{ExplanationKind, Predicate};
use crate::error::Result;
use crate::problem::{FeatureOrder, FeatureSet};

/// Sequential dichotomic extraction.
///
/// Keeps `pred(S ∪ W)` true, with `W` a prefix of the ordering. Each step
/// binary-searches the shortest prefix of `W` that still satisfies the
/// predicate together with `S`; the last feature of that prefix is
/// necessary and moves to `S`. When the empty prefix suffices, `S` is
/// returned.
pub fn dichotomic_extract(pred: &Predicate<'_>, order: &FeatureOrder) -> Result<FeatureSet> {
    pred.check_feasible()?;
    dichotomic_from(pred, order.as_slice())
}

/// Dichotomic search over the features of `w` only, assuming `pred(w)`
/// holds.
pub fn dichotomic_from(pred: &Predicate<'_>, w: &[usize]) -> Result<FeatureSet> {
    let mut set = FeatureSet::default();
    // The empty set is never a WCXp, so only AXp mode asks.
    if pred.kind() == ExplanationKind::Axp && pred.eval(&set)? {
        return Ok(set);
    }
    let mut w: Vec<usize> = w.to_vec();
    // `lo` is the longest prefix known to fail (-1: none known yet).
    let mut lo: isize = 0;
    while !w.is_empty() {
        let mut hi = w.len() as isize;
        while lo + 1 < hi {
            let mid = lo + (hi - lo + 1) / 2;
            let probe = set.union(&w[..mid as usize].iter().copied().collect());
            if pred.eval(&probe)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if hi == 0 {
            break;
        }
        set.insert(w[hi as usize - 1]);
        w.truncate(hi as usize - 1);
        lo = -1;
    }
    Ok(set)
}
