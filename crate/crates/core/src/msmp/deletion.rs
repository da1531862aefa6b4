use super::Predicate;
use crate::error::Result;
use crate::problem::{FeatureOrder, FeatureSet};

/// Linear deletion: starting from every feature, try to drop each one,
/// latest in `order` first. Uses exactly `m` calls, except in CXp mode
/// when no feature could be dropped: then `F` itself still has to be
/// checked, for `m + 1`.
pub fn deletion_extract(pred: &Predicate<'_>, order: &FeatureOrder) -> Result<FeatureSet> {
    let set = deletion_from(pred, order.as_slice())?;
    // A successful drop already proves pred(F) by monotonicity.
    if set.len() == pred.num_features() {
        pred.check_feasible()?;
    }
    Ok(set)
}

/// Deletion over the features of `w` only, assuming `pred(w)` holds.
pub fn deletion_from(pred: &Predicate<'_>, w: &[usize]) -> Result<FeatureSet> {
    let mut set: FeatureSet = w.iter().copied().collect();
    for &i in w.iter().rev() {
        let candidate = set.without(i);
        if pred.eval(&candidate)? {
            set = candidate;
        }
    }
    Ok(set)
}
