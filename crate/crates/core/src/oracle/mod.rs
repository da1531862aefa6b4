//! Robustness oracles deciding the existence of constrained adversarial
//! examples (`FindAdvEx`).
//!
//! A query pins the features in `fixed` to the instance's values and asks
//! whether some point within distance `epsilon` of the instance (under the
//! query's norm) changes the prediction.

mod cancel;
mod external;
mod grid;
mod synthetic;

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

pub use cancel::CancelToken;
pub use external::{ExternalOracle, ExternalOracleConfig, DEFAULT_CHECK_TIMEOUT};
pub use grid::{GridOracle, DEFAULT_CANDIDATE_CAP};
pub use synthetic::{SyntheticOracle, SyntheticSpec};

use crate::error::{Error, Result};
use crate::problem::{ExplanationProblem, FeatureSet, Norm, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleQuery {
    pub fixed: FeatureSet,
    pub epsilon: f64,
    pub norm: Norm,
}

impl OracleQuery {
    pub fn new(fixed: FeatureSet, epsilon: f64, norm: Norm) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(OracleQuery { fixed, epsilon, norm })
    }

    /// Checks the query against an `m`-feature problem.
    pub fn validate(&self, m: usize) -> Result<()> {
        check_epsilon(self.epsilon)?;
        self.fixed.check_range(m)
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidQuery(format!("epsilon must be positive and finite, got {epsilon}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// An adversarial example agreeing with the instance on every fixed feature.
    AdvFound(Point),
    Robust,
}

impl Verdict {
    pub fn is_robust(&self) -> bool {
        matches!(self, Verdict::Robust)
    }

    pub fn witness(&self) -> Option<&Point> {
        match self {
            Verdict::AdvFound(w) => Some(w),
            Verdict::Robust => None,
        }
    }
}

/// What an oracle promises about its answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub name: String,
    /// `Robust` is a proof of robustness rather than a trusted claim.
    pub exact: bool,
    /// Witnesses are real points that `verify_witness` can check.
    pub geometric_witnesses: bool,
}

pub trait Oracle: Send + Sync {
    fn num_features(&self) -> usize;

    fn capabilities(&self) -> Capabilities;

    /// Decides the query. Implementations must return `Err(Error::Cancelled)`
    /// promptly once `cancel` fires.
    fn find_adv_ex(&self, query: &OracleQuery, cancel: &CancelToken) -> Result<Verdict>;
}

impl<O: Oracle + ?Sized> Oracle for &O {
    fn num_features(&self) -> usize {
        (**self).num_features()
    }

    fn capabilities(&self) -> Capabilities {
        (**self).capabilities()
    }

    fn find_adv_ex(&self, query: &OracleQuery, cancel: &CancelToken) -> Result<Verdict> {
        (**self).find_adv_ex(query, cancel)
    }
}

impl<O: Oracle + ?Sized> Oracle for std::sync::Arc<O> {
    fn num_features(&self) -> usize {
        (**self).num_features()
    }

    fn capabilities(&self) -> Capabilities {
        (**self).capabilities()
    }

    fn find_adv_ex(&self, query: &OracleQuery, cancel: &CancelToken) -> Result<Verdict> {
        (**self).find_adv_ex(query, cancel)
    }
}

/// True iff `witness` agrees with the instance on every fixed feature, lies
/// within `epsilon` (plus `tolerance`) and is classified differently.
pub fn verify_witness(
    problem: &ExplanationProblem,
    witness: &Point,
    query: &OracleQuery,
    tolerance: f64,
) -> Result<bool> {
    let model = problem.problem();
    model.check_point(witness)?;
    let v = &problem.instance().point;
    if query.fixed.iter().any(|i| witness.get(i) != v.get(i)) {
        return Ok(false);
    }
    if model.distance(witness, v, query.norm)? > query.epsilon + tolerance {
        return Ok(false);
    }
    Ok(model.classifier().evaluate(witness) != problem.instance().label)
}

/// Wraps an oracle and logs every query it answers, in call order.
pub struct Recording<O> {
    inner: O,
    log: Mutex<Vec<FeatureSet>>,
}

impl<O: Oracle> Recording<O> {
    pub fn new(inner: O) -> Self {
        Recording { inner, log: Mutex::new(Vec::new()) }
    }

    /// Fixed sets of all calls made so far.
    pub fn calls(&self) -> Vec<FeatureSet> {
        self.log.lock().expect("log poisoned").clone()
    }

    pub fn clear(&self) {
        self.log.lock().expect("log poisoned").clear();
    }
}

impl<O: Oracle> Oracle for Recording<O> {
    fn num_features(&self) -> usize {
        self.inner.num_features()
    }

    fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }

    fn find_adv_ex(&self, query: &OracleQuery, cancel: &CancelToken) -> Result<Verdict> {
        self.log.lock().expect("log poisoned").push(query.fixed.clone());
        self.inner.find_adv_ex(query, cancel)
    }
}
