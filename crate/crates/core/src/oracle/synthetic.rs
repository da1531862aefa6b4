use std::time::Duration;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CancelToken, Capabilities, Oracle, OracleQuery, Verdict};
use crate::error::{Error, Result};
use crate::problem::{FeatureSet, Point};

/// A monotone stand-in for an expensive robustness tool.
///
/// An adversarial example exists iff some hidden breaker is entirely free,
/// i.e. disjoint from the fixed set. Each call sleeps for `latency` first.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    num_features: usize,
    breakers: Vec<FeatureSet>,
    latency: Duration,
    seed: u64,
}

impl SyntheticSpec {
    pub fn new(num_features: usize, breakers: Vec<FeatureSet>, latency: Duration, seed: u64) -> Result<Self> {
        if num_features == 0 {
            return Err(Error::InvalidConfig("synthetic spec needs at least one feature".into()));
        }
        for (k, b) in breakers.iter().enumerate() {
            if b.is_empty() {
                return Err(Error::InvalidConfig(format!("breaker {k} is empty")));
            }
            b.check_range(num_features)?;
            if let Some(other) = breakers.iter().enumerate().find(|(j, o)| *j != k && o.is_subset(b)) {
                return Err(Error::InvalidConfig(format!(
                    "breakers must form an antichain: {} is contained in {b}",
                    other.1
                )));
            }
        }
        Ok(SyntheticSpec { num_features, breakers, latency, seed })
    }

    /// `count` distinct singleton breakers drawn from `1..=num_features` by `seed`.
    pub fn random_singletons(num_features: usize, count: usize, latency: Duration, seed: u64) -> Result<Self> {
        if count > num_features {
            return Err(Error::InvalidConfig(format!(
                "cannot draw {count} singleton breakers from {num_features} features"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picks: Vec<usize> = sample(&mut rng, num_features, count).into_iter().map(|i| i + 1).collect();
        picks.sort_unstable();
        let breakers = picks.into_iter().map(|i| FeatureSet::from([i])).collect();
        Self::new(num_features, breakers, latency, seed)
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn breakers(&self) -> &[FeatureSet] {
        &self.breakers
    }

    pub fn latency(&self) -> Duration {
        self.latency
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = latency;
        self
    }

    /// Decides a fixed set without sleeping; returns the first free breaker.
    pub fn free_breaker(&self, fixed: &FeatureSet) -> Option<&FeatureSet> {
        self.breakers.iter().find(|b| !b.intersects(fixed))
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticOracle {
    spec: SyntheticSpec,
}

impl SyntheticOracle {
    pub fn new(spec: SyntheticSpec) -> Self {
        SyntheticOracle { spec }
    }

    pub fn spec(&self) -> &SyntheticSpec {
        &self.spec
    }
}

impl Oracle for SyntheticOracle {
    fn num_features(&self) -> usize {
        self.spec.num_features
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities { name: "synthetic".into(), exact: true, geometric_witnesses: false }
    }

    fn find_adv_ex(&self, query: &OracleQuery, cancel: &CancelToken) -> Result<Verdict> {
        query.validate(self.spec.num_features)?;
        if !cancel.sleep(self.spec.latency) {
            return Err(Error::Cancelled);
        }
        Ok(match self.spec.free_breaker(&query.fixed) {
            // Symbolic marker: 1 on the freed breaker's features.
            Some(b) => Verdict::AdvFound(Point(
                (1..=self.spec.num_features).map(|i| if b.contains(i) { 1.0 } else { 0.0 }).collect(),
            )),
            None => Verdict::Robust,
        })
    }
}
