//! Minimal sets over a monotone predicate.
//!
//! A [`Predicate`] turns a robustness oracle into the weak-explanation
//! test for either kind:
//!
//! * AXp mode: `pred(S)` holds iff fixing `S` leaves no adversarial example;
//! * CXp mode: `pred(Y)` holds iff freeing `Y` (fixing the rest) admits one.
//!
//! Both are monotone under set inclusion, so every extractor here works for
//! both kinds. A feature ordering expresses preference: extractors return
//! the minimal set that keeps features early in the order whenever possible,
//! which makes deletion, dichotomic search and the parallel search agree
//! on the same answer.

mod deletion;
mod dichotomic;
mod swift;

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use deletion::{deletion_extract, deletion_from};
pub use dichotomic::{dichotomic_extract, dichotomic_from};
pub use swift::{feat_disjunct, find_transition_prefix, swift_from, swift_xplain, FdCounters, FdOutcome};

use crate::error::{Error, Result};
use crate::oracle::{check_epsilon, CancelToken, Oracle, OracleQuery, Verdict};
use crate::parallel::{run_batch, BatchOutcome, DecisionRule, Polarity, ProbeBatch};
use crate::problem::{FeatureOrder, FeatureSet, Norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplanationKind {
    Axp,
    Cxp,
}

impl fmt::Display for ExplanationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExplanationKind::Axp => "axp",
            ExplanationKind::Cxp => "cxp",
        })
    }
}

impl FromStr for ExplanationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "axp" => Ok(ExplanationKind::Axp),
            "cxp" => Ok(ExplanationKind::Cxp),
            other => Err(Error::InvalidConfig(format!("unknown explanation kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Deletion,
    Dichotomic,
    Swift,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Deletion => "deletion",
            Algorithm::Dichotomic => "dichotomic",
            Algorithm::Swift => "swift",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "deletion" | "del" => Ok(Algorithm::Deletion),
            "dichotomic" | "dicho" => Ok(Algorithm::Dichotomic),
            "swift" | "swiftxplain" => Ok(Algorithm::Swift),
            other => Err(Error::InvalidConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// How the feature ordering is obtained.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderingSpec {
    #[default]
    Identity,
    Explicit(FeatureOrder),
    Seeded(u64),
}

impl OrderingSpec {
    pub fn resolve(&self, m: usize) -> Result<FeatureOrder> {
        match self {
            OrderingSpec::Identity => Ok(FeatureOrder::identity(m)),
            OrderingSpec::Seeded(seed) => Ok(FeatureOrder::seeded(m, *seed)),
            OrderingSpec::Explicit(order) if order.len() == m => Ok(order.clone()),
            OrderingSpec::Explicit(order) => Err(Error::InvalidConfig(format!(
                "ordering has {} features, problem has {m}",
                order.len()
            ))),
        }
    }
}

/// Which redundant feature the feature-disjunction step frees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FreedChoice {
    /// The redundant feature latest in the ordering. The result is then
    /// the same for every processor count.
    #[default]
    Last,
    /// Uniform among the redundant features, from this seed.
    Seeded(u64),
}

pub const DEFAULT_FD_THRESHOLD: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub kind: ExplanationKind,
    pub epsilon: f64,
    pub norm: Norm,
    pub ordering: OrderingSpec,
    pub processors: usize,
    pub fd_threshold: f64,
    pub fd_enabled: bool,
    pub freed_choice: FreedChoice,
}

impl RunConfig {
    pub fn new(kind: ExplanationKind, epsilon: f64, norm: Norm) -> Self {
        RunConfig {
            kind,
            epsilon,
            norm,
            ordering: OrderingSpec::Identity,
            processors: default_processors(),
            fd_threshold: DEFAULT_FD_THRESHOLD,
            fd_enabled: true,
            freed_choice: FreedChoice::Last,
        }
    }

    pub fn with_processors(mut self, q: usize) -> Self {
        self.processors = q;
        self
    }

    pub fn with_fd(mut self, enabled: bool) -> Self {
        self.fd_enabled = enabled;
        self
    }

    pub fn with_fd_threshold(mut self, delta: f64) -> Self {
        self.fd_threshold = delta;
        self
    }

    pub fn with_ordering(mut self, ordering: OrderingSpec) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn with_freed_choice(mut self, choice: FreedChoice) -> Self {
        self.freed_choice = choice;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if self.processors == 0 {
            return Err(Error::InvalidConfig("at least one processor is required".into()));
        }
        if !(0.0..=1.0).contains(&self.fd_threshold) {
            return Err(Error::InvalidConfig(format!(
                "feature-disjunction threshold must lie in [0, 1], got {}",
                self.fd_threshold
            )));
        }
        Ok(())
    }
}

pub fn default_processors() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Counters of one extraction run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    /// Oracle calls that ran to completion.
    pub oracle_calls: usize,
    /// Sequential steps; a step is one call or one concurrent batch.
    pub parallel_rounds: usize,
    pub cancelled_calls: usize,
    /// Results that arrived after their batch was decided.
    pub late_results: usize,
    pub fd_invocations: usize,
    /// Feature-disjunction steps that confirmed a whole chunk at once.
    pub fd_all_necessary: usize,
    pub explanation_size: usize,
    pub num_features: usize,
    pub freed_seed: Option<u64>,
    #[serde(rename = "wall_time_ns", with = "duration_nanos")]
    pub wall_time: Duration,
}

mod duration_nanos {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_nanos().min(u64::MAX as u128) as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_nanos(u64::deserialize(d)?))
    }
}

/// The weak-explanation predicate of one kind, with call accounting.
pub struct Predicate<'a> {
    oracle: &'a dyn Oracle,
    kind: ExplanationKind,
    epsilon: f64,
    norm: Norm,
    m: usize,
    calls: Cell<usize>,
    rounds: Cell<usize>,
    cancelled: Cell<usize>,
    late: Cell<usize>,
}

impl<'a> Predicate<'a> {
    pub fn new(oracle: &'a dyn Oracle, kind: ExplanationKind, epsilon: f64, norm: Norm) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Predicate {
            oracle,
            kind,
            epsilon,
            norm,
            m: oracle.num_features(),
            calls: Cell::new(0),
            rounds: Cell::new(0),
            cancelled: Cell::new(0),
            late: Cell::new(0),
        })
    }

    pub fn kind(&self) -> ExplanationKind {
        self.kind
    }

    pub fn num_features(&self) -> usize {
        self.m
    }

    pub fn oracle(&self) -> &'a dyn Oracle {
        self.oracle
    }

    /// The oracle query deciding `pred(set)`.
    pub fn query(&self, set: &FeatureSet) -> OracleQuery {
        let fixed = match self.kind {
            ExplanationKind::Axp => set.clone(),
            ExplanationKind::Cxp => set.complement(self.m),
        };
        OracleQuery { fixed, epsilon: self.epsilon, norm: self.norm }
    }

    pub fn polarity(&self) -> Polarity {
        match self.kind {
            ExplanationKind::Axp => Polarity::Robust,
            ExplanationKind::Cxp => Polarity::AdvFound,
        }
    }

    /// One sequential oracle call.
    pub fn eval(&self, set: &FeatureSet) -> Result<bool> {
        Ok(self.polarity().truth(&self.verdict(set)?))
    }

    /// One sequential oracle call, returning the raw verdict.
    pub fn verdict(&self, set: &FeatureSet) -> Result<Verdict> {
        set.check_range(self.m)?;
        let verdict = self.oracle.find_adv_ex(&self.query(set), &CancelToken::new())?;
        self.calls.set(self.calls.get() + 1);
        self.rounds.set(self.rounds.get() + 1);
        Ok(verdict)
    }

    /// One concurrent round over `sets`.
    pub fn eval_batch(&self, sets: &[FeatureSet], rule: DecisionRule, slots: usize) -> Result<BatchOutcome> {
        let batch = ProbeBatch {
            probes: sets.iter().map(|s| self.query(s)).collect(),
            rule,
            polarity: self.polarity(),
            slots,
        };
        let outcome = run_batch(self.oracle, &batch)?;
        self.calls.set(self.calls.get() + outcome.calls);
        self.cancelled.set(self.cancelled.get() + outcome.cancelled);
        self.late.set(self.late.get() + outcome.late);
        self.rounds.set(self.rounds.get() + 1);
        Ok(outcome)
    }

    pub fn calls(&self) -> usize {
        self.calls.get()
    }

    pub fn rounds(&self) -> usize {
        self.rounds.get()
    }

    /// Counters accumulated so far.
    pub fn stats(&self) -> RunStats {
        RunStats {
            oracle_calls: self.calls.get(),
            parallel_rounds: self.rounds.get(),
            cancelled_calls: self.cancelled.get(),
            late_results: self.late.get(),
            num_features: self.m,
            ..RunStats::default()
        }
    }

    /// In CXp mode an explanation exists only if freeing every feature
    /// admits an adversarial example; AXp mode always holds at `F`.
    pub(crate) fn check_feasible(&self) -> Result<()> {
        if self.kind == ExplanationKind::Cxp && !self.eval(&FeatureSet::full(self.m))? {
            return Err(Error::NoExplanation);
        }
        Ok(())
    }
}

/// True iff `pred(set)` holds and no single feature can be dropped.
/// Issues `|set| + 1` oracle calls.
pub fn verify_minimal(pred: &Predicate<'_>, set: &FeatureSet) -> Result<bool> {
    let mut minimal = pred.eval(set)?;
    for i in set.iter() {
        if pred.eval(&set.without(i))? {
            minimal = false;
        }
    }
    Ok(minimal)
}

/// One explanation and the run that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationResult {
    pub kind: ExplanationKind,
    pub algorithm: Algorithm,
    pub set: FeatureSet,
    pub stats: RunStats,
}

/// Runs `algorithm` with `config` against `oracle`.
pub fn explain(oracle: &dyn Oracle, algorithm: Algorithm, config: &RunConfig) -> Result<ExplanationResult> {
    config.validate()?;
    let started = Instant::now();
    let (set, mut stats) = match algorithm {
        Algorithm::Swift => swift_xplain(oracle, config)?,
        Algorithm::Deletion | Algorithm::Dichotomic => {
            let pred = Predicate::new(oracle, config.kind, config.epsilon, config.norm)?;
            let order = config.ordering.resolve(pred.num_features())?;
            let set = if algorithm == Algorithm::Deletion {
                deletion_extract(&pred, &order)?
            } else {
                dichotomic_extract(&pred, &order)?
            };
            (set, pred.stats())
        }
    };
    stats.explanation_size = set.len();
    stats.wall_time = started.elapsed();
    Ok(ExplanationResult { kind: config.kind, algorithm, set, stats })
}
