//! Bounded concurrent execution of oracle probes with early cancellation.
//!
//! A batch runs at most `slots` probes at once. After each completion the
//! decision rule is re-evaluated on the completed results; once it
//! resolves, the shared cancel token fires, probes not yet started are
//! skipped and in-flight ones are asked to stop. Results that still arrive
//! afterwards are counted as calls but never change the decision.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::oracle::{CancelToken, Oracle, OracleQuery, Verdict};

/// Which verdict makes a probe count as `true` for the decision rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Robust,
    AdvFound,
}

impl Polarity {
    pub fn truth(self, verdict: &Verdict) -> bool {
        match self {
            Polarity::Robust => verdict.is_robust(),
            Polarity::AdvFound => !verdict.is_robust(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionRule {
    /// Probes are ordered so that their truth values form a step
    /// `false..false true..true`; find the first `true`.
    BoundarySearch,
    /// Decide whether every probe is `false`; otherwise report the last
    /// `true` probe.
    AllFalseCheck,
    /// Wait for every probe.
    CollectAll,
}

#[derive(Debug, Clone)]
pub struct ProbeBatch {
    pub probes: Vec<OracleQuery>,
    pub rule: DecisionRule,
    pub polarity: Polarity,
    pub slots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// Index of the first `true` probe; `probes.len()` when all are `false`.
    Boundary(usize),
    AllFalse,
    LastTrue(usize),
    Collected,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeStatus {
    Completed(Verdict),
    Cancelled,
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub results: Vec<ProbeStatus>,
    pub decision: Decision,
    /// Probes whose oracle call ran to completion, late ones included.
    pub calls: usize,
    /// Probes skipped or interrupted; `calls + cancelled == probes.len()`.
    pub cancelled: usize,
    /// Completed after the decision and discarded.
    pub late: usize,
    pub wall_time: Duration,
}

/// Resolves the rule from the completed truth values, checking that
/// boundary probes form a monotone step.
fn decide(rule: DecisionRule, truth: &[Option<bool>]) -> Result<Option<Decision>> {
    match rule {
        DecisionRule::BoundarySearch => {
            let first_true = truth.iter().position(|t| *t == Some(true)).unwrap_or(truth.len());
            if let Some(late_false) = truth[first_true..].iter().rposition(|t| *t == Some(false)) {
                return Err(Error::OracleInconsistency(format!(
                    "probe {} is true but later probe {} is false",
                    first_true,
                    first_true + late_false
                )));
            }
            let bracketed = first_true == 0 || truth[first_true - 1] == Some(false);
            Ok(bracketed.then_some(Decision::Boundary(first_true)))
        }
        DecisionRule::AllFalseCheck => {
            for (i, t) in truth.iter().enumerate().rev() {
                match t {
                    Some(false) => continue,
                    Some(true) => return Ok(Some(Decision::LastTrue(i))),
                    None => return Ok(None),
                }
            }
            Ok(Some(Decision::AllFalse))
        }
        DecisionRule::CollectAll => Ok(truth.iter().all(Option::is_some).then_some(Decision::Collected)),
    }
}

pub fn run_batch(oracle: &dyn Oracle, batch: &ProbeBatch) -> Result<BatchOutcome> {
    let n = batch.probes.len();
    if n == 0 {
        return Err(Error::InvalidConfig("a probe batch needs at least one probe".into()));
    }
    if batch.slots == 0 {
        return Err(Error::InvalidConfig("a probe batch needs at least one slot".into()));
    }
    let started = Instant::now();
    let token = CancelToken::new();
    let next = AtomicUsize::new(0);
    let mut results: Vec<ProbeStatus> = vec![ProbeStatus::Cancelled; n];
    let mut truth: Vec<Option<bool>> = vec![None; n];
    let mut decision = None;
    let mut failure = None;
    let mut calls = 0;
    let mut late = 0;

    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<(usize, Result<Verdict>)>();
        for _ in 0..batch.slots.min(n) {
            let tx = tx.clone();
            let (token, next, probes) = (&token, &next, &batch.probes);
            scope.spawn(move || loop {
                if token.is_cancelled() {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let answer = oracle.find_adv_ex(&probes[i], token);
                if tx.send((i, answer)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        for (i, answer) in rx {
            match answer {
                Ok(verdict) => {
                    calls += 1;
                    if decision.is_some() || failure.is_some() {
                        late += 1;
                        continue;
                    }
                    truth[i] = Some(batch.polarity.truth(&verdict));
                    results[i] = ProbeStatus::Completed(verdict);
                    match decide(batch.rule, &truth) {
                        Ok(Some(d)) => {
                            decision = Some(d);
                            token.cancel();
                        }
                        Ok(None) => {}
                        Err(e) => {
                            failure = Some(e);
                            token.cancel();
                        }
                    }
                }
                Err(Error::Cancelled) => {}
                Err(e) => {
                    if decision.is_none() && failure.is_none() {
                        failure = Some(e);
                        token.cancel();
                    }
                }
            }
        }
    });

    if let Some(e) = failure {
        return Err(e);
    }
    let decision = decision.ok_or_else(|| Error::OracleFailure("probe batch ended undecided".into()))?;
    Ok(BatchOutcome { results, decision, calls, cancelled: n - calls, late, wall_time: started.elapsed() })
}
