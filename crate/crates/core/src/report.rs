//! Machine-readable run reports.
//!
//! A report echoes the query, lists the result sets with their
//! verification status, and carries the run counters. The stable form
//! drops everything that legitimately varies between otherwise identical
//! runs (processor count, counters, timings), so it is byte-identical for
//! a fixed model, instance, ordering and oracle.

use serde::{Deserialize, Serialize};

use crate::enumerate::Enumeration;
use crate::error::{Error, Result};
use crate::msmp::{Algorithm, ExplanationKind, ExplanationResult, FreedChoice, OrderingSpec, RunConfig, RunStats};
use crate::oracle::Capabilities;
use crate::problem::{ExplanationProblem, FeatureSet, Label, Point};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryEcho {
    pub mode: Mode,
    pub epsilon: f64,
    pub norm: crate::problem::Norm,
    pub algorithm: Algorithm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub processors: Option<usize>,
    pub fd_enabled: bool,
    pub fd_threshold: f64,
    pub ordering: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordering_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freed_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Axp,
    Cxp,
    Enumerate,
}

impl From<ExplanationKind> for Mode {
    fn from(kind: ExplanationKind) -> Self {
        match kind {
            ExplanationKind::Axp => Mode::Axp,
            ExplanationKind::Cxp => Mode::Cxp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceEcho {
    pub point: Point,
    pub label: Label,
}

impl InstanceEcho {
    pub fn of(problem: &ExplanationProblem) -> Self {
        let i = problem.instance();
        InstanceEcho { point: i.point.clone(), label: i.label }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportedSet {
    pub kind: ExplanationKind,
    pub features: FeatureSet,
    /// `None` when verification was skipped.
    pub verified: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schema_version: u32,
    pub query: QueryEcho,
    /// Absent for oracles that are not tied to an instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceEcho>,
    pub oracle: Capabilities,
    pub results: Vec<ReportedSet>,
    /// Enumeration only: whether the seed space was exhausted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complete: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<RunStats>,
}

impl QueryEcho {
    pub fn new(mode: Mode, config: &RunConfig, algorithm: Algorithm, m: usize) -> Result<Self> {
        Ok(QueryEcho {
            mode,
            epsilon: config.epsilon,
            norm: config.norm,
            algorithm,
            processors: Some(config.processors),
            fd_enabled: config.fd_enabled,
            fd_threshold: config.fd_threshold,
            ordering: config.ordering.resolve(m)?.as_slice().to_vec(),
            ordering_seed: match config.ordering {
                OrderingSpec::Seeded(seed) => Some(seed),
                _ => None,
            },
            freed_seed: match config.freed_choice {
                FreedChoice::Seeded(seed) => Some(seed),
                FreedChoice::Last => None,
            },
        })
    }
}

impl RunReport {
    /// Report of a single extraction. `verified` is the result of
    /// `verify_minimal`, if it was run.
    pub fn for_explanation(
        config: &RunConfig,
        instance: Option<InstanceEcho>,
        oracle: Capabilities,
        result: &ExplanationResult,
        verified: Option<bool>,
    ) -> Result<Self> {
        let m = result.stats.num_features;
        Ok(RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            query: QueryEcho::new(result.kind.into(), config, result.algorithm, m)?,
            instance,
            oracle,
            results: vec![ReportedSet { kind: result.kind, features: result.set.clone(), verified }],
            complete: None,
            stats: Some(result.stats.clone()),
        })
    }

    /// Report of an enumeration; `verified` runs parallel to
    /// `enumeration.discoveries`. With `grouped`, AXps come first, then
    /// CXps, each sorted; otherwise discovery order is kept.
    pub fn for_enumeration(
        config: &RunConfig,
        algorithm: Algorithm,
        instance: Option<InstanceEcho>,
        oracle: Capabilities,
        enumeration: &Enumeration,
        verified: &[Option<bool>],
        grouped: bool,
    ) -> Result<Self> {
        if verified.len() != enumeration.discoveries.len() {
            return Err(Error::InvalidConfig("one verification status per explanation is required".into()));
        }
        let m = enumeration.stats.num_features;
        let mut results: Vec<ReportedSet> = enumeration
            .discoveries
            .iter()
            .zip(verified)
            .map(|(d, v)| ReportedSet { kind: d.kind, features: d.set.clone(), verified: *v })
            .collect();
        if grouped {
            results.sort_by(|a, b| (a.kind, &a.features).cmp(&(b.kind, &b.features)));
        }
        Ok(RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            query: QueryEcho::new(Mode::Enumerate, config, algorithm, m)?,
            instance,
            oracle,
            results,
            complete: Some(enumeration.axps.complete),
            stats: Some(enumeration.stats.clone()),
        })
    }

    /// The reproducible part of the report.
    pub fn stable(&self) -> RunReport {
        let mut report = self.clone();
        report.query.processors = None;
        report.stats = None;
        report
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports always serialize");
        text.push('\n');
        text
    }

    pub fn parse(text: &str) -> Result<Self> {
        let report: RunReport = serde_json::from_str(text).map_err(|e| Error::Schema {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Schema {
                location: "schema_version".into(),
                message: format!("unsupported report version {}", report.schema_version),
            });
        }
        Ok(report)
    }
}
