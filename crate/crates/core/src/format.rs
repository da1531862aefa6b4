//! Model documents and inline instances.
//!
//! A model document is a single JSON object:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "domains": [
//!     {"kind": "discrete", "values": [0, 0.5, 1]},
//!     {"kind": "continuous", "lo": -1, "hi": 5, "grid_step": 0.25},
//!     {"kind": "categorical", "values": ["red", "green"]}
//!   ],
//!   "classes": [0, 1],
//!   "classifier": {"kind": "lookup_table", "default": 1,
//!                  "entries": [{"point": [0.5, 0.5, "red"], "label": 0}]}
//! }
//! ```
//!
//! Point coordinates of categorical features are written as their label
//! strings. Instances are written inline as `v1,...,vm:c`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{Classifier, Comparison, LinearConstraint, TreeNode};
use crate::problem::{ClassificationProblem, FeatureDomain, Instance, Label, Point};

pub const SCHEMA_VERSION: u32 = 1;

const CLASSIFIER_KINDS: [&str; 4] = ["lookup_table", "linear_threshold", "region_conjunction", "decision_tree"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub schema_version: u32,
    pub domains: Vec<DomainDoc>,
    pub classes: Vec<Label>,
    pub classifier: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainDoc {
    Categorical { values: Vec<String> },
    Discrete { values: Vec<f64> },
    Continuous {
        lo: f64,
        hi: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid_step: Option<f64>,
    },
}

/// A coordinate: a number, or a category label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoordDoc {
    Number(f64),
    Category(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryDoc {
    pub point: Vec<CoordDoc>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDoc {
    pub coeffs: Vec<f64>,
    pub op: String,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NodeDoc {
    Leaf { label: Label },
    Threshold { feature: usize, threshold: f64, left: usize, right: usize },
    Categorical { feature: usize, left_values: Vec<String>, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierDoc {
    LookupTable { default: Label, entries: Vec<EntryDoc> },
    LinearThreshold { weights: Vec<f64>, bias: f64, positive: Label, negative: Label },
    RegionConjunction { constraints: Vec<ConstraintDoc>, inside: Label, outside: Label },
    DecisionTree { nodes: Vec<NodeDoc> },
}

fn schema(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema { location: location.into(), message: message.into() }
}

fn from_serde(err: serde_json::Error) -> Error {
    let location = if err.line() == 0 { "document".to_string() } else { format!("line {} column {}", err.line(), err.column()) };
    schema(location, err.to_string())
}

/// Parses a model document into a validated classification problem.
pub fn parse_model(text: &str) -> Result<ClassificationProblem> {
    if text.trim().is_empty() {
        return Err(schema("document", "empty model document"));
    }
    let doc: ModelDocument = serde_json::from_str(text).map_err(from_serde)?;
    doc.to_problem()
}

/// Serializes a problem as a pretty-printed model document.
pub fn write_model(problem: &ClassificationProblem) -> String {
    let doc = ModelDocument::from_problem(problem);
    serde_json::to_string_pretty(&doc).expect("model documents always serialize")
}

impl ModelDocument {
    pub fn to_problem(&self) -> Result<ClassificationProblem> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        let domains = self
            .domains
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let at = |e: Error| schema(format!("domains[{i}]"), e.to_string());
                match d {
                    DomainDoc::Categorical { values } => FeatureDomain::categorical(values.iter().cloned()).map_err(at),
                    DomainDoc::Discrete { values } => FeatureDomain::discrete(values.iter().copied()).map_err(at),
                    DomainDoc::Continuous { lo, hi, grid_step: None } => FeatureDomain::continuous(*lo, *hi).map_err(at),
                    DomainDoc::Continuous { lo, hi, grid_step: Some(step) } => {
                        FeatureDomain::gridded(*lo, *hi, *step).map_err(at)
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if domains.is_empty() {
            return Err(schema("domains", "at least one feature is required"));
        }
        let kind = self
            .classifier
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| schema("classifier.kind", "missing classifier kind"))?;
        if !CLASSIFIER_KINDS.contains(&kind) {
            return Err(Error::UnknownClassifier(kind.to_string()));
        }
        let cdoc: ClassifierDoc =
            serde_json::from_value(self.classifier.clone()).map_err(|e| schema("classifier", e.to_string()))?;
        let classifier = classifier_from_doc(&cdoc, &domains)?;
        ClassificationProblem::new(domains, self.classes.clone(), classifier)
            .map_err(|e| schema("classifier", e.to_string()))
    }

    pub fn from_problem(problem: &ClassificationProblem) -> Self {
        let domains = problem
            .domains()
            .iter()
            .map(|d| match d {
                FeatureDomain::Categorical { values } => DomainDoc::Categorical { values: values.clone() },
                FeatureDomain::DiscreteOrdinal { values } => DomainDoc::Discrete { values: values.clone() },
                FeatureDomain::ContinuousOrdinal { lo, hi, grid_step } => {
                    DomainDoc::Continuous { lo: *lo, hi: *hi, grid_step: *grid_step }
                }
            })
            .collect();
        let cdoc = classifier_to_doc(problem.classifier(), problem.domains());
        ModelDocument {
            schema_version: SCHEMA_VERSION,
            domains,
            classes: problem.classes().to_vec(),
            classifier: serde_json::to_value(cdoc).expect("classifier documents always serialize"),
        }
    }
}

fn category_code(domain: &FeatureDomain, label: &str) -> Option<usize> {
    match domain {
        FeatureDomain::Categorical { values } => values.iter().position(|v| v == label),
        _ => None,
    }
}

fn category_label(domain: &FeatureDomain, code: usize) -> Option<&str> {
    match domain {
        FeatureDomain::Categorical { values } => values.get(code).map(String::as_str),
        _ => None,
    }
}

fn point_from_doc(coords: &[CoordDoc], domains: &[FeatureDomain], location: &str) -> Result<Point> {
    if coords.len() != domains.len() {
        return Err(schema(location, format!("expected {} coordinates, found {}", domains.len(), coords.len())));
    }
    coords
        .iter()
        .zip(domains)
        .enumerate()
        .map(|(i, (c, d))| match (c, d) {
            (CoordDoc::Category(s), FeatureDomain::Categorical { .. }) => category_code(d, s)
                .map(|code| code as f64)
                .ok_or_else(|| schema(format!("{location}[{i}]"), format!("unknown category `{s}`"))),
            (CoordDoc::Number(x), FeatureDomain::Categorical { .. }) => Err(schema(
                format!("{location}[{i}]"),
                format!("feature {} is categorical; expected a label, found {x}", i + 1),
            )),
            (CoordDoc::Number(x), _) => Ok(*x),
            (CoordDoc::Category(s), _) => {
                Err(schema(format!("{location}[{i}]"), format!("feature {} is ordinal; found `{s}`", i + 1)))
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(Point)
}

fn point_to_doc(point: &Point, domains: &[FeatureDomain]) -> Vec<CoordDoc> {
    point
        .coords()
        .iter()
        .zip(domains)
        .map(|(x, d)| match category_label(d, *x as usize) {
            Some(label) if d.is_categorical() => CoordDoc::Category(label.to_string()),
            _ => CoordDoc::Number(*x),
        })
        .collect()
}

fn classifier_from_doc(doc: &ClassifierDoc, domains: &[FeatureDomain]) -> Result<Classifier> {
    Ok(match doc {
        ClassifierDoc::LookupTable { default, entries } => {
            let points = entries
                .iter()
                .enumerate()
                .map(|(k, e)| Ok((point_from_doc(&e.point, domains, &format!("classifier.entries[{k}].point"))?, e.label)))
                .collect::<Result<Vec<_>>>()?;
            Classifier::lookup_table(points, *default)
        }
        ClassifierDoc::LinearThreshold { weights, bias, positive, negative } => Classifier::LinearThreshold {
            weights: weights.clone(),
            bias: *bias,
            positive: *positive,
            negative: *negative,
        },
        ClassifierDoc::RegionConjunction { constraints, inside, outside } => {
            let constraints = constraints
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let op = Comparison::from_symbol(&c.op).ok_or_else(|| {
                        schema(format!("classifier.constraints[{k}].op"), format!("unknown comparison `{}`", c.op))
                    })?;
                    Ok(LinearConstraint { coeffs: c.coeffs.clone(), op, rhs: c.rhs })
                })
                .collect::<Result<Vec<_>>>()?;
            Classifier::RegionConjunction { constraints, inside: *inside, outside: *outside }
        }
        ClassifierDoc::DecisionTree { nodes } => {
            let nodes = nodes
                .iter()
                .enumerate()
                .map(|(k, n)| {
                    Ok(match n {
                        NodeDoc::Leaf { label } => TreeNode::Leaf { label: *label },
                        NodeDoc::Threshold { feature, threshold, left, right } => TreeNode::Threshold {
                            feature: *feature,
                            threshold: *threshold,
                            left: *left,
                            right: *right,
                        },
                        NodeDoc::Categorical { feature, left_values, left, right } => {
                            let domain = feature
                                .checked_sub(1)
                                .and_then(|i| domains.get(i))
                                .ok_or_else(|| schema(format!("classifier.nodes[{k}].feature"), "unknown feature"))?;
                            let codes = left_values
                                .iter()
                                .map(|s| {
                                    category_code(domain, s).ok_or_else(|| {
                                        schema(format!("classifier.nodes[{k}].left_values"), format!("unknown category `{s}`"))
                                    })
                                })
                                .collect::<Result<Vec<_>>>()?;
                            TreeNode::Categorical { feature: *feature, left_values: codes, left: *left, right: *right }
                        }
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Classifier::DecisionTree { nodes }
        }
    })
}

fn classifier_to_doc(classifier: &Classifier, domains: &[FeatureDomain]) -> ClassifierDoc {
    match classifier {
        Classifier::LookupTable { default, .. } => ClassifierDoc::LookupTable {
            default: *default,
            entries: classifier
                .sorted_entries()
                .into_iter()
                .map(|(p, label)| EntryDoc { point: point_to_doc(&p, domains), label })
                .collect(),
        },
        Classifier::LinearThreshold { weights, bias, positive, negative } => ClassifierDoc::LinearThreshold {
            weights: weights.clone(),
            bias: *bias,
            positive: *positive,
            negative: *negative,
        },
        Classifier::RegionConjunction { constraints, inside, outside } => ClassifierDoc::RegionConjunction {
            constraints: constraints
                .iter()
                .map(|c| ConstraintDoc { coeffs: c.coeffs.clone(), op: c.op.symbol().to_string(), rhs: c.rhs })
                .collect(),
            inside: *inside,
            outside: *outside,
        },
        Classifier::DecisionTree { nodes } => ClassifierDoc::DecisionTree {
            nodes: nodes
                .iter()
                .map(|n| match n {
                    TreeNode::Leaf { label } => NodeDoc::Leaf { label: *label },
                    TreeNode::Threshold { feature, threshold, left, right } => NodeDoc::Threshold {
                        feature: *feature,
                        threshold: *threshold,
                        left: *left,
                        right: *right,
                    },
                    TreeNode::Categorical { feature, left_values, left, right } => NodeDoc::Categorical {
                        feature: *feature,
                        left_values: left_values
                            .iter()
                            .map(|c| category_label(&domains[feature - 1], *c).unwrap_or_default().to_string())
                            .collect(),
                        left: *left,
                        right: *right,
                    },
                })
                .collect(),
        },
    }
}

/// Parses `v1,...,vm:c` against the problem's domains.
pub fn parse_instance(text: &str, problem: &ClassificationProblem) -> Result<Instance> {
    let text = text.trim();
    let (coords, label) = text
        .rsplit_once(':')
        .ok_or_else(|| schema("instance", "expected `v1,...,vm:c`"))?;
    let label: i64 = label
        .trim()
        .parse()
        .map_err(|_| schema("instance", format!("label `{}` is not an integer", label.trim())))?;
    let tokens: Vec<CoordDoc> = coords
        .split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().map(CoordDoc::Number).unwrap_or_else(|_| CoordDoc::Category(t.to_string()))
        })
        .collect();
    let point = point_from_doc(&tokens, problem.domains(), "instance")?;
    Ok(Instance::new(point, Label(label)))
}

/// Inverse of [`parse_instance`].
pub fn format_instance(instance: &Instance, problem: &ClassificationProblem) -> String {
    let coords: Vec<String> = point_to_doc(&instance.point, problem.domains())
        .into_iter()
        .map(|c| match c {
            CoordDoc::Number(x) => x.to_string(),
            CoordDoc::Category(s) => s,
        })
        .collect();
    format!("{}:{}", coords.join(","), instance.label)
}

/// A point as plain JSON numbers (categorical codes stay numeric), as
/// carried by the external oracle protocol.
pub fn point_to_json(point: &Point) -> Value {
    Value::from(point.coords().to_vec())
}
