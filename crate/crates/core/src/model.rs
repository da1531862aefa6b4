//! Classifier representations and their evaluation.

use std::collections::HashMap;
use std::fmt;

use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::problem::{ClassificationProblem, FeatureDomain, Label, Point};

type PointKey = Vec<OrderedFloat<f64>>;

fn key_of(coords: &[f64]) -> PointKey {
    // +0.0 and -0.0 must hash alike.
    coords.iter().map(|c| OrderedFloat(if *c == 0.0 { 0.0 } else { *c })).collect()
}

/// Comparison operator of a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Lt,
    Le,
    Ge,
    Gt,
}

impl Comparison {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparison::Lt => lhs < rhs,
            Comparison::Le => lhs <= rhs,
            Comparison::Ge => lhs >= rhs,
            Comparison::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Ge => ">=",
            Comparison::Gt => ">",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "<" => Comparison::Lt,
            "<=" => Comparison::Le,
            ">=" => Comparison::Ge,
            ">" => Comparison::Gt,
            _ => return None,
        })
    }

    pub fn is_strict(self) -> bool {
        matches!(self, Comparison::Lt | Comparison::Gt)
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `coeffs . x  (op)  rhs`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub op: Comparison,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn holds(&self, x: &Point) -> bool {
        let lhs: f64 = self.coeffs.iter().zip(x.coords()).map(|(a, b)| a * b).sum();
        self.op.holds(lhs, self.rhs)
    }
}

/// A node of a [`Classifier::DecisionTree`]. Children are node indices.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf { label: Label },
    /// `x[feature] <= threshold` goes left, otherwise right.
    Threshold { feature: usize, threshold: f64, left: usize, right: usize },
    /// Values (categorical codes) in `left_values` go left, others right.
    Categorical { feature: usize, left_values: Vec<usize>, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    LookupTable { entries: HashMap<PointKey, Label>, default: Label },
    /// Predicts `positive` iff `weights . x + bias >= 0`.
    LinearThreshold { weights: Vec<f64>, bias: f64, positive: Label, negative: Label },
    /// Predicts `inside` iff every constraint holds.
    RegionConjunction { constraints: Vec<LinearConstraint>, inside: Label, outside: Label },
    /// Rooted at node 0.
    DecisionTree { nodes: Vec<TreeNode> },
}

impl Classifier {
    pub fn lookup_table(entries: impl IntoIterator<Item = (Point, Label)>, default: Label) -> Self {
        let entries = entries.into_iter().map(|(p, l)| (key_of(p.coords()), l)).collect();
        Classifier::LookupTable { entries, default }
    }

    /// A lookup table without exceptions.
    pub fn constant(label: Label) -> Self {
        Classifier::LookupTable { entries: HashMap::new(), default: label }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Classifier::LookupTable { .. } => "lookup_table",
            Classifier::LinearThreshold { .. } => "linear_threshold",
            Classifier::RegionConjunction { .. } => "region_conjunction",
            Classifier::DecisionTree { .. } => "decision_tree",
        }
    }

    /// Lookup-table exceptions sorted by point, for stable serialization.
    pub fn sorted_entries(&self) -> Vec<(Point, Label)> {
        match self {
            Classifier::LookupTable { entries, .. } => {
                let mut out: Vec<_> = entries.iter().collect();
                out.sort();
                out.into_iter()
                    .map(|(k, l)| (Point(k.iter().map(|c| c.0).collect()), *l))
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// Evaluates the classifier. Callers are responsible for domain checks
    /// (see [`ClassificationProblem::classify`]).
    pub fn evaluate(&self, x: &Point) -> Label {
        match self {
            Classifier::LookupTable { entries, default } => {
                *entries.get(&key_of(x.coords())).unwrap_or(default)
            }
            Classifier::LinearThreshold { weights, bias, positive, negative } => {
                let score: f64 = weights.iter().zip(x.coords()).map(|(w, v)| w * v).sum::<f64>() + bias;
                if score >= 0.0 {
                    *positive
                } else {
                    *negative
                }
            }
            Classifier::RegionConjunction { constraints, inside, outside } => {
                if constraints.iter().all(|c| c.holds(x)) {
                    *inside
                } else {
                    *outside
                }
            }
            Classifier::DecisionTree { nodes } => {
                let mut at = 0;
                loop {
                    match &nodes[at] {
                        TreeNode::Leaf { label } => return *label,
                        TreeNode::Threshold { feature, threshold, left, right } => {
                            at = if x.get(*feature) <= *threshold { *left } else { *right };
                        }
                        TreeNode::Categorical { feature, left_values, left, right } => {
                            let code = x.get(*feature) as usize;
                            at = if left_values.contains(&code) { *left } else { *right };
                        }
                    }
                }
            }
        }
    }

    /// Checks structural invariants against the problem the classifier belongs to.
    pub(crate) fn validate(&self, problem: &ClassificationProblem) -> Result<()> {
        let m = problem.num_features();
        let classes = problem.classes();
        let check_label = |label: &Label| {
            if classes.contains(label) {
                Ok(())
            } else {
                Err(Error::InvalidProblem(format!("label {label} is not a declared class")))
            }
        };
        let check_len = |what: &str, len: usize| {
            if len == m {
                Ok(())
            } else {
                Err(Error::InvalidProblem(format!("{what} has {len} coefficients, expected {m}")))
            }
        };
        match self {
            Classifier::LookupTable { entries, default } => {
                check_label(default)?;
                for (key, label) in entries {
                    check_label(label)?;
                    problem.check_point(&Point(key.iter().map(|c| c.0).collect()))?;
                }
            }
            Classifier::LinearThreshold { weights, positive, negative, .. } => {
                check_len("weight vector", weights.len())?;
                check_label(positive)?;
                check_label(negative)?;
            }
            Classifier::RegionConjunction { constraints, inside, outside } => {
                for c in constraints {
                    check_len("constraint", c.coeffs.len())?;
                }
                check_label(inside)?;
                check_label(outside)?;
            }
            Classifier::DecisionTree { nodes } => validate_tree(nodes, problem)?,
        }
        Ok(())
    }
}

fn validate_tree(nodes: &[TreeNode], problem: &ClassificationProblem) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidProblem(format!("decision tree: {msg}")));
    if nodes.is_empty() {
        return bad("no nodes".into());
    }
    let m = problem.num_features();
    let mut parents = vec![0usize; nodes.len()];
    for (idx, node) in nodes.iter().enumerate() {
        let (feature, children) = match node {
            TreeNode::Leaf { label } => {
                if !problem.classes().contains(label) {
                    return bad(format!("leaf {idx} has undeclared label {label}"));
                }
                continue;
            }
            TreeNode::Threshold { feature, left, right, .. } => (*feature, [*left, *right]),
            TreeNode::Categorical { feature, left, right, left_values } => {
                if (1..=m).contains(feature) && !problem.domain(*feature).is_categorical() {
                    return bad(format!("node {idx} splits categorically on ordinal feature {feature}"));
                }
                if let Some(FeatureDomain::Categorical { values }) =
                    (1..=m).contains(feature).then(|| problem.domain(*feature))
                {
                    if left_values.iter().any(|v| *v >= values.len()) {
                        return bad(format!("node {idx} references an unknown category"));
                    }
                }
                (*feature, [*left, *right])
            }
        };
        if !(1..=m).contains(&feature) {
            return bad(format!("node {idx} splits on unknown feature {feature}"));
        }
        for child in children {
            if child >= nodes.len() || child == 0 {
                return bad(format!("node {idx} has invalid child {child}"));
            }
            parents[child] += 1;
        }
    }
    if let Some(idx) = (1..nodes.len()).find(|&i| parents[i] != 1) {
        return bad(format!("node {idx} has {} parents, expected exactly one", parents[idx]));
    }
    // Every non-root node has one parent and the root none; reachability
    // from the root then rules out cycles.
    let mut seen = vec![false; nodes.len()];
    let mut stack = vec![0];
    while let Some(at) = stack.pop() {
        if std::mem::replace(&mut seen[at], true) {
            return bad("cycle detected".into());
        }
        match &nodes[at] {
            TreeNode::Leaf { .. } => {}
            TreeNode::Threshold { left, right, .. } | TreeNode::Categorical { left, right, .. } => {
                stack.push(*left);
                stack.push(*right);
            }
        }
    }
    if let Some(idx) = seen.iter().position(|s| !s) {
        return bad(format!("node {idx} is unreachable from the root"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn p(c: &[f64]) -> Point {
        Point(c.to_vec())
    }

    #[test]
    fn running_example_classifier() {
        let problem = fixtures::example1_problem();
        let kappa = problem.classifier();
        assert_eq!(kappa.evaluate(&p(&[1., 1., 1.])), Label(1));
        assert_eq!(kappa.evaluate(&p(&[0., 1., 1.])), Label(0));
        assert_eq!(kappa.evaluate(&p(&[2., 1., 1.])), Label(0));
        // 4 * 1 >= 2 + 2 still holds at the boundary.
        assert_eq!(kappa.evaluate(&p(&[1., 2., 2.])), Label(1));
        assert_eq!(kappa.evaluate(&p(&[1., 2., 2.25])), Label(0));
    }

    #[test]
    fn lookup_table_exceptions_and_default() {
        let problem = fixtures::example7_problem();
        let kappa = problem.classifier();
        assert_eq!(kappa.evaluate(&p(&[0.5, 0.5, 1.])), Label(0));
        assert_eq!(kappa.evaluate(&p(&[0., 0., 0.])), Label(1));
        assert_eq!(kappa.evaluate(&p(&[1., 1., -0.5])), Label(0));

        let zeros = [[0.5, 0.5, 1.], [1., 0.5, 0.5], [-0.5, 1., 1.], [1., 1., -0.5]];
        let d13 = [-0.5, 0., 0.5, 1.];
        let d2 = [0., 0.5, 1.];
        for a in d13 {
            for b in d2 {
                for c in d13 {
                    let expected = if zeros.contains(&[a, b, c]) { 0 } else { 1 };
                    assert_eq!(kappa.evaluate(&p(&[a, b, c])), Label(expected));
                }
            }
        }
    }

    #[test]
    fn negative_zero_matches_positive_zero() {
        let kappa = Classifier::lookup_table([(p(&[0.0, 1.0]), Label(0))], Label(1));
        assert_eq!(kappa.evaluate(&p(&[-0.0, 1.0])), Label(0));
    }

    #[test]
    fn linear_threshold_ties_go_positive() {
        let kappa = Classifier::LinearThreshold {
            weights: vec![1.0, -1.0],
            bias: 0.0,
            positive: Label(1),
            negative: Label(0),
        };
        assert_eq!(kappa.evaluate(&p(&[1.0, 1.0])), Label(1));
        assert_eq!(kappa.evaluate(&p(&[0.0, 1.0])), Label(0));
    }

    #[test]
    fn decision_tree_threshold_tie_goes_left() {
        let problem = ClassificationProblem::new(
            vec![
                FeatureDomain::discrete([0.0, 1.0, 2.0]).unwrap(),
                FeatureDomain::categorical(["a", "b", "c"]).unwrap(),
            ],
            vec![Label(0), Label(1)],
            Classifier::DecisionTree {
                nodes: vec![
                    TreeNode::Threshold { feature: 1, threshold: 1.0, left: 1, right: 2 },
                    TreeNode::Leaf { label: Label(0) },
                    TreeNode::Categorical { feature: 2, left_values: vec![2], left: 3, right: 4 },
                    TreeNode::Leaf { label: Label(1) },
                    TreeNode::Leaf { label: Label(0) },
                ],
            },
        )
        .unwrap();
        let kappa = problem.classifier();
        assert_eq!(kappa.evaluate(&p(&[1.0, 2.0])), Label(0));
        assert_eq!(kappa.evaluate(&p(&[2.0, 2.0])), Label(1));
        assert_eq!(kappa.evaluate(&p(&[2.0, 0.0])), Label(0));
    }

    #[test]
    fn malformed_trees_are_rejected() {
        let domains = vec![FeatureDomain::discrete([0.0, 1.0]).unwrap()];
        let classes = vec![Label(0), Label(1)];
        let build = |nodes| {
            ClassificationProblem::new(domains.clone(), classes.clone(), Classifier::DecisionTree { nodes })
        };
        let leaf = |l| TreeNode::Leaf { label: Label(l) };
        // child index out of range
        assert!(build(vec![TreeNode::Threshold { feature: 1, threshold: 0.5, left: 1, right: 5 }, leaf(0)]).is_err());
        // shared child
        assert!(build(vec![TreeNode::Threshold { feature: 1, threshold: 0.5, left: 1, right: 1 }, leaf(0)]).is_err());
        // unreachable node
        assert!(build(vec![leaf(0), leaf(1)]).is_err());
        // undeclared label
        assert!(build(vec![leaf(7)]).is_err());
        // unknown feature
        assert!(build(vec![TreeNode::Threshold { feature: 2, threshold: 0.5, left: 1, right: 2 }, leaf(0), leaf(1)]).is_err());
        assert!(build(vec![TreeNode::Threshold { feature: 1, threshold: 0.5, left: 1, right: 2 }, leaf(0), leaf(1)]).is_ok());
    }

    #[test]
    fn lookup_entries_must_lie_in_domains() {
        let res = ClassificationProblem::new(
            vec![FeatureDomain::discrete([0.0, 1.0]).unwrap()],
            vec![Label(0), Label(1)],
            Classifier::lookup_table([(p(&[0.5]), Label(0))], Label(1)),
        );
        assert!(matches!(res, Err(Error::DomainViolation { feature: 1, .. })));
    }
}
