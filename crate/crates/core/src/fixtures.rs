//! Worked examples used throughout the tests, the CLI and the README.

use crate::model::{Classifier, Comparison, LinearConstraint};
use crate::problem::{
    ClassificationProblem, ExplanationProblem, FeatureDomain, Instance, Label, Point,
};

/// Grid attached to the real-valued features of the running example.
pub const EXAMPLE1_GRID: (f64, f64, f64) = (-1.0, 5.0, 0.25);

/// Running example: `kappa(x) = 1` iff `0 < x1 < 2` and `4 x1 >= x2 + x3`,
/// with each real feature discretized on [`EXAMPLE1_GRID`].
pub fn example1_problem() -> ClassificationProblem {
    let (lo, hi, step) = EXAMPLE1_GRID;
    let domain = FeatureDomain::gridded(lo, hi, step).expect("valid grid");
    let constraints = vec![
        LinearConstraint { coeffs: vec![1.0, 0.0, 0.0], op: Comparison::Gt, rhs: 0.0 },
        LinearConstraint { coeffs: vec![1.0, 0.0, 0.0], op: Comparison::Lt, rhs: 2.0 },
        LinearConstraint { coeffs: vec![4.0, -1.0, -1.0], op: Comparison::Ge, rhs: 0.0 },
    ];
    ClassificationProblem::new(
        vec![domain.clone(), domain.clone(), domain],
        vec![Label(0), Label(1)],
        Classifier::RegionConjunction { constraints, inside: Label(1), outside: Label(0) },
    )
    .expect("valid problem")
}

/// Instance `((1,1,1), 1)` of the running example.
pub fn example1() -> ExplanationProblem {
    ExplanationProblem::new(example1_problem(), Instance::new(Point(vec![1.0, 1.0, 1.0]), Label(1)))
        .expect("kappa(1,1,1) = 1")
}

/// Two features over `{0, 0.5, 1}`; class 0 exactly at `(0.5,0.5)`, `(0,1)`, `(1,0)`.
pub fn example6_problem() -> ClassificationProblem {
    let domain = FeatureDomain::discrete([0.0, 0.5, 1.0]).expect("valid domain");
    let zeros = [[0.5, 0.5], [0.0, 1.0], [1.0, 0.0]];
    ClassificationProblem::new(
        vec![domain.clone(), domain],
        vec![Label(0), Label(1)],
        Classifier::lookup_table(zeros.iter().map(|z| (Point(z.to_vec()), Label(0))), Label(1)),
    )
    .expect("valid problem")
}

pub fn example6() -> ExplanationProblem {
    ExplanationProblem::new(example6_problem(), Instance::new(Point(vec![1.0, 1.0]), Label(1)))
        .expect("kappa(1,1) = 1")
}

/// Three features, `D1 = D3 = {-0.5, 0, 0.5, 1}`, `D2 = {0, 0.5, 1}`; class 0
/// exactly at `(0.5,0.5,1)`, `(1,0.5,0.5)`, `(-0.5,1,1)`, `(1,1,-0.5)`.
pub fn example7_problem() -> ClassificationProblem {
    let outer = FeatureDomain::discrete([-0.5, 0.0, 0.5, 1.0]).expect("valid domain");
    let middle = FeatureDomain::discrete([0.0, 0.5, 1.0]).expect("valid domain");
    let zeros = [[0.5, 0.5, 1.0], [1.0, 0.5, 0.5], [-0.5, 1.0, 1.0], [1.0, 1.0, -0.5]];
    ClassificationProblem::new(
        vec![outer.clone(), middle, outer],
        vec![Label(0), Label(1)],
        Classifier::lookup_table(zeros.iter().map(|z| (Point(z.to_vec()), Label(0))), Label(1)),
    )
    .expect("valid problem")
}

pub fn example7() -> ExplanationProblem {
    ExplanationProblem::new(example7_problem(), Instance::new(Point(vec![1.0, 1.0, 1.0]), Label(1)))
        .expect("kappa(1,1,1) = 1")
}
