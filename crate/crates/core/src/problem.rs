//! Classification problems, instances, norms and feature sets.
//!
//! Feature indices are 1-based everywhere: feature `i` is stored at
//! position `i - 1` of a [`Point`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Classifier;

/// Absolute tolerance applied to `distance <= epsilon` comparisons.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// A class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub i64);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The domain of a single feature.
///
/// Categorical values are encoded in a [`Point`] by their position in
/// `values` (0, 1, 2, ...).
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureDomain {
    Categorical { values: Vec<String> },
    DiscreteOrdinal { values: Vec<f64> },
    /// A real interval. `grid_step` attaches a discretization grid
    /// `lo, lo + step, ...` that exhaustive oracles may enumerate.
    ContinuousOrdinal { lo: f64, hi: f64, grid_step: Option<f64> },
}

impl FeatureDomain {
    pub fn categorical<S: Into<String>>(values: impl IntoIterator<Item = S>) -> Result<Self> {
        let values: Vec<String> = values.into_iter().map(Into::into).collect();
        if values.is_empty() {
            return Err(Error::InvalidDomain("categorical domain is empty".into()));
        }
        let distinct: BTreeSet<&String> = values.iter().collect();
        if distinct.len() != values.len() {
            return Err(Error::InvalidDomain("categorical values are not distinct".into()));
        }
        Ok(FeatureDomain::Categorical { values })
    }

    pub fn discrete(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return Err(Error::InvalidDomain("discrete domain is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDomain("discrete values must be finite".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDomain(
                "discrete values must be strictly increasing".into(),
            ));
        }
        Ok(FeatureDomain::DiscreteOrdinal { values })
    }

    pub fn continuous(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidDomain(format!(
                "continuous domain needs finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(FeatureDomain::ContinuousOrdinal { lo, hi, grid_step: None })
    }

    /// A continuous interval with an attached discretization grid.
    pub fn gridded(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidDomain(format!("grid step must be positive, got {step}")));
        }
        match Self::continuous(lo, hi)? {
            FeatureDomain::ContinuousOrdinal { lo, hi, .. } => {
                Ok(FeatureDomain::ContinuousOrdinal { lo, hi, grid_step: Some(step) })
            }
            _ => unreachable!(),
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, FeatureDomain::Categorical { .. })
    }

    pub fn contains(&self, value: f64) -> bool {
        match self {
            FeatureDomain::Categorical { values } => {
                value >= 0.0 && value.fract() == 0.0 && (value as usize) < values.len()
            }
            FeatureDomain::DiscreteOrdinal { values } => values.contains(&value),
            FeatureDomain::ContinuousOrdinal { lo, hi, .. } => *lo <= value && value <= *hi,
        }
    }

    /// The finite list of values an exhaustive search enumerates, or
    /// `None` for a continuous interval without a grid.
    pub fn enumerable_values(&self) -> Option<Vec<f64>> {
        match self {
            FeatureDomain::Categorical { values } => {
                Some((0..values.len()).map(|i| i as f64).collect())
            }
            FeatureDomain::DiscreteOrdinal { values } => Some(values.clone()),
            FeatureDomain::ContinuousOrdinal { lo, hi, grid_step: Some(step) } => {
                let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
                Some((0..count).map(|k| lo + k as f64 * step).collect())
            }
            FeatureDomain::ContinuousOrdinal { grid_step: None, .. } => None,
        }
    }
}

/// A point of feature space; coordinate `i - 1` holds feature `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Value of 1-based feature `feature`.
    pub fn get(&self, feature: usize) -> f64 {
        self.0[feature - 1]
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Features on which `self` and `other` differ.
    pub fn differing_features(&self, other: &Point) -> FeatureSet {
        self.0
            .iter()
            .zip(&other.0)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i + 1)
            .collect()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// The `l_p` norm used to bound the distance from the instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Norm {
    L0,
    L1,
    L2,
    LInf,
}

impl Norm {
    pub const ALL: [Norm; 4] = [Norm::L0, Norm::L1, Norm::L2, Norm::LInf];

    /// Flag spelling (`l0`, `l1`, `l2`, `linf`).
    pub fn as_flag(self) -> &'static str {
        match self {
            Norm::L0 => "l0",
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::LInf => "linf",
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_flag())
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l0" | "0" => Ok(Norm::L0),
            "l1" | "1" => Ok(Norm::L1),
            "l2" | "2" => Ok(Norm::L2),
            "linf" | "inf" | "l_inf" => Ok(Norm::LInf),
            other => Err(Error::InvalidConfig(format!(
                "unknown norm `{other}` (expected l0, l1, l2 or linf)"
            ))),
        }
    }
}

impl From<Norm> for String {
    fn from(norm: Norm) -> String {
        norm.as_flag().to_string()
    }
}

impl TryFrom<String> for Norm {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// `||x - v||_p`. Purely numeric; categorical checks live in
/// [`ClassificationProblem::distance`].
pub fn distance(x: &Point, v: &Point, norm: Norm) -> Result<f64> {
    if x.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), found: x.len() });
    }
    let diffs = x.0.iter().zip(&v.0).map(|(a, b)| (a - b).abs());
    Ok(match norm {
        Norm::L0 => diffs.filter(|d| *d != 0.0).count() as f64,
        Norm::L1 => diffs.sum(),
        Norm::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
        Norm::LInf => diffs.fold(0.0, f64::max),
    })
}

/// A set of 1-based feature indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSet(BTreeSet<usize>);

impl FeatureSet {
    pub fn new() -> Self {
        FeatureSet(BTreeSet::new())
    }

    /// `{1, ..., m}`.
    pub fn full(m: usize) -> Self {
        (1..=m).collect()
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.0.contains(&feature)
    }

    pub fn insert(&mut self, feature: usize) -> bool {
        self.0.insert(feature)
    }

    pub fn remove(&mut self, feature: usize) -> bool {
        self.0.remove(&feature)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn union(&self, other: &FeatureSet) -> FeatureSet {
        self.0.union(&other.0).copied().collect()
    }

    pub fn difference(&self, other: &FeatureSet) -> FeatureSet {
        self.0.difference(&other.0).copied().collect()
    }

    pub fn intersects(&self, other: &FeatureSet) -> bool {
        self.0.intersection(&other.0).next().is_some()
    }

    pub fn is_subset(&self, other: &FeatureSet) -> bool {
        self.0.is_subset(&other.0)
    }

    /// `{1..m} \ self`.
    pub fn complement(&self, m: usize) -> FeatureSet {
        (1..=m).filter(|i| !self.contains(*i)).collect()
    }

    pub fn without(&self, feature: usize) -> FeatureSet {
        let mut out = self.clone();
        out.remove(feature);
        out
    }

    /// Checks every member lies in `1..=m`.
    pub fn check_range(&self, m: usize) -> Result<()> {
        match self.0.iter().find(|&&i| i == 0 || i > m) {
            Some(i) => Err(Error::InvalidFeatureSet(format!(
                "feature index {i} outside 1..={m}"
            ))),
            None => Ok(()),
        }
    }

    /// Bitmask with bit `i - 1` set for feature `i`; requires `m <= 64`.
    pub fn to_mask(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, i| acc | 1u64 << (i - 1))
    }

    pub fn from_mask(mask: u64) -> Self {
        (0..64).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect()
    }
}

impl FromIterator<usize> for FeatureSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        FeatureSet(iter.into_iter().collect())
    }
}

impl<const N: usize> From<[usize; N]> for FeatureSet {
    fn from(items: [usize; N]) -> Self {
        items.into_iter().collect()
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// A permutation of `1..=m` giving the order in which features are analysed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureOrder(Vec<usize>);

impl FeatureOrder {
    pub fn identity(m: usize) -> Self {
        FeatureOrder((1..=m).collect())
    }

    pub fn new(order: Vec<usize>) -> Result<Self> {
        let m = order.len();
        let seen: BTreeSet<usize> = order.iter().copied().collect();
        if seen.len() != m || seen.iter().any(|&i| i == 0 || i > m) {
            return Err(Error::InvalidConfig(format!(
                "ordering {order:?} is not a permutation of 1..={m}"
            )));
        }
        Ok(FeatureOrder(order))
    }

    pub fn seeded(m: usize, seed: u64) -> Self {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut order: Vec<usize> = (1..=m).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        FeatureOrder(order)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// `M = (F, domains, K, classifier)`.
#[derive(Debug, Clone)]
pub struct ClassificationProblem {
    domains: Vec<FeatureDomain>,
    classes: Vec<Label>,
    classifier: Arc<Classifier>,
}

impl ClassificationProblem {
    pub fn new(domains: Vec<FeatureDomain>, classes: Vec<Label>, classifier: Classifier) -> Result<Self> {
        if domains.is_empty() {
            return Err(Error::InvalidProblem("at least one feature is required".into()));
        }
        let distinct: BTreeSet<Label> = classes.iter().copied().collect();
        if distinct.len() < 2 || distinct.len() != classes.len() {
            return Err(Error::InvalidProblem(
                "classes must hold at least two distinct labels".into(),
            ));
        }
        let problem = ClassificationProblem { domains, classes, classifier: Arc::new(classifier) };
        problem.classifier.validate(&problem)?;
        Ok(problem)
    }

    pub fn num_features(&self) -> usize {
        self.domains.len()
    }

    pub fn domains(&self) -> &[FeatureDomain] {
        &self.domains
    }

    /// Domain of 1-based feature `feature`.
    pub fn domain(&self, feature: usize) -> &FeatureDomain {
        &self.domains[feature - 1]
    }

    pub fn classes(&self) -> &[Label] {
        &self.classes
    }

    pub fn classifier(&self) -> &Classifier {
        &self.classifier
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        if x.len() != self.domains.len() {
            return Err(Error::DimensionMismatch { expected: self.domains.len(), found: x.len() });
        }
        for (i, (value, domain)) in x.0.iter().zip(&self.domains).enumerate() {
            if !domain.contains(*value) {
                return Err(Error::DomainViolation { feature: i + 1, value: *value });
            }
        }
        Ok(())
    }

    /// Evaluates the classifier after checking `x` lies in feature space.
    pub fn classify(&self, x: &Point) -> Result<Label> {
        self.check_point(x)?;
        Ok(self.classifier.evaluate(x))
    }

    /// Distance that rejects categorical features under numeric norms.
    pub fn distance(&self, x: &Point, v: &Point, norm: Norm) -> Result<f64> {
        if norm != Norm::L0 {
            if let Some(i) = self.domains.iter().position(FeatureDomain::is_categorical) {
                return Err(Error::CategoricalNorm { feature: i + 1 });
            }
        }
        distance(x, v, norm)
    }
}

/// An instance `(v, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub point: Point,
    pub label: Label,
}

impl Instance {
    pub fn new(point: Point, label: Label) -> Self {
        Instance { point, label }
    }
}

/// `E = (M, (v, c))` with `classifier(v) = c`.
#[derive(Debug, Clone)]
pub struct ExplanationProblem {
    problem: ClassificationProblem,
    instance: Instance,
}

impl ExplanationProblem {
    pub fn new(problem: ClassificationProblem, instance: Instance) -> Result<Self> {
        if !problem.classes.contains(&instance.label) {
            return Err(Error::InvalidProblem(format!(
                "instance label {} is not a class of the problem",
                instance.label
            )));
        }
        let predicted = problem.classify(&instance.point)?;
        if predicted != instance.label {
            return Err(Error::PredictionMismatch { expected: instance.label, predicted });
        }
        Ok(ExplanationProblem { problem, instance })
    }

    pub fn problem(&self) -> &ClassificationProblem {
        &self.problem
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn num_features(&self) -> usize {
        self.problem.num_features()
    }

    pub fn features(&self) -> FeatureSet {
        FeatureSet::full(self.num_features())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[f64]) -> Point {
        Point(c.to_vec())
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&p(&[0., 1., 1.]), &p(&[1., 1., 1.]), Norm::L1).unwrap(), 1.0);
        assert_eq!(distance(&p(&[0.5, 0.5, 1.]), &p(&[1., 1., 1.]), Norm::L1).unwrap(), 1.0);
        assert_eq!(distance(&p(&[3., 4., 0.]), &p(&[0., 0., 0.]), Norm::L2).unwrap(), 5.0);
        for norm in Norm::ALL {
            assert_eq!(distance(&p(&[2., -1.]), &p(&[2., -1.]), norm).unwrap(), 0.0);
        }
    }

    #[test]
    fn distance_dimension_mismatch() {
        let err = distance(&p(&[1.0]), &p(&[1.0, 2.0]), Norm::L1).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, found: 1 });
    }

    #[test]
    fn categorical_only_under_l0() {
        let problem = ClassificationProblem::new(
            vec![
                FeatureDomain::categorical(["red", "green"]).unwrap(),
                FeatureDomain::discrete([0.0, 1.0]).unwrap(),
            ],
            vec![Label(0), Label(1)],
            Classifier::constant(Label(0)),
        )
        .unwrap();
        let (x, v) = (p(&[1., 0.]), p(&[0., 0.]));
        assert_eq!(problem.distance(&x, &v, Norm::L0).unwrap(), 1.0);
        for norm in [Norm::L1, Norm::L2, Norm::LInf] {
            assert_eq!(
                problem.distance(&x, &v, norm).unwrap_err(),
                Error::CategoricalNorm { feature: 1 }
            );
        }
    }

    #[test]
    fn domain_invariants() {
        assert!(FeatureDomain::discrete([1.0, 1.0]).is_err());
        assert!(FeatureDomain::discrete([2.0, 1.0]).is_err());
        assert!(FeatureDomain::discrete(Vec::<f64>::new()).is_err());
        assert!(FeatureDomain::continuous(1.0, 1.0).is_err());
        assert!(FeatureDomain::categorical(["a", "a"]).is_err());
        assert!(FeatureDomain::categorical(Vec::<String>::new()).is_err());
    }

    #[test]
    fn grid_values_cover_interval() {
        let d = FeatureDomain::gridded(-1.0, 3.0, 0.25).unwrap();
        let values = d.enumerable_values().unwrap();
        assert_eq!(values.len(), 17);
        assert_eq!(values[0], -1.0);
        assert_eq!(values[8], 1.0);
        assert_eq!(*values.last().unwrap(), 3.0);
        assert!(FeatureDomain::continuous(0.0, 1.0).unwrap().enumerable_values().is_none());
    }

    #[test]
    fn norm_spellings() {
        assert_eq!("l0".parse::<Norm>().unwrap(), Norm::L0);
        assert_eq!("LINF".parse::<Norm>().unwrap(), Norm::LInf);
        assert!("l3".parse::<Norm>().is_err());
    }

    #[test]
    fn feature_order_must_be_permutation() {
        assert!(FeatureOrder::new(vec![2, 1, 3]).is_ok());
        assert!(FeatureOrder::new(vec![1, 1, 3]).is_err());
        assert!(FeatureOrder::new(vec![0, 1]).is_err());
        let seeded = FeatureOrder::seeded(10, 7);
        assert_eq!(seeded, FeatureOrder::seeded(10, 7));
        assert!(FeatureOrder::new(seeded.as_slice().to_vec()).is_ok());
    }

    #[test]
    fn feature_set_mask_round_trip() {
        let s = FeatureSet::from([1, 3, 64]);
        assert_eq!(FeatureSet::from_mask(s.to_mask()), s);
        assert_eq!(s.to_string(), "{1,3,64}");
        assert_eq!(FeatureSet::from([2]).complement(3), FeatureSet::from([1, 3]));
    }

    fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec((-8i32..=8).prop_map(|k| k as f64 * 0.5), n)
    }

    proptest! {
        #[test]
        fn distance_is_symmetric_and_zero_on_diagonal(x in coords(5), v in coords(5)) {
            let (x, v) = (Point(x), Point(v));
            for norm in Norm::ALL {
                let d = distance(&x, &v, norm).unwrap();
                prop_assert_eq!(d, distance(&v, &x, norm).unwrap());
                prop_assert_eq!(distance(&x, &x, norm).unwrap(), 0.0);
                prop_assert_eq!(d == 0.0, x == v);
            }
            let hamming = x.0.iter().zip(&v.0).filter(|(a, b)| a != b).count();
            prop_assert_eq!(distance(&x, &v, Norm::L0).unwrap(), hamming as f64);
        }

        #[test]
        fn triangle_inequality(x in coords(4), y in coords(4), z in coords(4)) {
            let (x, y, z) = (Point(x), Point(y), Point(z));
            for norm in [Norm::L1, Norm::L2, Norm::LInf] {
                let direct = distance(&x, &z, norm).unwrap();
                let via = distance(&x, &y, norm).unwrap() + distance(&y, &z, norm).unwrap();
                prop_assert!(direct <= via + 1e-9);
            }
        }
    }
}
