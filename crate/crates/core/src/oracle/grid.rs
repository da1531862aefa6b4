use std::sync::Arc;

use super::{verify_witness, CancelToken, Capabilities, Oracle, OracleQuery, Verdict};
use crate::error::{Error, Result};
use crate::problem::{ExplanationProblem, FeatureDomain, Norm, Point, DEFAULT_TOLERANCE};

pub const DEFAULT_CANDIDATE_CAP: u64 = 10_000_000;

/// Points enumerated between two looks at the cancel token.
const CANCEL_CHECK_INTERVAL: u64 = 10_000;

/// Exact oracle for finite (or grid-discretized) domains: enumerates every
/// point of the restricted ball in lexicographic order of domain-value
/// indices, feature 1 most significant.
#[derive(Debug, Clone)]
pub struct GridOracle {
    problem: Arc<ExplanationProblem>,
    cap: u64,
    tolerance: f64,
}

impl GridOracle {
    pub fn new(problem: ExplanationProblem) -> Self {
        GridOracle { problem: Arc::new(problem), cap: DEFAULT_CANDIDATE_CAP, tolerance: DEFAULT_TOLERANCE }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn problem(&self) -> &ExplanationProblem {
        &self.problem
    }

    /// Every adversarial example for the query, in enumeration order.
    pub fn all_witnesses(&self, query: &OracleQuery) -> Result<Vec<Point>> {
        let mut found = Vec::new();
        self.search(query, &CancelToken::new(), |x| {
            found.push(x.clone());
            false
        })?;
        Ok(found)
    }

    /// Calls `visit` on each adversarial example until it returns `true`.
    fn search(&self, query: &OracleQuery, cancel: &CancelToken, mut visit: impl FnMut(&Point) -> bool) -> Result<()> {
        let model = self.problem.problem();
        let m = model.num_features();
        query.validate(m)?;
        if query.norm != Norm::L0 {
            if let Some(i) = model.domains().iter().position(FeatureDomain::is_categorical) {
                return Err(Error::CategoricalNorm { feature: i + 1 });
            }
        }
        let v = &self.problem.instance().point;
        let mut candidates = Vec::with_capacity(m);
        for feature in 1..=m {
            if query.fixed.contains(feature) {
                candidates.push(vec![v.get(feature)]);
                continue;
            }
            match model.domain(feature).enumerable_values() {
                Some(values) => candidates.push(values),
                None => {
                    return Err(Error::Unsupported(format!(
                        "feature {feature} is continuous without a discretization grid"
                    )))
                }
            }
        }
        let mut walk = Walk {
            candidates: &candidates,
            v: v.coords(),
            ball: Ball::new(query.norm, query.epsilon + self.tolerance),
            point: Point(v.coords().to_vec()),
            label: self.problem.instance().label,
            classifier: model.classifier(),
            visited: 0,
            cap: self.cap,
            cancel,
        };
        walk.descend(0, 0.0, &mut visit).map(|_| ())
    }
}

/// Accumulates the per-coordinate contribution of a norm.
#[derive(Debug, Clone, Copy)]
struct Ball {
    norm: Norm,
    bound: f64,
}

impl Ball {
    fn new(norm: Norm, radius: f64) -> Self {
        let bound = if norm == Norm::L2 { radius * radius } else { radius };
        Ball { norm, bound }
    }

    fn add(&self, acc: f64, diff: f64) -> f64 {
        let diff = diff.abs();
        match self.norm {
            Norm::L0 => acc + if diff != 0.0 { 1.0 } else { 0.0 },
            Norm::L1 => acc + diff,
            Norm::L2 => acc + diff * diff,
            Norm::LInf => acc.max(diff),
        }
    }

    fn fits(&self, acc: f64) -> bool {
        acc <= self.bound
    }
}

struct Walk<'a> {
    candidates: &'a [Vec<f64>],
    v: &'a [f64],
    ball: Ball,
    point: Point,
    label: crate::problem::Label,
    classifier: &'a crate::model::Classifier,
    visited: u64,
    cap: u64,
    cancel: &'a CancelToken,
}

impl Walk<'_> {
    /// Returns `Ok(true)` once `visit` asks to stop.
    fn descend(&mut self, depth: usize, acc: f64, visit: &mut impl FnMut(&Point) -> bool) -> Result<bool> {
        if depth == self.candidates.len() {
            self.visited += 1;
            if self.visited > self.cap {
                return Err(Error::CombinatorialLimit { cap: self.cap });
            }
            if self.visited.is_multiple_of(CANCEL_CHECK_INTERVAL) && self.cancel.is_cancelled() {
                return Err(Error::Cancelled);
            }
            if self.classifier.evaluate(&self.point) != self.label {
                return Ok(visit(&self.point));
            }
            return Ok(false);
        }
        for &value in &self.candidates[depth] {
            let next = self.ball.add(acc, value - self.v[depth]);
            if !self.ball.fits(next) {
                continue;
            }
            self.point.0[depth] = value;
            if self.descend(depth + 1, next, visit)? {
                return Ok(true);
            }
        }
        self.point.0[depth] = self.v[depth];
        Ok(false)
    }
}

impl Oracle for GridOracle {
    fn num_features(&self) -> usize {
        self.problem.num_features()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities { name: "grid".into(), exact: true, geometric_witnesses: true }
    }

    fn find_adv_ex(&self, query: &OracleQuery, cancel: &CancelToken) -> Result<Verdict> {
        if cancel.is_cancelled() {
            return Err(Error::Cancelled);
        }
        let mut witness = None;
        self.search(query, cancel, |x| {
            witness = Some(x.clone());
            true
        })?;
        match witness {
            Some(w) => {
                if cfg!(debug_assertions) {
                    assert!(
                        verify_witness(&self.problem, &w, query, self.tolerance)?,
                        "grid oracle produced an invalid witness {w}"
                    );
                }
                Ok(Verdict::AdvFound(w))
            }
            None => Ok(Verdict::Robust),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::problem::{distance, FeatureSet};
    use crate::random::{random_lookup_problem, RandomProblemSpec};

    fn q(fixed: &[usize], epsilon: f64, norm: Norm) -> OracleQuery {
        OracleQuery::new(fixed.iter().copied().collect(), epsilon, norm).unwrap()
    }

    fn ask(oracle: &GridOracle, query: &OracleQuery) -> Verdict {
        oracle.find_adv_ex(query, &CancelToken::new()).unwrap()
    }

    /// Independent reference: walks the full cartesian product with an
    /// odometer, then filters by the constrained-AEx conditions.
    fn naive_first_witness(problem: &ExplanationProblem, query: &OracleQuery) -> Option<Point> {
        let domains: Vec<Vec<f64>> =
            problem.problem().domains().iter().map(|d| d.enumerable_values().unwrap()).collect();
        let v = &problem.instance().point;
        let mut idx = vec![0usize; domains.len()];
        loop {
            let x = Point(idx.iter().zip(&domains).map(|(i, d)| d[*i]).collect());
            let pinned = query.fixed.iter().all(|f| x.get(f) == v.get(f));
            let close = distance(&x, v, query.norm).unwrap() <= query.epsilon + 1e-9;
            if pinned && close && problem.problem().classifier().evaluate(&x) != problem.instance().label {
                return Some(x);
            }
            let mut k = domains.len();
            loop {
                if k == 0 {
                    return None;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < domains[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    #[test]
    fn running_example_verdicts() {
        let oracle = GridOracle::new(fixtures::example1());
        match ask(&oracle, &q(&[], 1.0, Norm::L1)) {
            Verdict::AdvFound(w) => {
                assert!(w.get(1) == 0.0 || w.get(1) == 2.0, "witness {w}");
            }
            Verdict::Robust => panic!("expected an adversarial example"),
        }
        assert_eq!(ask(&oracle, &q(&[1], 1.0, Norm::L1)), Verdict::Robust);
    }

    #[test]
    fn example6_single_adversarial_example() {
        let oracle = GridOracle::new(fixtures::example6());
        assert_eq!(ask(&oracle, &q(&[], 0.5, Norm::LInf)), Verdict::AdvFound(Point(vec![0.5, 0.5])));
        let all = oracle.all_witnesses(&q(&[], 1.0, Norm::LInf)).unwrap();
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn example7_witness_sets() {
        let oracle = GridOracle::new(fixtures::example7());
        let at1 = oracle.all_witnesses(&q(&[], 1.0, Norm::L1)).unwrap();
        assert_eq!(at1, vec![Point(vec![0.5, 0.5, 1.0]), Point(vec![1.0, 0.5, 0.5])]);
        let at15 = oracle.all_witnesses(&q(&[], 1.5, Norm::L1)).unwrap();
        assert_eq!(at15.len(), 4);
        for w in [[0.5, 0.5, 1.0], [1.0, 0.5, 0.5], [-0.5, 1.0, 1.0], [1.0, 1.0, -0.5]] {
            assert!(at15.contains(&Point(w.to_vec())));
        }
        assert_eq!(ask(&oracle, &q(&[1, 3], 1.5, Norm::L1)), Verdict::Robust);
    }

    #[test]
    fn all_fixed_is_robust() {
        for problem in [fixtures::example1(), fixtures::example6(), fixtures::example7()] {
            let m = problem.num_features();
            let oracle = GridOracle::new(problem);
            let all: Vec<usize> = (1..=m).collect();
            for norm in Norm::ALL {
                for eps in [0.5, 1.0, 100.0] {
                    assert_eq!(ask(&oracle, &q(&all, eps, norm)), Verdict::Robust);
                }
            }
        }
    }

    #[test]
    fn continuous_without_grid_is_unsupported() {
        use crate::model::Classifier;
        use crate::problem::{ClassificationProblem, Instance, Label};
        let problem = ClassificationProblem::new(
            vec![FeatureDomain::continuous(0.0, 1.0).unwrap(), FeatureDomain::discrete([0.0, 1.0]).unwrap()],
            vec![Label(0), Label(1)],
            Classifier::constant(Label(1)),
        )
        .unwrap();
        let e = ExplanationProblem::new(problem, Instance::new(Point(vec![0.5, 0.0]), Label(1))).unwrap();
        let oracle = GridOracle::new(e);
        assert!(matches!(
            oracle.find_adv_ex(&q(&[], 1.0, Norm::L1), &CancelToken::new()),
            Err(Error::Unsupported(_))
        ));
        // Pinning the continuous feature makes the query answerable.
        assert_eq!(ask(&oracle, &q(&[1], 1.0, Norm::L1)), Verdict::Robust);
    }

    #[test]
    fn candidate_cap_is_enforced() {
        let oracle = GridOracle::new(fixtures::example1()).with_cap(100);
        // The cap counts visited points, so exhaust the ball.
        assert_eq!(oracle.all_witnesses(&q(&[], 3.0, Norm::L0)), Err(Error::CombinatorialLimit { cap: 100 }));
    }

    #[test]
    fn cancelled_before_start() {
        let oracle = GridOracle::new(fixtures::example7());
        let token = CancelToken::new();
        token.cancel();
        assert_eq!(oracle.find_adv_ex(&q(&[], 1.0, Norm::L1), &token), Err(Error::Cancelled));
    }

    #[test]
    fn rejects_out_of_range_fixed_features() {
        let oracle = GridOracle::new(fixtures::example7());
        assert!(oracle.find_adv_ex(&q(&[4], 1.0, Norm::L1), &CancelToken::new()).is_err());
    }

    #[test]
    fn agrees_with_naive_enumeration_on_random_problems() {
        let spec = RandomProblemSpec { max_features: 5, max_domain_size: 4, max_exceptions: 8 };
        for seed in 0..100 {
            let problem = random_lookup_problem(seed, spec);
            let m = problem.num_features();
            let oracle = GridOracle::new(problem.clone());
            for mask in 0..(1u64 << m) {
                for norm in [Norm::L0, Norm::L1, Norm::L2, Norm::LInf] {
                    for eps in [0.5, 1.0, 2.5] {
                        let query = OracleQuery::new(FeatureSet::from_mask(mask), eps, norm).unwrap();
                        let expected = match naive_first_witness(&problem, &query) {
                            Some(w) => Verdict::AdvFound(w),
                            None => Verdict::Robust,
                        };
                        assert_eq!(ask(&oracle, &query), expected, "seed {seed} query {query:?}");
                    }
                }
            }
        }
    }
}
