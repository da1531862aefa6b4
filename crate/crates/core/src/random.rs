//! Seeded random lookup-table problems for property tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::Classifier;
use crate::problem::{ClassificationProblem, ExplanationProblem, FeatureDomain, Instance, Label, Point};

/// Shape limits for [`random_lookup_problem`].
#[derive(Debug, Clone, Copy)]
pub struct RandomProblemSpec {
    pub max_features: usize,
    pub max_domain_size: usize,
    pub max_exceptions: usize,
}

impl Default for RandomProblemSpec {
    fn default() -> Self {
        RandomProblemSpec { max_features: 6, max_domain_size: 4, max_exceptions: 8 }
    }
}

/// Values a generated discrete domain draws from.
const VALUE_POOL: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 3.0];

/// Builds a lookup table over small discrete domains with a default class
/// and a handful of exceptions, then picks an instance and labels it with
/// the classifier's own prediction.
pub fn random_lookup_problem(seed: u64, spec: RandomProblemSpec) -> ExplanationProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(1..=spec.max_features);
    let domains: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let size = rng.gen_range(2..=spec.max_domain_size.clamp(2, VALUE_POOL.len()));
            let mut values: Vec<f64> = VALUE_POOL.choose_multiple(&mut rng, size).copied().collect();
            values.sort_by(f64::total_cmp);
            values
        })
        .collect();
    let random_point = |rng: &mut ChaCha8Rng| {
        Point(domains.iter().map(|d| *d.choose(rng).expect("nonempty")).collect())
    };
    let default = Label(rng.gen_range(0..2));
    let other = Label(1 - default.0);
    let exceptions = rng.gen_range(0..=spec.max_exceptions);
    let entries: Vec<(Point, Label)> = (0..exceptions).map(|_| (random_point(&mut rng), other)).collect();
    let classifier = Classifier::lookup_table(entries, default);
    let v = random_point(&mut rng);
    let problem = ClassificationProblem::new(
        domains.into_iter().map(|d| FeatureDomain::discrete(d).expect("sorted distinct")).collect(),
        vec![Label(0), Label(1)],
        classifier,
    )
    .expect("generated problem is valid");
    let c = problem.classifier().evaluate(&v);
    ExplanationProblem::new(problem, Instance::new(v, c)).expect("label taken from the classifier")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seeded_and_within_limits() {
        let spec = RandomProblemSpec { max_features: 6, max_domain_size: 3, max_exceptions: 8 };
        for seed in 0..50 {
            let a = random_lookup_problem(seed, spec);
            let b = random_lookup_problem(seed, spec);
            assert_eq!(a.instance(), b.instance());
            assert!(a.num_features() <= 6);
            for d in a.problem().domains() {
                assert!(d.enumerable_values().unwrap().len() <= 3);
            }
            assert!(a.problem().classifier().sorted_entries().len() <= 8);
        }
    }
}
