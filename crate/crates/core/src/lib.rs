//! Distance-restricted abductive (dAXp) and contrastive (dCXp) explanations
//! of classifiers, computed over a monotone robustness oracle.
//!
//! The building blocks are:
//!
//! * [`problem`] and [`model`]: classification problems, instances, norms
//!   and classifiers;
//! * [`oracle`]: `FindAdvEx` implementations (exact grid search, a
//!   synthetic latency oracle, and an external-process client);
//! * [`msmp`]: deletion, dichotomic and parallel (SwiftXplain) extraction
//!   of one subset-minimal explanation;
//! * [`parallel`]: the bounded probe executor used by the parallel search;
//! * [`enumerate`]: MARCO-style enumeration, brute-force reference
//!   families, minimal hitting sets and duality checks;
//! * [`report`]: run reports.

pub mod enumerate;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod model;
pub mod msmp;
pub mod oracle;
pub mod parallel;
pub mod problem;
pub mod random;
pub mod report;

pub use error::{Error, Result};
pub use problem::{
    distance, ClassificationProblem, ExplanationProblem, FeatureDomain, FeatureOrder, FeatureSet, Instance, Label,
    Norm, Point,
};
