//! Fast sparse Bayesian learning with executable pruning criteria.

pub mod criteria;
pub mod harness;
pub mod priors;
pub mod quadrature;
pub mod section;
pub mod solver;

pub use criteria::{CriteriaError, CriterionVerdict, TriState};
pub use priors::{Family, PriorError, ScaleFamilyPrior};
pub use quadrature::{DerivativeEstimate, Estimate, QuadratureError, QuadratureSpec};
pub use section::{Maximizer, SectionError, SectionFunction, SectionStats, SparseProblem};
pub use solver::{ModelState, SolverConfig, SolverError, SweepOrder};
