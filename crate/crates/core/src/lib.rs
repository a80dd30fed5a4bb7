//! Partial identification for categorical instrumental-variable models.
//!
//! Observed arms `P(X, Y | Z = z)` and the joint counterfactual distribution
//! `P'(Y(x_1), ..., Y(x_K))` are tied together by a finite system of linear
//! inequalities, shared by every arm. On top of that system the crate
//! provides plug-in bounds on linear functionals, a falsification test,
//! finite-sample simultaneous confidence intervals, and an exact-arithmetic
//! oracle that verifies the system at small dimensions.

pub mod bits;
pub mod bounds;
pub mod chernoff;
pub mod cli;
pub mod dataset;
pub mod dims;
pub mod distribution;
pub mod error;
pub mod functional;
pub mod inequality;
pub mod inference;
pub mod lp;
pub mod oracle;

pub use bounds::{
    falsify, falsify_helly, marginal_closed_form, plugin_bounds, simulate_falsification, BoundsResult, Status,
};
pub use chernoff::{find_t_alpha, g_polynomial, log_g_polynomial, tail_rhs, ChernoffSpec, CriticalValue};
pub use dataset::{empirical_distributions, Dataset, Labels, Variable};
pub use dims::{index_roundtrip, CellIndex, Dims, StratumIndex};
pub use distribution::{CounterfactualDistribution, ObservedDistribution};
pub use error::{Error, Result};
pub use functional::LinearFunctional;
pub use inequality::{
    count_inequalities, enumerate_full, filter_nonredundant, marginal_bound_rows, nonredundant_system,
    InequalityRow, InequalitySystem, SubsetFamily,
};
pub use inference::{
    confidence_intervals, confidence_intervals_with, coverage_monte_carlo, kl_divergence, CiConfig,
    ConfidenceInterval, Coverage, JointModel,
};
