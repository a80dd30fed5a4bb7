//! Plug-in bounds on linear functionals and the falsification test.
//!
//! Observed arms enter only through the right-hand sides `H p_z`, so for each
//! row the binding arm is the one with the smallest right-hand side and the
//! program keeps one constraint per row.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::dims::Dims;
use crate::distribution::{CounterfactualDistribution, ObservedDistribution};
use crate::error::{Error, Result};
use crate::functional::LinearFunctional;
use crate::inequality::{nonredundant_system, InequalitySystem};
use crate::lp::{LinearProgram, LpOutcome, Relation, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Feasible,
    Infeasible,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct BoundsResult {
    pub functional: String,
    /// `+inf` when infeasible.
    pub lower: f64,
    /// `-inf` when infeasible.
    pub upper: f64,
    pub status: Status,
    pub witness_lower: Option<CounterfactualDistribution>,
    pub witness_upper: Option<CounterfactualDistribution>,
    pub warnings: Vec<String>,
}

impl BoundsResult {
    fn infeasible(functional: &LinearFunctional) -> Self {
        Self {
            functional: functional.label().to_string(),
            lower: f64::INFINITY,
            upper: f64::NEG_INFINITY,
            status: Status::Infeasible,
            witness_lower: None,
            witness_upper: None,
            warnings: Vec::new(),
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "functional": self.functional,
            "lower": json_number(self.lower),
            "upper": json_number(self.upper),
            "status": self.status,
        })
    }
}

/// JSON has no infinities; they are written as the strings `"inf"`/`"-inf"`.
pub fn json_number(v: f64) -> serde_json::Value {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.into()
    }
}

fn check_inputs(sys: &InequalitySystem, observed: &[ObservedDistribution]) -> Result<Dims> {
    let dims = sys.dims();
    if observed.is_empty() {
        return Err(Error::DimensionMismatch("no observed arms supplied".into()));
    }
    for p in observed {
        if p.probs().len() != dims.cells() {
            return Err(Error::DimensionMismatch(format!(
                "arm {} has {} cells, system expects K*M={}",
                p.arm(),
                p.probs().len(),
                dims.cells()
            )));
        }
    }
    Ok(dims)
}

/// `min_z H p_z`, one entry per row.
fn binding_rhs(sys: &InequalitySystem, observed: &[ObservedDistribution]) -> Vec<f64> {
    sys.rows()
        .iter()
        .map(|r| {
            observed
                .iter()
                .map(|p| r.rhs.dot(p.probs()))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn program(sys: &InequalitySystem, rhs: &[f64], sense: Sense, objective: &[f64]) -> LinearProgram<f64> {
    let n = sys.dims().strata();
    let mut lp = LinearProgram::new(n, sense, objective.to_vec());
    for (row, &b) in sys.rows().iter().zip(rhs) {
        let terms: Vec<(usize, f64)> = row.lhs.iter_ones().map(|i| (i, 1.0)).collect();
        lp.add_sparse(&terms, Relation::Le, b);
    }
    lp.add(vec![1.0; n], Relation::Eq, 1.0);
    lp
}

/// Sharp plug-in bounds on `f · p'` given the observed arms.
pub fn plugin_bounds(
    sys: &InequalitySystem,
    observed: &[ObservedDistribution],
    f: &LinearFunctional,
) -> Result<BoundsResult> {
    let dims = check_inputs(sys, observed)?;
    if f.coeffs().len() != dims.strata() {
        return Err(Error::DimensionMismatch(format!(
            "functional has {} coefficients, system has {} strata",
            f.coeffs().len(),
            dims.strata()
        )));
    }
    let rhs = binding_rhs(sys, observed);
    let mut ends = Vec::with_capacity(2);
    for sense in [Sense::Minimize, Sense::Maximize] {
        match program(sys, &rhs, sense, f.coeffs()).solve()? {
            LpOutcome::Optimal { x, value } => ends.push((value, x)),
            LpOutcome::Infeasible { .. } => return Ok(BoundsResult::infeasible(f)),
            LpOutcome::Unbounded => {
                return Err(Error::LpFailure("bounded program reported unbounded".into()))
            }
        }
    }
    let (hi, x_hi) = ends.pop().expect("two solves");
    let (lo, x_lo) = ends.pop().expect("two solves");
    let mut warnings = Vec::new();
    if f.is_zero() {
        warnings.push(format!("functional {} is identically zero", f.label()));
    }
    let (range_lo, range_hi) = f.range();
    Ok(BoundsResult {
        functional: f.label().to_string(),
        lower: lo.clamp(range_lo, range_hi),
        upper: hi.clamp(range_lo, range_hi).max(lo.clamp(range_lo, range_hi)),
        status: Status::Feasible,
        witness_lower: Some(CounterfactualDistribution::from_solution(&dims, &x_lo)?),
        witness_upper: Some(CounterfactualDistribution::from_solution(&dims, &x_hi)?),
        warnings,
    })
}

/// Whether some counterfactual distribution is compatible with every arm.
pub fn falsify(sys: &InequalitySystem, observed: &[ObservedDistribution]) -> Result<Status> {
    let dims = check_inputs(sys, observed)?;
    let rhs = binding_rhs(sys, observed);
    let zero = vec![0.0; dims.strata()];
    Ok(match program(sys, &rhs, Sense::Minimize, &zero).solve()? {
        LpOutcome::Infeasible { .. } => Status::Infeasible,
        _ => Status::Feasible,
    })
}

/// Number of arms checked jointly by [`falsify_helly`]: each arm cuts a convex
/// set out of a simplex of dimension `M^K - 1`.
pub fn helly_subset_size(dims: &Dims) -> usize {
    dims.strata()
}

/// Falsification through subsets of arms: the full intersection is empty iff
/// some subset of [`helly_subset_size`] arms already has empty intersection.
pub fn falsify_helly(sys: &InequalitySystem, observed: &[ObservedDistribution]) -> Result<Status> {
    let dims = check_inputs(sys, observed)?;
    let size = helly_subset_size(&dims);
    if observed.len() <= size {
        return falsify(sys, observed);
    }
    let mut idx: Vec<usize> = (0..size).collect();
    let q = observed.len();
    loop {
        let subset: Vec<ObservedDistribution> = idx.iter().map(|&i| observed[i].clone()).collect();
        if falsify(sys, &subset)? == Status::Infeasible {
            return Ok(Status::Infeasible);
        }
        // next combination in lexicographic order
        let mut i = size;
        loop {
            if i == 0 {
                return Ok(Status::Feasible);
            }
            i -= 1;
            if idx[i] < q - size + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Tightest bounds on `P'(Y(x_i) = y)` implied by single-cell constraints:
/// `max_z P(i, y | z) <= P'(Y(x_i) = y) <= min_z (1 - P(X = i, Y != y | z))`.
pub fn marginal_closed_form(
    dims: &Dims,
    observed: &[ObservedDistribution],
    i: usize,
    y: usize,
) -> (f64, f64) {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for p in observed {
        lo = lo.max(p.prob(dims, i, y));
        let other: f64 = (1..=dims.m())
            .filter(|&v| v != y)
            .map(|v| p.prob(dims, i, v))
            .sum();
        hi = hi.min(1.0 - other);
    }
    (lo, hi)
}

/// Flat Dirichlet draw on `len` coordinates.
pub fn dirichlet_flat(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = v.iter().sum();
    for x in &mut v {
        *x /= s;
    }
    v
}

/// Random observed arms, each drawn from the flat Dirichlet over `K*M` cells.
pub fn random_arms(dims: &Dims, rng: &mut ChaCha8Rng) -> Result<Vec<ObservedDistribution>> {
    (1..=dims.q())
        .map(|z| ObservedDistribution::normalized(dims, z, dirichlet_flat(rng, dims.cells()), 0))
        .collect()
}

/// Fraction of Dirichlet-drawn instances that the falsification test rejects.
/// Uses `ChaCha8Rng::seed_from_u64(seed)`; one draw consumes `Q*K*M`
/// exponential variates in arm-major, cell-minor order.
pub fn simulate_falsification(dims: &Dims, draws: usize, seed: u64) -> Result<f64> {
    if draws == 0 {
        return Err(Error::DomainError("draws must be at least 1".into()));
    }
    let sys = nonredundant_system(dims)?;
    let dims = *dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rejected = 0usize;
    for _ in 0..draws {
        let arms = random_arms(&dims, &mut rng)?;
        if falsify(&sys, &arms)? == Status::Infeasible {
            rejected += 1;
        }
    }
    Ok(rejected as f64 / draws as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequality::enumerate_full;

    fn arms(dims: &Dims, rows: &[&[f64]]) -> Vec<ObservedDistribution> {
        rows.iter()
            .enumerate()
            .map(|(z, p)| ObservedDistribution::normalized(dims, z + 1, p.to_vec(), 100).unwrap())
            .collect()
    }

    #[test]
    fn point_mass_marginals() {
        let dims = Dims::new(1, 2, 2).unwrap();
        let sys = nonredundant_system(&dims).unwrap();
        let obs = vec![ObservedDistribution::point_mass(&dims, 1, 1, 1).unwrap()];
        let b = plugin_bounds(&sys, &obs, &LinearFunctional::marginal(&dims, 1, 1).unwrap()).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-9 && (b.upper - 1.0).abs() < 1e-9);
        let b = plugin_bounds(&sys, &obs, &LinearFunctional::marginal(&dims, 2, 1).unwrap()).unwrap();
        assert!(b.lower.abs() < 1e-9 && (b.upper - 1.0).abs() < 1e-9);
        assert_eq!(b.status, Status::Feasible);
    }

    #[test]
    fn incompatible_falsified_compatible_not() {
        let dims = Dims::new(2, 2, 3).unwrap();
        let sys = nonredundant_system(&dims).unwrap();
        let incompatible = arms(
            &dims,
            &[
                &[0.43, 0.05, 0.07, 0.10, 0.20, 0.15],
                &[0.01, 0.36, 0.40, 0.18, 0.03, 0.02],
            ],
        );
        let compatible = arms(
            &dims,
            &[
                &[0.12, 0.21, 0.30, 0.15, 0.08, 0.14],
                &[0.08, 0.44, 0.14, 0.25, 0.03, 0.06],
            ],
        );
        assert_eq!(falsify(&sys, &incompatible).unwrap(), Status::Infeasible);
        assert_eq!(falsify(&sys, &compatible).unwrap(), Status::Feasible);
        let f = LinearFunctional::marginal(&dims, 1, 1).unwrap();
        let b = plugin_bounds(&sys, &incompatible, &f).unwrap();
        assert_eq!(b.status, Status::Infeasible);
        assert!(b.lower == f64::INFINITY && b.upper == f64::NEG_INFINITY);
        assert_eq!(b.to_json_value()["lower"], "inf");
    }

    #[test]
    fn nonredundant_matches_full_system() {
        let dims = Dims::new(2, 2, 3).unwrap();
        let full = enumerate_full(&dims).unwrap();
        let kept = nonredundant_system(&dims).unwrap();
        let obs = arms(
            &dims,
            &[
                &[0.12, 0.21, 0.30, 0.15, 0.08, 0.14],
                &[0.08, 0.44, 0.14, 0.25, 0.03, 0.06],
            ],
        );
        for y in 1..=3 {
            let f = LinearFunctional::marginal(&dims, 2, y).unwrap();
            let a = plugin_bounds(&full, &obs, &f).unwrap();
            let b = plugin_bounds(&kept, &obs, &f).unwrap();
            assert!((a.lower - b.lower).abs() < 1e-9 && (a.upper - b.upper).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_functional_warns() {
        let dims = Dims::new(1, 2, 2).unwrap();
        let sys = nonredundant_system(&dims).unwrap();
        let obs = arms(&dims, &[&[0.25; 4]]);
        let f = LinearFunctional::raw(&dims, vec![0.0; 4], "zero").unwrap();
        let b = plugin_bounds(&sys, &obs, &f).unwrap();
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
        assert_eq!(b.warnings.len(), 1);
    }

    #[test]
    fn helly_delegates_and_agrees() {
        let dims = Dims::new(6, 2, 2).unwrap();
        let sys = nonredundant_system(&dims).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let obs = random_arms(&dims, &mut rng).unwrap();
            assert_eq!(falsify(&sys, &obs).unwrap(), falsify_helly(&sys, &obs).unwrap());
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let dims = Dims::new(3, 2, 2).unwrap();
        let a = simulate_falsification(&dims, 200, 11).unwrap();
        let b = simulate_falsification(&dims, 200, 11).unwrap();
        assert_eq!(a, b);
        let one = dims.with_arms(1).unwrap();
        assert_eq!(simulate_falsification(&one, 200, 11).unwrap(), 0.0);
        assert!(simulate_falsification(&dims, 0, 1).is_err());
    }
}
