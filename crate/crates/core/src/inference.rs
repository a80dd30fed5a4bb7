//! Simultaneous confidence intervals from a KL ball around the empirical arms.
//!
//! The program is `min/max f·p'` over `(p', p_1, ..., p_Q)` subject to the
//! inequality system in every arm, simplex constraints and
//! `Σ_z n_z KL(p̂_z ‖ p_z) <= t_alpha`. The KL constraint is handled by outer
//! approximation: each LP iterate that leaves the ball is pulled back towards
//! `p̂` until it meets the boundary, and the tangent plane there is added as a
//! cut. Cuts are valid for the whole ball, so one pool serves every
//! functional of a dataset.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Solution, SolveOutcome, Variable};
use rand::distr::weighted::WeightedIndex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::Serialize;

use crate::bounds::{dirichlet_flat, json_number};
use crate::chernoff::{ChernoffSpec, CriticalValue};
use crate::dataset::{empirical_distributions, Dataset, Labels};
use crate::dims::Dims;
use crate::error::{Error, Result};
use crate::functional::LinearFunctional;
use crate::inequality::{nonredundant_system, InequalitySystem};
use crate::lp::{Relation, Sense};
use crate::oracle::enumerate_vertices;

/// Iterate coordinates with `p̂_i > 0` are floored here before taking gradients.
pub const GRADIENT_FLOOR: f64 = 1e-12;
/// Tangents are also taken at iterates whose support coordinates all exceed this.
const INTERIOR_FLOOR: f64 = 1e-6;

/// Largest coordinate move between rounds that still counts as no move.
const FROZEN_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiConfig {
    pub alpha: f64,
    pub max_cut_rounds: usize,
    /// Allowed excess of `Σ n_z KL` over `t_alpha` at the returned optimum.
    pub tol_kl: f64,
    /// Objective change between rounds below which the solve stops.
    pub tol_obj: f64,
}

impl Default for CiConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            max_cut_rounds: 500,
            tol_kl: 1e-7,
            tol_obj: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub functional: String,
    /// `+inf` when no distribution in the ball is compatible with the model.
    pub lower: f64,
    /// `-inf` in the same case.
    pub upper: f64,
    pub alpha: f64,
    pub t_alpha: f64,
    pub falsified: bool,
}

impl ConfidenceInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "functional": self.functional,
            "lower": json_number(self.lower),
            "upper": json_number(self.upper),
            "alpha": self.alpha,
            "t_alpha": self.t_alpha,
            "falsified": self.falsified,
        })
    }
}

/// `KL(p̂ ‖ p)`; coordinates with `p̂_i = 0` contribute nothing.
pub fn kl_divergence(p_hat: &[f64], p: &[f64]) -> f64 {
    p_hat
        .iter()
        .zip(p)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| if b <= 0.0 { f64::INFINITY } else { a * (a / b).ln() })
        .sum()
}

/// Result of one endpoint solve.
#[derive(Debug, Clone)]
pub struct EndpointSolve {
    pub value: f64,
    /// Optimal `p'` of the final relaxation.
    pub counterfactual: Vec<f64>,
    /// Optimal arms of the final relaxation.
    pub arms: Vec<Vec<f64>>,
    /// `Σ n_z KL(p̂_z ‖ p_z) - t` at the returned point.
    pub kl_excess: f64,
    pub rounds: usize,
}

/// The convex program for one dataset; accumulates cuts across solves.
pub struct KlProgram {
    sys: InequalitySystem,
    dims: Dims,
    p_hat: Vec<Vec<f64>>,
    n: Vec<f64>,
    t: f64,
    config: CiConfig,
    base: Vec<(Vec<(usize, f64)>, Relation, f64)>,
    cuts: Vec<Cut>,
}

/// `terms · x >= rhs`.
#[derive(Debug, Clone)]
struct Cut {
    terms: Vec<(usize, f64)>,
    rhs: f64,
}

impl KlProgram {
    pub fn new(sys: &InequalitySystem, ds: &Dataset, t: f64, config: CiConfig) -> Result<Self> {
        let dims = ds.dims();
        if sys.dims().k() != dims.k() || sys.dims().m() != dims.m() {
            return Err(Error::DimensionMismatch(format!(
                "system built for {} but dataset is {}",
                sys.dims(),
                dims
            )));
        }
        let observed = empirical_distributions(ds)?;
        let p_hat: Vec<Vec<f64>> = observed.iter().map(|o| o.probs().to_vec()).collect();
        let n: Vec<f64> = observed.iter().map(|o| o.n() as f64).collect();
        let (s, c) = (dims.strata(), dims.cells());
        let arm = |z: usize, i: usize| s + z * c + i;
        let mut base = Vec::new();
        base.push(((0..s).map(|i| (i, 1.0)).collect(), Relation::Eq, 1.0));
        for z in 0..dims.q() {
            base.push(((0..c).map(|i| (arm(z, i), 1.0)).collect(), Relation::Eq, 1.0));
        }
        for z in 0..dims.q() {
            for row in sys.rows() {
                let mut terms: Vec<(usize, f64)> = row.lhs.iter_ones().map(|i| (i, 1.0)).collect();
                terms.extend(row.rhs.iter_ones().map(|i| (arm(z, i), -1.0)));
                base.push((terms, Relation::Le, 0.0));
            }
        }
        if t <= 0.0 {
            // the ball is the single point p̂
            for (z, p) in p_hat.iter().enumerate() {
                for (i, &v) in p.iter().enumerate() {
                    base.push((vec![(arm(z, i), 1.0)], Relation::Eq, v));
                }
            }
        }
        let budget = (0..dims.q()).map(|z| (s + dims.q() * c + z, 1.0)).collect();
        base.push((budget, Relation::Le, t.max(0.0)));
        let mut program = Self {
            sys: sys.clone(),
            dims,
            p_hat,
            n,
            t: t.max(0.0),
            config,
            base,
            cuts: Vec::new(),
        };
        if program.t > 0.0 {
            program.seed_cuts();
        }
        Ok(program)
    }

    pub fn system(&self) -> &InequalitySystem {
        &self.sys
    }

    pub fn cut_count(&self) -> usize {
        self.cuts.len()
    }

    fn n_vars(&self) -> usize {
        self.dims.strata() + self.dims.q() * (self.dims.cells() + 1)
    }

    fn epigraph(&self, z: usize) -> usize {
        self.dims.strata() + self.dims.q() * self.dims.cells() + z
    }

    /// `n_z KL(p̂_z ‖ p)`.
    fn arm_kl(&self, z: usize, p: &[f64]) -> f64 {
        self.n[z] * kl_divergence(&self.p_hat[z], p)
    }

    /// `Σ_z n_z KL(p̂_z ‖ p_z)`.
    pub fn weighted_kl(&self, arms: &[Vec<f64>]) -> f64 {
        arms.iter().enumerate().map(|(z, p)| self.arm_kl(z, p)).sum()
    }

    fn split(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let s = self.dims.strata();
        let c = self.dims.cells();
        let cf = x[..s].to_vec();
        let arms = (0..self.dims.q())
            .map(|z| x[s + z * c..s + (z + 1) * c].to_vec())
            .collect();
        (cf, arms)
    }

    /// Largest step from `from` towards `to` whose value under `g` stays
    /// within `t`, assuming `g(from) <= t`.
    fn boundary<F: Fn(&[Vec<f64>]) -> f64>(&self, from: &[Vec<f64>], to: &[Vec<f64>], g: F) -> Vec<Vec<f64>> {
        let lerp = |lambda: f64| -> Vec<Vec<f64>> {
            from.iter()
                .zip(to)
                .map(|(a, b)| a.iter().zip(b).map(|(u, v)| u + lambda * (v - u)).collect())
                .collect()
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        if g(&lerp(1.0)) <= self.t {
            return lerp(1.0);
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if g(&lerp(mid)) <= self.t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lerp(lo)
    }

    /// Tangent plane of `n_z KL(p̂_z ‖ ·)` at `w` as a lower bound on `s_z`:
    /// `Σ (n p̂_i / w_i) p_i + s_z >= n KL(p̂ ‖ w) + n`.
    fn add_cut(&mut self, z: usize, w: &[f64]) {
        let base = self.dims.strata() + z * self.dims.cells();
        let mut terms = vec![(self.epigraph(z), 1.0)];
        for (i, (&ph, &wi)) in self.p_hat[z].iter().zip(w).enumerate() {
            if ph > 0.0 {
                terms.push((base + i, self.n[z] * ph / wi.max(GRADIENT_FLOOR)));
            }
        }
        // unscaled, so a violation reads in units of n·KL, well above the
        // LP's feasibility tolerance
        let rhs = self.arm_kl(z, w) + self.n[z];
        self.cuts.push(Cut { terms, rhs });
    }

    /// Whether the tangent at `p` has moderate coefficients.
    fn interior(&self, z: usize, p: &[f64]) -> bool {
        self.p_hat[z]
            .iter()
            .zip(p)
            .all(|(&ph, &v)| ph == 0.0 || v >= INTERIOR_FLOOR)
    }

    /// Initial cuts: for every arm, the points where the ray from `p̂`
    /// towards each cell's point mass leaves the ball.
    fn seed_cuts(&mut self) {
        let c = self.dims.cells();
        for z in 0..self.dims.q() {
            for i in 0..c {
                let mut corner = vec![0.0; c];
                corner[i] = 1.0;
                let from = vec![self.p_hat[z].clone()];
                let w = self.boundary(&from, &[corner], |p| self.arm_kl(z, &p[0]));
                if self.arm_kl(z, &w[0]) > 0.0 {
                    self.add_cut(z, &w[0]);
                }
            }
        }
    }

    fn relaxation(&self, sense: Sense, f: &LinearFunctional) -> Result<(Problem, Vec<Variable>)> {
        let direction = match sense {
            Sense::Minimize => OptimizationDirection::Minimize,
            Sense::Maximize => OptimizationDirection::Maximize,
        };
        let mut problem = Problem::new(direction);
        let s = self.dims.strata();
        let mut vars = Vec::with_capacity(self.n_vars());
        for i in 0..self.n_vars() {
            let (obj, upper) = if i < s {
                (f.coeffs()[i], 1.0)
            } else if i < s + self.dims.q() * self.dims.cells() {
                (0.0, 1.0)
            } else {
                (0.0, self.t)
            };
            vars.push(problem.add_var(obj, (0.0, upper)));
        }
        for (terms, rel, rhs) in &self.base {
            problem.add_constraint(expr(&vars, terms), comparison(*rel), *rhs);
        }
        for cut in &self.cuts {
            problem.add_constraint(expr(&vars, &cut.terms), ComparisonOp::Ge, cut.rhs);
        }
        Ok((problem, vars))
    }

    /// Optimizes `f·p'`; `None` when the program is infeasible.
    pub fn solve(&mut self, sense: Sense, f: &LinearFunctional) -> Result<Option<EndpointSolve>> {
        let (problem, vars) = self.relaxation(sense, f)?;
        let mut solution = match settle(problem.solve())? {
            Some(sol) => sol,
            None => return Ok(None),
        };
        let mut previous: Option<(f64, Vec<f64>)> = None;
        for round in 1..=self.config.max_cut_rounds {
            let x: Vec<f64> = vars.iter().map(|&v| solution.var_value(v)).collect();
            let value = solution.objective();
            let (cf, arms) = self.split(&x);
            let excess = self.weighted_kl(&arms) - self.t;
            let stalled = previous
                .as_ref()
                .is_some_and(|(p, _)| (p - value).abs() < self.config.tol_obj);
            // The LP rescales each added row by its largest coefficient, so a
            // cut whose violation falls under its tolerance leaves the iterate
            // in place. The relaxation optimum is still an outer bound.
            let frozen = previous.as_ref().is_some_and(|(_, px): &(f64, Vec<f64>)| {
                px.iter().zip(&x).all(|(a, b)| (a - b).abs() <= FROZEN_STEP)
            });
            if frozen || (excess < self.config.tol_kl && (stalled || excess <= 0.0)) {
                return Ok(Some(EndpointSolve {
                    value,
                    counterfactual: cf,
                    arms,
                    kl_excess: excess,
                    rounds: round,
                }));
            }
            let before = self.cuts.len();
            if excess > 0.0 {
                let w = self.boundary(&self.p_hat, &arms, |p| self.weighted_kl(p));
                for (z, wz) in w.iter().enumerate() {
                    if self.arm_kl(z, &arms[z]) > x[self.epigraph(z)] {
                        self.add_cut(z, wz);
                        if self.interior(z, &arms[z]) {
                            self.add_cut(z, &arms[z]);
                        }
                    }
                }
            }
            if self.cuts.len() == before {
                // nothing left to separate at this precision
                return Ok(Some(EndpointSolve {
                    value,
                    counterfactual: cf,
                    arms,
                    kl_excess: excess,
                    rounds: round,
                }));
            }
            for cut in &self.cuts[before..] {
                let next = solution.add_constraint(expr(&vars, &cut.terms), ComparisonOp::Ge, cut.rhs);
                solution = match settle(next)? {
                    Some(sol) => sol,
                    None => return Ok(None),
                };
            }
            previous = Some((value, x));
        }
        Err(Error::NoConvergence(format!(
            "KL program did not converge in {} cut rounds",
            self.config.max_cut_rounds
        )))
    }

    /// Lower and upper endpoints for `f`, or `None` when infeasible.
    pub fn interval(&mut self, f: &LinearFunctional) -> Result<Option<(f64, f64)>> {
        let Some(lo) = self.solve(Sense::Minimize, f)? else {
            return Ok(None);
        };
        let Some(hi) = self.solve(Sense::Maximize, f)? else {
            return Ok(None);
        };
        let (range_lo, range_hi) = f.range();
        let lo = lo.value.clamp(range_lo, range_hi);
        let hi = hi.value.clamp(range_lo, range_hi).max(lo);
        Ok(Some((lo, hi)))
    }
}

fn expr(vars: &[Variable], terms: &[(usize, f64)]) -> LinearExpr {
    let mut e = LinearExpr::empty();
    for &(i, c) in terms {
        e.add(vars[i], c);
    }
    e
}

fn comparison(rel: Relation) -> ComparisonOp {
    match rel {
        Relation::Le => ComparisonOp::Le,
        Relation::Ge => ComparisonOp::Ge,
        Relation::Eq => ComparisonOp::Eq,
    }
}

/// Optimal solution, `None` when infeasible.
fn settle(outcome: std::result::Result<SolveOutcome, microlp::Error>) -> Result<Option<Solution>> {
    match outcome {
        Ok(SolveOutcome::Solution(sol)) => Ok(Some(sol)),
        Ok(SolveOutcome::Interrupted(_)) => Err(Error::LpFailure("LP solve interrupted".into())),
        Err(microlp::Error::Infeasible) => Ok(None),
        Err(e) => Err(Error::LpFailure(e.to_string())),
    }
}

/// The Chernoff specification for a dataset at level `alpha`.
pub fn chernoff_spec(ds: &Dataset, alpha: f64) -> Result<ChernoffSpec> {
    ChernoffSpec::new(ds.dims().cells(), ds.arm_sizes(), alpha)
}

/// Simultaneous `1 - alpha` intervals with default solver settings.
pub fn confidence_intervals(
    sys: &InequalitySystem,
    ds: &Dataset,
    functionals: &[LinearFunctional],
    alpha: f64,
) -> Result<Vec<ConfidenceInterval>> {
    confidence_intervals_with(
        sys,
        ds,
        functionals,
        &CiConfig {
            alpha,
            ..CiConfig::default()
        },
    )
}

/// Simultaneous intervals; every functional shares the same `t_alpha`.
pub fn confidence_intervals_with(
    sys: &InequalitySystem,
    ds: &Dataset,
    functionals: &[LinearFunctional],
    config: &CiConfig,
) -> Result<Vec<ConfidenceInterval>> {
    if functionals.is_empty() {
        return Err(Error::DomainError("no functionals requested".into()));
    }
    let critical = chernoff_spec(ds, config.alpha)?.find_t_alpha()?;
    intervals_at(sys, ds, functionals, config, &critical)
}

/// Intervals for a given critical value.
pub fn intervals_at(
    sys: &InequalitySystem,
    ds: &Dataset,
    functionals: &[LinearFunctional],
    config: &CiConfig,
    critical: &CriticalValue,
) -> Result<Vec<ConfidenceInterval>> {
    let mut program = KlProgram::new(sys, ds, critical.t_alpha, *config)?;
    let mut out = Vec::with_capacity(functionals.len());
    for f in functionals {
        if f.coeffs().len() != ds.dims().strata() {
            return Err(Error::DimensionMismatch(format!(
                "functional {} has {} coefficients, expected {}",
                f.label(),
                f.coeffs().len(),
                ds.dims().strata()
            )));
        }
        let (lower, upper, falsified) = match program.interval(f)? {
            Some((lo, hi)) => (lo, hi, false),
            None => (f64::INFINITY, f64::NEG_INFINITY, true),
        };
        out.push(ConfidenceInterval {
            functional: f.label().to_string(),
            lower,
            upper,
            alpha: config.alpha,
            t_alpha: critical.t_alpha,
            falsified,
        });
    }
    Ok(out)
}

/// A counterfactual distribution together with arms it generates.
#[derive(Debug, Clone)]
pub struct JointModel {
    pub dims: Dims,
    pub counterfactual: Vec<f64>,
    pub arms: Vec<Vec<f64>>,
}

impl JointModel {
    /// Mixture of extreme points with the given weights (one per vertex in
    /// enumeration order, summing to 1).
    pub fn from_vertex_mixture(dims: &Dims, weights: &[f64]) -> Result<Self> {
        let vertices = enumerate_vertices(dims)?;
        if weights.len() != vertices.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} vertices",
                weights.len(),
                vertices.len()
            )));
        }
        let mut counterfactual = vec![0.0; dims.strata()];
        let mut arms = vec![vec![0.0; dims.cells()]; dims.q()];
        for (v, &w) in vertices.vertices.iter().zip(weights) {
            counterfactual[v.stratum] += w;
            for (z, arm) in arms.iter_mut().enumerate() {
                arm[v.cell(dims, z)] += w;
            }
        }
        Ok(Self {
            dims: *dims,
            counterfactual,
            arms,
        })
    }

    /// Flat Dirichlet weights over all extreme points.
    pub fn random(dims: &Dims, rng: &mut ChaCha8Rng) -> Result<Self> {
        let count = enumerate_vertices(dims)?.len();
        Self::from_vertex_mixture(dims, &dirichlet_flat(rng, count))
    }

    /// Multinomial sample of `n` units per arm.
    pub fn sample(&self, n: u64, rng: &mut ChaCha8Rng) -> Result<Dataset> {
        let (c, q) = (self.dims.cells(), self.dims.q());
        let mut counts = vec![0u64; q * c];
        for (z, arm) in self.arms.iter().enumerate() {
            let pick = WeightedIndex::new(arm)
                .map_err(|e| Error::InvalidDistribution(format!("arm {}: {e}", z + 1)))?;
            for _ in 0..n {
                counts[z * c + pick.sample(rng)] += 1;
            }
        }
        Dataset::new(self.dims, counts, Labels::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coverage {
    pub reps: usize,
    pub hits: usize,
    pub coverage: f64,
    pub t_alpha: f64,
}

/// Fraction of simulated datasets whose intervals contain every true value.
pub fn coverage_monte_carlo(
    truth: &JointModel,
    functionals: &[LinearFunctional],
    n_per_arm: u64,
    config: &CiConfig,
    reps: usize,
    seed: u64,
) -> Result<Coverage> {
    if reps == 0 || n_per_arm == 0 {
        return Err(Error::DomainError("reps and n_per_arm must be positive".into()));
    }
    let dims = truth.dims;
    let sys = nonredundant_system(&dims)?;
    let critical =
        ChernoffSpec::new(dims.cells(), vec![n_per_arm; dims.q()], config.alpha)?.find_t_alpha()?;
    let truths: Vec<f64> = functionals
        .iter()
        .map(|f| f.evaluate(&truth.counterfactual))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0;
    for _ in 0..reps {
        let ds = truth.sample(n_per_arm, &mut rng)?;
        let cis = intervals_at(&sys, &ds, functionals, config, &critical)?;
        // a small slack absorbs the solver's stopping tolerance
        if cis
            .iter()
            .zip(&truths)
            .all(|(ci, &v)| ci.lower - 1e-6 <= v && v <= ci.upper + 1e-6)
        {
            hits += 1;
        }
    }
    Ok(Coverage {
        reps,
        hits,
        coverage: hits as f64 / reps as f64,
        t_alpha: critical.t_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::plugin_bounds;

    #[test]
    fn kl_ignores_zero_reference_cells() {
        assert_eq!(
            kl_divergence(&[0.5, 0.5, 0.0], &[0.5, 0.25, 0.25]),
            0.5 * 2f64.ln()
        );
        assert_eq!(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]), 0.0);
        assert_eq!(kl_divergence(&[1.0, 0.0], &[1.0, 0.0]), 0.0);
        assert!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).is_infinite());
    }

    fn small_dataset() -> Dataset {
        let dims = Dims::new(2, 2, 2).unwrap();
        Dataset::new(dims, vec![20, 5, 10, 15, 8, 12, 25, 5], Labels::default()).unwrap()
    }

    #[test]
    fn intervals_contain_plugin_bounds_and_respect_kl() {
        let ds = small_dataset();
        let sys = nonredundant_system(&ds.dims()).unwrap();
        let obs = empirical_distributions(&ds).unwrap();
        let f = LinearFunctional::ate(&ds.dims(), 2, 1, 2).unwrap();
        let ci = confidence_intervals(&sys, &ds, std::slice::from_ref(&f), 0.05).unwrap();
        let pb = plugin_bounds(&sys, &obs, &f).unwrap();
        assert!(!ci[0].falsified);
        assert!(ci[0].lower <= pb.lower + 1e-9 && ci[0].upper >= pb.upper - 1e-9);

        let t = chernoff_spec(&ds, 0.05).unwrap().find_t_alpha().unwrap().t_alpha;
        let mut program = KlProgram::new(&sys, &ds, t, CiConfig::default()).unwrap();
        let sol = program.solve(Sense::Maximize, &f).unwrap().unwrap();
        assert!(sol.kl_excess < 1e-7);
        assert!(
            sys.min_slack(
                &sol.counterfactual,
                &sol.arms.iter().map(Vec::as_slice).collect::<Vec<_>>()
            ) > -1e-9
        );
    }

    #[test]
    fn alpha_one_collapses_to_plugin() {
        let ds = small_dataset();
        let sys = nonredundant_system(&ds.dims()).unwrap();
        let obs = empirical_distributions(&ds).unwrap();
        let f = LinearFunctional::marginal(&ds.dims(), 1, 2).unwrap();
        let ci = confidence_intervals(&sys, &ds, std::slice::from_ref(&f), 1.0).unwrap();
        let pb = plugin_bounds(&sys, &obs, &f).unwrap();
        assert_eq!(ci[0].t_alpha, 0.0);
        assert!((ci[0].lower - pb.lower).abs() < 1e-9 && (ci[0].upper - pb.upper).abs() < 1e-9);
    }

    #[test]
    fn vertex_mixture_is_compatible() {
        let dims = Dims::new(3, 2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = JointModel::random(&dims, &mut rng).unwrap();
        let sys = nonredundant_system(&dims).unwrap();
        let arms: Vec<&[f64]> = m.arms.iter().map(Vec::as_slice).collect();
        assert!(sys.min_slack(&m.counterfactual, &arms) >= -1e-12);
        let ds = m.sample(40, &mut rng).unwrap();
        assert_eq!(ds.arm_sizes(), vec![40, 40, 40]);
    }
}
