//! Dense two-phase simplex over a generic scalar field.
//!
//! The same kernel runs in `f64` (bounds, falsification, inference) and in
//! exact rationals (the polytope oracle). Pivoting uses Dantzig's rule and
//! falls back to Bland's rule after a run of degenerate pivots, which rules
//! out cycling.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arithmetic needed by the simplex kernel. Sign tests carry the tolerance
/// of the field: exact for rationals, absolute epsilons for `f64`.
pub trait LpScalar: Clone + Debug + PartialOrd {
    fn zero() -> Self;
    fn one() -> Self;
    /// Exact for rationals; `None` for non-finite input.
    fn from_f64(v: f64) -> Option<Self>;
    fn from_i64(v: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// Strictly positive beyond the pivot tolerance.
    fn is_pos(&self) -> bool;
    /// Strictly negative beyond the pivot tolerance.
    fn is_neg(&self) -> bool;
    fn is_negligible(&self) -> bool {
        !self.is_pos() && !self.is_neg()
    }
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// `self -= a * b`.
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self = self.sub(&a.mul(b));
    }
    /// Bound relaxation used by the ratio test; zero for exact fields.
    fn primal_tol() -> Self {
        Self::zero()
    }
    /// Snap round-off to zero after a pivot. No-op for exact fields.
    fn clean(&mut self) {}
}

const F64_PIVOT_TOL: f64 = 1e-9;
const F64_ZERO_SNAP: f64 = 1e-13;

impl LpScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_pos(&self) -> bool {
        *self > F64_PIVOT_TOL
    }
    fn is_neg(&self) -> bool {
        *self < -F64_PIVOT_TOL
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }
    fn primal_tol() -> Self {
        F64_PIVOT_TOL
    }
    fn clean(&mut self) {
        if self.abs() < F64_ZERO_SNAP {
            *self = 0.0;
        }
    }
}

impl LpScalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_neg(&self) -> bool {
        Signed::is_negative(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        if !a.is_zero() && !b.is_zero() {
            *self -= a * b;
        }
    }
}

/// Converts an `f64` slice to exact rationals.
pub fn rationals(values: &[f64]) -> Result<Vec<BigRational>> {
    values
        .iter()
        .map(|&v| {
            BigRational::from_float(v)
                .ok_or_else(|| Error::DomainError(format!("{v} is not a finite number")))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

/// `optimize c·x` subject to the constraints and `x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram<T> {
    pub n_vars: usize,
    pub sense: Sense,
    pub objective: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
}

impl<T: LpScalar> LinearProgram<T> {
    pub fn new(n_vars: usize, sense: Sense, objective: Vec<T>) -> Self {
        assert_eq!(objective.len(), n_vars, "objective length");
        Self {
            n_vars,
            sense,
            objective,
            constraints: Vec::new(),
        }
    }

    /// Pure feasibility problem (zero objective).
    pub fn feasibility(n_vars: usize) -> Self {
        Self::new(n_vars, Sense::Minimize, vec![T::zero(); n_vars])
    }

    pub fn add(&mut self, coeffs: Vec<T>, relation: Relation, rhs: T) {
        assert_eq!(coeffs.len(), self.n_vars, "constraint length");
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Sparse helper: `Σ coeff * x[index] (rel) rhs`.
    pub fn add_sparse(&mut self, terms: &[(usize, T)], relation: Relation, rhs: T) {
        let mut coeffs = vec![T::zero(); self.n_vars];
        for (i, c) in terms {
            coeffs[*i] = coeffs[*i].add(c);
        }
        self.add(coeffs, relation, rhs);
    }

    pub fn solve(&self) -> Result<LpOutcome<T>> {
        Simplex::build(self).run(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal {
        x: Vec<T>,
        value: T,
    },
    /// `phase_one` is the minimal total artificial residual.
    Infeasible {
        phase_one: T,
    },
    Unbounded,
}

impl<T> LpOutcome<T> {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible { .. })
    }
}

/// Above this phase-one residual an `f64` problem is declared infeasible.
pub const F64_INFEASIBILITY_TOL: f64 = 1e-9;

const MAX_ITERATIONS: usize = 200_000;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;

struct Simplex<T> {
    /// Constraint rows; last entry of each row is the right-hand side.
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    n_cols: usize,
    /// Columns at or beyond this index are artificial.
    first_artificial: usize,
}

impl<T: LpScalar> Simplex<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let n = lp.n_vars;
        let mut n_slack = 0;
        let mut n_art = 0;
        let normalized: Vec<(Vec<T>, Relation, T)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < T::zero() {
                    let rel = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coeffs.iter().map(T::neg).collect(), rel, c.rhs.neg())
                } else {
                    (c.coeffs.clone(), c.relation, c.rhs.clone())
                }
            })
            .collect();
        for (_, rel, _) in &normalized {
            match rel {
                Relation::Le => n_slack += 1,
                Relation::Ge => {
                    n_slack += 1;
                    n_art += 1
                }
                Relation::Eq => n_art += 1,
            }
        }
        let first_artificial = n + n_slack;
        let n_cols = first_artificial + n_art;
        let mut rows = Vec::with_capacity(normalized.len());
        let mut basis = Vec::with_capacity(normalized.len());
        let mut slack = n;
        let mut art = first_artificial;
        for (coeffs, rel, rhs) in normalized {
            let mut row = coeffs;
            row.resize(n_cols + 1, T::zero());
            match rel {
                Relation::Le => {
                    row[slack] = T::one();
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = T::one().neg();
                    slack += 1;
                    row[art] = T::one();
                    basis.push(art);
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = T::one();
                    basis.push(art);
                    art += 1;
                }
            }
            row[n_cols] = rhs;
            rows.push(row);
        }
        Self {
            rows,
            basis,
            n_cols,
            first_artificial,
        }
    }

    fn pivot(&mut self, obj: &mut [T], r: usize, c: usize) {
        let piv = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.div(&piv);
            v.clean();
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c].clone();
            if f != T::zero() {
                for (v, p) in row.iter_mut().zip(&prow) {
                    v.sub_mul_assign(&f, p);
                    v.clean();
                }
            }
            row[c] = T::zero();
        }
        let f = obj[c].clone();
        for (v, p) in obj.iter_mut().zip(&prow) {
            v.sub_mul_assign(&f, p);
            v.clean();
        }
        obj[c] = T::zero();
        self.rows[r][c] = T::one();
        self.basis[r] = c;
    }

    /// Runs simplex iterations on `obj` (reduced costs, last entry is minus
    /// the objective value). Columns `>= col_limit` never enter.
    fn iterate(&mut self, obj: &mut [T], col_limit: usize) -> Result<bool> {
        let mut degenerate_run = 0;
        let mut bland = false;
        for _ in 0..MAX_ITERATIONS {
            let entering = if bland {
                (0..col_limit).find(|&j| obj[j].is_neg())
            } else {
                let mut best: Option<usize> = None;
                for j in 0..col_limit {
                    if obj[j].is_neg() && best.is_none_or(|b| obj[j] < obj[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(c) = entering else {
                return Ok(true);
            };
            let rhs = self.n_cols;
            // Harris ratio test: relax each bound by the primal tolerance to
            // find the step length, then pivot on the largest element among
            // rows that block within it (smallest basic index under Bland).
            let mut theta: Option<T> = None;
            for row in &self.rows {
                if row[c].is_pos() {
                    let relaxed = row[rhs].add(&T::primal_tol()).div(&row[c]);
                    if theta.as_ref().is_none_or(|t| relaxed < *t) {
                        theta = Some(relaxed);
                    }
                }
            }
            let mut leave: Option<(usize, T)> = None;
            if let Some(theta) = theta {
                for (i, row) in self.rows.iter().enumerate() {
                    if !row[c].is_pos() {
                        continue;
                    }
                    let ratio = row[rhs].div(&row[c]);
                    if ratio > theta {
                        continue;
                    }
                    let better = match &leave {
                        None => true,
                        Some((li, _)) if bland => self.basis[i] < self.basis[*li],
                        Some((li, _)) => {
                            let (a, b) = (&row[c], &self.rows[*li][c]);
                            a > b || (a == b && self.basis[i] < self.basis[*li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            if ratio.is_negligible() {
                degenerate_run += 1;
                if degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(obj, r, c);
            for row in &mut self.rows {
                if row[rhs] < T::zero() && !row[rhs].is_neg() {
                    row[rhs] = T::zero();
                }
            }
        }
        Err(Error::LpFailure(format!(
            "simplex exceeded {MAX_ITERATIONS} iterations"
        )))
    }

    fn run(mut self, lp: &LinearProgram<T>) -> Result<LpOutcome<T>> {
        let n = lp.n_vars;
        let rhs = self.n_cols;

        if self.first_artificial < self.n_cols {
            // Phase one: minimize the sum of artificials.
            let mut obj = vec![T::zero(); self.n_cols + 1];
            for (i, row) in self.rows.iter().enumerate() {
                if self.basis[i] >= self.first_artificial {
                    for j in 0..self.first_artificial {
                        obj[j] = obj[j].sub(&row[j]);
                    }
                    obj[rhs] = obj[rhs].sub(&row[rhs]);
                }
            }
            self.iterate(&mut obj, self.n_cols)?;
            let residual = obj[rhs].neg();
            let infeasible = if residual.is_pos() {
                true
            } else {
                residual.to_f64() > F64_INFEASIBILITY_TOL
            };
            if infeasible {
                return Ok(LpOutcome::Infeasible { phase_one: residual });
            }
            // Drive remaining artificials out of the basis.
            let mut i = 0;
            while i < self.rows.len() {
                if self.basis[i] >= self.first_artificial {
                    let col = (0..self.first_artificial).find(|&j| {
                        let v = &self.rows[i][j];
                        v.is_pos() || v.is_neg()
                    });
                    match col {
                        Some(j) => {
                            let mut scratch = vec![T::zero(); self.n_cols + 1];
                            self.pivot(&mut scratch, i, j);
                        }
                        None => {
                            // Linearly dependent constraint.
                            self.rows.remove(i);
                            self.basis.remove(i);
                            continue;
                        }
                    }
                }
                i += 1;
            }
        }

        // Phase two.
        let mut obj = vec![T::zero(); self.n_cols + 1];
        for (j, c) in lp.objective.iter().enumerate() {
            obj[j] = match lp.sense {
                Sense::Minimize => c.clone(),
                Sense::Maximize => c.neg(),
            };
        }
        for (i, row) in self.rows.iter().enumerate() {
            let b = self.basis[i];
            if b < n {
                let cb = obj[b].clone();
                if cb != T::zero() {
                    for (v, p) in obj.iter_mut().zip(row) {
                        v.sub_mul_assign(&cb, p);
                    }
                }
            }
        }
        // Basic columns carry exactly zero reduced cost.
        for &b in &self.basis {
            obj[b] = T::zero();
        }
        if !self.iterate(&mut obj, self.first_artificial)? {
            return Ok(LpOutcome::Unbounded);
        }

        let mut x = vec![T::zero(); n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rows[i][rhs].clone();
            }
        }
        let mut value = T::zero();
        for (c, v) in lp.objective.iter().zip(&x) {
            value = value.add(&c.mul(v));
        }
        Ok(LpOutcome::Optimal { x, value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn textbook_max() {
        // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), 36
        let mut lp = LinearProgram::new(2, Sense::Maximize, vec![3.0, 5.0]);
        lp.add(vec![1.0, 0.0], Relation::Le, 4.0);
        lp.add(vec![0.0, 2.0], Relation::Le, 12.0);
        lp.add(vec![3.0, 2.0], Relation::Le, 18.0);
        match lp.solve().unwrap() {
            LpOutcome::Optimal { x, value } => {
                assert!((value - 36.0).abs() < 1e-12);
                assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equality_and_ge_exact() {
        // min x + 2y  s.t. x + y = 1, x >= 1/3  -> x = 1, y = 0
        let mut lp = LinearProgram::new(2, Sense::Minimize, vec![q(1, 1), q(2, 1)]);
        lp.add(vec![q(1, 1), q(1, 1)], Relation::Eq, q(1, 1));
        lp.add(vec![q(1, 1), q(0, 1)], Relation::Ge, q(1, 3));
        match lp.solve().unwrap() {
            LpOutcome::Optimal { x, value } => {
                assert_eq!(value, q(1, 1));
                assert_eq!(x, vec![q(1, 1), q(0, 1)]);
            }
            other => panic!("{other:?}"),
        }
        // max y instead -> x = 1/3, y = 2/3
        let mut lp2 = LinearProgram::new(2, Sense::Maximize, vec![q(0, 1), q(1, 1)]);
        lp2.constraints = lp.constraints.clone();
        match lp2.solve().unwrap() {
            LpOutcome::Optimal { x, .. } => assert_eq!(x, vec![q(1, 3), q(2, 3)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::<f64>::feasibility(1);
        lp.add(vec![1.0], Relation::Le, 1.0);
        lp.add(vec![1.0], Relation::Ge, 2.0);
        assert!(matches!(lp.solve().unwrap(), LpOutcome::Infeasible { .. }));

        let mut lp = LinearProgram::new(1, Sense::Maximize, vec![1.0]);
        lp.add(vec![1.0], Relation::Ge, 0.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn negative_rhs_and_redundant_equalities() {
        // -x <= -2 (x >= 2), x + y = 3 twice, min y -> y = 0? x = 3
        let mut lp = LinearProgram::new(2, Sense::Minimize, vec![0.0, 1.0]);
        lp.add(vec![-1.0, 0.0], Relation::Le, -2.0);
        lp.add(vec![1.0, 1.0], Relation::Eq, 3.0);
        lp.add(vec![2.0, 2.0], Relation::Eq, 6.0);
        match lp.solve().unwrap() {
            LpOutcome::Optimal { x, value } => {
                assert!(value.abs() < 1e-12);
                assert!((x[0] - 3.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the textbook rule without anti-cycling.
        let mut lp = LinearProgram::new(4, Sense::Minimize, vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0);
        lp.add(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0);
        lp.add(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        match lp.solve().unwrap() {
            LpOutcome::Optimal { value, .. } => assert!((value + 0.05).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
