use serde::{Deserialize, Serialize};

use crate::dims::Dims;
use crate::error::{Error, Result};

/// Tolerance on `|sum - 1|` for probability vectors.
pub const SUM_TOLERANCE: f64 = 1e-12;

fn validate_simplex(probs: &[f64], what: &str) -> Result<()> {
    if let Some((i, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < 0.0)
    {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entry {i} is {p}, expected a finite nonnegative value"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entries sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// `P(X, Y | Z = arm)` over the `K*M` cells, plus the arm's sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedDistribution {
    arm: usize,
    probs: Vec<f64>,
    n: u64,
}

impl ObservedDistribution {
    pub fn new(dims: &Dims, arm: usize, probs: Vec<f64>, n: u64) -> Result<Self> {
        if arm < 1 || arm > dims.q() {
            return Err(Error::DimensionMismatch(format!(
                "arm {arm} outside 1..={}",
                dims.q()
            )));
        }
        if probs.len() != dims.cells() {
            return Err(Error::DimensionMismatch(format!(
                "observed distribution has {} cells, expected K*M={}",
                probs.len(),
                dims.cells()
            )));
        }
        validate_simplex(&probs, "observed distribution")?;
        Ok(Self { arm, probs, n })
    }

    /// Probabilities that sum to one only up to rounding (e.g. two-decimal
    /// tables) are rescaled before validation.
    pub fn normalized(dims: &Dims, arm: usize, mut probs: Vec<f64>, n: u64) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "cannot normalize a vector with total {total}"
            )));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Self::new(dims, arm, probs, n)
    }

    /// Point mass on a single cell.
    pub fn point_mass(dims: &Dims, arm: usize, x: usize, y: usize) -> Result<Self> {
        let mut probs = vec![0.0; dims.cells()];
        probs[dims.cell_flat(x, y)?] = 1.0;
        Self::new(dims, arm, probs, 0)
    }

    pub fn arm(&self) -> usize {
        self.arm
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn prob(&self, dims: &Dims, x: usize, y: usize) -> f64 {
        self.probs[(x - 1) * dims.m() + (y - 1)]
    }

    /// Copy with a different arm label (used when arms are dropped).
    pub fn relabel(&self, arm: usize) -> Self {
        Self {
            arm,
            probs: self.probs.clone(),
            n: self.n,
        }
    }
}

/// Joint counterfactual distribution `P'(Y(x_1), ..., Y(x_K))` over `M^K` strata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualDistribution {
    probs: Vec<f64>,
}

impl CounterfactualDistribution {
    pub fn new(dims: &Dims, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != dims.strata() {
            return Err(Error::DimensionMismatch(format!(
                "counterfactual distribution has {} strata, expected M^K={}",
                probs.len(),
                dims.strata()
            )));
        }
        validate_simplex(&probs, "counterfactual distribution")?;
        Ok(Self { probs })
    }

    /// Wraps an LP solution: clamps tiny negative round-off to zero and
    /// renormalizes.
    pub fn from_solution(dims: &Dims, raw: &[f64]) -> Result<Self> {
        let mut probs: Vec<f64> = raw.iter().map(|p| p.max(0.0)).collect();
        let total: f64 = probs.iter().sum();
        if total > 0.0 {
            probs.iter_mut().for_each(|p| *p /= total);
        }
        Self::new(dims, probs)
    }

    pub fn point_mass(dims: &Dims, outcomes: &[usize]) -> Result<Self> {
        let mut probs = vec![0.0; dims.strata()];
        probs[dims.stratum_flat(outcomes)?] = 1.0;
        Self::new(dims, probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_vectors() {
        let d = Dims::new(1, 2, 2).unwrap();
        assert!(ObservedDistribution::new(&d, 1, vec![0.5, 0.5, 0.0], 1).is_err());
        assert!(ObservedDistribution::new(&d, 1, vec![0.5, 0.6, 0.0, -0.1], 1).is_err());
        assert!(ObservedDistribution::new(&d, 1, vec![0.5, 0.5, 0.1, 0.0], 1).is_err());
        assert!(ObservedDistribution::new(&d, 2, vec![0.25; 4], 4).is_err());
        assert!(ObservedDistribution::new(&d, 1, vec![0.25; 4], 4).is_ok());
        assert!(CounterfactualDistribution::new(&d, vec![1.0]).is_err());
    }

    #[test]
    fn normalizes_rounded_tables() {
        let d = Dims::new(1, 2, 2).unwrap();
        let obs = ObservedDistribution::normalized(&d, 1, vec![0.3, 0.3, 0.3, 0.3], 0).unwrap();
        assert!(obs.probs().iter().all(|p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn point_masses() {
        let d = Dims::new(1, 2, 3).unwrap();
        let obs = ObservedDistribution::point_mass(&d, 1, 2, 3).unwrap();
        assert_eq!(obs.prob(&d, 2, 3), 1.0);
        let cf = CounterfactualDistribution::point_mass(&d, &[2, 3]).unwrap();
        assert_eq!(cf.probs()[5], 1.0);
    }
}
