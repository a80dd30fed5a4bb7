//! Problem dimensions and the canonical index conventions.
//!
//! Levels are 1-based everywhere a user sees them and 0-based in flat
//! indices. Principal strata `(y^1, ..., y^K)` are ordered lexicographically
//! with `y^1` most significant; observed cells `(x, y)` are ordered with `x`
//! outer and `y` inner.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numbers of instrument (`q`), treatment (`k`) and outcome (`m`) levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    #[serde(rename = "Q")]
    q: usize,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "M")]
    m: usize,
}

impl Dims {
    pub fn new(q: usize, k: usize, m: usize) -> Result<Self> {
        if q < 1 {
            return Err(Error::InvalidDims(format!("Q must be at least 1, got {q}")));
        }
        if k < 2 {
            return Err(Error::InvalidDims(format!("K must be at least 2, got {k}")));
        }
        if m < 2 {
            return Err(Error::InvalidDims(format!("M must be at least 2, got {m}")));
        }
        if m > 16 {
            return Err(Error::InvalidDims(format!(
                "M above 16 is not supported (subset masks are 16-bit), got {m}"
            )));
        }
        // M^K must fit in a usize for the flat stratum index.
        if (m as u128)
            .checked_pow(k as u32)
            .is_none_or(|s| s > u32::MAX as u128)
        {
            return Err(Error::InvalidDims(format!("M^K overflows for K={k}, M={m}")));
        }
        Ok(Self { q, k, m })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Same treatment/outcome levels with a different number of arms.
    pub fn with_arms(&self, q: usize) -> Result<Self> {
        Self::new(q, self.k, self.m)
    }

    /// Number of principal strata, `M^K`.
    pub fn strata(&self) -> usize {
        self.m.pow(self.k as u32)
    }

    /// Number of observed `(x, y)` cells per arm, `K*M`.
    pub fn cells(&self) -> usize {
        self.k * self.m
    }

    /// Flat index of a stratum given its 1-based outcome vector.
    pub fn stratum_flat(&self, outcomes: &[usize]) -> Result<usize> {
        if outcomes.len() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "stratum has {} coordinates, expected K={}",
                outcomes.len(),
                self.k
            )));
        }
        let mut flat = 0;
        for &y in outcomes {
            if y < 1 || y > self.m {
                return Err(Error::DimensionMismatch(format!(
                    "outcome level {y} outside 1..={}",
                    self.m
                )));
            }
            flat = flat * self.m + (y - 1);
        }
        Ok(flat)
    }

    /// 1-based outcome vector of a flat stratum index.
    pub fn stratum_outcomes(&self, flat: usize) -> Vec<usize> {
        debug_assert!(flat < self.strata());
        let mut out = vec![0; self.k];
        let mut rest = flat;
        for slot in out.iter_mut().rev() {
            *slot = rest % self.m + 1;
            rest /= self.m;
        }
        out
    }

    /// 1-based outcome of treatment `x` (1-based) in stratum `flat`.
    pub fn stratum_outcome(&self, flat: usize, x: usize) -> usize {
        let shift = self.m.pow((self.k - x) as u32);
        (flat / shift) % self.m + 1
    }

    pub fn cell_flat(&self, x: usize, y: usize) -> Result<usize> {
        if x < 1 || x > self.k || y < 1 || y > self.m {
            return Err(Error::DimensionMismatch(format!(
                "cell (x={x}, y={y}) outside [1..={}] x [1..={}]",
                self.k, self.m
            )));
        }
        Ok((x - 1) * self.m + (y - 1))
    }

    /// `(x, y)`, 1-based, of a flat cell index.
    pub fn cell_levels(&self, flat: usize) -> (usize, usize) {
        debug_assert!(flat < self.cells());
        (flat / self.m + 1, flat % self.m + 1)
    }

    pub fn stratum(&self, flat: usize) -> StratumIndex {
        StratumIndex {
            outcomes: self.stratum_outcomes(flat),
            flat,
        }
    }

    pub fn cell(&self, flat: usize) -> CellIndex {
        let (x, y) = self.cell_levels(flat);
        CellIndex { x, y, flat }
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(Q={}, K={}, M={})", self.q, self.k, self.m)
    }
}

/// A principal stratum `(Y(x_1), ..., Y(x_K))`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StratumIndex {
    pub outcomes: Vec<usize>,
    pub flat: usize,
}

/// An observed `(X, Y)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellIndex {
    pub x: usize,
    pub y: usize,
    pub flat: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexReport {
    pub strata_checked: usize,
    pub cells_checked: usize,
    pub failures: Vec<String>,
}

impl IndexReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Walks every stratum and cell and confirms the flat and structured maps
/// are mutually inverse.
pub fn index_roundtrip(dims: &Dims) -> IndexReport {
    let mut failures = Vec::new();
    for flat in 0..dims.strata() {
        let outcomes = dims.stratum_outcomes(flat);
        match dims.stratum_flat(&outcomes) {
            Ok(back) if back == flat => {}
            other => failures.push(format!("stratum {flat} -> {outcomes:?} -> {other:?}")),
        }
        for x in 1..=dims.k() {
            if dims.stratum_outcome(flat, x) != outcomes[x - 1] {
                failures.push(format!("stratum {flat}: coordinate {x} disagrees"));
            }
        }
    }
    for flat in 0..dims.cells() {
        let (x, y) = dims.cell_levels(flat);
        match dims.cell_flat(x, y) {
            Ok(back) if back == flat => {}
            other => failures.push(format!("cell {flat} -> ({x},{y}) -> {other:?}")),
        }
    }
    IndexReport {
        strata_checked: dims.strata(),
        cells_checked: dims.cells(),
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_dims() {
        assert!(Dims::new(0, 2, 2).is_err());
        assert!(Dims::new(1, 1, 2).is_err());
        assert!(Dims::new(1, 2, 1).is_err());
        let d = Dims::new(3, 3, 2).unwrap();
        assert_eq!(d.strata(), 8);
        assert_eq!(d.cells(), 6);
    }

    #[test]
    fn stratum_order_k2_m2() {
        let d = Dims::new(1, 2, 2).unwrap();
        assert_eq!(d.stratum_flat(&[1, 1]).unwrap(), 0);
        assert_eq!(d.stratum_flat(&[1, 2]).unwrap(), 1);
        assert_eq!(d.stratum_flat(&[2, 1]).unwrap(), 2);
        assert_eq!(d.stratum_flat(&[2, 2]).unwrap(), 3);
    }

    #[test]
    fn stratum_k2_m3() {
        let d = Dims::new(1, 2, 3).unwrap();
        assert_eq!(d.stratum_flat(&[2, 3]).unwrap(), 5);
        assert_eq!(d.stratum_outcomes(5), vec![2, 3]);
    }

    #[test]
    fn cell_k2_m2() {
        let d = Dims::new(1, 2, 2).unwrap();
        assert_eq!(d.cell_flat(2, 1).unwrap(), 2);
        assert_eq!(d.cell_levels(2), (2, 1));
        assert!(d.cell_flat(3, 1).is_err());
    }

    #[test]
    fn roundtrip_exhaustive_small() {
        for k in 2..=4 {
            for m in 2..=4 {
                let d = Dims::new(1, k, m).unwrap();
                let report = index_roundtrip(&d);
                assert!(report.ok(), "{d}: {:?}", report.failures);
                assert_eq!(report.strata_checked, m.pow(k as u32));
            }
        }
    }
}
