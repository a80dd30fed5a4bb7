//! The per-arm inequality system `H' p' <= H p_z`.
//!
//! Every row is indexed by a family `(V^(1), ..., V^(K))` of nonempty
//! subsets of the outcome levels, at least one of them strict. The row reads
//!
//! ```text
//! P'(Y(x_1) ∈ V^(1), ..., Y(x_K) ∈ V^(K)) <= Σ_i P(X = i, Y ∈ V^(i) | Z = z)
//! ```
//!
//! and the same rows apply to every instrument arm. A row is kept by the
//! non-redundant filter when at least two coordinates are strict subsets,
//! or when exactly one is and it omits a single level.

use serde::Serialize;

use crate::bits::BitVector;
use crate::dims::Dims;
use crate::error::{Error, Result};

/// Default cap on the number of per-arm rows materialized by enumeration.
pub const DEFAULT_ROW_CAP: u128 = 10_000_000;

/// `K` subsets of `{1..M}`, each stored as an `M`-bit mask (bit `j-1` for level `j`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SubsetFamily {
    masks: Vec<u16>,
}

impl SubsetFamily {
    pub fn new(dims: &Dims, masks: Vec<u16>) -> Result<Self> {
        let full = full_mask(dims.m());
        if masks.len() != dims.k() {
            return Err(Error::DimensionMismatch(format!(
                "family has {} subsets, expected K={}",
                masks.len(),
                dims.k()
            )));
        }
        if masks.iter().any(|&s| s == 0 || s & !full != 0) {
            return Err(Error::InvalidDims(format!(
                "family {masks:?}: every subset must be a nonempty subset of 1..={}",
                dims.m()
            )));
        }
        if masks.iter().all(|&s| s == full) {
            return Err(Error::InvalidDims(
                "family with every subset equal to the full level set is trivial".into(),
            ));
        }
        Ok(Self { masks })
    }

    /// Builds a family from 1-based level lists, e.g. `[[1, 2, 3], [1, 2]]`.
    pub fn from_levels(dims: &Dims, sets: &[&[usize]]) -> Result<Self> {
        let masks = sets
            .iter()
            .map(|levels| {
                levels.iter().try_fold(0u16, |acc, &l| {
                    if l < 1 || l > dims.m() {
                        Err(Error::DimensionMismatch(format!(
                            "level {l} outside 1..={}",
                            dims.m()
                        )))
                    } else {
                        Ok(acc | 1 << (l - 1))
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims, masks)
    }

    pub fn masks(&self) -> &[u16] {
        &self.masks
    }

    /// Whether `level` (1-based) lies in the subset for treatment `x` (1-based).
    pub fn contains(&self, x: usize, level: usize) -> bool {
        self.masks[x - 1] >> (level - 1) & 1 == 1
    }

    /// Number of coordinates whose subset is a strict subset of `{1..M}`.
    pub fn strict_coordinates(&self, m: usize) -> usize {
        let full = full_mask(m);
        self.masks.iter().filter(|&&s| s != full).count()
    }

    /// The non-redundancy conditions: at least two strict coordinates, or a
    /// single strict coordinate of size `M - 1`.
    pub fn is_nonredundant(&self, m: usize) -> bool {
        let full = full_mask(m);
        let mut strict = self.masks.iter().filter(|&&s| s != full);
        match (strict.next(), strict.next()) {
            (Some(_), Some(_)) => true,
            (Some(&s), None) => s.count_ones() as usize == m - 1,
            _ => false,
        }
    }

    pub fn levels(&self, m: usize) -> Vec<Vec<usize>> {
        self.masks
            .iter()
            .map(|&s| (1..=m).filter(|&l| s >> (l - 1) & 1 == 1).collect())
            .collect()
    }

    /// Indicator over strata of the Cartesian product `V^(1) x ... x V^(K)`.
    pub fn lhs(&self, dims: &Dims) -> BitVector {
        let mut v = BitVector::zeros(dims.strata());
        for flat in 0..dims.strata() {
            if (1..=dims.k()).all(|x| self.contains(x, dims.stratum_outcome(flat, x))) {
                v.set(flat);
            }
        }
        v
    }

    /// Indicator over cells of `∪_i {i} x V^(i)`.
    pub fn rhs(&self, dims: &Dims) -> BitVector {
        let mut v = BitVector::zeros(dims.cells());
        for x in 1..=dims.k() {
            for y in 1..=dims.m() {
                if self.contains(x, y) {
                    v.set((x - 1) * dims.m() + (y - 1));
                }
            }
        }
        v
    }
}

impl std::fmt::Display for SubsetFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let max_bit = 16 - self.masks.iter().map(|m| m.leading_zeros()).min().unwrap_or(16);
        let parts: Vec<String> = self
            .masks
            .iter()
            .map(|&s| {
                let levels: Vec<String> = (1..=max_bit as usize)
                    .filter(|&l| s >> (l - 1) & 1 == 1)
                    .map(|l| l.to_string())
                    .collect();
                format!("{{{}}}", levels.join(","))
            })
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

pub(crate) fn full_mask(m: usize) -> u16 {
    ((1u32 << m) - 1) as u16
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InequalityRow {
    pub family: SubsetFamily,
    /// Row of `H'`: strata in the Cartesian product.
    pub lhs: BitVector,
    /// Row of `H`: cells `(x, y)` with `y ∈ V^(x)`.
    pub rhs: BitVector,
}

impl InequalityRow {
    pub fn new(dims: &Dims, family: SubsetFamily) -> Self {
        let lhs = family.lhs(dims);
        let rhs = family.rhs(dims);
        Self { family, lhs, rhs }
    }

    /// `H p_z - H' p'` for this row; negative means the row is violated.
    pub fn slack(&self, counterfactual: &[f64], observed: &[f64]) -> f64 {
        self.rhs.dot(observed) - self.lhs.dot(counterfactual)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    /// Every nontrivial family.
    Full,
    /// Only the families meeting the non-redundancy conditions.
    Nonredundant,
}

#[derive(Debug, Clone)]
pub struct InequalitySystem {
    dims: Dims,
    kind: SystemKind,
    rows: Vec<InequalityRow>,
}

impl InequalitySystem {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn rows(&self) -> &[InequalityRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Builds a system from explicit rows (all must share `dims`).
    pub fn from_rows(dims: Dims, kind: SystemKind, rows: Vec<InequalityRow>) -> Self {
        Self { dims, kind, rows }
    }

    /// Same rows with a different number of instrument arms.
    pub fn with_arms(&self, q: usize) -> Result<Self> {
        Ok(Self {
            dims: self.dims.with_arms(q)?,
            kind: self.kind,
            rows: self.rows.clone(),
        })
    }

    /// Dense `H'` (rows x `M^K`).
    pub fn h_prime(&self) -> Vec<Vec<u8>> {
        self.rows.iter().map(|r| r.lhs.to_dense()).collect()
    }

    /// Dense `H` (rows x `K*M`).
    pub fn h(&self) -> Vec<Vec<u8>> {
        self.rows.iter().map(|r| r.rhs.to_dense()).collect()
    }

    /// Smallest slack over all rows and arms; negative when violated.
    pub fn min_slack(&self, counterfactual: &[f64], observed: &[&[f64]]) -> f64 {
        observed
            .iter()
            .flat_map(|p| self.rows.iter().map(move |r| r.slack(counterfactual, p)))
            .fold(f64::INFINITY, f64::min)
    }

    /// JSON export: `{dims, rows: [{V, lhs_support, rhs_support}]}`.
    pub fn to_json_value(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                serde_json::json!({
                    "V": r.family.masks(),
                    "lhs_support": r.lhs.iter_ones().collect::<Vec<_>>(),
                    "rhs_support": r.rhs.iter_ones().collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({
            "dims": self.dims,
            "kind": self.kind,
            "rows": rows,
        })
    }

    /// Dense `[-H' | H]` block as CSV, one row per inequality, no header.
    pub fn to_dense_csv(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let mut fields: Vec<&str> = Vec::with_capacity(self.dims.strata() + self.dims.cells());
            fields.extend(r.lhs.to_dense().iter().map(|&b| if b == 1 { "-1" } else { "0" }));
            fields.extend(r.rhs.to_dense().iter().map(|&b| if b == 1 { "1" } else { "0" }));
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// Closed-form `(total, nonredundant)` row counts including the factor `Q`.
pub fn count_inequalities(dims: &Dims) -> (u128, u128) {
    let q = dims.q() as u128;
    let k = dims.k() as u32;
    let m = dims.m() as u32;
    let subsets = (1u128 << m) - 1;
    let per_arm_total = subsets.pow(k) - 1;
    let dropped = dims.k() as u128 * ((1u128 << m) - m as u128 - 2);
    (q * per_arm_total, q * (per_arm_total - dropped))
}

/// Iterates all families in canonical order: lexicographic over the mask
/// tuple, first coordinate most significant, each mask as an integer.
pub(crate) fn families(dims: Dims) -> impl Iterator<Item = SubsetFamily> {
    let full = full_mask(dims.m());
    let k = dims.k();
    let mut current: Option<Vec<u16>> = Some(vec![1; k]);
    std::iter::from_fn(move || loop {
        let masks = current.take()?;
        let mut next = masks.clone();
        let mut i = k;
        let mut advanced = false;
        while i > 0 {
            i -= 1;
            if next[i] < full {
                next[i] += 1;
                advanced = true;
                break;
            }
            next[i] = 1;
        }
        if advanced {
            current = Some(next);
        }
        if masks.iter().all(|&s| s == full) {
            continue;
        }
        return Some(SubsetFamily { masks });
    })
}

/// Every nontrivial family, `(2^M - 1)^K - 1` rows per arm.
pub fn enumerate_full(dims: &Dims) -> Result<InequalitySystem> {
    enumerate_full_capped(dims, DEFAULT_ROW_CAP)
}

pub fn enumerate_full_capped(dims: &Dims, cap: u128) -> Result<InequalitySystem> {
    let (total, _) = count_inequalities(dims);
    let per_arm = total / dims.q() as u128;
    if per_arm > cap {
        return Err(Error::SizeOverflow {
            what: "per-arm inequality count",
            size: per_arm,
            cap,
        });
    }
    let rows = families(*dims).map(|f| InequalityRow::new(dims, f)).collect();
    Ok(InequalitySystem {
        dims: *dims,
        kind: SystemKind::Full,
        rows,
    })
}

/// Keeps the rows whose family meets the non-redundancy conditions.
pub fn filter_nonredundant(sys: &InequalitySystem) -> InequalitySystem {
    let m = sys.dims.m();
    InequalitySystem {
        dims: sys.dims,
        kind: SystemKind::Nonredundant,
        rows: sys
            .rows
            .iter()
            .filter(|r| r.family.is_nonredundant(m))
            .cloned()
            .collect(),
    }
}

/// Shorthand for `filter_nonredundant(&enumerate_full(dims)?)`.
pub fn nonredundant_system(dims: &Dims) -> Result<InequalitySystem> {
    Ok(filter_nonredundant(&enumerate_full(dims)?))
}

/// Rows whose subsets are each either all levels or a singleton: the
/// closed-form marginal bounds
/// `P'(Y(x_i1) = j1, ...) <= 1 - Σ_l P(X = i_l, Y != j_l | Z = z)`.
pub fn marginal_bound_rows(dims: &Dims) -> Vec<InequalityRow> {
    let full = full_mask(dims.m());
    families(*dims)
        .filter(|f| f.masks.iter().all(|&s| s == full || s.count_ones() == 1))
        .map(|f| InequalityRow::new(dims, f))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(k: usize, m: usize) -> Dims {
        Dims::new(1, k, m).unwrap()
    }

    #[test]
    fn full_counts() {
        assert_eq!(enumerate_full(&dims(2, 2)).unwrap().len(), 8);
        assert_eq!(enumerate_full(&dims(2, 3)).unwrap().len(), 48);
        assert_eq!(enumerate_full(&dims(3, 2)).unwrap().len(), 26);
    }

    #[test]
    fn canonical_order_starts_with_singletons() {
        let sys = enumerate_full(&dims(2, 2)).unwrap();
        let masks: Vec<&[u16]> = sys.rows().iter().map(|r| r.family.masks()).collect();
        assert_eq!(masks[0], &[1, 1]);
        assert_eq!(masks[1], &[1, 2]);
        assert_eq!(masks[7], &[3, 2]);
    }

    #[test]
    fn filter_examples_k2_m3() {
        let d = dims(2, 3);
        let keep = SubsetFamily::from_levels(&d, &[&[1, 2, 3], &[1, 2]]).unwrap();
        let drop = SubsetFamily::from_levels(&d, &[&[1, 2, 3], &[2]]).unwrap();
        assert!(keep.is_nonredundant(3));
        assert!(!drop.is_nonredundant(3));
        let sys = nonredundant_system(&d).unwrap();
        assert_eq!(sys.len(), 42);
        assert!(sys.rows().iter().any(|r| r.family == keep));
        assert!(!sys.rows().iter().any(|r| r.family == drop));
    }

    #[test]
    fn closed_form_counts() {
        assert_eq!(count_inequalities(&Dims::new(1, 3, 3).unwrap()).1, 333);
        assert_eq!(count_inequalities(&Dims::new(1, 2, 4).unwrap()).1, 204);
        assert_eq!(count_inequalities(&Dims::new(2, 2, 3).unwrap()).1, 84);
        assert_eq!(count_inequalities(&Dims::new(2, 2, 3).unwrap()).0, 96);
    }

    #[test]
    fn size_cap() {
        let err = enumerate_full_capped(&dims(3, 4), 100).unwrap_err();
        assert!(matches!(err, Error::SizeOverflow { .. }));
    }

    #[test]
    fn family_validation() {
        let d = dims(2, 3);
        assert!(SubsetFamily::new(&d, vec![7, 7]).is_err());
        assert!(SubsetFamily::new(&d, vec![0, 1]).is_err());
        assert!(SubsetFamily::new(&d, vec![8, 1]).is_err());
        assert!(SubsetFamily::new(&d, vec![1]).is_err());
    }

    #[test]
    fn marginal_row_indicators() {
        let d = dims(2, 2);
        let f = SubsetFamily::from_levels(&d, &[&[1], &[1, 2]]).unwrap();
        let row = InequalityRow::new(&d, f);
        // strata with y^1 = 1 are (1,1) and (1,2)
        assert_eq!(row.lhs.iter_ones().collect::<Vec<_>>(), vec![0, 1]);
        // cells (1,1), (2,1), (2,2)
        assert_eq!(row.rhs.iter_ones().collect::<Vec<_>>(), vec![0, 2, 3]);

        let d3 = dims(2, 3);
        let f = SubsetFamily::from_levels(&d3, &[&[2], &[1]]).unwrap();
        let row = InequalityRow::new(&d3, f);
        assert_eq!(row.lhs.count_ones(), 1);
        assert_eq!(row.rhs.count_ones(), 2);
    }

    #[test]
    fn marginal_rows_equal_full_system_for_binary() {
        let d = dims(2, 2);
        let marg = marginal_bound_rows(&d);
        let full = enumerate_full(&d).unwrap();
        assert_eq!(marg.len(), 8);
        assert_eq!(marg, full.rows().to_vec());
        let d3 = dims(3, 3);
        assert_eq!(marginal_bound_rows(&d3).len(), 4usize.pow(3) - 1);
    }

    #[test]
    fn display_family() {
        let d = dims(2, 3);
        let f = SubsetFamily::from_levels(&d, &[&[1, 3], &[2]]).unwrap();
        assert_eq!(f.to_string(), "({1,3},{2})");
        assert_eq!(f.levels(3), vec![vec![1, 3], vec![2]]);
    }

    #[test]
    fn dense_csv_block() {
        let sys = enumerate_full(&dims(2, 2)).unwrap();
        let csv = sys.to_dense_csv();
        let first = csv.lines().next().unwrap();
        // family ({1},{1}): stratum (1,1); cells (1,1) and (2,1)
        assert_eq!(first, "-1,0,0,0,1,0,1,0");
        assert_eq!(csv.lines().count(), 8);
    }
}
