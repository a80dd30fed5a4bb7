//! Exact LP audits of the inequality system.
//!
//! Variables are `(p', p_1, ..., p_Q)`, each block on its simplex. A row is
//! non-redundant when its violation `H'_i p' - H_i p_z` can be made positive
//! while every other row holds.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::dims::Dims;
use crate::error::{Error, Result};
use crate::inequality::{enumerate_full, InequalityRow, InequalitySystem, SystemKind};
use crate::lp::{LinearProgram, LpOutcome, Relation, Sense};

use super::vertices::enumerate_vertices;

/// Default cap on `Q * rows` for the audit.
pub const AUDIT_ROW_CAP: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NonRedundant,
    Redundant,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditEntry {
    /// Position of the family in the full enumeration.
    pub row_id: usize,
    /// 1-based arm.
    pub arm: usize,
    pub family: String,
    /// Whether the row belongs to the audited system or was dropped by it.
    pub kept: bool,
    pub verdict: Verdict,
    #[serde(serialize_with = "as_string")]
    pub max_violation: BigRational,
}

fn as_string<S: serde::Serializer>(v: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub dims: String,
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    /// Kept rows all non-redundant and dropped rows all redundant.
    pub fn consistent(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.kept == (e.verdict == Verdict::NonRedundant))
    }

    pub fn count(&self, kept: bool, verdict: Verdict) -> usize {
        self.entries
            .iter()
            .filter(|e| e.kept == kept && e.verdict == verdict)
            .count()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

fn ratio(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn n_vars(dims: &Dims) -> usize {
    dims.strata() + dims.q() * dims.cells()
}

/// `H'_i p' - H_i p_z` as sparse terms.
fn row_terms(dims: &Dims, row: &InequalityRow, z: usize) -> Vec<(usize, BigRational)> {
    let offset = dims.strata() + z * dims.cells();
    row.lhs
        .iter_ones()
        .map(|i| (i, ratio(1)))
        .chain(row.rhs.iter_ones().map(|c| (offset + c, ratio(-1))))
        .collect()
}

fn add_simplices(lp: &mut LinearProgram<BigRational>, dims: &Dims) {
    let s = dims.strata();
    let c = dims.cells();
    let ones: Vec<(usize, BigRational)> = (0..s).map(|i| (i, ratio(1))).collect();
    lp.add_sparse(&ones, Relation::Eq, ratio(1));
    for z in 0..dims.q() {
        let ones: Vec<(usize, BigRational)> = (0..c).map(|i| (s + z * c + i, ratio(1))).collect();
        lp.add_sparse(&ones, Relation::Eq, ratio(1));
    }
}

/// The system's rows, every arm, as `≤ 0` constraints, skipping `(skip_row, skip_arm)`.
fn constrained(
    dims: &Dims,
    rows: &[InequalityRow],
    skip: Option<(usize, usize)>,
    objective: Vec<BigRational>,
) -> LinearProgram<BigRational> {
    let mut lp = LinearProgram::new(n_vars(dims), Sense::Maximize, objective);
    add_simplices(&mut lp, dims);
    for z in 0..dims.q() {
        for (r, row) in rows.iter().enumerate() {
            if skip != Some((r, z)) {
                lp.add_sparse(&row_terms(dims, row, z), Relation::Le, ratio(0));
            }
        }
    }
    lp
}

fn maximize(lp: &LinearProgram<BigRational>) -> Result<BigRational> {
    match lp.solve()? {
        LpOutcome::Optimal { value, .. } => Ok(value),
        LpOutcome::Infeasible { .. } => Err(Error::LpFailure("audit program infeasible".into())),
        LpOutcome::Unbounded => Err(Error::LpFailure("audit program unbounded".into())),
    }
}

fn dense(dims: &Dims, terms: &[(usize, BigRational)]) -> Vec<BigRational> {
    let mut v = vec![BigRational::zero(); n_vars(dims)];
    for (i, c) in terms {
        v[*i] += c;
    }
    v
}

/// Maximal violation of every row of `sys` (every arm) subject to all
/// other rows. For a non-redundant system, rows dropped from the full
/// enumeration are also audited, against the kept rows.
pub fn lp_redundancy_audit(sys: &InequalitySystem) -> Result<AuditReport> {
    lp_redundancy_audit_capped(sys, AUDIT_ROW_CAP)
}

pub fn lp_redundancy_audit_capped(sys: &InequalitySystem, cap: usize) -> Result<AuditReport> {
    let dims = sys.dims();
    let full = enumerate_full(&dims)?;
    let audited = if sys.kind() == SystemKind::Nonredundant {
        full.len()
    } else {
        sys.len()
    };
    if dims.q() * audited > cap {
        return Err(Error::SizeOverflow {
            what: "audited rows",
            size: (dims.q() * audited) as u128,
            cap: cap as u128,
        });
    }
    let position = |row: &InequalityRow| full.rows().iter().position(|r| r.family == row.family);
    let mut entries = Vec::new();
    for (r, row) in sys.rows().iter().enumerate() {
        for z in 0..dims.q() {
            let lp = constrained(
                &dims,
                sys.rows(),
                Some((r, z)),
                dense(&dims, &row_terms(&dims, row, z)),
            );
            let v = maximize(&lp)?;
            entries.push(entry(position(row).unwrap_or(r), z, row, true, v));
        }
    }
    if sys.kind() == SystemKind::Nonredundant {
        for (r, row) in full.rows().iter().enumerate() {
            if sys.rows().iter().any(|k| k.family == row.family) {
                continue;
            }
            for z in 0..dims.q() {
                let lp = constrained(&dims, sys.rows(), None, dense(&dims, &row_terms(&dims, row, z)));
                entries.push(entry(r, z, row, false, maximize(&lp)?));
            }
        }
    }
    Ok(AuditReport {
        dims: dims.to_string(),
        entries,
    })
}

fn entry(row_id: usize, z: usize, row: &InequalityRow, kept: bool, v: BigRational) -> AuditEntry {
    AuditEntry {
        row_id,
        arm: z + 1,
        family: row.family.to_string(),
        kept,
        verdict: if v.is_positive() {
            Verdict::NonRedundant
        } else {
            Verdict::Redundant
        },
        max_violation: v,
    }
}

/// Rank of a rational matrix by Gaussian elimination.
pub fn rank(mut rows: Vec<Vec<BigRational>>) -> usize {
    let n_cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for col in 0..n_cols {
        let Some(pivot) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, pivot);
        let lead = rows[r][col].clone();
        for i in r + 1..rows.len() {
            if rows[i][col].is_zero() {
                continue;
            }
            let factor = &rows[i][col] / &lead;
            for j in col..n_cols {
                let delta = &factor * &rows[r][j];
                rows[i][j] -= delta;
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    r
}

/// A basis vector of the null space when it is one-dimensional.
fn null_vector(mut rows: Vec<Vec<BigRational>>) -> Option<Vec<BigRational>> {
    let n_cols = rows.first()?.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n_cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let lead = rows[r][col].clone();
        for v in rows[r].iter_mut() {
            *v /= &lead;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][col].is_zero() {
                let factor = rows[i][col].clone();
                for j in 0..n_cols {
                    let delta = &factor * &rows[r][j];
                    rows[i][j] -= delta;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    if pivots.len() + 1 != n_cols {
        return None;
    }
    let free = (0..n_cols).find(|c| !pivots.contains(c))?;
    let mut v = vec![BigRational::zero(); n_cols];
    v[free] = BigRational::one();
    for (i, &col) in pivots.iter().enumerate() {
        v[col] = -rows[i][free].clone();
    }
    Some(v)
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexFacetReport {
    pub dims: String,
    pub dimension: usize,
    pub vertices: usize,
    /// Every vertex satisfies every row of the system.
    pub vertices_satisfy_system: bool,
    /// (arm, row) pairs tight on `dimension` affinely independent vertices.
    pub facet_rows: usize,
    pub rows: usize,
    /// Facets of the vertex hull.
    pub hull_facets: usize,
    /// Hull facets implied by the system together with the simplices.
    pub hull_facets_valid: usize,
}

impl VertexFacetReport {
    /// The vertex hull and the system's solution set coincide, and every
    /// row defines a facet.
    pub fn consistent(&self) -> bool {
        self.vertices_satisfy_system
            && self.facet_rows == self.rows
            && self.hull_facets == self.hull_facets_valid
    }
}

/// Compares the hull of the product-of-point-mass vertices with the
/// solution set of `sys` in exact arithmetic.
///
/// Coordinates are reduced by dropping the last entry of every simplex
/// block, which makes both sets full-dimensional. Hull facets are found by
/// brute force over `D`-subsets of vertices, so only tiny dimensions are
/// practical.
pub fn vertex_facet_check(sys: &InequalitySystem) -> Result<VertexFacetReport> {
    let dims = sys.dims();
    let vs = enumerate_vertices(&dims)?;
    let s = dims.strata();
    let c = dims.cells();
    let q = dims.q();
    let dim = (s - 1) + q * (c - 1);
    let points: Vec<Vec<BigRational>> = vs.vertices.iter().map(|v| v.point(&dims)).collect();
    let keep: Vec<usize> = (0..s - 1)
        .chain((0..q).flat_map(|z| (0..c - 1).map(move |i| s + z * c + i)))
        .collect();
    let reduced: Vec<Vec<BigRational>> = points
        .iter()
        .map(|p| keep.iter().map(|&i| p[i].clone()).collect())
        .collect();

    let mut satisfy = true;
    let mut facet_rows = 0;
    for z in 0..q {
        for row in sys.rows() {
            let terms = row_terms(&dims, row, z);
            let mut tight = Vec::new();
            for (vi, p) in points.iter().enumerate() {
                let value = terms
                    .iter()
                    .fold(BigRational::zero(), |acc, (i, coef)| acc + coef * &p[*i]);
                if value.is_positive() {
                    satisfy = false;
                } else if value.is_zero() {
                    tight.push(vi);
                }
            }
            if affine_rank(&reduced, &tight) == dim {
                facet_rows += 1;
            }
        }
    }

    let hull = hull_facets(&reduced, dim)?;
    let mut valid = 0;
    for (a, b) in &hull {
        // lift a·x <= b from reduced to full coordinates, then maximize over the system
        let mut objective = vec![BigRational::zero(); n_vars(&dims)];
        for (coef, &i) in a.iter().zip(&keep) {
            objective[i] = coef.clone();
        }
        let lp = constrained(&dims, sys.rows(), None, objective);
        if maximize(&lp)? <= *b {
            valid += 1;
        }
    }
    Ok(VertexFacetReport {
        dims: dims.to_string(),
        dimension: dim,
        vertices: vs.len(),
        vertices_satisfy_system: satisfy,
        facet_rows,
        rows: q * sys.len(),
        hull_facets: hull.len(),
        hull_facets_valid: valid,
    })
}

/// Affine rank (dimension of the affine hull) plus one, i.e. the number of
/// affinely independent points among `idx`.
fn affine_rank(points: &[Vec<BigRational>], idx: &[usize]) -> usize {
    if idx.is_empty() {
        return 0;
    }
    let base = &points[idx[0]];
    let diffs: Vec<Vec<BigRational>> = idx[1..]
        .iter()
        .map(|&i| points[i].iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    if diffs.is_empty() {
        1
    } else {
        rank(diffs) + 1
    }
}

/// Facet inequalities `a·x <= b` of the hull of full-dimensional `points`,
/// normalized so the first nonzero coefficient has absolute value one.
fn hull_facets(points: &[Vec<BigRational>], dim: usize) -> Result<Vec<(Vec<BigRational>, BigRational)>> {
    let n = points.len();
    if n < dim {
        return Ok(Vec::new());
    }
    let mut found: Vec<(Vec<BigRational>, BigRational)> = Vec::new();
    let mut combo: Vec<usize> = (0..dim).collect();
    loop {
        let rows: Vec<Vec<BigRational>> = combo
            .iter()
            .map(|&i| {
                let mut r = points[i].clone();
                r.push(-BigRational::one());
                r
            })
            .collect();
        if let Some(mut h) = null_vector(rows) {
            let mut b = h.pop().expect("offset coordinate");
            let mut a = h;
            let values: Vec<BigRational> = points
                .iter()
                .map(|p| {
                    a.iter()
                        .zip(p)
                        .fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
                })
                .collect();
            let above = values.iter().any(|v| *v > b);
            let below = values.iter().any(|v| *v < b);
            if !(above && below) && (above || below) {
                if above {
                    a.iter_mut().for_each(|v| *v = -v.clone());
                    b = -b;
                }
                if let Some(lead) = a.iter().find(|v| !v.is_zero()).map(|v| v.abs()) {
                    a.iter_mut().for_each(|v| *v /= &lead);
                    b /= &lead;
                }
                if !found.iter().any(|(fa, fb)| *fa == a && *fb == b) {
                    found.push((a, b));
                }
            }
        }
        // next combination in lexicographic order
        let mut i = dim;
        loop {
            if i == 0 {
                return Ok(found);
            }
            i -= 1;
            if combo[i] < n - dim + i {
                combo[i] += 1;
                for j in i + 1..dim {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequality::nonredundant_system;

    #[test]
    fn audit_small_systems() {
        let sys = nonredundant_system(&Dims::new(1, 2, 2).unwrap()).unwrap();
        let report = lp_redundancy_audit(&sys).unwrap();
        assert_eq!(report.entries.len(), 8);
        assert!(report.consistent());

        let sys = nonredundant_system(&Dims::new(1, 2, 3).unwrap()).unwrap();
        let report = lp_redundancy_audit(&sys).unwrap();
        assert_eq!(report.count(true, Verdict::NonRedundant), 42);
        assert_eq!(report.count(false, Verdict::Redundant), 6);
        assert!(report.consistent());
    }

    #[test]
    fn full_system_has_redundant_rows() {
        let sys = enumerate_full(&Dims::new(1, 2, 3).unwrap()).unwrap();
        let report = lp_redundancy_audit(&sys).unwrap();
        // at least the six rows the filter drops are implied by the rest
        assert!(report.count(true, Verdict::Redundant) >= 6);
    }

    #[test]
    fn rank_and_null_space() {
        let m = |v: &[i64]| v.iter().map(|&x| ratio(x)).collect::<Vec<_>>();
        assert_eq!(rank(vec![m(&[1, 2]), m(&[2, 4])]), 1);
        assert_eq!(rank(vec![m(&[1, 0, 1]), m(&[0, 1, 1]), m(&[1, 1, 2])]), 2);
        let v = null_vector(vec![m(&[1, 1, -1])]);
        assert!(v.is_none());
        let v = null_vector(vec![m(&[1, 0, -1]), m(&[0, 1, -1])]).unwrap();
        assert_eq!(v, m(&[1, 1, 1]));
    }

    #[test]
    fn vertex_facet_one_arm() {
        let sys = nonredundant_system(&Dims::new(1, 2, 2).unwrap()).unwrap();
        let report = vertex_facet_check(&sys).unwrap();
        assert_eq!(report.vertices, 8);
        assert_eq!(report.dimension, 6);
        assert!(report.consistent(), "{report:?}");
    }
}
