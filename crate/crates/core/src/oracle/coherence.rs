//! The coherence relation between principal strata and observed cells, the
//! Strassen coupling check built on it, and the edge-set redundancy search.
//!
//! Stratum `a = (y^1, ..., y^K)` is coherent with cell `(i, y)` when
//! `y^i = y`, so each stratum has exactly one edge per treatment. Edge ids
//! are `stratum * K + (i - 1)`.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::Zero;

use crate::bits::BitVector;
use crate::dims::Dims;
use crate::distribution::{CounterfactualDistribution, ObservedDistribution};
use crate::error::{Error, Result};
use crate::inequality::{full_mask, SubsetFamily};
use crate::lp::rationals;

/// Largest strata count for the all-subsets Strassen check.
pub const ALL_SUBSETS_STRATA_CAP: usize = 20;
/// Largest number of Cartesian candidates scanned by the redundancy search.
pub const CANDIDATE_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoherenceRelation {
    pub dims: Dims,
    /// `(stratum, cell)` pairs, both flat.
    pub edges: BTreeSet<(usize, usize)>,
}

impl CoherenceRelation {
    pub fn neighbors_of_stratum(&self, stratum: usize) -> Vec<usize> {
        self.edges
            .range((stratum, 0)..(stratum + 1, 0))
            .map(|&(_, c)| c)
            .collect()
    }

    pub fn neighbors_of_cell(&self, cell: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(_, c)| c == cell)
            .map(|&(a, _)| a)
            .collect()
    }

    /// `N(U)`: cells adjacent to some stratum of `U`.
    pub fn neighborhood(&self, strata: &BitVector) -> BitVector {
        let mut out = BitVector::zeros(self.dims.cells());
        for a in strata.iter_ones() {
            for c in self.neighbors_of_stratum(a) {
                out.set(c);
            }
        }
        out
    }
}

pub fn build_coherence(dims: &Dims) -> CoherenceRelation {
    let mut edges = BTreeSet::new();
    for a in 0..dims.strata() {
        for x in 1..=dims.k() {
            let y = dims.stratum_outcome(a, x);
            edges.insert((a, (x - 1) * dims.m() + (y - 1)));
        }
    }
    CoherenceRelation { dims: *dims, edges }
}

/// `R_C(U) = [R_C ∩ (U × N(U))] ∪ [R_C ∩ (Ū × N(U)ᶜ)]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeCertificate {
    pub strata: BitVector,
    /// Over edge ids `stratum * K + (i - 1)`.
    pub edges: BitVector,
}

impl EdgeCertificate {
    pub fn new(dims: &Dims, strata: BitVector) -> Self {
        let words = edge_words(dims, &strata);
        let mut edges = BitVector::zeros(dims.strata() * dims.k());
        for e in 0..edges.len() {
            if words[e / 64] >> (e % 64) & 1 == 1 {
                edges.set(e);
            }
        }
        Self { strata, edges }
    }

    pub fn for_family(dims: &Dims, family: &SubsetFamily) -> Self {
        Self::new(dims, family.lhs(dims))
    }

    pub fn is_contained_in(&self, other: &EdgeCertificate) -> bool {
        self.edges.is_subset_of(&other.edges)
    }
}

fn edge_words(dims: &Dims, strata: &BitVector) -> Vec<u64> {
    let (k, m) = (dims.k(), dims.m());
    let mut hood = vec![false; dims.cells()];
    for a in strata.iter_ones() {
        for x in 1..=k {
            hood[(x - 1) * m + dims.stratum_outcome(a, x) - 1] = true;
        }
    }
    let n_edges = dims.strata() * k;
    let mut words = vec![0u64; n_edges.div_ceil(64)];
    for a in 0..dims.strata() {
        let inside = strata.get(a);
        for x in 1..=k {
            let cell = (x - 1) * m + dims.stratum_outcome(a, x) - 1;
            if inside == hood[cell] {
                let e = a * k + x - 1;
                words[e / 64] |= 1 << (e % 64);
            }
        }
    }
    words
}

fn exact_simplex(probs: &[f64]) -> Result<Vec<BigRational>> {
    let r = rationals(probs)?;
    let total = r.iter().fold(BigRational::zero(), |acc, v| acc + v);
    if total.is_zero() {
        return Err(Error::InvalidDistribution("all-zero distribution".into()));
    }
    Ok(r.into_iter().map(|v| v / &total).collect())
}

fn check_pair(dims: &Dims, pa: &CounterfactualDistribution, pb: &ObservedDistribution) -> Result<()> {
    if pa.probs().len() != dims.strata() || pb.probs().len() != dims.cells() {
        return Err(Error::DimensionMismatch(format!(
            "distributions of length {} and {} for {dims}",
            pa.probs().len(),
            pb.probs().len()
        )));
    }
    Ok(())
}

/// Whether a coupling of `pa` and `pb` supported on coherent pairs exists,
/// checking `P_A(U) <= P_B(N(U))` over Cartesian `U`. Inputs are read as
/// exact rationals and renormalized exactly.
pub fn strassen_feasible(
    dims: &Dims,
    pa: &CounterfactualDistribution,
    pb: &ObservedDistribution,
) -> Result<bool> {
    check_pair(dims, pa, pb)?;
    let a = exact_simplex(pa.probs())?;
    let b = exact_simplex(pb.probs())?;
    let full = full_mask(dims.m());
    let mut masks = vec![1u16; dims.k()];
    loop {
        if masks.iter().any(|&s| s != full) {
            let family = SubsetFamily::new(dims, masks.clone())?;
            let lhs = family
                .lhs(dims)
                .iter_ones()
                .fold(BigRational::zero(), |acc, i| acc + &a[i]);
            let rhs = family
                .rhs(dims)
                .iter_ones()
                .fold(BigRational::zero(), |acc, i| acc + &b[i]);
            if lhs > rhs {
                return Ok(false);
            }
        }
        let mut i = dims.k();
        loop {
            if i == 0 {
                return Ok(true);
            }
            i -= 1;
            if masks[i] < full {
                masks[i] += 1;
                break;
            }
            masks[i] = 1;
        }
    }
}

/// The same check over every nonempty proper subset of strata.
pub fn strassen_feasible_all_subsets(
    dims: &Dims,
    pa: &CounterfactualDistribution,
    pb: &ObservedDistribution,
) -> Result<bool> {
    check_pair(dims, pa, pb)?;
    let s = dims.strata();
    if s > ALL_SUBSETS_STRATA_CAP {
        return Err(Error::SizeOverflow {
            what: "strata for the all-subsets check",
            size: s as u128,
            cap: ALL_SUBSETS_STRATA_CAP as u128,
        });
    }
    let a = exact_simplex(pa.probs())?;
    let b = exact_simplex(pb.probs())?;
    let cells: Vec<Vec<usize>> = (0..s)
        .map(|st| {
            (1..=dims.k())
                .map(|x| (x - 1) * dims.m() + dims.stratum_outcome(st, x) - 1)
                .collect()
        })
        .collect();
    for subset in 1u32..(1 << s) - 1 {
        let mut lhs = BigRational::zero();
        let mut hood = vec![false; dims.cells()];
        for (st, neighbors) in cells.iter().enumerate() {
            if subset >> st & 1 == 1 {
                lhs += &a[st];
                for &c in neighbors {
                    hood[c] = true;
                }
            }
        }
        let rhs = hood
            .iter()
            .zip(&b)
            .filter(|(h, _)| **h)
            .fold(BigRational::zero(), |acc, (_, v)| acc + v);
        if lhs > rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Agreement counts between the two Strassen checks on random pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct StrassenAgreement {
    pub draws: usize,
    pub agree: usize,
    pub feasible: usize,
}

impl StrassenAgreement {
    pub fn rate(&self) -> f64 {
        self.agree as f64 / self.draws as f64
    }
}

/// Compares the Cartesian and all-subsets checks on `draws` random pairs.
///
/// Half the pairs are built compatible (the observed arm is the image of a
/// random coupling) and then perturbed toward an independent Dirichlet
/// draw, so both verdicts occur.
pub fn strassen_agreement(dims: &Dims, draws: usize, seed: u64) -> Result<StrassenAgreement> {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let one_arm = dims.with_arms(1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s, c, k) = (dims.strata(), dims.cells(), dims.k());
    let mut out = StrassenAgreement {
        draws,
        agree: 0,
        feasible: 0,
    };
    for _ in 0..draws {
        let pa = crate::bounds::dirichlet_flat(&mut rng, s);
        let mut pb = vec![0.0; c];
        for (a, &mass) in pa.iter().enumerate() {
            let split = crate::bounds::dirichlet_flat(&mut rng, k);
            for (x, w) in split.iter().enumerate() {
                pb[x * dims.m() + dims.stratum_outcome(a, x + 1) - 1] += mass * w;
            }
        }
        if rng.random_bool(0.5) {
            let eps: f64 = rng.random_range(0.0..0.5);
            let noise = crate::bounds::dirichlet_flat(&mut rng, c);
            pb.iter_mut()
                .zip(&noise)
                .for_each(|(p, n)| *p = (1.0 - eps) * *p + eps * n);
        }
        let pa = CounterfactualDistribution::new(&one_arm, pa)?;
        let pb = ObservedDistribution::normalized(&one_arm, 1, pb, 0)?;
        let cartesian = strassen_feasible(&one_arm, &pa, &pb)?;
        let all = strassen_feasible_all_subsets(&one_arm, &pa, &pb)?;
        out.agree += usize::from(cartesian == all);
        out.feasible += usize::from(all);
    }
    Ok(out)
}

/// Edge sets of every nontrivial Cartesian family, flattened.
struct CandidateTable {
    families: Vec<SubsetFamily>,
    words_per: usize,
    words: Vec<u64>,
    /// First word of every edge set, contiguous for a fast prefilter.
    firsts: Vec<u64>,
}

impl CandidateTable {
    fn build(dims: &Dims) -> Result<Self> {
        let count = ((1u128 << dims.m()) - 1).pow(dims.k() as u32) - 1;
        if count > CANDIDATE_CAP {
            return Err(Error::SizeOverflow {
                what: "Cartesian candidates",
                size: count,
                cap: CANDIDATE_CAP,
            });
        }
        let families: Vec<SubsetFamily> = crate::inequality::families(*dims).collect();
        let words_per = (dims.strata() * dims.k()).div_ceil(64);
        let mut words = Vec::with_capacity(families.len() * words_per);
        for f in &families {
            words.extend(edge_words(dims, &f.lhs(dims)));
        }
        let firsts = words.iter().step_by(words_per).copied().collect();
        Ok(Self {
            families,
            words_per,
            words,
            firsts,
        })
    }

    fn edges(&self, i: usize) -> &[u64] {
        &self.words[i * self.words_per..(i + 1) * self.words_per]
    }

    /// Whether some other candidate's edge set contains candidate `i`'s.
    fn dominated(&self, i: usize) -> bool {
        let mine = self.edges(i);
        let first = mine[0];
        self.firsts.iter().enumerate().any(|(j, &w)| {
            first & !w == 0
                && j != i
                && mine[1..]
                    .iter()
                    .zip(&self.edges(j)[1..])
                    .all(|(a, b)| a & !b == 0)
        })
    }
}

/// True iff some Cartesian `U' != U` has `R_C(U) ⊆ R_C(U')`, where `U` is
/// the family's product set. The trivial full product is not a candidate.
pub fn edge_redundant(family: &SubsetFamily, dims: &Dims) -> Result<bool> {
    let table = CandidateTable::build(dims)?;
    let i = table
        .families
        .iter()
        .position(|f| f == family)
        .ok_or_else(|| Error::DimensionMismatch(format!("family {family} not valid for {dims}")))?;
    Ok(table.dominated(i))
}

/// `edge_redundant` for every nontrivial family, in canonical order.
pub fn edge_redundancy_table(dims: &Dims) -> Result<Vec<(SubsetFamily, bool)>> {
    let table = CandidateTable::build(dims)?;
    Ok((0..table.families.len())
        .map(|i| (table.families[i].clone(), table.dominated(i)))
        .collect())
}
