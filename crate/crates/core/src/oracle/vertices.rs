//! Extreme points of the joint polytope: a point mass on one principal
//! stratum together with, in each arm, the point mass on the cell that
//! stratum produces under that arm's treatment.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::dims::Dims;
use crate::error::{Error, Result};

pub const VERTEX_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Vertex {
    pub stratum: usize,
    /// Treatment level (1-based) taken in each arm.
    pub treatments: Vec<usize>,
}

impl Vertex {
    /// Flat cell index hit in arm `z` (0-based arm).
    pub fn cell(&self, dims: &Dims, z: usize) -> usize {
        let x = self.treatments[z];
        let y = dims.stratum_outcome(self.stratum, x);
        (x - 1) * dims.m() + (y - 1)
    }

    /// Dense point `(p', p_1, ..., p_Q)` with 0/1 entries.
    pub fn point(&self, dims: &Dims) -> Vec<BigRational> {
        let s = dims.strata();
        let c = dims.cells();
        let mut v = vec![BigRational::zero(); s + dims.q() * c];
        v[self.stratum] = BigRational::one();
        for z in 0..dims.q() {
            v[s + z * c + self.cell(dims, z)] = BigRational::one();
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct VertexSet {
    pub dims: Dims,
    pub vertices: Vec<Vertex>,
}

impl VertexSet {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

pub fn vertex_count(dims: &Dims) -> u128 {
    (dims.strata() as u128) * (dims.k() as u128).pow(dims.q() as u32)
}

/// All `M^K * K^Q` vertices, stratum-major, arm 1's treatment most
/// significant within a stratum.
pub fn enumerate_vertices(dims: &Dims) -> Result<VertexSet> {
    let count = vertex_count(dims);
    if count > VERTEX_CAP {
        return Err(Error::SizeOverflow {
            what: "vertices",
            size: count,
            cap: VERTEX_CAP,
        });
    }
    let (q, k) = (dims.q(), dims.k());
    let per_stratum = k.pow(q as u32);
    let mut vertices = Vec::with_capacity(count as usize);
    for stratum in 0..dims.strata() {
        for code in 0..per_stratum {
            let mut treatments = vec![0; q];
            let mut rest = code;
            for z in (0..q).rev() {
                treatments[z] = rest % k + 1;
                rest /= k;
            }
            vertices.push(Vertex { stratum, treatments });
        }
    }
    Ok(VertexSet {
        dims: *dims,
        vertices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(
            enumerate_vertices(&Dims::new(2, 2, 2).unwrap()).unwrap().len(),
            16
        );
        assert_eq!(
            enumerate_vertices(&Dims::new(2, 2, 3).unwrap()).unwrap().len(),
            36
        );
        assert!(enumerate_vertices(&Dims::new(12, 4, 4).unwrap()).is_err());
    }

    #[test]
    fn cells_are_coherent() {
        let dims = Dims::new(2, 3, 2).unwrap();
        for v in enumerate_vertices(&dims).unwrap().vertices {
            for z in 0..2 {
                let (x, y) = dims.cell_levels(v.cell(&dims, z));
                assert_eq!(dims.stratum_outcome(v.stratum, x), y);
            }
        }
    }
}
