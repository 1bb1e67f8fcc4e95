//! Scalar fields on uniform box grids, central-difference stencils, and the
//! flat binary container used to store them.
//!
//! Values are row-major: the last axis varies fastest.
//!
//! Binary layout (all integers and floats little-endian):
//!
//! | bytes            | content                                  |
//! |------------------|------------------------------------------|
//! | 8                | magic `b"HLGRID01"`                      |
//! | 4                | `u32` number of axes `d`                 |
//! | 4                | `u32` row-major flag, always `1`         |
//! | 8·d              | `u64` resolution per axis                |
//! | 16·d             | `f64` pairs `(lo, hi)` per axis          |
//! | 8·Π resolution   | `f64` values                             |

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectrum::SymmetricMatrix;

pub const MAGIC: &[u8; 8] = b"HLGRID01";

/// Axis-aligned box with per-axis node counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, resolution: Vec<usize>) -> Result<Self> {
        let d = lo.len();
        if d == 0 || hi.len() != d || resolution.len() != d {
            return Err(LabError::arg("box bounds and resolution must have one entry per axis"));
        }
        for a in 0..d {
            if !(lo[a].is_finite() && hi[a].is_finite() && hi[a] > lo[a]) {
                return Err(LabError::arg("each axis needs finite lo < hi"));
            }
            if resolution[a] < 2 {
                return Err(LabError::arg("each axis needs at least two nodes"));
            }
        }
        Ok(GridSpec { lo, hi, resolution })
    }

    /// The cube `[lo, hi]^d` with `m` nodes per axis.
    pub fn cube(d: usize, lo: f64, hi: f64, m: usize) -> Result<Self> {
        Self::new(alloc::vec![lo; d], alloc::vec![hi; d], alloc::vec![m; d])
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.resolution[axis] - 1) as f64
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.resolution[axis + 1..].iter().product()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let d = self.dims();
        let mut idx = alloc::vec![0; d];
        for a in (0..d).rev() {
            idx[a] = flat % self.resolution[a];
            flat /= self.resolution[a];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.resolution).fold(0, |acc, (i, r)| acc * r + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.lo[a] + i as f64 * self.spacing(a))
            .collect()
    }

    /// At least one node away from every face.
    pub fn is_interior(&self, flat: usize) -> bool {
        self.multi_index(flat)
            .iter()
            .zip(&self.resolution)
            .all(|(&i, &r)| i >= 1 && i + 1 < r)
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.is_interior(i))
    }
}

/// A scalar field on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::Dimension {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        GridFunction { grid, values }
    }

    pub fn dims(&self) -> usize {
        self.grid.dims()
    }

    pub fn spacing(&self) -> Vec<f64> {
        (0..self.dims()).map(|a| self.grid.spacing(a)).collect()
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()))
    }

    fn check_interior(&self, node: usize) -> Result<()> {
        if node >= self.values.len() || !self.grid.is_interior(node) {
            return Err(LabError::arg("stencils need a node at least one step from every face"));
        }
        Ok(())
    }

    /// Central second differences; exact on quadratics.
    pub fn hessian(&self, node: usize) -> Result<SymmetricMatrix> {
        self.check_interior(node)?;
        Ok(self.hessian_unchecked(node))
    }

    pub(crate) fn hessian_unchecked(&self, node: usize) -> SymmetricMatrix {
        let d = self.dims();
        let u = &self.values;
        let u0 = u[node];
        SymmetricMatrix::from_upper(d, |a, b| {
            let sa = self.grid.stride(a);
            let ha = self.grid.spacing(a);
            if a == b {
                (u[node + sa] - 2.0 * u0 + u[node - sa]) / (ha * ha)
            } else {
                let sb = self.grid.stride(b);
                let hb = self.grid.spacing(b);
                (u[node + sa + sb] - u[node + sa - sb] - u[node - sa + sb] + u[node - sa - sb]) / (4.0 * ha * hb)
            }
        })
    }

    /// Central first differences.
    pub fn gradient(&self, node: usize) -> Result<Vec<f64>> {
        self.check_interior(node)?;
        Ok((0..self.dims())
            .map(|a| {
                let s = self.grid.stride(a);
                (self.values[node + s] - self.values[node - s]) / (2.0 * self.grid.spacing(a))
            })
            .collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.dims();
        let mut out = Vec::with_capacity(16 + 24 * d + 8 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(d as u32).to_le_bytes());
        out.extend_from_slice(&1u32.to_le_bytes());
        for &r in &self.grid.resolution {
            out.extend_from_slice(&(r as u64).to_le_bytes());
        }
        for a in 0..d {
            out.extend_from_slice(&self.grid.lo[a].to_le_bytes());
            out.extend_from_slice(&self.grid.hi[a].to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| LabError::arg(alloc::format!("grid container: {m}"));
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated"))?;
            pos += n;
            Ok(s)
        };
        if take(8)? != MAGIC {
            return Err(bad("bad magic"));
        }
        let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap());
        let d = u32_at(take(4)?) as usize;
        if u32_at(take(4)?) != 1 {
            return Err(bad("only row-major data is supported"));
        }
        if d == 0 || d > 16 {
            return Err(bad("unsupported number of axes"));
        }
        let mut resolution = Vec::with_capacity(d);
        for _ in 0..d {
            let r = u64::from_le_bytes(take(8)?.try_into().unwrap());
            resolution.push(usize::try_from(r).map_err(|_| bad("resolution overflow"))?);
        }
        let (mut lo, mut hi) = (Vec::with_capacity(d), Vec::with_capacity(d));
        for _ in 0..d {
            lo.push(f64::from_le_bytes(take(8)?.try_into().unwrap()));
            hi.push(f64::from_le_bytes(take(8)?.try_into().unwrap()));
        }
        let grid = GridSpec::new(lo, hi, resolution)?;
        let count = grid.len();
        let raw = take(count.checked_mul(8).ok_or_else(|| bad("size overflow"))?)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if pos != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        GridFunction::new(grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid3() -> GridSpec {
        GridSpec::new(
            alloc::vec![-1.0, 0.0, -0.5],
            alloc::vec![1.0, 2.0, 0.5],
            alloc::vec![5, 7, 6],
        )
        .unwrap()
    }

    #[test]
    fn indexing_round_trips() {
        let g = grid3();
        assert_eq!(g.len(), 210);
        for i in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
        }
        assert_eq!(g.stride(2), 1);
        assert_eq!(g.stride(0), 42);
        assert_eq!(g.point(0), [-1.0, 0.0, -0.5]);
        assert_eq!(g.point(209), [1.0, 2.0, 0.5]);
        assert_eq!(g.interior().count(), 3 * 5 * 4);
    }

    #[test]
    fn stencils_are_exact_on_quadratics() {
        let g = grid3();
        let u = GridFunction::from_fn(g.clone(), |x| {
            x[0] * x[0] + x[0] * x[1] - 0.5 * x[2] * x[2] + 3.0 * x[1]
        });
        for node in g.interior() {
            let h = u.hessian(node).unwrap();
            let want = [[2.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]];
            for (a, row) in want.iter().enumerate() {
                for (b, w) in row.iter().enumerate() {
                    assert!((h.get(a, b) - w).abs() < 1e-11);
                }
            }
            let x = g.point(node);
            let grad = u.gradient(node).unwrap();
            assert!((grad[0] - (2.0 * x[0] + x[1])).abs() < 1e-11);
        }
        assert!(u.hessian(0).is_err());
    }

    #[test]
    fn quartic_matches_taylor_remainder() {
        let h = 0.1;
        let g = GridSpec::cube(1, 0.0, 2.0, 21).unwrap();
        let u = GridFunction::from_fn(g.clone(), |x| libm::pow(x[0], 4.0));
        let node = 10; // x = 1
        assert!((g.point(node)[0] - 1.0).abs() < 1e-15);
        // (u(x+h) − 2u(x) + u(x−h))/h² = 12x² + 2h²
        let v = u.hessian(node).unwrap().get(0, 0);
        assert!((v - (12.0 + 2.0 * h * h)).abs() < 1e-10);
    }

    #[test]
    fn byte_container_round_trips() {
        let u = GridFunction::from_fn(grid3(), |x| x[0] - 2.0 * x[1] * x[2]);
        let bytes = u.to_bytes();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(bytes.len(), 16 + 24 * 3 + 8 * 210);
        assert_eq!(GridFunction::from_bytes(&bytes).unwrap(), u);
        assert!(GridFunction::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(GridFunction::from_bytes(&bad).is_err());
    }
}
