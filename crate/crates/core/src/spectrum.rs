//! Eigenvalue vectors and symmetric matrices.

use alloc::vec::Vec;
use core::ops::Deref;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// An eigenvalue vector `λ ∈ ℝⁿ`, `n ≥ 2`, every entry finite.
///
/// Construction does not sort; call [`Spectrum::sorted`] when an operation
/// assumes `λ₁ ≥ … ≥ λₙ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(LabError::arg("a spectrum needs at least two entries"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::arg("spectrum entries must be finite"));
        }
        Ok(Spectrum(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Descending order; equal entries keep their relative order.
    pub fn sorted(&self) -> Self {
        let mut v = self.0.clone();
        sort_descending(&mut v);
        Spectrum(v)
    }

    pub fn is_sorted_descending(&self) -> bool {
        self.0.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn scaled(&self, t: f64) -> Self {
        Spectrum(self.0.iter().map(|v| v * t).collect())
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Deref for Spectrum {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn sort_descending(v: &mut [f64]) {
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
}

/// Dense real symmetric matrix, e.g. `D²u` at a grid node.
///
/// Every constructor writes the lower triangle from the upper one, so the
/// stored matrix is exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    /// Builds from a function evaluated on the upper triangle `i ≤ j`.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymmetricMatrix(m)
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrize(a: &DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(LabError::Dimension {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        Ok(Self::from_upper(a.nrows(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)])))
    }

    /// Rejects matrices that are not exactly symmetric.
    pub fn try_from_matrix(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(LabError::Dimension {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let n = a.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if a[(i, j)] != a[(j, i)] {
                    return Err(LabError::arg("matrix is not symmetric"));
                }
            }
        }
        Ok(SymmetricMatrix(a))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_upper(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_upper(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_upper(n, |_, _| 0.0)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn shifted(&self, a: f64) -> Self {
        let n = self.n();
        Self::from_upper(n, |i, j| self.0[(i, j)] + if i == j { a } else { 0.0 })
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// `Q A Qᵀ`, symmetrized.
    pub fn conjugated(&self, q: &DMatrix<f64>) -> Self {
        let m = q * &self.0 * q.transpose();
        Self::from_upper(self.n(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    /// Eigenvalues sorted descending.
    pub fn eigenvalues(&self) -> Spectrum {
        let mut v: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        sort_descending(&mut v);
        Spectrum(v)
    }

    /// Eigenvalues (descending) and the matching orthonormal eigenvectors as
    /// the columns of the returned matrix.
    pub fn eigen(&self) -> (Spectrum, DMatrix<f64>) {
        let eig = self.0.clone().symmetric_eigen();
        let n = self.n();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(core::cmp::Ordering::Equal)
        });
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        (Spectrum(values), vectors)
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.0
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_rejects_short_and_nonfinite() {
        assert!(Spectrum::new(alloc::vec![1.0]).is_err());
        assert!(Spectrum::new(alloc::vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn sorted_is_descending_and_stable() {
        let s = Spectrum::new(alloc::vec![1.0, 3.0, -2.0, 3.0]).unwrap().sorted();
        assert_eq!(s.values(), &[3.0, 3.0, 1.0, -2.0]);
        assert!(s.is_sorted_descending());
    }

    #[test]
    fn from_upper_is_exactly_symmetric() {
        let a = SymmetricMatrix::from_upper(4, |i, j| (i * 7 + j) as f64 * 0.1);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a.get(i, j), a.get(j, i));
            }
        }
    }

    #[test]
    fn try_from_matrix_rejects_asymmetry() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.5, 1.0]);
        assert!(SymmetricMatrix::try_from_matrix(m).is_err());
    }

    #[test]
    fn eigen_pairs_reconstruct() {
        let a = SymmetricMatrix::from_upper(3, |i, j| if i == j { 2.0 + i as f64 } else { 0.3 });
        let (vals, q) = a.eigen();
        assert!(vals.is_sorted_descending());
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(vals.values()));
        let back = &q * d * q.transpose();
        assert!((back - a.as_matrix()).abs().max() < 1e-12);
    }
}
