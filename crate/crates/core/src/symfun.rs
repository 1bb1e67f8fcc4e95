//! Elementary symmetric functions and the sum-Hessian operator.
//!
//! `σ_k(λ)` is evaluated as the `k`-th coefficient of `∏(1 + λ_i t)`, built up
//! one factor at a time (`O(nk)`). Conventions: `σ_0 = 1`, and `σ_k = 0` for
//! `k > n` or `k < 0`.
//!
//! Deleted functions `σ_{k;i}` and `σ_{k;ij}` are `σ_k` of the spectrum with
//! the listed entries removed, which is the same as setting them to zero.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul};

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::spectrum::SymmetricMatrix;

/// Coefficients `e_0, …, e_{k_max}` of `∏(1 + v_i t)`.
///
/// Generic so that the same recurrence certifies identities in exact integer
/// or rational arithmetic.
pub fn elementary_symmetric<T>(values: &[T], k_max: usize) -> Vec<T>
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T>,
{
    let mut e = vec![T::zero(); k_max + 1];
    e[0] = T::one();
    for (count, v) in values.iter().enumerate() {
        let top = (count + 1).min(k_max);
        for j in (1..=top).rev() {
            e[j] = e[j].clone() + v.clone() * e[j - 1].clone();
        }
    }
    e
}

/// `σ_k(λ)` with the out-of-range conventions.
pub fn sigma(k: usize, lam: &[f64]) -> f64 {
    if k > lam.len() {
        return 0.0;
    }
    elementary_symmetric(lam, k)[k]
}

/// `σ_k` with a signed order, for index arithmetic like `k - 3`.
pub(crate) fn sigma_signed(k: isize, lam: &[f64]) -> f64 {
    if k < 0 {
        0.0
    } else {
        sigma(k as usize, lam)
    }
}

/// `σ_k(A)`, the sum of all `k×k` principal minors, via the eigenvalues.
pub fn sigma_matrix(k: usize, a: &SymmetricMatrix) -> Result<f64> {
    let n = a.n();
    if k == 0 || k > n {
        return Err(LabError::arg(alloc::format!(
            "sigma_matrix needs 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    Ok(sigma(k, a.eigenvalues().values()))
}

fn validate_omit(n: usize, omit: &[usize]) -> Result<()> {
    if omit.len() > 2 {
        return Err(LabError::arg("at most two indices may be omitted"));
    }
    if let Some(&i) = omit.iter().find(|&&i| i >= n) {
        return Err(LabError::arg(alloc::format!("index {i} out of range for n = {n}")));
    }
    if omit.len() == 2 && omit[0] == omit[1] {
        return Err(LabError::arg("omitted indices must be distinct"));
    }
    Ok(())
}

fn without(lam: &[f64], omit: &[usize]) -> Vec<f64> {
    lam.iter()
        .enumerate()
        .filter(|(i, _)| !omit.contains(i))
        .map(|(_, &v)| v)
        .collect()
}

/// `σ_{k;i}` (one index) or `σ_{k;ij}` (two indices); zero-based indices.
pub fn sigma_deleted(k: usize, lam: &[f64], omit: &[usize]) -> Result<f64> {
    validate_omit(lam.len(), omit)?;
    Ok(sigma(k, &without(lam, omit)))
}

fn deleted_signed(k: isize, lam: &[f64], omit: &[usize]) -> f64 {
    sigma_signed(k, &without(lam, omit))
}

/// Value, gradient and Hessian in `λ` of an operator `σ_k + w·σ_{k-1}`.
///
/// The Hessian has zero diagonal since `σ_k` is affine in each variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorJet {
    pub k: usize,
    pub value: f64,
    pub gradient: Vec<f64>,
    #[serde(skip)]
    pub hessian: DMatrix<f64>,
}

fn check_order(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(LabError::arg(alloc::format!(
            "operator order must satisfy 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    Ok(())
}

/// Jet of `σ_k + weight·σ_{k-1}`.
pub fn weighted_jet(k: usize, weight: f64, lam: &[f64]) -> Result<OperatorJet> {
    let n = lam.len();
    check_order(k, n)?;
    let ki = k as isize;
    let value = sigma_signed(ki, lam) + weight * sigma_signed(ki - 1, lam);
    let gradient = (0..n)
        .map(|p| deleted_signed(ki - 1, lam, &[p]) + weight * deleted_signed(ki - 2, lam, &[p]))
        .collect();
    let mut hessian = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in (p + 1)..n {
            let h = deleted_signed(ki - 2, lam, &[p, q]) + weight * deleted_signed(ki - 3, lam, &[p, q]);
            hessian[(p, q)] = h;
            hessian[(q, p)] = h;
        }
    }
    Ok(OperatorJet {
        k,
        value,
        gradient,
        hessian,
    })
}

/// Jet of `S_k = σ_k + σ_{k-1}`.
pub fn sum_hessian_jet(k: usize, lam: &[f64]) -> Result<OperatorJet> {
    weighted_jet(k, 1.0, lam)
}

/// `S_k(λ)`.
pub fn sum_hessian(k: usize, lam: &[f64]) -> f64 {
    sigma_signed(k as isize, lam) + sigma_signed(k as isize - 1, lam)
}

/// `S_{k;p}(λ) = σ_{k;p} + σ_{k-1;p}`.
fn sum_hessian_deleted(k: isize, lam: &[f64], p: usize) -> f64 {
    deleted_signed(k, lam, &[p]) + deleted_signed(k - 1, lam, &[p])
}

/// Absolute residuals of the three standard identities for `S_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResiduals {
    /// `S_k = λ_p S_{k-1;p} + S_{k;p}`, one entry per `p`.
    pub expansion: Vec<f64>,
    /// `Σ_p S_{k;p} = (n-k)σ_k + (n-k+1)σ_{k-1}`.
    pub deleted_sum: f64,
    /// `Σ_p λ_p S_{k-1;p} = kσ_k + (k-1)σ_{k-1}`.
    pub euler: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.expansion
            .iter()
            .copied()
            .fold(self.deleted_sum.max(self.euler), f64::max)
    }
}

pub fn check_identities(k: usize, lam: &[f64]) -> Result<IdentityResiduals> {
    let n = lam.len();
    check_order(k, n)?;
    let ki = k as isize;
    let s_k = sum_hessian(k, lam);
    let expansion = (0..n)
        .map(|p| (s_k - (lam[p] * sum_hessian_deleted(ki - 1, lam, p) + sum_hessian_deleted(ki, lam, p))).abs())
        .collect();
    let sk = sigma_signed(ki, lam);
    let skm1 = sigma_signed(ki - 1, lam);
    let lhs7: f64 = (0..n).map(|p| sum_hessian_deleted(ki, lam, p)).sum();
    let rhs7 = (n as f64 - k as f64) * sk + (n as f64 - k as f64 + 1.0) * skm1;
    let lhs8: f64 = (0..n).map(|p| lam[p] * sum_hessian_deleted(ki - 1, lam, p)).sum();
    let rhs8 = k as f64 * sk + (k as f64 - 1.0) * skm1;
    Ok(IdentityResiduals {
        expansion,
        deleted_sum: (lhs7 - rhs7).abs(),
        euler: (lhs8 - rhs8).abs(),
    })
}

/// Gradient of `σ_k + w·σ_{k-1}` with respect to the entries of a symmetric
/// matrix, computed in its eigenframe: `Q diag(∂F/∂λ) Qᵀ`.
pub fn matrix_gradient(k: usize, weight: f64, a: &SymmetricMatrix) -> Result<(f64, DMatrix<f64>)> {
    let (lam, q) = a.eigen();
    let jet = weighted_jet(k, weight, lam.values())?;
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(jet.gradient));
    Ok((jet.value, &q * d * q.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn conventions() {
        assert_eq!(sigma(0, &[5.0, -3.0]), 1.0);
        assert_eq!(sigma(3, &[5.0, -3.0]), 0.0);
        assert_eq!(sigma_signed(-1, &[5.0, -3.0]), 0.0);
    }

    #[test]
    fn small_values() {
        assert_eq!(sigma(2, &[1.0, 1.0, 1.0]), 3.0);
        assert_eq!(sigma(3, &[1.0, 2.0, 3.0]), 6.0);
    }

    #[test]
    fn exact_integer_recurrence() {
        let v: [i128; 4] = [2, -3, 5, 7];
        let e = elementary_symmetric(&v, 4);
        assert_eq!(e, alloc::vec![1, 11, 17, -107, -210]);
    }

    #[test]
    fn deleted_examples() {
        let lam = [10.0, 1.0, -0.4];
        assert_relative_eq!(sigma_deleted(2, &lam, &[0]).unwrap(), -0.4);
        assert_eq!(sigma_deleted(1, &[2.0, 3.0, 7.0], &[0, 1]).unwrap(), 7.0);
        for i in 0..3 {
            assert_eq!(sigma_deleted(3, &lam, &[i]).unwrap(), 0.0);
        }
    }

    #[test]
    fn deleted_rejects_bad_indices() {
        let lam = [1.0, 2.0, 3.0];
        assert!(sigma_deleted(1, &lam, &[1, 1]).is_err());
        assert!(sigma_deleted(1, &lam, &[3]).is_err());
        assert!(sigma_deleted(1, &lam, &[0, 1, 2]).is_err());
    }

    #[test]
    fn jet_examples() {
        let ones = sum_hessian_jet(3, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(ones.value, 4.0);
        let j = sum_hessian_jet(3, &[10.0, 1.0, -0.4]).unwrap();
        assert_relative_eq!(j.value, 1.6, epsilon = 1e-12);
        assert_relative_eq!(j.gradient[0], 0.2, epsilon = 1e-12);
        assert_relative_eq!(j.gradient[1], 5.6, epsilon = 1e-12);
        assert_relative_eq!(j.gradient[2], 21.0, epsilon = 1e-12);
        for p in 0..3 {
            assert_eq!(j.hessian[(p, p)], 0.0);
        }
    }

    #[test]
    fn jet_rejects_bad_order() {
        assert!(sum_hessian_jet(0, &[1.0, 2.0]).is_err());
        assert!(sum_hessian_jet(3, &[1.0, 2.0]).is_err());
        let a = SymmetricMatrix::identity(3);
        assert!(sigma_matrix(4, &a).is_err());
        assert!(sigma_matrix(0, &a).is_err());
    }

    #[test]
    fn sigma_matrix_examples() {
        let a = SymmetricMatrix::identity(3);
        assert_relative_eq!(sigma_matrix(3, &a).unwrap(), 1.0, epsilon = 1e-14);
        let b = SymmetricMatrix::from_upper(3, |i, j| (i + 2 * j) as f64 - 1.5);
        assert_relative_eq!(sigma_matrix(1, &b).unwrap(), b.trace(), epsilon = 1e-12);
    }

    #[test]
    fn identity_examples() {
        let r = check_identities(3, &[0.3, -1.7, 2.2]).unwrap();
        assert!(r.deleted_sum < 1e-14);
        // 2σ₂ + σ₁ = 9 = Σ λ_p S_{1;p} at λ = (1,1,1)
        let r = check_identities(2, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.euler, 0.0);
        let r = check_identities(3, &[0.0; 5]).unwrap();
        assert_eq!(r.max(), 0.0);
    }

    #[test]
    fn matrix_gradient_of_diagonal_is_diagonal_gradient() {
        let a = SymmetricMatrix::diagonal(&[2.0, 1.0, 0.5]);
        let (v, g) = matrix_gradient(3, 1.0, &a).unwrap();
        assert_relative_eq!(v, 4.5, epsilon = 1e-12);
        let jet = sum_hessian_jet(3, &[2.0, 1.0, 0.5]).unwrap();
        for i in 0..3 {
            assert_relative_eq!(g[(i, i)], jet.gradient[i], epsilon = 1e-12);
        }
    }
}
