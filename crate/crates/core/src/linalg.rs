//! Small dense helpers: random test matrices and the Schur-complement bound
//! behind the concavity campaign.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::spectrum::SymmetricMatrix;

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `R`'s diagonal folded into `Q`).
pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Symmetric matrix with independent `N(0, scale²)` upper-triangle entries.
pub fn random_symmetric(rng: &mut impl Rng, n: usize, scale: f64) -> SymmetricMatrix {
    SymmetricMatrix::from_upper(n, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

/// Sharpest `ρ` with `ξᵀLξ ≥ (d/ρ) ξ₁²` for all `ξ`, i.e. `ρ = d·(L⁻¹)₁₁`
/// computed through the Schur complement of the trailing block.
#[derive(Debug, Clone, PartialEq)]
pub enum SchurBound {
    /// Trailing block positive definite; `ratio = d / (L₁₁ − L₁₂L₂₂⁻¹L₂₁)`
    /// and `direction` (with `ξ₁ = 1`) attains the minimum of `ξᵀLξ`.
    Ratio { ratio: f64, direction: Vec<f64> },
    /// Trailing block not positive definite: `direction` has `ξ₁ = 0` and
    /// `ξᵀLξ ≤ 0`.
    Indefinite { direction: Vec<f64> },
}

pub fn schur_bound(l: &DMatrix<f64>, d: f64) -> SchurBound {
    let n = l.nrows();
    let l22 = l.view((1, 1), (n - 1, n - 1)).into_owned();
    let l21: DVector<f64> = l.view((1, 0), (n - 1, 1)).column(0).into_owned();
    // Jacobi scaling keeps the factorization well conditioned when the
    // diagonal spans many orders of magnitude.
    let scale: DVector<f64> = l22.diagonal().map(|v| if v > 0.0 { 1.0 / libm::sqrt(v) } else { 1.0 });
    let scaled = DMatrix::from_fn(n - 1, n - 1, |i, j| l22[(i, j)] * scale[i] * scale[j]);
    match Cholesky::new(scaled.clone()) {
        Some(chol) => {
            let rhs = l21.component_mul(&scale);
            let y = chol.solve(&rhs);
            let schur = l[(0, 0)] - rhs.dot(&y);
            let mut direction = Vec::with_capacity(n);
            direction.push(1.0);
            direction.extend(y.iter().zip(scale.iter()).map(|(v, s)| -v * s));
            let ratio = if schur > 0.0 { d / schur } else { f64::INFINITY };
            SchurBound::Ratio { ratio, direction }
        }
        None => {
            let eig = SymmetricEigen::new(scaled);
            let (imin, _) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
            let mut direction = Vec::with_capacity(n);
            direction.push(0.0);
            direction.extend(
                eig.eigenvectors
                    .column(imin)
                    .iter()
                    .zip(scale.iter())
                    .map(|(v, s)| v * s),
            );
            SchurBound::Indefinite { direction }
        }
    }
}

/// `ξᵀ M ξ`.
pub fn quadratic_form(m: &DMatrix<f64>, xi: &[f64]) -> f64 {
    let n = xi.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += m[(i, j)] * xi[j];
        }
        acc += xi[i] * row;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::sample_rng;

    #[test]
    fn orthogonal_is_orthogonal() {
        let mut rng = sample_rng(1, 0);
        for n in 2..7 {
            let q = random_orthogonal(&mut rng, n);
            let e = &q * q.transpose() - DMatrix::identity(n, n);
            assert!(e.abs().max() < 1e-12);
        }
    }

    #[test]
    fn schur_bound_matches_inverse_entry() {
        let l = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let inv = l.clone().try_inverse().unwrap();
        match schur_bound(&l, 1.0) {
            SchurBound::Ratio { ratio, direction } => {
                assert!((ratio - inv[(0, 0)]).abs() < 1e-12);
                // the minimizer attains the Schur complement
                assert!((quadratic_form(&l, &direction) - 1.0 / inv[(0, 0)]).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn indefinite_block_yields_negative_direction() {
        let l = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 2.0, 1.0]);
        match schur_bound(&l, 1.0) {
            SchurBound::Indefinite { direction } => {
                assert_eq!(direction[0], 0.0);
                assert!(quadratic_form(&l, &direction) < 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
