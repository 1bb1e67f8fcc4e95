//! Sparse direct solves through faer's supernodal LU.

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use hessianlab_core::solver::LinearSolver;
use hessianlab_core::{LabError, Result};

/// Sparse LU with partial pivoting; duplicate triplets are summed.
#[derive(Debug, Default, Clone, Copy)]
pub struct FaerLu;

impl LinearSolver for FaerLu {
    fn solve(&mut self, n: usize, triplets: &[(usize, usize, f64)], rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != n {
            return Err(LabError::Dimension {
                expected: n,
                found: rhs.len(),
            });
        }
        let entries: Vec<Triplet<usize, usize, f64>> =
            triplets.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &entries)
            .map_err(|e| LabError::LinearAlgebra(format!("assembling sparse matrix: {e:?}")))?;
        let lu = a
            .sp_lu()
            .map_err(|e| LabError::LinearAlgebra(format!("sparse LU: {e:?}")))?;
        let b = faer::col::Col::from_fn(n, |i| rhs[i]);
        let x = lu.solve(&b);
        let out: Vec<f64> = (0..n).map(|i| x[i]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(LabError::LinearAlgebra("sparse LU produced non-finite values".into()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hessianlab_core::solver::DenseLu;

    #[test]
    fn matches_dense_and_sums_duplicates() {
        let t = [
            (0, 0, 2.0),
            (0, 0, 2.0),
            (0, 1, 1.0),
            (1, 0, -1.0),
            (1, 1, 3.0),
            (2, 2, 0.5),
            (1, 2, 1.0),
        ];
        let b = [1.0, 2.0, 3.0];
        let x = FaerLu.solve(3, &t, &b).unwrap();
        let y = DenseLu.solve(3, &t, &b).unwrap();
        for (a, c) in x.iter().zip(&y) {
            assert!((a - c).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_an_error() {
        let t = [(0, 0, 1.0), (1, 0, 1.0)];
        assert!(FaerLu.solve(2, &t, &[1.0, 1.0]).is_err());
    }
}
