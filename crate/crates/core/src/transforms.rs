//! Quadratic-shift constants for the quotient equations `σ₃/σ_l = C₀`,
//! the rigidity cubic, and the discrete Legendre transform of
//! `u + K₁|x|²/2`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cones::{in_gamma, in_gamma_tilde};
use crate::error::{LabError, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::report::{Extremum, VerificationReport, Witness};
use crate::sampling::{sample_rng, uniform};
use crate::spectrum::SymmetricMatrix;
use crate::symfun::{sigma, sigma_matrix, sum_hessian_jet};

/// Shift `a` and level `C₀` turning `σ₃/σ_l = C₀` into
/// `σ₃(D²v) + c_l·a·σ₂(D²v) = 1` for `v = u − a|x|²/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformConstants {
    pub n: usize,
    pub l: u8,
    pub a: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
}

pub fn quotient_constants(n: usize, l: u8) -> Result<TransformConstants> {
    if n < 3 {
        return Err(LabError::arg("quotient constants need n >= 3"));
    }
    let nf = n as f64;
    let (a, c0) = match l {
        1 => (
            libm::cbrt(3.0 / (nf * (nf - 1.0) * (nf - 2.0))),
            libm::cbrt(9.0 * (nf - 1.0) * (nf - 2.0) / (8.0 * nf * nf)),
        ),
        2 => (
            libm::cbrt(12.0 / (nf * (nf - 1.0) * (nf - 2.0))),
            libm::cbrt(3.0 * (nf - 2.0) * (nf - 2.0) / (2.0 * nf * (nf - 1.0))),
        ),
        _ => return Err(LabError::arg("l must be 1 or 2")),
    };
    Ok(TransformConstants { n, l, a, c0 })
}

impl TransformConstants {
    /// `c_l`: `n−2` for `l = 1`, `(n−2)/2` for `l = 2`.
    pub fn coefficient(&self) -> f64 {
        let m = self.n as f64 - 2.0;
        if self.l == 1 {
            m
        } else {
            m / 2.0
        }
    }

    /// Relative residual of the closed-form link between `C₀` and `a`.
    pub fn level_residual(&self) -> f64 {
        let nf = self.n as f64;
        let want = if self.l == 1 {
            (nf - 1.0) * (nf - 2.0) * self.a * self.a / 2.0
        } else {
            (nf - 2.0) * self.a / 2.0
        };
        ((self.c0 - want) / self.c0).abs()
    }

    /// Residual of the constant term of the shifted expansion, which must
    /// equal `−1`.
    pub fn constant_term_residual(&self) -> f64 {
        let nf = self.n as f64;
        let cubic = nf * (nf - 1.0) * (nf - 2.0) * self.a * self.a * self.a / 6.0;
        let lower = if self.l == 1 {
            self.c0 * nf * self.a
        } else {
            self.c0 * nf * (nf - 1.0) * self.a * self.a / 2.0
        };
        (cubic - lower + 1.0).abs()
    }
}

/// `|[σ₃(A+aI) − C₀σ_l(A+aI)] − [σ₃(A) + c_l·a·σ₂(A) − 1]|`.
pub fn shift_identity_residual(a: &SymmetricMatrix, tc: &TransformConstants) -> Result<f64> {
    if a.n() != tc.n {
        return Err(LabError::Dimension {
            expected: tc.n,
            found: a.n(),
        });
    }
    let shifted = a.shifted(tc.a);
    let lhs = sigma_matrix(3, &shifted)? - tc.c0 * sigma_matrix(tc.l as usize, &shifted)?;
    let rhs = sigma_matrix(3, a)? + tc.coefficient() * tc.a * sigma_matrix(2, a)? - 1.0;
    Ok((lhs - rhs).abs())
}

/// `σ₃(A+aI)`, the scale used to judge [`shift_identity_residual`].
pub fn shift_identity_scale(a: &SymmetricMatrix, tc: &TransformConstants) -> Result<f64> {
    Ok(1.0 + sigma_matrix(3, &a.shifted(tc.a))?.abs())
}

/// Margins `σ₁(λ−a)` and `σ₂(λ−a) + c_l·a·σ₁(λ−a)` of the shifted spectrum.
pub fn admissibility_after_shift(lam_u: &[f64], tc: &TransformConstants) -> Result<(f64, f64)> {
    if lam_u.len() != tc.n {
        return Err(LabError::Dimension {
            expected: tc.n,
            found: lam_u.len(),
        });
    }
    if !in_gamma(3, lam_u) {
        return Err(LabError::pre("spectrum is not in Γ₃"));
    }
    let v: Vec<f64> = lam_u.iter().map(|x| x - tc.a).collect();
    let s1 = sigma(1, &v);
    Ok((s1, sigma(2, &v) + tc.coefficient() * tc.a * s1))
}

/// Radially rescales a `Γ₃` direction onto `σ₃/σ_l = C₀`, using that the
/// quotient is homogeneous of degree `3 − l`.
pub fn project_to_level(dir: &[f64], tc: &TransformConstants) -> Option<Vec<f64>> {
    let q = sigma(3, dir) / sigma(tc.l as usize, dir);
    if !(q > 0.0 && q.is_finite()) {
        return None;
    }
    let t = libm::pow(tc.c0 / q, 1.0 / (3 - tc.l) as f64);
    Some(dir.iter().map(|x| x * t).collect())
}

/// Level-set campaign: directions drawn from `[−1, 1]ⁿ` boxes shifted
/// upward (rejecting those outside `Γ₃`), projected onto the quotient level.
/// The report's constant is the smallest margin seen.
pub fn admissibility_campaign(
    tc: &TransformConstants,
    count: u64,
    seed: u64,
    range: core::ops::Range<u64>,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::empty("admissibility-after-shift", Extremum::Min);
    let n = tc.n;
    for i in range.start..range.end.min(count) {
        let mut rng = sample_rng(seed, i);
        let mut found = None;
        for _ in 0..100_000 {
            let shift = uniform(&mut rng, 0.0, 3.0);
            let spread = libm::exp(uniform(&mut rng, -3.0, 3.0));
            let dir: Vec<f64> = (0..n).map(|_| shift + spread * uniform(&mut rng, -1.0, 1.0)).collect();
            if in_gamma(3, &dir) {
                if let Some(lam) = project_to_level(&dir, tc) {
                    if in_gamma(3, &lam) {
                        found = Some(lam);
                        break;
                    }
                }
            }
        }
        let lam = found.ok_or_else(|| LabError::Sampling(alloc::format!("no level-set point for sample {i}")))?;
        let (m1, m2) = admissibility_after_shift(&lam, tc)?;
        let margin = m1.min(m2);
        report.record(i, margin, margin, None, || Witness {
            sample_index: i,
            spectrum: lam.clone(),
            auxiliary: alloc::vec![m1, m2],
        });
    }
    Ok(report)
}

/// `g(K) = −n(n−1)(n−2)K³/6 + n(n−1)K²/2`.
pub fn rigidity_cubic(n: usize, k: f64) -> f64 {
    let nf = n as f64;
    -nf * (nf - 1.0) * (nf - 2.0) * k * k * k / 6.0 + nf * (nf - 1.0) * k * k / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidityData {
    pub n: usize,
    pub c0: f64,
    #[serde(rename = "K0")]
    pub k0: Option<f64>,
    /// `2n(n−1)/(3(n−2)²)`, the maximum of the cubic on `(0, 2/(n−2)]`.
    pub threshold: f64,
}

impl RigidityData {
    /// Coefficients `(A_{n−2}, A_{n−1}, A_n)` of `σ_{n−2}, σ_{n−1}, σ_n` in
    /// the transformed equation at shift `K`.
    pub fn coefficients(&self, k: f64) -> (f64, f64, f64) {
        let nf = self.n as f64;
        (
            1.0 - (nf - 2.0) * k,
            (nf - 1.0) * (nf - 2.0) * k * k / 2.0 - (nf - 1.0) * k,
            rigidity_cubic(self.n, k) - self.c0,
        )
    }
}

/// Whether `c₀` exceeds `g(1/(n−2) − δ)`, the lower-bound alternative for
/// solutions with `D²u ≥ (−1/(n−2) + δ)I`.
pub fn exceeds_shifted_cubic(n: usize, c0: f64, delta: f64) -> bool {
    c0 > rigidity_cubic(n, 1.0 / (n as f64 - 2.0) - delta)
}

pub fn rigidity_root(n: usize, c0: f64) -> Result<RigidityData> {
    if n < 3 {
        return Err(LabError::arg("the rigidity cubic needs n >= 3"));
    }
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(LabError::arg("c0 must be positive"));
    }
    let nf = n as f64;
    let threshold = 2.0 * nf * (nf - 1.0) / (3.0 * (nf - 2.0) * (nf - 2.0));
    let mut data = RigidityData {
        n,
        c0,
        k0: None,
        threshold,
    };
    if c0 > threshold {
        return Ok(data);
    }
    let (mut lo, mut hi) = (1e-12, 2.0 / (nf - 2.0));
    if rigidity_cubic(n, hi) <= c0 {
        data.k0 = Some(hi);
        return Ok(data);
    }
    // g is increasing on the bracket; stop when the bracket stops shrinking
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rigidity_cubic(n, mid) < c0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    data.k0 = Some(0.5 * (lo + hi));
    Ok(data)
}

fn interior_box(u: &GridFunction, k1: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = u.dims();
    let mut lo = alloc::vec![f64::INFINITY; d];
    let mut hi = alloc::vec![f64::NEG_INFINITY; d];
    let mut any = false;
    for node in u.grid.interior() {
        any = true;
        let x = u.grid.point(node);
        let g = u.gradient(node)?;
        for a in 0..d {
            let y = g[a] + k1 * x[a];
            lo[a] = lo[a].min(y);
            hi[a] = hi[a].max(y);
        }
    }
    if !any {
        return Err(LabError::arg("grid has no interior nodes"));
    }
    for a in 0..d {
        if hi[a] <= lo[a] {
            let pad = 1e-9 * (1.0 + lo[a].abs());
            lo[a] -= pad;
            hi[a] += pad;
        }
    }
    Ok((lo, hi))
}

/// `max_x ⟨x, y⟩ − f(x)` over the nodes of `f`, for every node `y` of `target`.
pub fn discrete_conjugate(f: &GridFunction, target: GridSpec) -> Result<GridFunction> {
    if target.dims() != f.dims() {
        return Err(LabError::Dimension {
            expected: f.dims(),
            found: target.dims(),
        });
    }
    let points: Vec<Vec<f64>> = (0..f.grid.len()).map(|i| f.grid.point(i)).collect();
    Ok(GridFunction::from_fn(target, |y| {
        points
            .iter()
            .zip(&f.values)
            .map(|(x, fx)| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() - fx)
            .fold(f64::NEG_INFINITY, f64::max)
    }))
}

/// `ũ = u + K₁|x|²/2` on the grid of `u`.
pub fn lifted(u: &GridFunction, k1: f64) -> GridFunction {
    let grid = u.grid.clone();
    let values = (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            u.values[i] + 0.5 * k1 * x.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    GridFunction { grid, values }
}

/// Discrete Legendre transform `w` of `ũ = u + K₁|x|²/2`.
///
/// `ũ` must be strictly convex at every interior node (smallest discrete
/// Hessian eigenvalue of `u` above `−K₁`). The output grid is the bounding
/// box of `y = Du + K₁x` over interior nodes, at the input resolution; the
/// supremum runs over all input nodes.
pub fn legendre_lewy(u: &GridFunction, k1: f64) -> Result<GridFunction> {
    let mut worst: Option<(usize, f64)> = None;
    for node in u.grid.interior() {
        let m = u.hessian(node)?.eigenvalues().min() + k1;
        if worst.is_none_or(|(_, w)| m < w) {
            worst = Some((node, m));
        }
    }
    let (node, m) = worst.ok_or_else(|| LabError::arg("grid has no interior nodes"))?;
    if !(m > 0.0) {
        return Err(LabError::Precondition(alloc::format!(
            "u + K1|x|^2/2 is not strictly convex: node {node} at {:?} has smallest Hessian eigenvalue {m}",
            u.grid.point(node)
        )));
    }
    let (lo, hi) = interior_box(u, k1)?;
    let target = GridSpec::new(lo, hi, u.grid.resolution.clone())?;
    discrete_conjugate(&lifted(u, k1), target)
}

/// `max |w*(x) − ũ(x)|` over interior nodes of `u`, where `w*` is the
/// discrete conjugate of `w` evaluated back on the grid of `u`.
pub fn round_trip_error(u: &GridFunction, k1: f64, w: &GridFunction) -> Result<f64> {
    let back = discrete_conjugate(w, u.grid.clone())?;
    let lift = lifted(u, k1);
    Ok(u.grid
        .interior()
        .map(|i| (back.values[i] - lift.values[i]).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioField {
    /// Per node `min_i F^{ii}(K₁+λ_i)²/(σ₂+σ₁)`; `NaN` off the interior and
    /// at excluded nodes.
    pub min: GridFunction,
    pub max: GridFunction,
    pub global_min: f64,
    pub global_max: f64,
    /// Interior nodes whose Hessian spectrum is outside `Γ̃₃`.
    pub excluded: usize,
}

/// The ellipticity ratio `F^{ii}(K₁+λ_i)²/(σ₂+σ₁)` for `F = σ₃ + σ₂`, per
/// interior node.
pub fn ellipticity_ratio_field(u: &GridFunction, k1: f64) -> Result<RatioField> {
    if u.dims() < 3 {
        return Err(LabError::arg("the ratio field needs at least three dimensions"));
    }
    let mut min = GridFunction::new(u.grid.clone(), alloc::vec![f64::NAN; u.grid.len()])?;
    let mut max = min.clone();
    let (mut gmin, mut gmax, mut excluded) = (f64::INFINITY, f64::NEG_INFINITY, 0);
    for node in u.grid.interior() {
        let lam = u.hessian(node)?.eigenvalues();
        if !in_gamma_tilde(3, &lam) {
            excluded += 1;
            continue;
        }
        let (lo, hi) = node_ratio(&lam, k1)?;
        min.values[node] = lo;
        max.values[node] = hi;
        gmin = gmin.min(lo);
        gmax = gmax.max(hi);
    }
    Ok(RatioField {
        min,
        max,
        global_min: gmin,
        global_max: gmax,
        excluded,
    })
}

/// `(min_i, max_i)` of the ellipticity ratio at one spectrum.
pub fn node_ratio(lam: &[f64], k1: f64) -> Result<(f64, f64)> {
    let jet = sum_hessian_jet(3, lam)?;
    let s = sigma(2, lam) + sigma(1, lam);
    Ok((0..lam.len())
        .map(|i| jet.gradient[i] * (k1 + lam[i]) * (k1 + lam[i]) / s)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r), b.max(r))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_for_three_dimensions() {
        let c = quotient_constants(3, 1).unwrap();
        assert!((c.a - 0.7937005).abs() < 1e-6);
        assert!((c.c0 - 0.6299605).abs() < 1e-6);
        assert!((c.c0 - c.a * c.a).abs() < 1e-14);
        let c = quotient_constants(3, 2).unwrap();
        assert!((c.a - 1.2599210).abs() < 1e-6);
        assert!((c.c0 - c.a / 2.0).abs() < 1e-14);
        assert!(quotient_constants(2, 1).is_err());
        assert!(quotient_constants(4, 3).is_err());
    }

    #[test]
    fn constant_term_identity_holds() {
        for n in 3..=50 {
            for l in [1, 2] {
                let c = quotient_constants(n, l).unwrap();
                assert!(c.constant_term_residual() <= 1e-13, "n={n} l={l}");
                assert!(c.level_residual() <= 1e-13, "n={n} l={l}");
            }
        }
    }

    #[test]
    fn shift_identity_at_zero_and_identity() {
        let tc = quotient_constants(3, 1).unwrap();
        assert!(shift_identity_residual(&SymmetricMatrix::zeros(3), &tc).unwrap() < 1e-14);
        for n in 3..8 {
            for l in [1, 2] {
                let tc = quotient_constants(n, l).unwrap();
                assert!(shift_identity_residual(&SymmetricMatrix::identity(n), &tc).unwrap() <= 1e-12);
            }
        }
        assert!(shift_identity_residual(&SymmetricMatrix::zeros(4), &tc).is_err());
    }

    #[test]
    fn isotropic_admissibility() {
        let tc = quotient_constants(3, 1).unwrap();
        let t = libm::sqrt(3.0 * tc.c0);
        assert!((t - 1.3747).abs() < 1e-4);
        let lam = project_to_level(&[1.0, 1.0, 1.0], &tc).unwrap();
        assert!((lam[0] - t).abs() < 1e-12);
        let (m1, m2) = admissibility_after_shift(&lam, &tc).unwrap();
        assert!((m1 - 3.0 * (t - tc.a)).abs() < 1e-12);
        assert!((m1 - 1.743).abs() < 1e-3);
        assert!(m2 > 0.0);
    }

    #[test]
    fn rigidity_examples() {
        let r = rigidity_root(3, 2.0).unwrap();
        assert!((r.k0.unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(r.threshold, 4.0);
        let r = rigidity_root(3, 4.0).unwrap();
        assert!((r.k0.unwrap() - 2.0).abs() < 1e-10);
        let r = rigidity_root(3, 5.0).unwrap();
        assert!(r.k0.is_none());
        assert_eq!(r.threshold, 4.0);
        assert!(rigidity_root(3, 0.0).is_err());
        // the σ_n coefficient vanishes at the root and σ_{n−1}'s is ≤ 0
        let r = rigidity_root(5, 1.3).unwrap();
        let (_, a1, a0) = r.coefficients(r.k0.unwrap());
        assert!(a0.abs() < 1e-12 && a1 <= 0.0);
    }

    #[test]
    fn legendre_of_zero_is_half_square() {
        let g = GridSpec::cube(2, -1.0, 1.0, 21).unwrap();
        let u = GridFunction::from_fn(g, |_| 0.0);
        let w = legendre_lewy(&u, 1.0).unwrap();
        for i in 0..w.grid.len() {
            let y = w.grid.point(i);
            let want = 0.5 * (y[0] * y[0] + y[1] * y[1]);
            // sup over nodes with spacing h misses by at most d·h²/8
            assert!(w.values[i] <= want + 1e-12 && want - w.values[i] <= 2.0 * 0.01 / 8.0 + 1e-12);
        }
    }

    #[test]
    fn legendre_of_quadratic() {
        let c = 2.0;
        let g = GridSpec::cube(2, -1.0, 1.0, 21).unwrap();
        let u = GridFunction::from_fn(g, |x| 0.5 * c * (x[0] * x[0] + x[1] * x[1]));
        let w = legendre_lewy(&u, 1.0).unwrap();
        for i in 0..w.grid.len() {
            let y = w.grid.point(i);
            let want = (y[0] * y[0] + y[1] * y[1]) / (2.0 * (c + 1.0));
            assert!(w.values[i] <= want + 1e-12 && want - w.values[i] <= 2.0 * (c + 1.0) * 0.01 / 8.0 + 1e-12);
        }
    }

    #[test]
    fn nonconvex_lift_is_rejected() {
        let g = GridSpec::cube(2, -1.0, 1.0, 9).unwrap();
        let u = GridFunction::from_fn(g, |x| -x[0] * x[0]);
        match legendre_lewy(&u, 1.0) {
            Err(LabError::Precondition(msg)) => assert!(msg.contains("node")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ratio_field_of_unit_paraboloid() {
        let g = GridSpec::cube(3, -1.0, 1.0, 5).unwrap();
        let u = GridFunction::from_fn(g, |x| 0.5 * x.iter().map(|v| v * v).sum::<f64>());
        let r = ellipticity_ratio_field(&u, 1.0).unwrap();
        assert_eq!(r.excluded, 0);
        assert!((r.global_min - 2.0).abs() < 1e-10 && (r.global_max - 2.0).abs() < 1e-10);
        let (lo, hi) = node_ratio(&[10.0, 1.0, -0.4], 1.4).unwrap();
        assert!(lo <= 21.0 / 16.2 + 1e-12 && hi >= 21.0 / 16.2);
    }
}
