//! Gårding cones `Γ_k`, the tilde cones `Γ̃_k = Γ_{k−1} ∩ {S_k > 0}`, and
//! randomized probes of their convexity and of ellipticity.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::report::{Extremum, VerificationReport, Witness};
use crate::sampling::{draw_cone_member, sample_rng};
use crate::symfun::{elementary_symmetric, sum_hessian_jet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeMembership {
    /// `in_gamma[k-1]` is membership in `Γ_k`, `k = 1..=n`.
    pub in_gamma: Vec<bool>,
    /// `in_gamma_tilde[k-1]` is membership in `Γ̃_k`.
    pub in_gamma_tilde: Vec<bool>,
    /// `σ_0, …, σ_n`.
    pub sigmas: Vec<f64>,
    pub min_eigen: f64,
    /// `λ_min + K`; nonnegative when the spectrum is `K`-semi-convex.
    pub semiconvex_margin: f64,
}

impl ConeMembership {
    pub fn gamma(&self, k: usize) -> bool {
        k == 0 || self.in_gamma[k - 1]
    }

    pub fn gamma_tilde(&self, k: usize) -> bool {
        self.in_gamma_tilde[k - 1]
    }

    pub fn semiconvex(&self) -> bool {
        self.semiconvex_margin >= 0.0
    }
}

pub fn classify(lam: &[f64], semiconvexity: f64) -> Result<ConeMembership> {
    if !(semiconvexity >= 0.0) {
        return Err(LabError::arg("K must be nonnegative"));
    }
    let n = lam.len();
    let sigmas = elementary_symmetric(lam, n);
    let mut in_gamma = Vec::with_capacity(n);
    let mut inside = true;
    for s in &sigmas[1..] {
        inside &= *s > 0.0;
        in_gamma.push(inside);
    }
    let in_gamma_tilde = (1..=n)
        .map(|k| (k == 1 || in_gamma[k - 2]) && sigmas[k] + sigmas[k - 1] > 0.0)
        .collect();
    let min_eigen = lam.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ConeMembership {
        in_gamma,
        in_gamma_tilde,
        sigmas,
        min_eigen,
        semiconvex_margin: min_eigen + semiconvexity,
    })
}

/// `λ ∈ Γ_k`.
pub fn in_gamma(k: usize, lam: &[f64]) -> bool {
    elementary_symmetric(lam, k)[1..].iter().all(|s| *s > 0.0)
}

/// `λ ∈ Γ_{k−1}` and `σ_k + w σ_{k−1} > 0`; `w = 1` gives `Γ̃_k`.
pub fn in_weighted_tilde(k: usize, weight: f64, lam: &[f64]) -> bool {
    if k == 0 || k > lam.len() {
        return false;
    }
    let s = elementary_symmetric(lam, k);
    s[1..k].iter().all(|v| *v > 0.0) && s[k] + weight * s[k - 1] > 0.0
}

/// `λ ∈ Γ̃_k`.
pub fn in_gamma_tilde(k: usize, lam: &[f64]) -> bool {
    in_weighted_tilde(k, 1.0, lam)
}

/// Signed distance-like slack for `Γ̃_k`: the smallest of
/// `σ_j/(1+‖λ‖_∞)^j`, `j < k`, and `S_k/(1+‖λ‖_∞)^k`.
pub fn tilde_margin(k: usize, lam: &[f64]) -> f64 {
    let s = elementary_symmetric(lam, k);
    let scale = 1.0 + lam.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let mut margin = f64::INFINITY;
    let mut p = 1.0;
    for sj in s.iter().take(k).skip(1) {
        p *= scale;
        margin = margin.min(sj / p);
    }
    margin.min((s[k] + s[k - 1]) / (p * scale))
}

/// `min_p S_k^{pp}(λ)`.
pub fn ellipticity_check(k: usize, lam: &[f64]) -> Result<f64> {
    if k == 0 || k > lam.len() {
        return Err(LabError::arg("k must satisfy 1 <= k <= n"));
    }
    if !in_gamma_tilde(k, lam) {
        return Err(LabError::pre("spectrum is not in the tilde cone"));
    }
    let jet = sum_hessian_jet(k, lam)?;
    Ok(jet.gradient.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Segment parameters tested by the convexity probe: `t = i/10`, `i = 1..9`,
/// plus the midpoint evaluated as `(a+b)/2`.
pub fn segment_points(a: &[f64], b: &[f64]) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = (1..10)
        .map(|i| {
            let t = i as f64 / 10.0;
            a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect()
        })
        .collect();
    pts.push(a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect());
    pts
}

/// Worst `Γ̃_k` slack over the tested segment points between `a` and `b`.
pub fn segment_margin(k: usize, a: &[f64], b: &[f64]) -> f64 {
    segment_points(a, b)
        .iter()
        .map(|p| {
            let m = tilde_margin(k, p);
            // strict membership decides the sign; the slack only ranks cases
            if in_gamma_tilde(k, p) {
                m.max(0.0)
            } else {
                m.min(-f64::MIN_POSITIVE)
            }
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityProbe {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "K")]
    pub semiconvexity: f64,
    pub samples: u64,
    pub seed: u64,
    pub max_tries: u32,
}

impl ConvexityProbe {
    pub fn new(n: usize, k: usize, samples: u64, seed: u64) -> Self {
        ConvexityProbe {
            n,
            k,
            semiconvexity: 1.0,
            samples,
            seed,
            max_tries: 100_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(LabError::arg("samples must be at least 1"));
        }
        if self.n < 2 || self.k == 0 || self.k > self.n {
            return Err(LabError::arg("need n >= 2 and 1 <= k <= n"));
        }
        if !(self.semiconvexity >= 0.0) {
            return Err(LabError::arg("K must be nonnegative"));
        }
        Ok(())
    }

    /// Evaluates pairs `range`; campaigns split the index range across workers.
    pub fn run_range(&self, range: core::ops::Range<u64>) -> Result<VerificationReport> {
        self.validate()?;
        let mut report = VerificationReport::empty("convexity", Extremum::Min);
        report.exploratory = self.k != 3;
        for i in range {
            let mut rng = sample_rng(self.seed, i);
            let a = draw_cone_member(&mut rng, self.n, self.k, self.semiconvexity, self.max_tries)?;
            let b = draw_cone_member(&mut rng, self.n, self.k, self.semiconvexity, self.max_tries)?;
            let margin = segment_margin(self.k, &a, &b);
            let ell = ellipticity_check(self.k, &a)?.min(ellipticity_check(self.k, &b)?);
            report.record(i, margin, ell, None, || Witness {
                sample_index: i,
                spectrum: a.clone(),
                auxiliary: b.clone(),
            });
        }
        Ok(report)
    }

    pub fn run(&self) -> Result<VerificationReport> {
        self.run_range(0..self.samples)
    }
}

/// Convexity probe over `samples` random pairs. The report's constant is the
/// smallest `min_p S_k^{pp}` seen at the endpoints.
pub fn convexity_probe(n: usize, k: usize, samples: u64, seed: u64) -> Result<VerificationReport> {
    ConvexityProbe::new(n, k, samples, seed).run()
}

/// A scale `t ∈ {2⁻¹⁰, …, 2¹⁰}` with `tλ ∉ Γ̃_k`, if one exists.
pub fn scale_witness(k: usize, lam: &[f64]) -> Option<f64> {
    (-10..=10).map(|e| libm::ldexp(1.0, e)).find(|&t| {
        let scaled: Vec<f64> = lam.iter().map(|v| v * t).collect();
        !in_gamma_tilde(k, &scaled)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_mixed_spectrum() {
        let c = classify(&[10.0, 1.0, -0.4], 1.0).unwrap();
        assert_eq!(c.in_gamma, [true, true, false]);
        assert!(c.gamma_tilde(3));
        assert!((c.sigmas[3] + 4.0).abs() < 1e-12);
        assert!((c.semiconvex_margin - 0.6).abs() < 1e-12);
    }

    #[test]
    fn negative_sum_is_never_in_tilde_cone() {
        for t in [1.0, 10.0, 1e3, 1e6] {
            assert!(!in_gamma_tilde(3, &[t, 1.0, -0.5]));
        }
    }

    #[test]
    fn ones_are_everywhere() {
        let c = classify(&[1.0, 1.0, 1.0], 0.0).unwrap();
        assert!(c.in_gamma.iter().all(|b| *b));
        assert!(c.in_gamma_tilde.iter().all(|b| *b));
    }

    #[test]
    fn negative_k_is_rejected() {
        assert!(classify(&[1.0, 1.0], -0.5).is_err());
    }

    #[test]
    fn ellipticity_examples() {
        assert!((ellipticity_check(3, &[1.0, 1.0, 1.0]).unwrap() - 3.0).abs() < 1e-12);
        assert!((ellipticity_check(3, &[10.0, 1.0, -0.4]).unwrap() - 0.2).abs() < 1e-12);
        assert!(ellipticity_check(3, &[1.0, 1.0, -0.9]).is_err());
    }

    #[test]
    fn segment_between_examples_stays_inside() {
        assert_eq!(segment_points(&[1.0; 3], &[2.0; 3]).len(), 10);
        assert!(segment_margin(3, &[10.0, 1.0, -0.4], &[1.0, 1.0, 1.0]) >= 0.0);
        assert!(segment_margin(3, &[1.0, 1.0, 1.0], &[3.0, 2.0, 0.5]) >= 0.0);
    }

    #[test]
    fn tilde_cone_is_not_scale_invariant() {
        // σ₃ < 0 < S₃: scaling up makes σ₃ dominate
        let lam = [10.0, 1.0, -0.4];
        let t = scale_witness(3, &lam).expect("witness");
        assert!(t > 1.0);
        assert!(scale_witness(3, &[1.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn small_probe_has_no_violations() {
        let r = convexity_probe(4, 3, 200, 5).unwrap();
        assert_eq!(r.samples, 200);
        assert_eq!(r.violations, 0);
        assert!(r.estimated_constant > 0.0);
    }
}
