//! Reproducible spectrum samplers for campaigns.
//!
//! Sample `i` of a campaign with seed `s` is drawn from its own ChaCha stream
//! `(s, i)`, so any partition of the index range across workers reproduces
//! the serial campaign bit for bit.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cones::in_gamma_tilde;
use crate::error::{LabError, Result};
use crate::spectrum::{sort_descending, Spectrum};
use crate::symfun::sum_hessian;

pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub(crate) fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub(crate) fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    libm::exp(uniform(rng, libm::log(lo), libm::log(hi)))
}

/// Uniform direction on the unit sphere in `ℝⁿ`.
pub fn unit_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// How `λ₂, …, λₙ` are drawn once `λ₁` is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMode {
    /// `λ₂, …, λₙ ∈ [−K, M]`: `λ₁` is the only large eigenvalue.
    Bounded,
    /// `λ₂` log-uniform in `[M, λ₁]`, the rest in `[−K, M]`.
    SpikedTwo,
    /// `λ₂, …, λₙ` anywhere in `[−K, λ₁]`; no structural assumption.
    General,
    /// A fair coin between `Bounded` and `SpikedTwo`.
    Mixed,
}

impl TailMode {
    pub fn parse(s: &str) -> Option<TailMode> {
        match s {
            "bounded" => Some(TailMode::Bounded),
            "spiked-two" => Some(TailMode::SpikedTwo),
            "general" => Some(TailMode::General),
            "mixed" => Some(TailMode::Mixed),
            _ => None,
        }
    }
}

/// Parameters shared by every inequality campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub n: usize,
    pub k: usize,
    /// Semi-convexity bound: every eigenvalue is `≥ −K`.
    #[serde(rename = "K")]
    pub semiconvexity: f64,
    pub lambda1_range: (f64, f64),
    pub tail_mode: TailMode,
    /// Upper end `M` of the bounded part of the tail.
    pub tail_bound: f64,
    /// When set, `S_k(λ)` is constrained to this window, modelling a
    /// right-hand side `f` with `min f > 0` and `max f < ∞`.
    pub level: Option<(f64, f64)>,
    pub count: u64,
    pub seed: u64,
    /// Rejection budget per sample.
    pub max_tries: u32,
}

impl SampleSpec {
    pub fn new(n: usize, k: usize) -> Self {
        SampleSpec {
            n,
            k,
            semiconvexity: 1.0,
            lambda1_range: (1e3, 1e6),
            tail_mode: TailMode::Mixed,
            tail_bound: 10.0,
            level: None,
            count: 10_000,
            seed: 0,
            max_tries: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(LabError::arg("n must be at least 2"));
        }
        if self.k == 0 || self.k > self.n {
            return Err(LabError::arg("k must satisfy 1 <= k <= n"));
        }
        if !(self.semiconvexity >= 0.0) {
            return Err(LabError::arg("K must be nonnegative"));
        }
        let (lo, hi) = self.lambda1_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(LabError::arg("lambda1 range must satisfy 0 < lo <= hi < inf"));
        }
        if !(self.tail_bound > 0.0) {
            return Err(LabError::arg("tail bound must be positive"));
        }
        if let Some((a, b)) = self.level {
            if !(a > 0.0 && b >= a && b.is_finite()) {
                return Err(LabError::arg("level window must satisfy 0 < lo <= hi < inf"));
            }
        }
        if self.max_tries == 0 {
            return Err(LabError::arg("retry budget must be positive"));
        }
        Ok(())
    }

    /// Draws sample `index`: sorted descending, `λₙ ≥ −K`, inside `Γ̃_k`, and
    /// on the level window when one is set.
    pub fn draw(&self, index: u64) -> Result<Spectrum> {
        let mut rng = sample_rng(self.seed, index);
        for _ in 0..self.max_tries {
            if let Some(lam) = self.attempt(&mut rng) {
                return Spectrum::new(lam);
            }
        }
        Err(LabError::Sampling(alloc::format!(
            "no admissible spectrum for sample {index} within {} tries",
            self.max_tries
        )))
    }

    fn attempt(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let n = self.n;
        let kk = self.semiconvexity;
        let (lo, hi) = self.lambda1_range;
        let l1 = if hi > lo { log_uniform(rng, lo, hi) } else { lo };
        let m = self.tail_bound.min(l1);
        let mode = match self.tail_mode {
            TailMode::Mixed => {
                if rng.random::<bool>() {
                    TailMode::Bounded
                } else {
                    TailMode::SpikedTwo
                }
            }
            other => other,
        };
        let mut lam = alloc::vec![0.0; n];
        lam[0] = l1;
        // Position of the coordinate solved for when a level is imposed.
        let solve_at = match mode {
            TailMode::Bounded => {
                for v in lam[1..].iter_mut() {
                    *v = uniform(rng, -kk, m);
                }
                1
            }
            TailMode::SpikedTwo => {
                lam[1] = if l1 > m { log_uniform(rng, m, l1) } else { l1 };
                for v in lam[2..].iter_mut() {
                    *v = uniform(rng, -kk, m);
                }
                2
            }
            TailMode::General | TailMode::Mixed => {
                lam[1] = log_uniform(rng, m.max(1e-3), l1.max(m.max(1e-3)));
                // log-spread above −K so small and large tails are both common
                for v in lam[2..].iter_mut() {
                    *v = -kk + log_uniform(rng, 1e-3, l1 + kk);
                }
                2
            }
        };
        if let Some((a, b)) = self.level {
            let solve_at = solve_at.min(n - 1);
            sort_descending(&mut lam[solve_at + 1..]);
            let target = uniform(rng, a, b);
            lam[solve_at] = solve_level(self.k, &lam, solve_at, target)?;
            if mode == TailMode::Bounded && lam[solve_at] > m {
                return None;
            }
            if !lam.windows(2).all(|w| w[0] >= w[1]) {
                return None;
            }
        } else {
            sort_descending(&mut lam[1..]);
            if lam[1] > lam[0] {
                return None;
            }
        }
        if lam[n - 1] < -kk || !in_gamma_tilde(self.k, &lam) {
            return None;
        }
        Some(lam)
    }
}

/// Value of coordinate `at` making `S_k(λ) = target`, using that `S_k` is
/// affine in each coordinate.
pub fn solve_level(k: usize, lam: &[f64], at: usize, target: f64) -> Option<f64> {
    let mut probe = lam.to_vec();
    probe[at] = 0.0;
    let base = sum_hessian(k, &probe);
    probe[at] = 1.0;
    let slope = sum_hessian(k, &probe) - base;
    if slope == 0.0 || !slope.is_finite() {
        return None;
    }
    let x = (target - base) / slope;
    x.is_finite().then_some(x)
}

/// Rejection sampler over `Γ̃_k` used by the cone probes: a mixture of
/// uniform boxes `[−K, M]ⁿ` with `M ∈ {10, 10³, 10⁶}` and spiked spectra with
/// one large entry over a bounded tail.
pub fn draw_cone_member(
    rng: &mut ChaCha8Rng,
    n: usize,
    k: usize,
    semiconvexity: f64,
    max_tries: u32,
) -> Result<Vec<f64>> {
    const BOXES: [f64; 3] = [10.0, 1e3, 1e6];
    for _ in 0..max_tries {
        let mut lam: Vec<f64> = if rng.random::<bool>() {
            let m = BOXES[rng.random_range(0..BOXES.len())];
            (0..n).map(|_| uniform(rng, -semiconvexity, m)).collect()
        } else {
            let mut v: Vec<f64> = (0..n).map(|_| uniform(rng, -semiconvexity, 10.0)).collect();
            v[0] = log_uniform(rng, 10.0, 1e6);
            v
        };
        sort_descending(&mut lam);
        if in_gamma_tilde(k, &lam) {
            return Ok(lam);
        }
    }
    Err(LabError::Sampling(alloc::format!(
        "no member of the tilde cone found within {max_tries} tries"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_reproducible_and_admissible() {
        for mode in [
            TailMode::Bounded,
            TailMode::SpikedTwo,
            TailMode::General,
            TailMode::Mixed,
        ] {
            let mut spec = SampleSpec::new(4, 3);
            spec.tail_mode = mode;
            spec.seed = 11;
            for i in 0..50 {
                let a = spec.draw(i).unwrap();
                let b = spec.draw(i).unwrap();
                assert_eq!(a, b);
                assert!(a.is_sorted_descending());
                assert!(a.min() >= -spec.semiconvexity);
                assert!(in_gamma_tilde(3, &a));
                assert!(a[0] >= 1e3 && a[0] <= 1e6);
            }
        }
    }

    #[test]
    fn level_draws_hit_the_window() {
        for mode in [TailMode::Bounded, TailMode::SpikedTwo, TailMode::General] {
            let mut spec = SampleSpec::new(4, 3);
            spec.tail_mode = mode;
            spec.level = Some((0.5, 10.0));
            for i in 0..20 {
                let lam = spec.draw(i).unwrap();
                let s = sum_hessian(3, &lam);
                assert!(s >= 0.5 - 1e-6 * lam[0] && s <= 10.0 + 1e-6 * lam[0], "S3 = {s}");
                if mode == TailMode::Bounded {
                    assert!(lam[1] <= spec.tail_bound);
                }
            }
        }
    }

    #[test]
    fn validate_rejects_bad_specs() {
        let mut spec = SampleSpec::new(3, 4);
        assert!(spec.validate().is_err());
        spec.k = 3;
        spec.semiconvexity = -1.0;
        assert!(spec.validate().is_err());
        spec.semiconvexity = 1.0;
        spec.lambda1_range = (10.0, 1.0);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn unit_vectors_are_normalized() {
        let mut rng = sample_rng(3, 0);
        for n in 2..7 {
            let v = unit_vector(&mut rng, n);
            let norm: f64 = v.iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }
}
