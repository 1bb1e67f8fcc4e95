//! Randomized campaigns for the pointwise inequalities satisfied by
//! `F = S_k` on `Γ̃_k`.
//!
//! Every campaign evaluates samples independently (see
//! [`crate::sampling`]), so [`Campaign::run_range`] over disjoint ranges
//! followed by [`VerificationReport::merge`] reproduces [`Campaign::run`].
//!
//! Margins are signed slacks. Where an inequality only claims the existence
//! of some constant, the pointwise margin is the positivity of the quantity
//! being bounded, and boundedness is judged by [`trend`] across `λ₁`
//! decades.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{quadratic_form, schur_bound, SchurBound};
use crate::report::{DecadeResult, Extremum, TrendReport, VerificationReport, Witness};
use crate::sampling::{sample_rng, unit_vector, SampleSpec};
use crate::symfun::{elementary_symmetric, sigma_deleted, sum_hessian, sum_hessian_jet, OperatorJet};

/// Largest `γ` reported by the concavity campaign.
pub const GAMMA_CAP: f64 = 4.0;

/// The inequality a campaign targets, with its extra parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum Target {
    /// `F^{jj} λ_j ≥ c₁ F` for `j < k`.
    LowerBoundSmallJ,
    /// `F^{jj} ≥ c₂ Σ_i F^{ii}` for `j ≥ k`.
    LowerBoundLargeJ,
    /// `|λ_i| ≤ C₃` for `i ≥ k` whenever `F ≤ N₁`.
    TailBound {
        #[serde(rename = "N1")]
        n1: f64,
    },
    /// The concavity inequality for `F` with the `(λ₁+K+1)` correction term.
    Concavity,
    /// `|σ_{k−1}^{ii}|² ≤ C F^{ii} S_{k−1}`, plus its vector form.
    KeyInequality,
    /// `F^{ii}(K₁+λ_i)² / S_{k−1}` bounded above and below.
    EllipticityRatio {
        #[serde(rename = "K1")]
        k1: f64,
    },
    /// Negative semidefiniteness of the Hessian of `log F`.
    LogConcavity,
}

impl Target {
    pub const IDS: [&'static str; 7] = [
        "lower-bound-small-j",
        "lower-bound-large-j",
        "tail-bound",
        "concavity",
        "key-inequality",
        "ellipticity-ratio",
        "log-concavity",
    ];

    /// Parses an id; `n1` and `k1` fill the parameterized variants.
    pub fn parse(id: &str, n1: f64, k1: f64) -> Result<Target> {
        Ok(match id {
            "lower-bound-small-j" => Target::LowerBoundSmallJ,
            "lower-bound-large-j" => Target::LowerBoundLargeJ,
            "tail-bound" => Target::TailBound { n1 },
            "concavity" => Target::Concavity,
            "key-inequality" => Target::KeyInequality,
            "ellipticity-ratio" => Target::EllipticityRatio { k1 },
            "log-concavity" => Target::LogConcavity,
            _ => {
                return Err(LabError::arg(alloc::format!(
                    "unknown inequality id '{id}'; valid ids: {}",
                    Target::IDS.join(", ")
                )))
            }
        })
    }

    pub fn id(&self) -> &'static str {
        match self {
            Target::LowerBoundSmallJ => Target::IDS[0],
            Target::LowerBoundLargeJ => Target::IDS[1],
            Target::TailBound { .. } => Target::IDS[2],
            Target::Concavity => Target::IDS[3],
            Target::KeyInequality => Target::IDS[4],
            Target::EllipticityRatio { .. } => Target::IDS[5],
            Target::LogConcavity => Target::IDS[6],
        }
    }

    fn extremum(&self) -> Extremum {
        match self {
            Target::TailBound { .. } | Target::KeyInequality | Target::EllipticityRatio { .. } => Extremum::Max,
            _ => Extremum::Min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub target: Target,
    pub spec: SampleSpec,
    /// The "sufficiently large `λ₁`" threshold `J`; runs with `λ₁` allowed
    /// below it are labelled exploratory.
    pub threshold: f64,
    /// Random directions `ξ` (concavity) or vectors `a` (key inequality) per sample.
    pub directions: usize,
}

impl Campaign {
    pub fn new(target: Target, spec: SampleSpec) -> Result<Campaign> {
        spec.validate()?;
        match target {
            Target::LowerBoundSmallJ | Target::Concavity if spec.k < 2 => {
                return Err(LabError::arg("this campaign needs k >= 2"));
            }
            Target::KeyInequality | Target::EllipticityRatio { .. } if spec.k < 2 => {
                return Err(LabError::arg("this campaign needs k >= 2"));
            }
            Target::EllipticityRatio { k1 } if !(k1 > spec.semiconvexity) => {
                return Err(LabError::arg("K1 must exceed K"));
            }
            Target::TailBound { n1 } if !(n1 > 0.0) => {
                return Err(LabError::arg("N1 must be positive"));
            }
            _ => {}
        }
        Ok(Campaign {
            target,
            spec,
            threshold: 1e3,
            directions: 8,
        })
    }

    pub fn id(&self) -> &'static str {
        self.target.id()
    }

    /// Sampling spec actually used: the tail bound confines `F` to `(0, N₁]`.
    fn effective_spec(&self) -> SampleSpec {
        let mut spec = self.spec.clone();
        if let Target::TailBound { n1 } = self.target {
            let (lo, hi) = spec.level.unwrap_or((n1 / 20.0, n1));
            spec.level = Some((lo.min(n1), hi.min(n1)));
        }
        spec
    }

    pub fn empty_report(&self) -> VerificationReport {
        let mut r = VerificationReport::empty(self.id(), self.target.extremum());
        let large_needed = matches!(self.target, Target::Concavity);
        r.exploratory = self.spec.k != 3 || (large_needed && self.spec.lambda1_range.0 < self.threshold);
        r
    }

    pub fn run_range(&self, range: core::ops::Range<u64>) -> Result<VerificationReport> {
        let spec = self.effective_spec();
        let mut report = self.empty_report();
        for i in range {
            match spec.draw(i) {
                Ok(lam) => self.evaluate(i, &lam, &mut report)?,
                Err(LabError::Sampling(_)) => report.skip(),
                Err(e) => return Err(e),
            }
        }
        Ok(report)
    }

    pub fn run(&self) -> Result<VerificationReport> {
        finish(self.run_range(0..self.spec.count)?)
    }

    /// Folds the sample `lam` (index `i`) into `report`.
    pub fn evaluate(&self, i: u64, lam: &[f64], report: &mut VerificationReport) -> Result<()> {
        let k = self.spec.k;
        let jet = sum_hessian_jet(k, lam)?;
        let witness = |aux: Vec<f64>| {
            move || Witness {
                sample_index: i,
                spectrum: lam.to_vec(),
                auxiliary: aux,
            }
        };
        match self.target {
            Target::LowerBoundSmallJ => {
                if lam[..k - 1].iter().any(|v| !(*v > 0.0)) {
                    report.skip();
                    return Ok(());
                }
                let (j, c) = argmin((0..k - 1).map(|j| jet.gradient[j] * lam[j] / jet.value));
                report.record(i, c, c, None, witness(alloc::vec![j as f64]));
            }
            Target::LowerBoundLargeJ => {
                let total: f64 = jet.gradient.iter().sum();
                let (j, c) = argmin((k - 1..lam.len()).map(|j| jet.gradient[j] / total));
                report.record(i, c, c, None, witness(alloc::vec![(j + k - 1) as f64]));
            }
            Target::TailBound { n1 } => {
                if jet.value > n1 {
                    report.skip();
                    return Ok(());
                }
                let (idx, c) = argmax((k - 1..lam.len()).map(|j| lam[j].abs()));
                let margin = (lam[lam.len() - 1] + self.spec.semiconvexity).min(n1 - jet.value);
                report.record(i, margin, c, None, witness(alloc::vec![(idx + k - 1) as f64]));
            }
            Target::Concavity => {
                let eval = concavity_sample(lam, &jet, self.spec.semiconvexity, self.directions, self.spec.seed, i);
                report.record(i, eval.margin, eval.gamma, None, witness(eval.worst_direction));
            }
            Target::KeyInequality => {
                let eval = key_sample(k, lam, &jet, self.directions, self.spec.seed, i)?;
                report.record(i, eval.margin, eval.ratio, None, witness(eval.auxiliary));
            }
            Target::EllipticityRatio { k1 } => {
                let s = lower_sum(k, lam);
                let ratios = (0..lam.len()).map(|p| jet.gradient[p] * (k1 + lam[p]) * (k1 + lam[p]) / s);
                let (jmax, hi) = argmax(ratios.clone());
                let (_, lo) = argmin(ratios);
                report.record(i, lo, hi, Some(lo), witness(alloc::vec![jmax as f64]));
            }
            Target::LogConcavity => {
                let h = log_hessian_fd(k, lam);
                let eig = h.symmetric_eigenvalues();
                let top = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let scale = eig.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
                let margin = 1e-6 * scale - top;
                report.record(i, margin, top / scale, None, witness(alloc::vec![top]));
            }
        }
        Ok(())
    }
}

/// Rejects a campaign whose every draw was skipped.
pub fn finish(report: VerificationReport) -> Result<VerificationReport> {
    if report.samples == 0 {
        return Err(LabError::Sampling(alloc::format!(
            "campaign '{}' produced no admissible samples",
            report.inequality_id
        )));
    }
    Ok(report)
}

fn argmin(it: impl Iterator<Item = f64>) -> (usize, f64) {
    it.enumerate()
        .fold((0, f64::INFINITY), |acc, (j, v)| if v < acc.1 { (j, v) } else { acc })
}

fn argmax(it: impl Iterator<Item = f64>) -> (usize, f64) {
    it.enumerate().fold(
        (0, f64::NEG_INFINITY),
        |acc, (j, v)| if v > acc.1 { (j, v) } else { acc },
    )
}

/// `S_{k−1} = σ_{k−1} + σ_{k−2}`; for `k = 3` this is `σ₂ + σ₁`.
fn lower_sum(k: usize, lam: &[f64]) -> f64 {
    let s = elementary_symmetric(lam, k - 1);
    s[k - 1] + if k >= 2 { s[k - 2] } else { 0.0 }
}

/// The concavity form as a matrix `L` and the right-hand coefficient `d` at
/// `γ = 0`: the inequality reads `ξᵀLξ ≥ (1+γ) d ξ₁²`.
pub fn concavity_form(lam: &[f64], jet: &OperatorJet, semiconvexity: f64) -> (DMatrix<f64>, f64) {
    let n = lam.len();
    let f = jet.value;
    let g = &jet.gradient;
    let tail = 2.0 / ((lam[0] + semiconvexity + 1.0) * f);
    let l = DMatrix::from_fn(n, n, |p, q| {
        let mut v = -jet.hessian[(p, q)] / f + 2.0 * g[p] * g[q] / (f * f);
        if p == q && p >= 1 {
            v += tail * g[p];
        }
        v
    });
    (l, g[0] / (lam[0] * f))
}

/// Left and right sides of the concavity inequality at `γ = 0`.
pub fn concavity_sides(lam: &[f64], jet: &OperatorJet, semiconvexity: f64, xi: &[f64]) -> (f64, f64) {
    let (l, d) = concavity_form(lam, jet, semiconvexity);
    (quadratic_form(&l, xi), d * xi[0] * xi[0])
}

/// Scale-free slack `(L − R)/(|L| + |R|)`, zero when both sides vanish.
fn relative_slack(lhs: f64, rhs: f64) -> f64 {
    let s = lhs.abs() + rhs.abs();
    if s == 0.0 {
        0.0
    } else {
        (lhs - rhs) / s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavitySample {
    /// Worst relative slack over all tested directions.
    pub margin: f64,
    /// Largest admissible `γ` at this spectrum, capped at [`GAMMA_CAP`].
    pub gamma: f64,
    /// `ρ = d·(L⁻¹)₁₁`; the inequality holds at `γ = 0` iff `ρ ≤ 1`.
    pub rho: f64,
    pub worst_direction: Vec<f64>,
}

/// Tests the exact minimizing direction, the axes, the normalized gradient
/// and `directions` random unit vectors.
pub fn concavity_sample(
    lam: &[f64],
    jet: &OperatorJet,
    semiconvexity: f64,
    directions: usize,
    seed: u64,
    index: u64,
) -> ConcavitySample {
    let n = lam.len();
    let (l, d) = concavity_form(lam, jet, semiconvexity);
    let (rho, exact) = match schur_bound(&l, d) {
        SchurBound::Ratio { ratio, direction } => (ratio, direction),
        SchurBound::Indefinite { direction } => (f64::INFINITY, direction),
    };
    let gamma = if rho.is_finite() {
        (1.0 / rho - 1.0).min(GAMMA_CAP)
    } else {
        -1.0
    };
    let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(n + directions + 2);
    candidates.push(exact);
    for a in 0..n {
        let mut e = alloc::vec![0.0; n];
        e[a] = 1.0;
        candidates.push(e);
    }
    let gnorm = libm::sqrt(jet.gradient.iter().map(|v| v * v).sum::<f64>());
    candidates.push(jet.gradient.iter().map(|v| v / gnorm).collect());
    // a separate stream family keeps directions independent of the spectrum draw
    let mut rng = sample_rng(seed ^ 0x5eed_d1ec_7104_u64, index);
    for _ in 0..directions {
        candidates.push(unit_vector(&mut rng, n));
    }
    let mut margin = f64::INFINITY;
    let mut worst = Vec::new();
    for xi in candidates {
        let m = relative_slack(quadratic_form(&l, &xi), d * xi[0] * xi[0]);
        if m < margin || worst.is_empty() {
            margin = m;
            worst = xi;
        }
    }
    ConcavitySample {
        margin,
        gamma,
        rho,
        worst_direction: worst,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeySample {
    pub ratio: f64,
    pub margin: f64,
    pub auxiliary: Vec<f64>,
}

/// Pointwise ratio `max_i (σ_{k−2;i})² / (F^{ii} S_{k−1})` and the vector
/// form with the constant it implies at this spectrum,
/// `C = max(R, √(nR)/2)` (from `xy ≤ Cx² + y²/(4C)`).
pub fn key_sample(
    k: usize,
    lam: &[f64],
    jet: &OperatorJet,
    directions: usize,
    seed: u64,
    index: u64,
) -> Result<KeySample> {
    let n = lam.len();
    let s = lower_sum(k, lam);
    let mut derivs = Vec::with_capacity(n);
    for p in 0..n {
        derivs.push(sigma_deleted(k - 2, lam, &[p])?);
    }
    let fmin = jet.gradient.iter().copied().fold(f64::INFINITY, f64::min);
    if !(fmin > 0.0) || !(s > 0.0) {
        // outside the tilde cone: flagged as a membership failure
        return Ok(KeySample {
            ratio: f64::INFINITY,
            margin: -1.0,
            auxiliary: alloc::vec![fmin, s],
        });
    }
    let (imax, ratio) = argmax((0..n).map(|p| derivs[p] * derivs[p] / (jet.gradient[p] * s)));
    let c = ratio.max(libm::sqrt(n as f64 * ratio) / 2.0);
    let mut rng = sample_rng(seed ^ 0x6b65_7969_6e65_7100_u64, index);
    let mut margin = f64::INFINITY;
    for t in 0..directions.max(1) {
        let scale = libm::pow(10.0, -3.0 + 6.0 * t as f64 / directions.max(1) as f64);
        let a: Vec<f64> = unit_vector(&mut rng, n).into_iter().map(|v| v * scale).collect();
        let lhs: f64 = (0..n).map(|p| (a[p] * derivs[p]).abs()).sum();
        let rhs = c * (0..n).map(|p| jet.gradient[p] * a[p] * a[p]).sum::<f64>() + c * s;
        margin = margin.min(relative_slack(rhs, lhs));
    }
    Ok(KeySample {
        ratio,
        margin,
        auxiliary: alloc::vec![imax as f64, c],
    })
}

/// Hessian of `λ ↦ log S_k(λ)` by central differences of its gradient,
/// with per-coordinate steps `10⁻⁵(1+|λ_j|)`.
pub fn log_hessian_fd(k: usize, lam: &[f64]) -> DMatrix<f64> {
    let n = lam.len();
    // S_k is affine in each coordinate, so the unit secant is its exact partial
    let exact_grad = |x: &[f64]| -> Vec<f64> {
        let f = sum_hessian(k, x);
        let mut g = Vec::with_capacity(n);
        for p in 0..n {
            let mut y = x.to_vec();
            y[p] = 1.0;
            let f1 = sum_hessian(k, &y);
            y[p] = 0.0;
            let f0 = sum_hessian(k, &y);
            g.push((f1 - f0) / f);
        }
        g
    };
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let step = 1e-5 * (1.0 + lam[j].abs());
        let mut plus = lam.to_vec();
        let mut minus = lam.to_vec();
        plus[j] += step;
        minus[j] -= step;
        let gp = exact_grad(&plus);
        let gm = exact_grad(&minus);
        for i in 0..n {
            h[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    (&h + h.transpose()) * 0.5
}

/// One campaign per `λ₁` decade `[lo, hi]`, each with the same seed and count.
pub fn trend(
    campaign: &Campaign,
    decades: &[(f64, f64)],
    mut run: impl FnMut(&Campaign) -> Result<VerificationReport>,
) -> Result<TrendReport> {
    let mut out = Vec::with_capacity(decades.len());
    for &(lo, hi) in decades {
        let mut c = campaign.clone();
        c.spec.lambda1_range = (lo, hi);
        c.spec.validate()?;
        let report = run(&c)?;
        out.push(DecadeResult {
            lambda1_lo: lo,
            lambda1_hi: hi,
            report,
        });
    }
    Ok(TrendReport::from_decades(campaign.id(), out))
}

/// Decades `[10^a, 10^{a+1}]` for `a` in `first..last`.
pub fn decades(first: i32, last: i32) -> Vec<(f64, f64)> {
    (first..last)
        .map(|a| (libm::pow(10.0, a as f64), libm::pow(10.0, a as f64 + 1.0)))
        .collect()
}

pub fn run_serial(c: &Campaign) -> Result<VerificationReport> {
    c.run()
}

pub fn verify_lower_bound_small_j(spec: SampleSpec) -> Result<VerificationReport> {
    Campaign::new(Target::LowerBoundSmallJ, spec)?.run()
}

pub fn verify_lower_bound_large_j(spec: SampleSpec) -> Result<VerificationReport> {
    Campaign::new(Target::LowerBoundLargeJ, spec)?.run()
}

pub fn verify_tail_bound(spec: SampleSpec, n1: f64) -> Result<VerificationReport> {
    Campaign::new(Target::TailBound { n1 }, spec)?.run()
}

pub fn verify_concavity(spec: SampleSpec) -> Result<VerificationReport> {
    Campaign::new(Target::Concavity, spec)?.run()
}

pub fn verify_key_inequality(spec: SampleSpec) -> Result<VerificationReport> {
    Campaign::new(Target::KeyInequality, spec)?.run()
}

pub fn verify_ellipticity_ratio(spec: SampleSpec, k1: f64) -> Result<VerificationReport> {
    Campaign::new(Target::EllipticityRatio { k1 }, spec)?.run()
}

/// Human-readable list of campaign ids.
pub fn describe_ids() -> String {
    Target::IDS.join(", ")
}
