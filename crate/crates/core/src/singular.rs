//! The Pogorelov-type family
//! `u^σ(x) = (1+x₁²)(σ + Σ_{i=2}^{k−1} x_i²)^{α/2}`, `α = 2 − 2/(k−1)`.
//!
//! The Hessian has rank at most `k−1`, so `σ_k(D²u^σ) = 0`, while
//! `σ_{k−1}(D²u^σ)` stays positive near the origin. The limit `u⁰` is
//! Lipschitz with `|D²u⁰| ~ |x′|^{α−2}` blowing up on `{x₂ = … = x_{k−1} = 0}`.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::report::least_squares_slope;
use crate::sampling::{sample_rng, uniform, unit_vector};
use crate::spectrum::SymmetricMatrix;
use crate::symfun::sigma_matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularFamilyParams {
    pub n: usize,
    pub k: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub r: f64,
}

impl SingularFamilyParams {
    pub fn new(n: usize, k: usize, sigma: f64, r: f64) -> Result<Self> {
        if n < 4 || k < 4 || k > n {
            return Err(LabError::arg("the singular family needs 4 <= k <= n"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(LabError::arg("sigma must be a finite nonnegative number"));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(LabError::arg("radius must be positive"));
        }
        Ok(SingularFamilyParams {
            n,
            k,
            sigma,
            alpha: 2.0 - 2.0 / (k as f64 - 1.0),
            r,
        })
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.n, self.k, sigma, self.r)
    }

    /// Distance below which `σ = 0` evaluations are refused: `10⁻⁶·r`.
    pub fn safe_margin(&self) -> f64 {
        1e-6 * self.r
    }

    /// `|x′|` with `x′ = (x₂, …, x_{k−1})`.
    pub fn transverse_norm(&self, x: &[f64]) -> f64 {
        libm::sqrt(x[1..self.k - 1].iter().map(|v| v * v).sum())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: SymmetricMatrix,
}

fn check_point(p: &SingularFamilyParams, x: &[f64]) -> Result<f64> {
    if x.len() != p.n {
        return Err(LabError::Dimension {
            expected: p.n,
            found: x.len(),
        });
    }
    let t = p.transverse_norm(x);
    if p.sigma == 0.0 && t < p.safe_margin() {
        return Err(LabError::Domain(alloc::format!(
            "|x'| = {t:e} is within the safe margin of the singular set"
        )));
    }
    Ok(p.sigma + t * t)
}

pub fn value(p: &SingularFamilyParams, x: &[f64]) -> Result<f64> {
    let rho = check_point(p, x)?;
    Ok((1.0 + x[0] * x[0]) * libm::pow(rho, p.alpha / 2.0))
}

/// Value, gradient and Hessian, from differentiating the definition by hand.
pub fn eval_jet(p: &SingularFamilyParams, x: &[f64]) -> Result<Jet> {
    let rho = check_point(p, x)?;
    let a = p.alpha;
    let w = 1.0 + x[0] * x[0];
    let r0 = libm::pow(rho, a / 2.0);
    let r1 = libm::pow(rho, a / 2.0 - 1.0);
    let r2 = libm::pow(rho, a / 2.0 - 2.0);
    // coordinates 1..=k−2 carry x₂, …, x_{k−1}
    let inner = |i: usize| (1..p.k - 1).contains(&i);
    let mut gradient = alloc::vec![0.0; p.n];
    gradient[0] = 2.0 * x[0] * r0;
    for i in 1..p.k - 1 {
        gradient[i] = w * a * x[i] * r1;
    }
    let hessian = SymmetricMatrix::from_upper(p.n, |i, j| {
        if i == 0 && j == 0 {
            2.0 * r0
        } else if i == 0 && inner(j) {
            2.0 * a * x[0] * x[j] * r1
        } else if inner(i) && inner(j) {
            let diag = if i == j { a * rho } else { 0.0 };
            w * r2 * (a * (a - 2.0) * x[i] * x[j] + diag)
        } else {
            0.0
        }
    });
    Ok(Jet {
        value: w * r0,
        gradient,
        hessian,
    })
}

/// `(σ_k(D²u^σ), σ_{k−1}(D²u^σ))` at `x`.
pub fn residual(p: &SingularFamilyParams, x: &[f64]) -> Result<(f64, f64)> {
    let jet = eval_jet(p, x)?;
    Ok((sigma_matrix(p.k, &jet.hessian)?, sigma_matrix(p.k - 1, &jet.hessian)?))
}

/// `(k−1)α/2 − (k−2)` in exact arithmetic.
pub fn prefactor_exponent(k: i64) -> Ratio<i64> {
    let alpha = Ratio::from_integer(2) - Ratio::new(2, k - 1);
    Ratio::from_integer(k - 1) * alpha / 2 - Ratio::from_integer(k - 2)
}

/// Uniform point in the ball `B_radius ⊂ ℝⁿ`.
pub fn ball_point(rng: &mut impl Rng, n: usize, radius: f64) -> Vec<f64> {
    let dir = unit_vector(rng, n);
    let s = radius * libm::pow(rng.random::<f64>(), 1.0 / n as f64);
    dir.into_iter().map(|v| v * s).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub points: u64,
    /// `max |σ_k| / (1 + ‖D²u‖^k)`.
    pub max_scaled_sigma_k: f64,
    pub min_sigma_km1: f64,
    /// Radius actually used after any shrinking.
    pub radius: f64,
}

/// Evaluates `points` uniform samples of `B_r`. If `σ_{k−1} ≤ 0` anywhere the
/// radius is halved and the campaign restarts, at most 20 times.
pub fn residual_campaign(p: &SingularFamilyParams, points: u64, seed: u64) -> Result<ResidualSummary> {
    let mut radius = p.r;
    for _ in 0..20 {
        let mut summary = ResidualSummary {
            points,
            max_scaled_sigma_k: 0.0,
            min_sigma_km1: f64::INFINITY,
            radius,
        };
        let mut ok = true;
        for i in 0..points {
            let mut rng = sample_rng(seed, i);
            let x = loop {
                let x = ball_point(&mut rng, p.n, radius);
                if p.sigma > 0.0 || p.transverse_norm(&x) >= p.safe_margin() {
                    break x;
                }
            };
            let jet = eval_jet(p, &x)?;
            let norm = jet.hessian.spectral_norm();
            let sk = sigma_matrix(p.k, &jet.hessian)?;
            let skm1 = sigma_matrix(p.k - 1, &jet.hessian)?;
            summary.max_scaled_sigma_k = summary
                .max_scaled_sigma_k
                .max(sk.abs() / (1.0 + libm::pow(norm, p.k as f64)));
            summary.min_sigma_km1 = summary.min_sigma_km1.min(skm1);
            if !(skm1 > 0.0) {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(summary);
        }
        radius *= 0.5;
    }
    Err(LabError::Domain(alloc::format!(
        "sigma_(k-1) is not positive on any ball down to radius {radius:e}"
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderProbe {
    /// `(t, |Du|, ‖D²u‖)` along `t·direction`.
    pub rows: Vec<(f64, f64, f64)>,
    /// Least-squares slope of `log ‖D²u‖` against `log t`.
    pub slope: f64,
    pub expected_slope: f64,
    /// Largest `|Du|` along the probe: finite, witnessing Lipschitz continuity.
    pub max_gradient: f64,
}

/// `t_grid` must be strictly decreasing, positive, with at least two entries.
pub fn holder_probe(p: &SingularFamilyParams, direction: &[f64], t_grid: &[f64]) -> Result<HolderProbe> {
    if t_grid.len() < 2 || t_grid.iter().any(|t| !(*t > 0.0)) || t_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(LabError::arg(
            "t grid must be strictly decreasing positive values (at least two)",
        ));
    }
    if direction.len() != p.n {
        return Err(LabError::Dimension {
            expected: p.n,
            found: direction.len(),
        });
    }
    let norm = libm::sqrt(direction.iter().map(|v| v * v).sum());
    if (norm - 1.0).abs() > 1e-9
        || direction
            .iter()
            .enumerate()
            .any(|(i, v)| !(1..p.k - 1).contains(&i) && *v != 0.0)
    {
        return Err(LabError::arg(
            "direction must be a unit vector in span(e2, ..., e_(k-1))",
        ));
    }
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let x: Vec<f64> = direction.iter().map(|v| v * t).collect();
        let jet = eval_jet(p, &x)?;
        let g = libm::sqrt(jet.gradient.iter().map(|v| v * v).sum());
        rows.push((t, g, jet.hessian.spectral_norm()));
    }
    let logs: Vec<(f64, f64)> = rows.iter().map(|r| (libm::log(r.0), libm::log(r.2))).collect();
    let slope = least_squares_slope(&logs).ok_or_else(|| LabError::arg("degenerate t grid"))?;
    let max_gradient = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(HolderProbe {
        rows,
        slope,
        expected_slope: p.alpha - 2.0,
        max_gradient,
    })
}

/// Unit vector `(e₂ + … + e_{k−1})/√(k−2)`.
pub fn default_direction(p: &SingularFamilyParams) -> Vec<f64> {
    let s = 1.0 / libm::sqrt((p.k - 2) as f64);
    (0..p.n)
        .map(|i| if (1..p.k - 1).contains(&i) { s } else { 0.0 })
        .collect()
}

/// `{2⁻⁴, …, 2⁻¹⁶}`.
pub fn default_t_grid() -> Vec<f64> {
    (4..=16).map(|e| libm::ldexp(1.0, -e)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    /// `(σ, max_x |u^σ(x) − u⁰(x)|)`.
    pub deviations: Vec<(f64, f64)>,
    /// Fitted exponent of the deviation in `σ` (measured, not asserted).
    pub rate: Option<f64>,
}

/// Sample points must keep `|x′| ≥ δ` for some `δ > 0`.
pub fn convergence_check(p: &SingularFamilyParams, sigmas: &[f64], points: &[Vec<f64>]) -> Result<Convergence> {
    let limit = p.with_sigma(0.0)?;
    let mut base = Vec::with_capacity(points.len());
    for x in points {
        base.push(value(&limit, x)?);
    }
    let mut deviations = Vec::with_capacity(sigmas.len());
    for &s in sigmas {
        let q = p.with_sigma(s)?;
        let mut dev: f64 = 0.0;
        for (x, b) in points.iter().zip(&base) {
            dev = dev.max((value(&q, x)? - b).abs());
        }
        deviations.push((s, dev));
    }
    let logs: Vec<(f64, f64)> = deviations
        .iter()
        .filter(|(s, d)| *s > 0.0 && *d > 0.0)
        .map(|(s, d)| (libm::log(*s), libm::log(*d)))
        .collect();
    Ok(Convergence {
        rate: least_squares_slope(&logs),
        deviations,
    })
}

/// Random points of `B_r` with `|x′| ≥ margin`.
pub fn safe_points(p: &SingularFamilyParams, count: usize, margin: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut i = 0u64;
    while out.len() < count {
        let mut rng = sample_rng(seed, i);
        i += 1;
        let x = ball_point(&mut rng, p.n, p.r);
        if p.transverse_norm(&x) >= margin {
            out.push(x);
        }
    }
    out
}

/// Smallest centered second difference `u⁰(m+hv) − 2u⁰(m) + u⁰(m−hv)` over
/// `segments` random segments in `B_{r/2}` kept `margin` away from the
/// singular set.
pub fn convexity_probe(p: &SingularFamilyParams, segments: u64, margin: f64, seed: u64) -> Result<f64> {
    let limit = p.with_sigma(0.0)?;
    let mut worst = f64::INFINITY;
    let mut i = 0u64;
    let mut done = 0u64;
    while done < segments {
        let mut rng = sample_rng(seed, i);
        i += 1;
        let m = ball_point(&mut rng, p.n, 0.5 * p.r);
        let v = unit_vector(&mut rng, p.n);
        let h = uniform(&mut rng, 1e-3, 0.1) * p.r;
        let a: Vec<f64> = m.iter().zip(&v).map(|(x, d)| x + h * d).collect();
        let b: Vec<f64> = m.iter().zip(&v).map(|(x, d)| x - h * d).collect();
        // the whole segment must miss the margin tube around the singular set
        let clear = (0..=20).all(|s| {
            let t = -1.0 + s as f64 / 10.0;
            let y: Vec<f64> = m.iter().zip(&v).map(|(x, d)| x + t * h * d).collect();
            limit.transverse_norm(&y) >= margin
        });
        if !clear {
            continue;
        }
        done += 1;
        let d2 = value(&limit, &a)? - 2.0 * value(&limit, &m)? + value(&limit, &b)?;
        worst = worst.min(d2);
    }
    Ok(worst)
}

/// Max relative deviation between the analytic Hessian and central second
/// differences of the value with step `10⁻⁵·(1+|x|)`.
pub fn jet_fd_error(p: &SingularFamilyParams, x: &[f64]) -> Result<f64> {
    let jet = eval_jet(p, x)?;
    let n = p.n;
    let h = 1e-5 * (1.0 + libm::sqrt(x.iter().map(|v| v * v).sum::<f64>()));
    let f = |dx: &[(usize, f64)]| -> Result<f64> {
        let mut y = x.to_vec();
        for &(i, s) in dx {
            y[i] += s;
        }
        value(p, &y)
    };
    let mut fd = DMatrix::zeros(n, n);
    let f0 = f(&[])?;
    for i in 0..n {
        fd[(i, i)] = (f(&[(i, h)])? - 2.0 * f0 + f(&[(i, -h)])?) / (h * h);
        for j in (i + 1)..n {
            let v = (f(&[(i, h), (j, h)])? - f(&[(i, h), (j, -h)])? - f(&[(i, -h), (j, h)])? + f(&[(i, -h), (j, -h)])?)
                / (4.0 * h * h);
            fd[(i, j)] = v;
            fd[(j, i)] = v;
        }
    }
    let scale = jet.hessian.as_matrix().abs().max().max(1.0);
    Ok((fd - jet.hessian.as_matrix()).abs().max() / scale)
}
