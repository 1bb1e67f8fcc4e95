//! Campaign outcomes and their merge/trend arithmetic.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Which way the empirical constant is extremal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extremum {
    Min,
    Max,
}

/// The sample that produced the worst margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub sample_index: u64,
    pub spectrum: Vec<f64>,
    /// Inequality-specific auxiliary data (direction `ξ`, index `i`, …).
    pub auxiliary: Vec<f64>,
}

/// Outcome of a randomized inequality campaign.
///
/// `violations == 0` exactly when `worst_margin >= 0`; margins are signed
/// slacks, negative meaning the inequality failed on that sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub inequality_id: String,
    pub samples: u64,
    /// Draws rejected by the inequality's own admissibility filter.
    pub skipped: u64,
    pub violations: u64,
    pub worst_margin: f64,
    pub estimated_constant: f64,
    pub constant_kind: Extremum,
    /// Opposite-side extreme where one exists (e.g. the lower end of a ratio
    /// whose upper end is `estimated_constant`).
    pub secondary_constant: Option<f64>,
    pub witness: Option<Witness>,
    /// Index of the sample attaining `estimated_constant`.
    pub constant_index: Option<u64>,
    pub exploratory: bool,
}

impl VerificationReport {
    pub fn empty(id: &str, kind: Extremum) -> Self {
        VerificationReport {
            inequality_id: String::from(id),
            samples: 0,
            skipped: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            estimated_constant: match kind {
                Extremum::Min => f64::INFINITY,
                Extremum::Max => f64::NEG_INFINITY,
            },
            constant_kind: kind,
            secondary_constant: None,
            witness: None,
            constant_index: None,
            exploratory: false,
        }
    }

    /// Folds one evaluated sample into the report.
    pub fn record(
        &mut self,
        index: u64,
        margin: f64,
        constant: f64,
        secondary: Option<f64>,
        witness: impl FnOnce() -> Witness,
    ) {
        self.samples += 1;
        if !(margin >= 0.0) {
            self.violations += 1;
        }
        let replace = match &self.witness {
            None => true,
            Some(w) => is_worse(margin, index, self.worst_margin, w.sample_index),
        };
        if replace {
            self.worst_margin = margin;
            self.witness = Some(witness());
        }
        self.fold_constant(index, constant);
        if let Some(s) = secondary {
            self.fold_secondary(s);
        }
    }

    fn fold_secondary(&mut self, s: f64) {
        self.secondary_constant = Some(match (self.constant_kind, self.secondary_constant) {
            (_, None) => s,
            (Extremum::Max, Some(c)) => c.min(s),
            (Extremum::Min, Some(c)) => c.max(s),
        });
    }

    fn fold_constant(&mut self, index: u64, constant: f64) {
        let better = match self.constant_kind {
            Extremum::Min => constant < self.estimated_constant,
            Extremum::Max => constant > self.estimated_constant,
        };
        let tie = constant == self.estimated_constant && self.constant_index.is_some_and(|i| index < i);
        if better || tie {
            self.estimated_constant = constant;
            self.constant_index = Some(index);
        }
    }

    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    /// Associative, and commutative up to tie-breaking by sample index, so a
    /// campaign split across workers merges to the same report as a serial run.
    pub fn merge(mut self, other: VerificationReport) -> VerificationReport {
        self.samples += other.samples;
        self.skipped += other.skipped;
        self.violations += other.violations;
        let take_other = match (&self.witness, &other.witness) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(a), Some(b)) => is_worse(other.worst_margin, b.sample_index, self.worst_margin, a.sample_index),
        };
        if take_other {
            self.worst_margin = other.worst_margin;
            self.witness = other.witness;
        }
        if let Some(i) = other.constant_index {
            self.fold_constant(i, other.estimated_constant);
        }
        if let Some(s) = other.secondary_constant {
            self.fold_secondary(s);
        }
        self.exploratory |= other.exploratory;
        self
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.samples > 0
    }
}

/// NaN margins rank below everything; ties go to the lower sample index.
fn is_worse(margin: f64, index: u64, current: f64, current_index: u64) -> bool {
    let key = |m: f64| if m.is_nan() { f64::NEG_INFINITY } else { m };
    let (a, b) = (key(margin), key(current));
    a < b || (a == b && index < current_index)
}

/// Least-squares slope of `ln y` against `ln x`.
///
/// Returns `None` with fewer than two points or non-positive data.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0)) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (libm::log(x), libm::log(y))).collect();
    least_squares_slope(&logs)
}

pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// One campaign per `λ₁` decade, and the fitted growth trend of its constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub inequality_id: String,
    pub decades: Vec<DecadeResult>,
    /// Slope of `ln(constant)` against `ln(λ₁)` at the decade's geometric midpoint.
    pub slope: Option<f64>,
    /// Same for the secondary constant, when reports carry one.
    pub secondary_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecadeResult {
    pub lambda1_lo: f64,
    pub lambda1_hi: f64,
    pub report: VerificationReport,
}

impl TrendReport {
    pub fn from_decades(id: &str, decades: Vec<DecadeResult>) -> Self {
        let mid = |d: &DecadeResult| libm::sqrt(d.lambda1_lo * d.lambda1_hi);
        let primary: Vec<(f64, f64)> = decades
            .iter()
            .map(|d| (mid(d), d.report.estimated_constant.abs()))
            .collect();
        let secondary: Vec<(f64, f64)> = decades
            .iter()
            .filter_map(|d| d.report.secondary_constant.map(|s| (mid(d), s.abs())))
            .collect();
        TrendReport {
            inequality_id: String::from(id),
            slope: log_log_slope(&primary),
            secondary_slope: if secondary.len() == decades.len() {
                log_log_slope(&secondary)
            } else {
                None
            },
            decades,
        }
    }

    pub fn violations(&self) -> u64 {
        self.decades.iter().map(|d| d.report.violations).sum()
    }

    /// Zero violations and every fitted slope within `±tolerance`.
    pub fn bounded(&self, tolerance: f64) -> bool {
        let ok = |s: Option<f64>| s.is_some_and(|s| s.abs() <= tolerance);
        self.violations() == 0 && ok(self.slope) && (self.secondary_slope.is_none() || ok(self.secondary_slope))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn w(i: u64) -> Witness {
        Witness {
            sample_index: i,
            spectrum: vec![i as f64],
            auxiliary: vec![],
        }
    }

    #[test]
    fn violations_track_margin_sign() {
        let mut r = VerificationReport::empty("t", Extremum::Min);
        r.record(0, 0.5, 0.5, None, || w(0));
        assert_eq!(r.violations, 0);
        assert!(r.worst_margin >= 0.0);
        r.record(1, -0.1, 0.2, None, || w(1));
        assert_eq!(r.violations, 1);
        assert_eq!(r.worst_margin, -0.1);
        assert_eq!(r.estimated_constant, 0.2);
    }

    #[test]
    fn merge_matches_serial() {
        let data = [(0u64, 0.3), (1, 0.1), (2, 0.7), (3, 0.1), (4, -0.2), (5, 0.9)];
        let mut serial = VerificationReport::empty("t", Extremum::Max);
        for &(i, m) in &data {
            serial.record(i, m, m * 2.0, Some(m), || w(i));
        }
        let mut a = VerificationReport::empty("t", Extremum::Max);
        let mut b = VerificationReport::empty("t", Extremum::Max);
        for &(i, m) in &data[..3] {
            a.record(i, m, m * 2.0, Some(m), || w(i));
        }
        for &(i, m) in &data[3..] {
            b.record(i, m, m * 2.0, Some(m), || w(i));
        }
        assert_eq!(a.clone().merge(b.clone()), serial);
        assert_eq!(b.merge(a), serial);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = (1..6)
            .map(|d| {
                let x = libm::pow(10.0, d as f64);
                (x, 3.0 * libm::pow(x, -0.5))
            })
            .collect();
        assert!((log_log_slope(&pts).unwrap() + 0.5).abs() < 1e-12);
        assert!(log_log_slope(&pts[..1]).is_none());
    }
}
