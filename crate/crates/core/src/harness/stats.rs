//! Clopper–Pearson intervals and the report type that carries them.

use serde::{Deserialize, Serialize};
use statrs::function::beta::inv_beta_reg;

/// Two-sided confidence level used throughout.
pub const CONFIDENCE: f64 = 0.99;

/// Exact binomial interval for `successes` out of `trials` at `confidence`.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(successes <= trials && trials > 0, "need 0 <= successes <= trials, trials > 0");
    let tail = (1.0 - confidence) / 2.0;
    let (k, n) = (successes as f64, trials as f64);
    let lo = if successes == 0 { 0.0 } else { inv_beta_reg(k, n - k + 1.0, tail) };
    let hi = if successes == trials { 1.0 } else { inv_beta_reg(k + 1.0, n - k, 1.0 - tail) };
    let p = k / n;
    (lo.min(p), hi.max(p))
}

/// A Monte Carlo estimate with a 99% two-sided interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub seed: u64,
}

impl EstimateReport {
    /// Proportion `successes / trials` with its Clopper–Pearson interval.
    pub fn bernoulli(name: impl Into<String>, successes: u64, trials: u64, seed: u64) -> Self {
        let (ci_low, ci_high) = clopper_pearson(successes, trials, CONFIDENCE);
        EstimateReport { name: name.into(), point: successes as f64 / trials as f64, ci_low, ci_high, trials, seed }
    }

    /// `|a - b|` with the interval implied by the two component intervals.
    pub fn abs_difference(name: impl Into<String>, a: &EstimateReport, b: &EstimateReport) -> Self {
        let point = (a.point - b.point).abs();
        let ci_high = (a.ci_high - b.ci_low).max(b.ci_high - a.ci_low).min(1.0);
        let ci_low = (a.ci_low - b.ci_high).max(b.ci_low - a.ci_high).max(0.0);
        EstimateReport { name: name.into(), point, ci_low: ci_low.min(point), ci_high: ci_high.max(point), trials: a.trials + b.trials, seed: a.seed }
    }

    /// Affine image `scale * x + shift` (interval endpoints swap for negative scale).
    pub fn affine(&self, name: impl Into<String>, scale: f64, shift: f64) -> Self {
        let (a, b) = (scale * self.ci_low + shift, scale * self.ci_high + shift);
        EstimateReport {
            name: name.into(),
            point: scale * self.point + shift,
            ci_low: a.min(b),
            ci_high: a.max(b),
            trials: self.trials,
            seed: self.seed,
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}
