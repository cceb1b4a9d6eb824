//! Discrete Laplace (two-sided geometric) noise.

use crate::error::{invalid, Result};
use crate::stream::RandomStream;

/// Noise with `mass(k) ∝ exp(-|k| / t)` over the integers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteLaplace {
    t: f64,
}

impl DiscreteLaplace {
    /// Scale `t`; zero gives the point mass at 0.
    pub fn new(t: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(invalid(format!("laplace scale must be finite and non-negative, got {t}")));
        }
        Ok(DiscreteLaplace { t })
    }

    /// Scale `2/eps`, the calibration for sensitivity-2 queries. `eps = inf` is noiseless.
    pub fn for_epsilon(eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(invalid(format!("epsilon must be positive, got {eps}")));
        }
        Self::new(if eps.is_infinite() { 0.0 } else { 2.0 / eps })
    }

    pub fn scale(&self) -> f64 {
        self.t
    }

    /// Geometric ratio `exp(-1/t)`.
    pub fn ratio(&self) -> f64 {
        if self.t == 0.0 {
            0.0
        } else {
            (-1.0 / self.t).exp()
        }
    }

    pub fn mass(&self, k: i64) -> f64 {
        if self.t == 0.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        let q = self.ratio();
        (1.0 - q) / (1.0 + q) * q.powi(k.unsigned_abs().min(i32::MAX as u64) as i32)
    }

    /// Natural log of `mass(k)`; finite for every `k` when `t > 0`.
    pub fn log_mass(&self, k: i64) -> f64 {
        if self.t == 0.0 {
            return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
        }
        let q = self.ratio();
        ((1.0 - q) / (1.0 + q)).ln() - k.unsigned_abs() as f64 / self.t
    }

    /// `P[|N| > k]` for `k >= 0`.
    pub fn tail(&self, k: u64) -> f64 {
        if self.t == 0.0 {
            return 0.0;
        }
        let q = self.ratio();
        2.0 * q.powf(k as f64 + 1.0) / (1.0 + q)
    }

    /// Smallest `K` with `P[|N| > K] <= mass`.
    pub fn truncation_radius(&self, mass: f64) -> u64 {
        let mut k = 0;
        while self.tail(k) > mass {
            k += 1;
        }
        k
    }

    pub fn sample(&self, stream: &mut RandomStream) -> i64 {
        if self.t == 0.0 {
            return 0;
        }
        let lq = -1.0 / self.t;
        let mut geometric = || {
            let u = 1.0 - stream.uniform();
            (u.ln() / lq).floor() as i64
        };
        geometric() - geometric()
    }
}
