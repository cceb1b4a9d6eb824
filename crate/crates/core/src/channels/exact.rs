//! Exact privacy-loss enumeration for small channels.
//!
//! For every pair of neighbouring inputs of one party, computes the largest
//! log-likelihood ratio of the other party's view over the noise support
//! truncated at total mass `TRUNCATION_MASS`.

use super::laplace::DiscreteLaplace;
use super::protocol::Role;
use super::{keep_probability, ChannelKind, ChannelSpec};
use crate::error::{invalid, Result};
use std::collections::BTreeSet;

pub const TRUNCATION_MASS: f64 = 1e-12;
/// Largest `n` accepted by the enumeration.
pub const MAX_EXACT_N: usize = 10;

/// Distinct `(<x,y>, <x',y>)` pairs over all `x`, `y` and single-coordinate flips `x' = x^(i)`.
fn neighbour_inner_products(n: usize) -> BTreeSet<(i64, i64)> {
    let mut pairs = BTreeSet::new();
    for x in 0u32..1 << n {
        for y in 0u32..1 << n {
            let s = n as i64 - 2 * (x ^ y).count_ones() as i64;
            for i in 0..n {
                let s2 = n as i64 - 2 * ((x ^ (1 << i)) ^ y).count_ones() as i64;
                pairs.insert((s, s2));
            }
        }
    }
    pairs
}

/// Maximum over neighbouring inputs of the other party, and over views of `observer`,
/// of `ln P[view | input] - ln P[view | neighbour]`.
pub fn max_privacy_loss(spec: &ChannelSpec, observer: Role) -> Result<f64> {
    spec.validate()?;
    let n = spec.n;
    if n > MAX_EXACT_N {
        return Err(invalid(format!("exact enumeration supports n <= {MAX_EXACT_N}, got {n}")));
    }
    match (spec.kind, observer) {
        (ChannelKind::TrustedLaplace, _) | (ChannelKind::Leaky, Role::B) => {
            let noise = DiscreteLaplace::for_epsilon(spec.eps)?;
            let k = noise.truncation_radius(TRUNCATION_MASS) as i64;
            let mut worst = f64::NEG_INFINITY;
            for (s, s2) in neighbour_inner_products(n) {
                for z in s - k..=s + k {
                    worst = worst.max(noise.log_mass(z - s) - noise.log_mass(z - s2));
                }
            }
            Ok(worst)
        }
        (ChannelKind::Leaky, Role::A) => {
            // The leaked coordinate has likelihood 1 under y and 0 under y^(j).
            Ok(f64::INFINITY)
        }
        (ChannelKind::SplitNoise, _) => {
            let noise = DiscreteLaplace::for_epsilon(spec.eps)?;
            let k = noise.truncation_radius(TRUNCATION_MASS) as i64;
            let mut worst = f64::NEG_INFINITY;
            for (s, s2) in neighbour_inner_products(n) {
                for own in -k..=k {
                    for z in s + own - k..=s + own + k {
                        let lhs = noise.log_mass(own) + noise.log_mass(z - s - own);
                        let rhs = noise.log_mass(own) + noise.log_mass(z - s2 - own);
                        worst = worst.max(lhs - rhs);
                    }
                }
            }
            Ok(worst)
        }
        (ChannelKind::RandomizedResponse, Role::A) => Ok(0.0),
        (ChannelKind::RandomizedResponse, Role::B) => {
            let p = keep_probability(spec.eps);
            let log_p = p.ln();
            let log_q = (1.0 - p).ln();
            let mut worst = f64::NEG_INFINITY;
            for x in 0u32..1 << n {
                for noisy in 0u32..1 << n {
                    let ll = |x: u32| {
                        let flips = (x ^ noisy).count_ones() as f64;
                        flips * log_q + (n as f64 - flips) * log_p
                    };
                    for i in 0..n {
                        worst = worst.max(ll(x) - ll(x ^ (1 << i)));
                    }
                }
            }
            Ok(worst)
        }
        (ChannelKind::WrappedProtocol, _) => Err(invalid("exact enumeration is not available for wrapped protocols")),
    }
}
