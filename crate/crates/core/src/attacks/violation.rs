//! Aggregating coordinate guesses into a DP-violation verdict.

use crate::error::{invalid, Result};
use crate::harness::stats::EstimateReport;
use crate::signs::Sign;
use serde::{Deserialize, Serialize};

/// One guess: coordinate, guessed sign (`None` abstains), true sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guess {
    pub index: usize,
    pub guess: Option<Sign>,
    pub truth: Sign,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationVerdict {
    pub hit: EstimateReport,
    pub miss: EstimateReport,
    pub eps: f64,
    pub delta: f64,
    /// `lower(hit) > e^eps * upper(miss) + delta`.
    pub violation: bool,
}

pub fn violation_from_counts(hits: u64, misses: u64, total: u64, eps: f64, delta: f64, seed: u64) -> Result<ViolationVerdict> {
    if total == 0 {
        return Err(invalid("no guesses to score"));
    }
    let hit = EstimateReport::bernoulli("hit", hits, total, seed);
    let miss = EstimateReport::bernoulli("miss", misses, total, seed);
    let violation = hit.ci_low > eps.exp() * miss.ci_high + delta;
    Ok(ViolationVerdict { hit, miss, eps, delta, violation })
}

pub fn dp_violation_score(guesses: &[Guess], eps: f64, delta: f64) -> Result<ViolationVerdict> {
    let hits = guesses.iter().filter(|g| g.guess == Some(g.truth)).count() as u64;
    let misses = guesses.iter().filter(|g| g.guess == Some(-g.truth)).count() as u64;
    violation_from_counts(hits, misses, guesses.len() as u64, eps, delta, 0)
}
