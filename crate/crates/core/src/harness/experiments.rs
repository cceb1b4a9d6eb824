//! Attack and decoder experiments aggregated over many trials.

use super::run_trials;
use super::stats::EstimateReport;
use crate::attacks::dist::BTildeInput;
use crate::attacks::violation::violation_from_counts;
use crate::attacks::{attack_a_tilde, attack_b_tilde, Advice, Distinguisher, Estimator, Guess, PredictorTuning, ReferenceDist, ViolationVerdict};
use crate::channels::Sampler;
use crate::error::{invalid, Result};
use crate::wec::{gl_bits, gl_weak_decode};
use rand::RngCore;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub attack: String,
    pub adversary: String,
    /// Fraction of trials where the attack produced no guess.
    pub abstain: EstimateReport,
    pub verdict: ViolationVerdict,
}

fn summarize(attack: &str, adversary: &str, guesses: &[Guess], eps: f64, delta: f64, seed: u64) -> Result<AttackReport> {
    let total = guesses.len() as u64;
    let hits = guesses.iter().filter(|g| g.guess == Some(g.truth)).count() as u64;
    let misses = guesses.iter().filter(|g| g.guess == Some(-g.truth)).count() as u64;
    let mut verdict = violation_from_counts(hits, misses, total, eps, delta, seed)?;
    verdict.hit.name = format!("{attack}[{adversary}]|hit");
    verdict.miss.name = format!("{attack}[{adversary}]|miss");
    Ok(AttackReport {
        attack: attack.into(),
        adversary: adversary.into(),
        abstain: EstimateReport::bernoulli(format!("{attack}[{adversary}]|abstain"), total - hits - misses, total, seed),
        verdict,
    })
}

/// Algorithm Ã against a uniformly random coordinate of `y`, once per trial.
#[allow(clippy::too_many_arguments)]
pub fn a_tilde_experiment(
    channel: &dyn Sampler,
    a: &dyn Distinguisher,
    k: usize,
    tuning: PredictorTuning,
    eps: f64,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<AttackReport> {
    if trials == 0 {
        return Err(invalid("an attack needs at least one trial"));
    }
    let guesses = run_trials(seed, "a-tilde", trials, |_, s| {
        let c = channel.sample(&mut s.fork("channel"))?;
        let i = s.index(c.y.len());
        let advice = Advice { x: &c.x, y: &c.y };
        let out = attack_a_tilde(a, &advice, k, i, &c.y.remove_at(i)?, &c.x, &c.u, tuning, &mut s.fork("attack"))?;
        Ok(Guess { index: i, guess: out.guess, truth: c.y.get(i) })
    })?;
    summarize("a-tilde", a.name(), &guesses, eps, delta, seed)
}

/// Algorithm B̃ against a uniformly random coordinate of `x`, once per trial.
#[allow(clippy::too_many_arguments)]
pub fn b_tilde_experiment(
    channel: &dyn Sampler,
    b: &dyn Estimator,
    dist: &ReferenceDist,
    k: usize,
    d: usize,
    eps: f64,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<AttackReport> {
    if trials == 0 {
        return Err(invalid("an attack needs at least one trial"));
    }
    let guesses = run_trials(seed, "b-tilde", trials, |_, s| {
        let c = channel.sample(&mut s.fork("channel"))?;
        let i = s.index(c.x.len());
        let advice = Advice { x: &c.x, y: &c.y };
        let x_minus_i = c.x.remove_at(i)?;
        let input = BTildeInput { i, x_minus_i: &x_minus_i, y: &c.y, v: &c.v, k, d };
        let guess = attack_b_tilde(b, &advice, dist, channel, &input, &mut s.fork("attack"))?;
        Ok(Guess { index: i, guess, truth: c.x.get(i) })
    })?;
    summarize("b-tilde", b.name(), &guesses, eps, delta, seed)
}

/// Full-string recovery rate of the weak GL decoder against an oracle that answers
/// each query correctly with probability `accuracy`, independently.
pub fn gl_decode_experiment(n_bits: u32, accuracy: f64, samples: Option<usize>, trials: u64, seed: u64) -> Result<EstimateReport> {
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(invalid(format!("oracle accuracy must lie in [0, 1], got {accuracy}")));
    }
    if trials == 0 {
        return Err(invalid("decoding needs at least one trial"));
    }
    let mask = if n_bits >= 64 { u64::MAX } else { (1u64 << n_bits) - 1 };
    let wins = run_trials(seed, "gl-decode", trials, |_, s| {
        let secret = s.next_u64() & mask;
        let mut noise = s.fork("oracle");
        let mut pred = |r: u64| gl_bits(secret, r) ^ u8::from(!noise.bernoulli(accuracy));
        Ok(gl_weak_decode(&mut pred, n_bits, samples, &mut s.fork("decoder"))? == secret)
    })?;
    Ok(EstimateReport::bernoulli("gl-recovery", wins.iter().filter(|&&w| w).count() as u64, trials, seed))
}
