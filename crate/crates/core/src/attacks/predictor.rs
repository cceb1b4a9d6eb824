//! The predictor `G` and Algorithm Ã built on it.
//!
//! `G` is handed every coordinate of `z` except `z_i` and an oracle `F` whose
//! output shifts when coordinate `i` of its revealed input is flipped. It
//! estimates the mean of `F` with `z_i = +1`, with `z_i = -1` (both over masks
//! revealing `i`) and over masks hiding `i`, and names the candidate whose mean
//! matches the hidden-`i` mean.

use super::{Advice, Distinguisher};
use crate::awec::AwecViewA;
use crate::channels::Payload;
use crate::error::{check_len, invalid, Result};
use crate::signs::{IndexMask, Revealed, Sign, SignVector};
use crate::stream::RandomStream;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictorParams {
    pub gamma: f64,
    /// Samples per mean estimate.
    pub samples: usize,
    /// Decision threshold `gamma / 4`.
    pub threshold: f64,
}

impl PredictorParams {
    /// `s = ceil(128 ln(12 n) / gamma^2)`.
    pub fn sample_count(gamma: f64, n: usize) -> Result<f64> {
        if !(gamma > 0.0 && gamma < 1.0) || n == 0 {
            return Err(invalid(format!("need 0 < gamma < 1 and n >= 1, got gamma = {gamma}, n = {n}")));
        }
        Ok((128.0 * (12.0 * n as f64).ln() / (gamma * gamma)).ceil())
    }

    pub fn new(gamma: f64, n: usize) -> Result<Self> {
        let s = Self::sample_count(gamma, n)?;
        if s > usize::MAX as f64 {
            return Err(invalid("sample count overflows"));
        }
        Ok(PredictorParams { gamma, samples: s as usize, threshold: gamma / 4.0 })
    }

    /// Replaces the derived sample count.
    pub fn with_samples(mut self, samples: usize) -> Result<Self> {
        if samples == 0 {
            return Err(invalid("sample count must be positive"));
        }
        self.samples = samples;
        Ok(self)
    }
}

fn mask_with(n: usize, i: usize, selected: bool, stream: &mut RandomStream) -> IndexMask {
    let mut r = IndexMask::random(n, stream);
    if selected {
        r.insert(i);
    } else {
        r.remove(i);
    }
    r
}

/// Mean estimates behind one call of `G`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictorTrace {
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub mu_star: f64,
    pub guess: Option<Sign>,
}

/// Runs `G` and returns its estimates along with the guess.
pub fn predictor_g_traced<W: ?Sized>(
    params: &PredictorParams,
    f: &mut dyn FnMut(&IndexMask, &Revealed, &W) -> bool,
    i: usize,
    z_minus_i: &SignVector,
    w: &W,
    stream: &mut RandomStream,
) -> Result<PredictorTrace> {
    let n = z_minus_i.len() + 1;
    if i >= n {
        return Err(invalid(format!("index {i} out of range for n = {n}")));
    }
    let s = params.samples;
    let mut mean = |z: &SignVector, selected: bool, stream: &mut RandomStream| -> Result<f64> {
        let mut hits = 0usize;
        for _ in 0..s {
            let r = mask_with(n, i, selected, stream);
            if f(&r, &Revealed::new(z, &r)?, w) {
                hits += 1;
            }
        }
        Ok(hits as f64 / s as f64)
    };
    let z_plus = z_minus_i.insert_at(i, 1)?;
    let z_minus = z_minus_i.insert_at(i, -1)?;
    let mu_plus = mean(&z_plus, true, stream)?;
    let mu_minus = mean(&z_minus, true, stream)?;
    // Masks hide position i, so z_plus and z_minus give identical revealed inputs.
    let mu_star = mean(&z_plus, false, stream)?;
    let tau = params.threshold;
    let pick = |near: f64, far: f64| (near - mu_star).abs() < tau && (far - mu_star).abs() > tau;
    let guess = if pick(mu_plus, mu_minus) {
        Some(1)
    } else if pick(mu_minus, mu_plus) {
        Some(-1)
    } else {
        None
    };
    Ok(PredictorTrace { mu_plus, mu_minus, mu_star, guess })
}

/// `G`: a guess for `z_i`, or `None` for the abstain symbol.
pub fn predictor_g<W: ?Sized>(
    params: &PredictorParams,
    f: &mut dyn FnMut(&IndexMask, &Revealed, &W) -> bool,
    i: usize,
    z_minus_i: &SignVector,
    w: &W,
    stream: &mut RandomStream,
) -> Result<Option<Sign>> {
    Ok(predictor_g_traced(params, f, i, z_minus_i, w, stream)?.guess)
}

/// One run of Algorithm Ã.
#[derive(Clone, Debug, PartialEq)]
pub struct ATildeOutcome {
    pub guess: Option<Sign>,
    /// Hybrid index in `1..=k`.
    pub j: usize,
    /// The partially resampled `y_{-i}` handed to `G`.
    pub z_minus_i: SignVector,
}

/// Overrides for the predictor inside Ã.
///
/// At the default `gamma = 1/(2000 k)` the sample count is far beyond desk
/// scale, and cutting `samples` alone leaves a threshold `gamma/4` far below
/// the estimates' resolution. Raising `gamma` moves both together.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictorTuning {
    pub gamma: Option<f64>,
    pub samples: Option<usize>,
}

/// Algorithm Ã: turns a distinguisher `a` for A's AWEC view into a guess for `y_i`.
#[allow(clippy::too_many_arguments)]
pub fn attack_a_tilde(
    a: &dyn Distinguisher,
    advice: &Advice<'_>,
    k: usize,
    i: usize,
    y_minus_i: &SignVector,
    x: &SignVector,
    u: &Payload,
    tuning: PredictorTuning,
    stream: &mut RandomStream,
) -> Result<ATildeOutcome> {
    let n = x.len();
    check_len(n - 1, y_minus_i.len())?;
    if k < 1 {
        return Err(invalid("k must be at least 1"));
    }
    let mut params = PredictorParams::new(tuning.gamma.unwrap_or(1.0 / (2000.0 * k as f64)), n)?;
    if let Some(s) = tuning.samples {
        params = params.with_samples(s)?;
    }
    let j = 1 + stream.index(k);
    let mut z = y_minus_i.insert_at(i, 1)?;
    let resampled: Vec<usize> = (1..j).map(|_| stream.index(n)).filter(|&t| t != i).collect();
    z.resample_at(&resampled, stream);
    let z_minus_i = z.remove_at(i)?;
    let mut a_stream = stream.fork("distinguisher");
    let mut f = |r: &IndexMask, z_r: &Revealed, _: &()| {
        let view = AwecViewA { x: x.clone(), u: u.clone(), r: r.complement(), y_hat: z_r.clone() };
        a.distinguish(&view, advice, &mut a_stream)
    };
    let guess = predictor_g(&params, &mut f, i, &z_minus_i, &(), stream)?;
    Ok(ATildeOutcome { guess, j, z_minus_i })
}
