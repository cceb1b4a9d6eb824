//! Approximate weak erasure channel built from a DP inner-product channel.
//!
//! A reveals `x_r` for a random mask `r`. B flips a coin: on heads it reveals
//! `y_{-r}` and outputs `out(v) - <x_r, y_r>`; on tails it first resamples `k`
//! random coordinates of `y`, reveals the noisy `y_{-r}` and outputs nothing.
//! A always outputs `<x_{-r}, ŷ_{-r}>`.

use crate::channels::{Payload, Sampler};
use crate::error::{check_len, invalid, Error, Result};
use crate::signs::{IndexMask, Revealed, SignVector};
use crate::stream::RandomStream;
use serde::{Deserialize, Serialize};

/// Protocol parameters. `k` is derived from the others unless overridden.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AwecParams {
    pub n: usize,
    /// Accuracy radius of the underlying channel.
    pub ell: u64,
    pub eps: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Number of resampled indices in the erasure branch.
    pub k: usize,
    pub k_override: bool,
}

pub const DEFAULT_LAMBDA1: f64 = 1.0;
pub const DEFAULT_LAMBDA2: f64 = 10.0;

/// `floor(e^(lambda1 * eps) * lambda2 * ell^2)`.
pub fn derived_k(eps: f64, lambda1: f64, lambda2: f64, ell: u64) -> Result<u64> {
    if !(lambda1 > 0.0 && lambda2 > 0.0) {
        return Err(invalid("lambda1 and lambda2 must be positive"));
    }
    let k = ((lambda1 * eps).exp() * lambda2 * (ell as f64).powi(2)).floor();
    if !k.is_finite() || k > u64::MAX as f64 {
        return Err(invalid(format!("k overflows for eps = {eps}, lambda1 = {lambda1}")));
    }
    Ok(k as u64)
}

impl AwecParams {
    pub fn new(n: usize, ell: u64, eps: f64, lambda1: f64, lambda2: f64) -> Result<Self> {
        if ell < 1 {
            return Err(invalid("ell must be at least 1"));
        }
        let k = derived_k(eps, lambda1, lambda2, ell)?;
        let p = AwecParams { n, ell, eps, lambda1, lambda2, k: k.min(usize::MAX as u64) as usize, k_override: false };
        p.check_k()?;
        Ok(p)
    }

    /// Parameters with `k` given directly; the derived value need not lie in `[1, n]`.
    pub fn overridden(n: usize, ell: u64, eps: f64, lambda1: f64, lambda2: f64, k: usize) -> Result<Self> {
        if ell < 1 {
            return Err(invalid("ell must be at least 1"));
        }
        derived_k(eps, lambda1, lambda2, ell)?;
        AwecParams { n, ell, eps, lambda1, lambda2, k, k_override: true }.checked()
    }

    fn checked(self) -> Result<Self> {
        self.check_k()?;
        Ok(self)
    }

    /// Replaces the derived `k`.
    pub fn with_k(mut self, k: usize) -> Result<Self> {
        self.k = k;
        self.k_override = true;
        self.check_k()?;
        Ok(self)
    }

    fn check_k(&self) -> Result<()> {
        if self.k < 1 || self.k > self.n {
            return Err(invalid(format!("k = {} must lie in [1, n = {}]", self.k, self.n)));
        }
        Ok(())
    }

    /// Advisory notes on where the parameters sit relative to the asymptotic regime.
    pub fn regime_diagnostics(&self, delta: f64) -> Vec<String> {
        let n = self.n as f64;
        let mut notes = Vec::new();
        let eps_cap = n.ln().powf(0.9);
        if self.eps > eps_cap {
            notes.push(format!("eps = {} exceeds ln(n)^0.9 = {eps_cap:.4}", self.eps));
        }
        if delta > 1.0 / (3.0 * n) {
            notes.push(format!("delta = {delta} exceeds 1/(3n) = {:.3e}", 1.0 / (3.0 * n)));
        }
        notes.push(format!(
            "ell = {} against n^(1/6) = {:.3}; the constants c1 = lambda1/2 + 1/6 = {:.4} and c2 have no numeric value",
            self.ell,
            n.powf(1.0 / 6.0),
            self.lambda1 / 2.0 + 1.0 / 6.0
        ));
        notes
    }
}

/// A's view: input, channel payload, mask and the revealed `ŷ_{-r}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AwecViewA {
    pub x: SignVector,
    pub u: Payload,
    pub r: IndexMask,
    pub y_hat: Revealed,
}

/// B's view. `indices` and `y_tilde` are present only in the erasure branch.
#[derive(Clone, Debug, PartialEq)]
pub struct AwecViewB {
    pub y: SignVector,
    pub v: Payload,
    pub r: IndexMask,
    pub x_r: Revealed,
    pub indices: Option<Vec<usize>>,
    pub y_tilde: Option<SignVector>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AwecOutcome {
    pub o_a: i64,
    pub view_a: AwecViewA,
    /// `None` is the erasure symbol.
    pub o_b: Option<i64>,
    pub view_b: AwecViewB,
}

impl AwecOutcome {
    pub fn erased(&self) -> bool {
        self.o_b.is_none()
    }

    pub fn record(&self) -> TrialRecord {
        TrialRecord {
            erased: self.erased(),
            o_a: self.o_a,
            o_b: self.o_b,
            gap: self.o_b.map(|b| self.o_a.abs_diff(b)),
        }
    }
}

/// One line of the trial log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub erased: bool,
    pub o_a: i64,
    pub o_b: Option<i64>,
    pub gap: Option<u64>,
}

/// Runs one execution of the protocol over a fresh channel draw.
pub fn run_awec(channel: &dyn Sampler, params: &AwecParams, stream: &mut RandomStream) -> Result<AwecOutcome> {
    check_len(params.n, channel.n())?;
    params.check_k()?;
    let sample = channel.sample(&mut stream.fork("channel"))?;
    let out_v = sample.v.designated_output().ok_or_else(|| invalid("channel has no designated output"))?;
    if sample.out_v != Some(out_v) {
        return Err(Error::InvalidParameter("channel sample carries an out_v that disagrees with v".into()));
    }
    let n = params.n;
    let mut a_stream = stream.fork("party-a");
    let mut b_stream = stream.fork("party-b");

    let r = IndexMask::random(n, &mut a_stream);
    let x_r = Revealed::new(&sample.x, &r)?;
    let hidden = r.complement();

    let erase = b_stream.bit();
    let (o_b, y_hat, indices, y_tilde) = if !erase {
        let o_b = out_v - x_r.inner(&sample.y)?;
        (Some(o_b), Revealed::new(&sample.y, &hidden)?, None, None)
    } else {
        let indices: Vec<usize> = (0..params.k).map(|_| b_stream.index(n)).collect();
        let mut noisy = sample.y.clone();
        noisy.resample_at(&indices, &mut b_stream);
        (None, Revealed::new(&noisy, &hidden)?, Some(indices), Some(noisy))
    };
    let o_a = y_hat.inner(&sample.x)?;
    Ok(AwecOutcome {
        o_a,
        view_a: AwecViewA { x: sample.x, u: sample.u, r: r.clone(), y_hat },
        o_b,
        view_b: AwecViewB { y: sample.y, v: sample.v, r, x_r, indices, y_tilde },
    })
}

/// Number of coordinates where `y` and `y_tilde` differ.
pub fn count_flipped(y: &SignVector, y_tilde: &SignVector) -> Result<usize> {
    Ok(y.differing_positions(y_tilde)?.len())
}
