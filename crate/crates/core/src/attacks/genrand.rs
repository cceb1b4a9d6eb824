//! Sampling of B's randomness around a planted index set `H`, and of full
//! simulated views built from it.

use crate::awec::AwecViewB;
use crate::channels::{Payload, Sampler};
use crate::error::{check_len, invalid, Error, Result};
use crate::signs::{IndexMask, Revealed, SignVector};
use crate::stream::RandomStream;
use rand::RngCore;

/// Redraws allowed when `H` comes out empty.
pub const MAX_RETRIES: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct GenRandDraw {
    /// Adversary coins, `d` bits packed little-endian.
    pub coins: Vec<u64>,
    pub r: IndexMask,
    pub indices: Vec<usize>,
    /// First `ceil(k/4)` distinct drawn indices with `r_i = 0`, in draw order; empty if too few.
    pub h: Vec<usize>,
    /// Zero set of `r` minus `H`, increasing.
    pub h_bar: Vec<usize>,
    /// Fresh signs for the positions of `h_bar`.
    pub y_tilde_h_bar: SignVector,
}

pub fn gen_rand(n: usize, k: usize, d: usize, stream: &mut RandomStream) -> Result<GenRandDraw> {
    if n < 1 || k < 1 {
        return Err(invalid("gen_rand needs n >= 1 and k >= 1"));
    }
    let mut coins: Vec<u64> = (0..d.div_ceil(64)).map(|_| stream.next_u64()).collect();
    if d % 64 != 0 {
        if let Some(last) = coins.last_mut() {
            *last &= (1u64 << (d % 64)) - 1;
        }
    }
    let r = IndexMask::random(n, stream);
    let indices: Vec<usize> = (0..k).map(|_| stream.index(n)).collect();
    let m = k.div_ceil(4);
    let mut in_h = IndexMask::empty(n);
    let mut h = Vec::with_capacity(m);
    for &i in &indices {
        if h.len() == m {
            break;
        }
        if !r.contains(i) && !in_h.contains(i) {
            in_h.insert(i);
            h.push(i);
        }
    }
    if h.len() < m {
        h.clear();
        in_h = IndexMask::empty(n);
    }
    let h_bar: Vec<usize> = (0..n).filter(|&i| !r.contains(i) && !in_h.contains(i)).collect();
    let y_tilde_h_bar = SignVector::random(h_bar.len(), stream);
    Ok(GenRandDraw { coins, r, indices, h, h_bar, y_tilde_h_bar })
}

/// The part of a simulated view other than `x_H`.
#[derive(Clone, Debug, PartialEq)]
pub struct GenViewT {
    pub coins: Vec<u64>,
    pub y: SignVector,
    pub v: Payload,
    pub r: IndexMask,
    pub indices: Vec<usize>,
    pub h: Vec<usize>,
    pub h_bar: Vec<usize>,
    /// `ỹ` outside `H`.
    pub y_tilde_minus_h: Revealed,
    /// `x` outside `H`.
    pub x_minus_h: Revealed,
}

impl GenViewT {
    /// Assembles `t` from a draw and the channel values `x`, `y`, `v`.
    /// Coordinates of `x` on `H` are never read.
    pub fn assemble(draw: &GenRandDraw, x: &SignVector, y: &SignVector, v: &Payload) -> Result<Self> {
        let n = y.len();
        check_len(n, x.len())?;
        check_len(n, draw.r.len())?;
        let mut y_tilde = y.clone();
        y_tilde.scatter(&draw.h_bar, &draw.y_tilde_h_bar)?;
        let outside_h = IndexMask::from_indices(n, &draw.h)?.complement();
        Ok(GenViewT {
            coins: draw.coins.clone(),
            y: y.clone(),
            v: v.clone(),
            r: draw.r.clone(),
            indices: draw.indices.clone(),
            h: draw.h.clone(),
            h_bar: draw.h_bar.clone(),
            y_tilde_minus_h: Revealed::new(&y_tilde, &outside_h)?,
            x_minus_h: Revealed::new(x, &outside_h)?,
        })
    }

    /// B's AWEC erasure-branch view with `ỹ_H = s`.
    pub fn b_view(&self, s: &SignVector) -> Result<AwecViewB> {
        check_len(self.h.len(), s.len())?;
        let mut y_tilde = self.y_tilde_minus_h.to_subsequence();
        let outside: Vec<usize> = self.y_tilde_minus_h.positions().ones().collect();
        let mut full = SignVector::ones(self.y.len());
        full.scatter(&outside, &y_tilde)?;
        full.scatter(&self.h, s)?;
        y_tilde = full;
        let x_outside = self.x_minus_h.to_subsequence();
        let mut x_known = SignVector::ones(self.y.len());
        x_known.scatter(&outside, &x_outside)?;
        Ok(AwecViewB {
            y: self.y.clone(),
            v: self.v.clone(),
            r: self.r.clone(),
            x_r: Revealed::new(&x_known, &self.r)?,
            indices: Some(self.indices.clone()),
            y_tilde: Some(y_tilde),
        })
    }

    /// `<x_H̄, ỹ_H̄>`.
    pub fn h_bar_inner(&self) -> i64 {
        self.h_bar.iter().map(|&i| (self.x_minus_h.get(i).unwrap() * self.y_tilde_minus_h.get(i).unwrap()) as i64).sum()
    }

    /// Random stream determined by the adversary coins.
    pub fn coin_stream(&self) -> RandomStream {
        let seed = self.coins.iter().fold(0xcbf2_9ce4_8422_2325u64, |acc, &w| (acc ^ w).wrapping_mul(0x0000_0100_0000_01b3));
        RandomStream::from_seed(seed).derive_indexed("coins", self.coins.len() as u64)
    }
}

/// A simulated `(z, t)` pair together with the channel's `x` it was cut from.
#[derive(Clone, Debug, PartialEq)]
pub struct GenView {
    pub z: SignVector,
    pub t: GenViewT,
    pub x: SignVector,
}

/// One channel draw and one non-empty `gen_rand` draw, assembled into `(x_H, t)`.
pub fn gen_view(channel: &dyn Sampler, k: usize, d: usize, stream: &mut RandomStream) -> Result<GenView> {
    let n = channel.n();
    let sample = channel.sample(&mut stream.fork("channel"))?;
    for _ in 0..MAX_RETRIES {
        let draw = gen_rand(n, k, d, stream)?;
        if draw.h.is_empty() {
            continue;
        }
        let t = GenViewT::assemble(&draw, &sample.x, &sample.y, &sample.v)?;
        return Ok(GenView { z: sample.x.gather(&draw.h), t, x: sample.x });
    }
    Err(Error::RetriesExhausted(format!("H stayed empty for {MAX_RETRIES} draws (n = {n}, k = {k})")))
}
