//! View equivalence between the split-noise key-agreement protocol and its
//! reverse-order simulator.
//!
//! Both sides produce the joint statistic `(x, y, r, z, e_A, e_B)`. The real
//! side draws it from the split-noise channel with a fresh uniform mask `r`.
//! The simulator draws the noise first and assembles
//! `z = (<x_{-r}, y_{-r}> + e_A) + (<x_r, y_r> + e_B)`. The broken simulator
//! replaces `e_B` by a fresh draw after `z` is fixed.

use super::run_trials;
use crate::channels::laplace::DiscreteLaplace;
use crate::channels::{Channel, ChannelKind, ChannelSpec, Payload, Sampler};
use crate::error::{invalid, Result};
use crate::signs::{IndexMask, SignVector};
use crate::stream::RandomStream;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::BTreeMap;
use std::hash::{DefaultHasher, Hash, Hasher};

/// Largest `n` accepted by the experiment.
pub const MAX_N: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Simulator {
    Faithful,
    Broken,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct JointView {
    x: SignVector,
    y: SignVector,
    r: IndexMask,
    z: i64,
    e_a: i64,
    e_b: i64,
}

const FEATURES: [&str; 7] = ["inner", "mask-size", "inner-revealed", "z", "noise", "residual", "z-less-noise"];

impl JointView {
    /// Low-cardinality features, each hashed to a 16-bit bucket.
    fn features(&self) -> Result<[u16; 7]> {
        let ip = self.x.inner(&self.y)?;
        let ip_r = self.x.inner_masked(&self.y, &self.r)?;
        let values: [(i64, i64); 7] = [
            (ip, 0),
            (self.r.count() as i64, 0),
            (ip_r, 0),
            (self.z.clamp(-12, 12), 0),
            (self.e_a.clamp(-2, 2), self.e_b.clamp(-2, 2)),
            ((self.z - ip - self.e_a - self.e_b).clamp(-3, 3), 0),
            ((self.z - self.e_a - self.e_b).clamp(-8, 8), 0),
        ];
        let mut out = [0u16; 7];
        for (k, v) in values.iter().enumerate() {
            let mut h = DefaultHasher::new();
            (k, v).hash(&mut h);
            out[k] = h.finish() as u16;
        }
        Ok(out)
    }
}

fn real_view(channel: &Channel, stream: &mut RandomStream) -> Result<JointView> {
    let c = channel.sample(stream)?;
    let (Payload::SplitNoise { z, own_noise: e_a }, Payload::SplitNoise { own_noise: e_b, .. }) = (&c.u, &c.v) else {
        return Err(invalid("split-noise channel produced an unexpected payload"));
    };
    let r = IndexMask::random(c.x.len(), stream);
    Ok(JointView { z: *z, e_a: *e_a, e_b: *e_b, x: c.x, y: c.y, r })
}

fn simulated_view(n: usize, noise: &DiscreteLaplace, kind: Simulator, stream: &mut RandomStream) -> Result<JointView> {
    let x = SignVector::random(n, stream);
    let y = SignVector::random(n, stream);
    let r = IndexMask::random(n, stream);
    let e_a = noise.sample(stream);
    let mut e_b = noise.sample(stream);
    let z_a = x.inner_masked(&y, &r.complement())? + e_a;
    let z_b = x.inner_masked(&y, &r)? + e_b;
    if kind == Simulator::Broken {
        e_b = noise.sample(stream);
    }
    Ok(JointView { x, y, r, z: z_a + z_b, e_a, e_b })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureDivergence {
    pub feature: String,
    pub bins: usize,
    pub tv: f64,
    /// Expected TV between two independent samples of a common distribution.
    pub tv_noise: f64,
    pub chi2: f64,
    pub chi2_p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub n: usize,
    pub eps: f64,
    pub trials: u64,
    pub seed: u64,
    pub simulator: Simulator,
    /// Maximum hashed-histogram TV over the features.
    pub tv: f64,
    pub tv_noise: f64,
    pub features: Vec<FeatureDivergence>,
}

fn divergence(name: &str, a: &BTreeMap<u16, u64>, b: &BTreeMap<u16, u64>, trials: u64) -> Result<FeatureDivergence> {
    let mut keys: Vec<u16> = a.keys().chain(b.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let n = trials as f64;
    let (mut tv, mut tv_noise, mut chi2) = (0.0, 0.0, 0.0);
    for k in &keys {
        let (ca, cb) = (*a.get(k).unwrap_or(&0) as f64, *b.get(k).unwrap_or(&0) as f64);
        tv += (ca - cb).abs() / n / 2.0;
        let p = (ca + cb) / (2.0 * n);
        // E|N(0, 2p(1-p)/n)| summed and halved.
        tv_noise += (4.0 * p * (1.0 - p) / (std::f64::consts::PI * n)).sqrt() / 2.0;
        let expected = (ca + cb) / 2.0;
        chi2 += (ca - expected).powi(2) / expected + (cb - expected).powi(2) / expected;
    }
    let df = keys.len().saturating_sub(1);
    let chi2_p_value = if df == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(df as f64).map_err(|e| invalid(e.to_string()))?;
        1.0 - dist.cdf(chi2)
    };
    Ok(FeatureDivergence { feature: name.into(), bins: keys.len(), tv, tv_noise, chi2, chi2_p_value })
}

pub fn view_equivalence_appendix_a(n: usize, eps: f64, trials: u64, seed: u64, simulator: Simulator) -> Result<EquivalenceReport> {
    if !(1..=MAX_N).contains(&n) {
        return Err(invalid(format!("view equivalence supports 1 <= n <= {MAX_N}, got {n}")));
    }
    if trials == 0 {
        return Err(invalid("view equivalence needs at least one trial"));
    }
    let channel = Channel::new(ChannelSpec::new(ChannelKind::SplitNoise, n, eps, 0.0))?;
    let noise = DiscreteLaplace::for_epsilon(eps)?;
    let rows = run_trials(seed, "appendix-a", trials, |_, s| {
        let real = real_view(&channel, &mut s.fork("real"))?;
        let sim = simulated_view(n, &noise, simulator, &mut s.fork("simulator"))?;
        Ok((real.features()?, sim.features()?))
    })?;
    let mut features = Vec::with_capacity(FEATURES.len());
    for (k, name) in FEATURES.iter().enumerate() {
        let (mut a, mut b) = (BTreeMap::new(), BTreeMap::new());
        for (real, sim) in &rows {
            *a.entry(real[k]).or_insert(0u64) += 1;
            *b.entry(sim[k]).or_insert(0u64) += 1;
        }
        features.push(divergence(name, &a, &b, trials)?);
    }
    let tv = features.iter().map(|f| f.tv).fold(0.0, f64::max);
    let tv_noise = features.iter().map(|f| f.tv_noise).fold(0.0, f64::max);
    Ok(EquivalenceReport { n, eps, trials, seed, simulator, tv, tv_noise, features })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulator_reassembles_the_same_sum() {
        let noise = DiscreteLaplace::for_epsilon(1.0).unwrap();
        let mut s = RandomStream::from_seed(1);
        for _ in 0..200 {
            let v = simulated_view(8, &noise, Simulator::Faithful, &mut s).unwrap();
            assert_eq!(v.z, v.x.inner(&v.y).unwrap() + v.e_a + v.e_b);
        }
    }

    #[test]
    fn identical_histograms_have_zero_divergence() {
        let h: BTreeMap<u16, u64> = [(1, 30), (2, 70)].into();
        let d = divergence("f", &h, &h, 100).unwrap();
        assert_eq!(d.tv, 0.0);
        assert_eq!(d.chi2_p_value, 1.0);
    }

    #[test]
    fn rejects_large_n() {
        assert!(view_equivalence_appendix_a(17, 1.0, 10, 0, Simulator::Faithful).is_err());
    }
}
