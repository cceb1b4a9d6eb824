//! The `Dist` interface, a reference heuristic for it, and Algorithm B̃.

use super::genrand::{gen_rand, gen_view, GenView, GenViewT};
use super::{Advice, Estimator};
use crate::channels::{Payload, Sampler};
use crate::error::{check_len, invalid, Result};
use crate::signs::{Sign, SignVector};
use crate::stream::RandomStream;

/// Oracles available to a `Dist` implementation.
pub struct DistOracles<'a> {
    /// Fresh simulated `(z, t)` pairs.
    pub gen_view: &'a dyn Fn(&mut RandomStream) -> Result<GenView>,
    /// `f(s, t)`, meant to approximate `<z, s>`.
    pub f: &'a dyn Fn(&SignVector, &GenViewT) -> Result<i64>,
}

/// Decides whether `z` is the vector that `f` tracks, given that it may differ
/// from it in position `j`.
pub trait Dist: Send + Sync {
    fn decide(&self, j: usize, z: &SignVector, t: &GenViewT, oracles: &DistOracles<'_>, stream: &mut RandomStream) -> Result<bool>;
}

/// Residual-acceptance heuristic standing in for the external `Dist`.
///
/// Draws `n_d` uniform `s`, and accepts `z` when the fraction of residuals
/// `|f(s, t) - <z, s>| <= a` exceeds a threshold. Without a fixed threshold it
/// calibrates one as the midpoint between the acceptance rates of matched and
/// one-flip-mismatched `gen_view` draws.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceDist {
    pub n_d: usize,
    pub a: i64,
    pub calibration_draws: usize,
    pub threshold: Option<f64>,
}

impl Default for ReferenceDist {
    fn default() -> Self {
        ReferenceDist { n_d: 512, a: 0, calibration_draws: 4, threshold: None }
    }
}

fn acceptance(z: &SignVector, t: &GenViewT, f: &dyn Fn(&SignVector, &GenViewT) -> Result<i64>, a: i64, n_d: usize, stream: &mut RandomStream) -> Result<f64> {
    let mut hits = 0usize;
    for _ in 0..n_d {
        let s = SignVector::random(z.len(), stream);
        if (f(&s, t)? - z.inner(&s)?).abs() <= a {
            hits += 1;
        }
    }
    Ok(hits as f64 / n_d as f64)
}

impl ReferenceDist {
    /// Midpoint between matched and mismatched acceptance on fresh simulated views.
    pub fn calibrate(&self, oracles: &DistOracles<'_>, stream: &mut RandomStream) -> Result<f64> {
        if self.calibration_draws == 0 {
            return Err(invalid("calibration needs at least one draw"));
        }
        let (mut matched, mut mismatched) = (0.0, 0.0);
        for _ in 0..self.calibration_draws {
            let g = (oracles.gen_view)(stream)?;
            matched += acceptance(&g.z, &g.t, oracles.f, self.a, self.n_d, stream)?;
            let j = stream.index(g.z.len());
            mismatched += acceptance(&g.z.flip_at(j)?, &g.t, oracles.f, self.a, self.n_d, stream)?;
        }
        Ok((matched + mismatched) / (2.0 * self.calibration_draws as f64))
    }
}

impl Dist for ReferenceDist {
    fn decide(&self, j: usize, z: &SignVector, t: &GenViewT, oracles: &DistOracles<'_>, stream: &mut RandomStream) -> Result<bool> {
        reference_dist(self, oracles, j, z, t, stream)
    }
}

pub fn reference_dist(
    config: &ReferenceDist,
    oracles: &DistOracles<'_>,
    j: usize,
    z: &SignVector,
    t: &GenViewT,
    stream: &mut RandomStream,
) -> Result<bool> {
    if j >= z.len() || config.n_d == 0 {
        return Err(invalid("reference dist needs j < |z| and n_d >= 1"));
    }
    let threshold = match config.threshold {
        Some(th) => th,
        None => config.calibrate(oracles, &mut stream.fork("calibration"))?,
    };
    Ok(acceptance(z, t, oracles.f, config.a, config.n_d, stream)? > threshold)
}

/// `f(s, t) = B_psi(s, t') - <x_H̄, ỹ_H̄>`: B's estimate of A's output on the
/// view where `ỹ_H = s`, minus the part of that output B can compute itself.
pub fn f_from_estimator(b: &dyn Estimator, advice: &Advice<'_>, s: &SignVector, t: &GenViewT) -> Result<i64> {
    let view = t.b_view(s)?;
    Ok(b.estimate(&view, advice, &mut t.coin_stream()) - t.h_bar_inner())
}

/// Inputs of one B̃ run.
pub struct BTildeInput<'a> {
    pub i: usize,
    /// `x` with coordinate `i` removed.
    pub x_minus_i: &'a SignVector,
    pub y: &'a SignVector,
    pub v: &'a Payload,
    /// Resampled index count of the AWEC being attacked.
    pub k: usize,
    /// Coin length of `b`.
    pub d: usize,
}

/// Algorithm B̃: turns an estimator for A's output into a guess for `x_i`.
pub fn attack_b_tilde(
    b: &dyn Estimator,
    advice: &Advice<'_>,
    dist: &dyn Dist,
    channel: &dyn Sampler,
    input: &BTildeInput<'_>,
    stream: &mut RandomStream,
) -> Result<Option<Sign>> {
    let n = channel.n();
    check_len(n, input.y.len())?;
    check_len(n - 1, input.x_minus_i.len())?;
    if input.i >= n {
        return Err(invalid(format!("index {} out of range for n = {n}", input.i)));
    }
    let draw = gen_rand(n, input.k, input.d, stream)?;
    let Some(j) = draw.h.iter().position(|&h| h == input.i) else {
        return Ok(None);
    };
    // x_i is unknown; the placeholder sits inside H and never enters t.
    let x_placeholder = input.x_minus_i.insert_at(input.i, 1)?;
    let t = GenViewT::assemble(&draw, &x_placeholder, input.y, input.v)?;
    let z_plus = x_placeholder.gather(&draw.h);
    let z_minus = z_plus.flip_at(j)?;
    debug_assert_eq!(z_plus.differing_positions(&z_minus)?, vec![j]);
    let bit: Sign = stream.sign();
    let z_b = if bit == 1 { z_plus } else { z_minus };
    let gv = |s: &mut RandomStream| gen_view(channel, input.k, input.d, s);
    let f = |s: &SignVector, t: &GenViewT| f_from_estimator(b, advice, s, t);
    let oracles = DistOracles { gen_view: &gv, f: &f };
    Ok(dist.decide(j, &z_b, &t, &oracles, &mut stream.fork("dist"))?.then_some(bit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::genrand::gen_view;
    use crate::channels::{Channel, ChannelKind, ChannelSpec};

    struct Always(bool);
    impl Dist for Always {
        fn decide(&self, _: usize, _: &SignVector, _: &GenViewT, _: &DistOracles<'_>, _: &mut RandomStream) -> Result<bool> {
            Ok(self.0)
        }
    }

    fn setup() -> (Channel, GenView) {
        let ch = Channel::new(ChannelSpec::new(ChannelKind::TrustedLaplace, 40, 1.0, 0.0)).unwrap();
        let g = gen_view(&ch, 12, 4, &mut RandomStream::from_seed(5)).unwrap();
        (ch, g)
    }

    #[test]
    fn exact_tracking_f_is_accepted() {
        let (ch, g) = setup();
        let z = g.z.clone();
        let f = |s: &SignVector, _: &GenViewT| z.inner(s);
        let gv = |s: &mut RandomStream| gen_view(&ch, 12, 4, s);
        let oracles = DistOracles { gen_view: &gv, f: &f };
        let cfg = ReferenceDist { threshold: Some(0.5), ..Default::default() };
        let mut s = RandomStream::from_seed(1);
        assert!(reference_dist(&cfg, &oracles, 0, &g.z, &g.t, &mut s).unwrap());
        assert!(!reference_dist(&cfg, &oracles, 0, &g.z.flip_at(0).unwrap(), &g.t, &mut s).unwrap());
    }

    #[test]
    fn uniform_noise_f_is_rejected() {
        let (ch, g) = setup();
        let noise = std::sync::Mutex::new(RandomStream::from_seed(9));
        let f = |_: &SignVector, _: &GenViewT| Ok(noise.lock().unwrap().range_inclusive(-40, 40));
        let gv = |s: &mut RandomStream| gen_view(&ch, 12, 4, s);
        let oracles = DistOracles { gen_view: &gv, f: &f };
        let cfg = ReferenceDist { threshold: Some(0.5), a: 1, ..Default::default() };
        assert!(!reference_dist(&cfg, &oracles, 0, &g.z, &g.t, &mut RandomStream::from_seed(2)).unwrap());
    }

    #[test]
    fn constant_zero_dist_never_guesses() {
        let ch = Channel::new(ChannelSpec::new(ChannelKind::TrustedLaplace, 20, 1.0, 0.0)).unwrap();
        let mut s = RandomStream::from_seed(3);
        let est = crate::attacks::Builtin::Constant.estimator().unwrap();
        for _ in 0..200 {
            let c = ch.sample(&mut s).unwrap();
            let i = s.index(20);
            let xm = c.x.remove_at(i).unwrap();
            let input = BTildeInput { i, x_minus_i: &xm, y: &c.y, v: &c.v, k: 8, d: 0 };
            let advice = Advice { x: &c.x, y: &c.y };
            assert_eq!(attack_b_tilde(est.as_ref(), &advice, &Always(false), &ch, &input, &mut s).unwrap(), None);
        }
    }
}
