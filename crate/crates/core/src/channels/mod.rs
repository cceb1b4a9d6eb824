//! DP inner-product channels.
//!
//! A channel draws `((x, u), (y, v))`: each party's input plus what it observes.
//! B's payload `v` carries the designated output, an estimate of `<x, y>`.
//! Every sampler accepts optionally pinned inputs so audits can fix one side.

pub mod exact;
pub mod laplace;
pub mod protocol;

use crate::error::{check_len, invalid, Error, Result};
use crate::signs::{Sign, SignVector};
use crate::stream::RandomStream;
use laplace::DiscreteLaplace;
use protocol::{Entry, TwoPartyProtocol};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    RandomizedResponse,
    TrustedLaplace,
    SplitNoise,
    Leaky,
    WrappedProtocol,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 5] = [
        ChannelKind::RandomizedResponse,
        ChannelKind::TrustedLaplace,
        ChannelKind::SplitNoise,
        ChannelKind::Leaky,
        ChannelKind::WrappedProtocol,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ChannelKind::RandomizedResponse => "randomized-response",
            ChannelKind::TrustedLaplace => "trusted-laplace",
            ChannelKind::SplitNoise => "split-noise",
            ChannelKind::Leaky => "leaky",
            ChannelKind::WrappedProtocol => "wrapped-protocol",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ChannelKind::ALL
            .into_iter()
            .find(|k| k.key() == s)
            .ok_or_else(|| Error::Config(format!("unknown channel kind `{s}`")))
    }
}

/// Protocols available to the `wrapped-protocol` kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WrappedKind {
    LaplaceRelease,
    RandomizedResponse,
}

impl FromStr for WrappedKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laplace-release" => Ok(WrappedKind::LaplaceRelease),
            "randomized-response" => Ok(WrappedKind::RandomizedResponse),
            _ => Err(Error::Config(format!("unknown wrapped protocol `{s}`"))),
        }
    }
}

/// Channel description. Indices are 0-based here; text records use 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub n: usize,
    /// Privacy budget in nats; `inf` gives the noiseless limit.
    pub eps: f64,
    pub delta: f64,
    /// Coordinate of `y` leaked to A by the `leaky` kind.
    pub leak_index: Option<usize>,
    /// Protocol run by the `wrapped-protocol` kind.
    pub protocol: Option<WrappedKind>,
}

impl ChannelSpec {
    pub fn new(kind: ChannelKind, n: usize, eps: f64, delta: f64) -> Self {
        ChannelSpec { kind, n, eps, delta, leak_index: None, protocol: None }
    }

    pub fn with_leak_index(mut self, j: usize) -> Self {
        self.leak_index = Some(j);
        self
    }

    pub fn with_protocol(mut self, p: WrappedKind) -> Self {
        self.protocol = Some(p);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(invalid("channel size n must be at least 1"));
        }
        if !(self.eps >= 0.0) {
            return Err(invalid(format!("epsilon must be non-negative, got {}", self.eps)));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(invalid(format!("delta must lie in [0, 1), got {}", self.delta)));
        }
        match self.kind {
            ChannelKind::Leaky => match self.leak_index {
                Some(j) if j < self.n => Ok(()),
                Some(j) => Err(invalid(format!("leak index {} out of range for n = {}", j + 1, self.n))),
                None => Err(invalid("leaky channel needs a leak index")),
            },
            ChannelKind::WrappedProtocol if self.protocol.is_none() => Err(invalid("wrapped-protocol channel needs a protocol")),
            _ => Ok(()),
        }
    }

    /// Parses a `key = value` record; `leak_index` is 1-based.
    pub fn from_record(record: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| record.get(k).map(|s| s.trim());
        let parse_f = |k: &str, default: f64| -> Result<f64> {
            get(k).map_or(Ok(default), |v| v.parse().map_err(|_| Error::Config(format!("`{k}` is not a number: {v}"))))
        };
        let kind: ChannelKind = get("kind").ok_or_else(|| Error::Config("channel record needs `kind`".into()))?.parse()?;
        let n = get("n")
            .ok_or_else(|| Error::Config("channel record needs `n`".into()))?
            .parse()
            .map_err(|_| Error::Config("`n` is not a positive integer".into()))?;
        let mut spec = ChannelSpec::new(kind, n, parse_f("eps", 1.0)?, parse_f("delta", 0.0)?);
        if let Some(j) = get("leak_index") {
            let j: usize = j.parse().map_err(|_| Error::Config(format!("`leak_index` is not an index: {j}")))?;
            if j == 0 {
                return Err(Error::Config("`leak_index` is 1-based".into()));
            }
            spec.leak_index = Some(j - 1);
        }
        if let Some(p) = get("protocol") {
            spec.protocol = Some(p.parse()?);
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// A party's channel payload.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Payload {
    Empty,
    /// Randomized copy of A's input with the resulting estimate.
    NoisyInput { noisy: SignVector, estimate: i64 },
    Estimate { z: i64 },
    SplitNoise { z: i64, own_noise: i64 },
    Leaky { z: i64, index: usize, leaked: Sign },
    Transcript { entries: Vec<Entry>, output: Option<i64> },
}

impl Payload {
    /// The estimate of `<x, y>` carried by this payload, if any.
    pub fn designated_output(&self) -> Option<i64> {
        match self {
            Payload::Empty => None,
            Payload::NoisyInput { estimate, .. } => Some(*estimate),
            Payload::Estimate { z } | Payload::SplitNoise { z, .. } | Payload::Leaky { z, .. } => Some(*z),
            Payload::Transcript { output, .. } => *output,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSample {
    pub x: SignVector,
    pub u: Payload,
    pub y: SignVector,
    pub v: Payload,
    pub out_v: Option<i64>,
}

/// Inputs fixed by the caller instead of drawn uniformly.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Pinned {
    pub x: Option<SignVector>,
    pub y: Option<SignVector>,
}

impl Pinned {
    pub fn x(x: SignVector) -> Self {
        Pinned { x: Some(x), y: None }
    }

    pub fn y(y: SignVector) -> Self {
        Pinned { x: None, y: Some(y) }
    }

    fn draw(&self, n: usize, stream: &mut RandomStream) -> Result<(SignVector, SignVector)> {
        let x = match &self.x {
            Some(x) => {
                check_len(n, x.len())?;
                x.clone()
            }
            None => SignVector::random(n, stream),
        };
        let y = match &self.y {
            Some(y) => {
                check_len(n, y.len())?;
                y.clone()
            }
            None => SignVector::random(n, stream),
        };
        Ok((x, y))
    }
}

/// Anything that draws channel samples.
pub trait Sampler: Send + Sync {
    fn n(&self) -> usize;
    fn sample_pinned(&self, pinned: &Pinned, stream: &mut RandomStream) -> Result<ChannelSample>;
    fn sample(&self, stream: &mut RandomStream) -> Result<ChannelSample> {
        self.sample_pinned(&Pinned::default(), stream)
    }
}

/// Probability that randomized response keeps a coordinate: `e^eps / (1 + e^eps)`.
pub fn keep_probability(eps: f64) -> f64 {
    1.0 / (1.0 + (-eps).exp())
}

pub(crate) fn randomize(x: &SignVector, eps: f64, stream: &mut RandomStream) -> SignVector {
    let p = keep_probability(eps);
    let mut out = x.clone();
    for i in 0..x.len() {
        if !stream.bernoulli(p) {
            out.set(i, -x.get(i));
        }
    }
    out
}

pub(crate) fn debiased_estimate(noisy: &SignVector, y: &SignVector, eps: f64) -> Result<i64> {
    let bias = 2.0 * keep_probability(eps) - 1.0;
    if bias <= 0.0 {
        return Err(invalid("randomized response at eps = 0 has no unbiased estimator"));
    }
    Ok((noisy.inner(y)? as f64 / bias).round() as i64)
}

fn expect_kind(spec: &ChannelSpec, kind: ChannelKind) -> Result<()> {
    spec.validate()?;
    if spec.kind != kind {
        return Err(invalid(format!("expected a {kind} spec, got {}", spec.kind)));
    }
    Ok(())
}

pub fn sample_randomized_response(spec: &ChannelSpec, pinned: &Pinned, stream: &mut RandomStream) -> Result<ChannelSample> {
    expect_kind(spec, ChannelKind::RandomizedResponse)?;
    if spec.eps == 0.0 {
        return Err(invalid("randomized response at eps = 0 has no unbiased estimator"));
    }
    let (x, y) = pinned.draw(spec.n, stream)?;
    let noisy = randomize(&x, spec.eps, stream);
    let estimate = debiased_estimate(&noisy, &y, spec.eps)?;
    Ok(ChannelSample { x, u: Payload::Empty, y, v: Payload::NoisyInput { noisy, estimate }, out_v: Some(estimate) })
}

fn laplace_draw(spec: &ChannelSpec, pinned: &Pinned, stream: &mut RandomStream) -> Result<(SignVector, SignVector, i64, i64)> {
    let noise = DiscreteLaplace::for_epsilon(spec.eps)?;
    let (x, y) = pinned.draw(spec.n, stream)?;
    let ip = x.inner(&y)?;
    let e = noise.sample(stream);
    Ok((x, y, ip, e))
}

pub fn sample_trusted_laplace(spec: &ChannelSpec, pinned: &Pinned, stream: &mut RandomStream) -> Result<ChannelSample> {
    expect_kind(spec, ChannelKind::TrustedLaplace)?;
    let (x, y, ip, e) = laplace_draw(spec, pinned, stream)?;
    let z = ip + e;
    Ok(ChannelSample { x, u: Payload::Estimate { z }, y, v: Payload::Estimate { z }, out_v: Some(z) })
}

pub fn sample_split_noise(spec: &ChannelSpec, pinned: &Pinned, stream: &mut RandomStream) -> Result<ChannelSample> {
    expect_kind(spec, ChannelKind::SplitNoise)?;
    let (x, y, ip, e_a) = laplace_draw(spec, pinned, stream)?;
    let e_b = DiscreteLaplace::for_epsilon(spec.eps)?.sample(stream);
    let z = ip + e_a + e_b;
    Ok(ChannelSample {
        x,
        u: Payload::SplitNoise { z, own_noise: e_a },
        y,
        v: Payload::SplitNoise { z, own_noise: e_b },
        out_v: Some(z),
    })
}

pub fn sample_leaky(spec: &ChannelSpec, pinned: &Pinned, stream: &mut RandomStream) -> Result<ChannelSample> {
    expect_kind(spec, ChannelKind::Leaky)?;
    let j = spec.leak_index.expect("validated");
    let (x, y, ip, e) = laplace_draw(spec, pinned, stream)?;
    let z = ip + e;
    let leaked = y.get(j);
    Ok(ChannelSample { x, u: Payload::Leaky { z, index: j, leaked }, y, v: Payload::Estimate { z }, out_v: Some(z) })
}

/// Uniform-input channel induced by running a two-party protocol.
pub fn wrap_protocol(protocol: &dyn TwoPartyProtocol, n: usize, pinned: &Pinned, stream: &mut RandomStream) -> Result<ChannelSample> {
    let (x, y) = pinned.draw(n, stream)?;
    let run = protocol::execute(protocol, &x, &y, stream)?;
    Ok(ChannelSample {
        x,
        u: Payload::Transcript { entries: run.view_a, output: run.output_a },
        y,
        out_v: run.output_b,
        v: Payload::Transcript { entries: run.view_b, output: run.output_b },
    })
}

/// A validated [`ChannelSpec`] ready to sample.
#[derive(Clone)]
pub struct Channel {
    spec: ChannelSpec,
    protocol: Option<Arc<dyn TwoPartyProtocol>>,
}

impl fmt::Debug for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Channel").field("spec", &self.spec).finish()
    }
}

impl Channel {
    pub fn new(spec: ChannelSpec) -> Result<Self> {
        spec.validate()?;
        if spec.kind == ChannelKind::RandomizedResponse && spec.eps == 0.0 {
            return Err(invalid("randomized response at eps = 0 has no unbiased estimator"));
        }
        if matches!(spec.kind, ChannelKind::TrustedLaplace | ChannelKind::SplitNoise | ChannelKind::Leaky) && spec.eps == 0.0 {
            return Err(invalid("laplace channels need eps > 0"));
        }
        let protocol: Option<Arc<dyn TwoPartyProtocol>> = match (spec.kind, spec.protocol) {
            (ChannelKind::WrappedProtocol, Some(WrappedKind::LaplaceRelease)) => {
                Some(Arc::new(protocol::LaplaceRelease { noise: DiscreteLaplace::for_epsilon(spec.eps)? }))
            }
            (ChannelKind::WrappedProtocol, Some(WrappedKind::RandomizedResponse)) => {
                if spec.eps == 0.0 {
                    return Err(invalid("randomized response at eps = 0 has no unbiased estimator"));
                }
                Some(Arc::new(protocol::RandomizedResponseRelease { eps: spec.eps }))
            }
            _ => None,
        };
        Ok(Channel { spec, protocol })
    }

    /// Wraps a caller-supplied protocol.
    pub fn from_protocol(n: usize, eps: f64, delta: f64, protocol: Arc<dyn TwoPartyProtocol>) -> Result<Self> {
        let spec = ChannelSpec::new(ChannelKind::WrappedProtocol, n, eps, delta);
        if n < 1 {
            return Err(invalid("channel size n must be at least 1"));
        }
        Ok(Channel { spec, protocol: Some(protocol) })
    }

    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }
}

impl Sampler for Channel {
    fn n(&self) -> usize {
        self.spec.n
    }

    fn sample_pinned(&self, pinned: &Pinned, stream: &mut RandomStream) -> Result<ChannelSample> {
        match self.spec.kind {
            ChannelKind::RandomizedResponse => sample_randomized_response(&self.spec, pinned, stream),
            ChannelKind::TrustedLaplace => sample_trusted_laplace(&self.spec, pinned, stream),
            ChannelKind::SplitNoise => sample_split_noise(&self.spec, pinned, stream),
            ChannelKind::Leaky => sample_leaky(&self.spec, pinned, stream),
            ChannelKind::WrappedProtocol => {
                let p = self.protocol.as_ref().expect("constructed with a protocol");
                wrap_protocol(p.as_ref(), self.spec.n, pinned, stream)
            }
        }
    }
}
