//! Built-in adversaries selectable by string key.

use super::{Advice, ChannelView, Distinguisher, Estimator, Guesser, PairAdvice, ViewAdversary};
use crate::awec::{AwecViewA, AwecViewB};
use crate::channels::Payload;
use crate::error::{Error, Result};
use crate::signs::Revealed;
use crate::stream::RandomStream;
use crate::wec::{wec_bit, BucketParams, WecViewB};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Builtin {
    /// Always answers 0.
    Constant,
    /// Reads a coordinate of `y` leaked into A's payload.
    LeakyCoordinate,
    /// Knows the true inputs and recomputes A's output exactly.
    ExactOA,
    /// Majority of the revealed signs.
    RevealedMajority,
    /// Uniform random bit.
    RandomBit,
    /// Compares revealed signs with a hard-wired copy of `y`.
    RevealedMismatch,
    /// B's honest estimate `out(v) - <x_r, y_r>`, ignoring erasure.
    Natural,
    /// Likelihood test on the designated output between the two neighbours.
    Threshold,
}

impl Builtin {
    pub const ALL: [Builtin; 8] = [
        Builtin::Constant,
        Builtin::LeakyCoordinate,
        Builtin::ExactOA,
        Builtin::RevealedMajority,
        Builtin::RandomBit,
        Builtin::RevealedMismatch,
        Builtin::Natural,
        Builtin::Threshold,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Builtin::Constant => "constant",
            Builtin::LeakyCoordinate => "leaky-coordinate",
            Builtin::ExactOA => "exact-o_A",
            Builtin::RevealedMajority => "revealed-majority",
            Builtin::RandomBit => "random-bit",
            Builtin::RevealedMismatch => "revealed-mismatch",
            Builtin::Natural => "natural",
            Builtin::Threshold => "threshold",
        }
    }

    pub fn distinguisher(self) -> Option<Box<dyn Distinguisher>> {
        match self {
            Builtin::Constant | Builtin::LeakyCoordinate | Builtin::RevealedMajority | Builtin::RandomBit | Builtin::RevealedMismatch => {
                Some(Box::new(Adversary(self)))
            }
            _ => None,
        }
    }

    pub fn estimator(self) -> Option<Box<dyn Estimator>> {
        match self {
            Builtin::Constant | Builtin::ExactOA | Builtin::Natural => Some(Box::new(Adversary(self))),
            _ => None,
        }
    }

    pub fn guesser(self) -> Option<Box<dyn Guesser>> {
        match self {
            Builtin::Constant | Builtin::ExactOA | Builtin::Natural | Builtin::RandomBit => Some(Box::new(Adversary(self))),
            _ => None,
        }
    }

    pub fn view_adversary(self) -> Option<Box<dyn ViewAdversary>> {
        match self {
            Builtin::Constant | Builtin::LeakyCoordinate | Builtin::RevealedMajority | Builtin::RandomBit | Builtin::Threshold => {
                Some(Box::new(Adversary(self)))
            }
            _ => None,
        }
    }

    /// Parses a comma-separated list of keys.
    pub fn parse_list(text: &str) -> Result<Vec<Builtin>> {
        text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect()
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl Serialize for Builtin {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.key())
    }
}

impl<'de> Deserialize<'de> for Builtin {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for Builtin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.key() == s)
            .ok_or_else(|| Error::Config(format!("unknown adversary `{s}`")))
    }
}

struct Adversary(Builtin);

fn revealed_mismatch(y_hat: &Revealed, y: &crate::SignVector) -> bool {
    y_hat.inner(y).expect("view and advice share n") != y_hat.positions().count() as i64
}

/// A's output recomputed from the true `x` and B's view.
fn exact_o_a(view: &AwecViewB, advice: &Advice<'_>) -> i64 {
    let y_hat = view.y_tilde.as_ref().unwrap_or(&view.y);
    y_hat.inner_masked(advice.x, &view.r.complement()).expect("view and advice share n")
}

fn natural_estimate(view: &AwecViewB) -> i64 {
    let out = view.v.designated_output().unwrap_or(0);
    out - view.x_r.inner(&view.y).expect("view has consistent n")
}

impl Distinguisher for Adversary {
    fn name(&self) -> &str {
        self.0.key()
    }

    fn distinguish(&self, view: &AwecViewA, advice: &Advice<'_>, stream: &mut RandomStream) -> bool {
        match self.0 {
            Builtin::LeakyCoordinate => match view.u {
                Payload::Leaky { index, leaked, .. } => view.y_hat.get(index).is_some_and(|s| s != leaked),
                _ => false,
            },
            Builtin::RevealedMajority => view.y_hat.sum() >= 0,
            Builtin::RandomBit => stream.bit(),
            Builtin::RevealedMismatch => revealed_mismatch(&view.y_hat, advice.y),
            _ => false,
        }
    }
}

impl Estimator for Adversary {
    fn name(&self) -> &str {
        self.0.key()
    }

    fn estimate(&self, view: &AwecViewB, advice: &Advice<'_>, _stream: &mut RandomStream) -> i64 {
        match self.0 {
            Builtin::ExactOA => exact_o_a(view, advice),
            Builtin::Natural => natural_estimate(view),
            _ => 0,
        }
    }
}

impl Guesser for Adversary {
    fn name(&self) -> &str {
        self.0.key()
    }

    fn guess(&self, view: &WecViewB, buckets: &BucketParams, advice: &Advice<'_>, stream: &mut RandomStream) -> u8 {
        let bit = |o: i64| wec_bit(o, view.s, view.r_gl, buckets).expect("offset and mask come from the protocol");
        match self.0 {
            Builtin::ExactOA => bit(exact_o_a(&view.awec, advice)),
            Builtin::Natural => bit(natural_estimate(&view.awec)),
            Builtin::RandomBit => stream.bit() as u8,
            _ => 0,
        }
    }
}

impl ViewAdversary for Adversary {
    fn name(&self) -> &str {
        self.0.key()
    }

    fn accept(&self, view: &ChannelView<'_>, pair: &PairAdvice<'_>, stream: &mut RandomStream) -> bool {
        match self.0 {
            Builtin::LeakyCoordinate => match view.payload {
                Payload::Leaky { index, leaked, .. } => *index == pair.index && *leaked == pair.left.get(pair.index),
                _ => false,
            },
            Builtin::RevealedMajority => match view.payload {
                Payload::NoisyInput { noisy, .. } => noisy.sum() >= 0,
                p => p.designated_output().is_some_and(|z| z >= 0),
            },
            Builtin::RandomBit => stream.bit(),
            Builtin::Threshold => {
                let Some(z) = view.payload.designated_output() else { return false };
                let (Ok(left), Ok(right)) = (view.input.inner(pair.left), view.input.inner(pair.right)) else { return false };
                // Accept when z is closer to the left mean than to the right mean.
                (2 * z - left - right) * (left - right).signum() > 0
            }
            _ => false,
        }
    }
}
