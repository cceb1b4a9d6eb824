//! Adversaries from the security reductions.
//!
//! Oracles receive the view they attack, a per-call random stream, and an
//! [`Advice`] record holding hard-wired knowledge of the true inputs. Honest
//! adversaries ignore the advice; it exists so that deliberately leaky or
//! non-uniform adversaries can be expressed and audited.

pub mod adversaries;
pub mod conditioning;
pub mod dist;
pub mod genrand;
pub mod predictor;
pub mod violation;

pub use adversaries::Builtin;
pub use conditioning::{conditioning_gap, ConditioningMode};
pub use dist::{attack_b_tilde, reference_dist, Dist, DistOracles, ReferenceDist};
pub use genrand::{gen_rand, gen_view, GenRandDraw, GenView, GenViewT};
pub use predictor::{attack_a_tilde, predictor_g, PredictorParams, PredictorTuning};
pub use violation::{dp_violation_score, Guess, ViolationVerdict};

use crate::awec::{AwecViewA, AwecViewB};
use crate::channels::Payload;
use crate::signs::SignVector;
use crate::stream::RandomStream;
use crate::wec::{BucketParams, WecViewB};

/// Hard-wired knowledge available to non-uniform adversaries.
#[derive(Clone, Copy, Debug)]
pub struct Advice<'a> {
    pub x: &'a SignVector,
    pub y: &'a SignVector,
}

/// Guesses whether B's output was erased, from A's view.
pub trait Distinguisher: Send + Sync {
    fn name(&self) -> &str;
    fn distinguish(&self, view: &AwecViewA, advice: &Advice<'_>, stream: &mut RandomStream) -> bool;
}

/// Estimates A's output from B's view.
pub trait Estimator: Send + Sync {
    fn name(&self) -> &str;
    fn estimate(&self, view: &AwecViewB, advice: &Advice<'_>, stream: &mut RandomStream) -> i64;
}

/// Guesses A's WEC bit from B's view.
pub trait Guesser: Send + Sync {
    fn name(&self) -> &str;
    fn guess(&self, view: &WecViewB, buckets: &BucketParams, advice: &Advice<'_>, stream: &mut RandomStream) -> u8;
}

/// One party's view of a single channel draw.
#[derive(Clone, Copy, Debug)]
pub struct ChannelView<'a> {
    pub input: &'a SignVector,
    pub payload: &'a Payload,
}

/// Neighbouring pair of the other party's input, known to an audit adversary.
#[derive(Clone, Copy, Debug)]
pub struct PairAdvice<'a> {
    pub left: &'a SignVector,
    pub right: &'a SignVector,
    pub index: usize,
}

/// Tests a channel view for membership in the left world of a DP audit.
pub trait ViewAdversary: Send + Sync {
    fn name(&self) -> &str;
    fn accept(&self, view: &ChannelView<'_>, pair: &PairAdvice<'_>, stream: &mut RandomStream) -> bool;
}
