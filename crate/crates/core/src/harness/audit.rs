//! DP audits on neighbouring inputs.

use super::run_trials;
use super::stats::EstimateReport;
use crate::attacks::{ChannelView, PairAdvice, ViewAdversary};
use crate::channels::protocol::Role;
use crate::channels::{Pinned, Sampler};
use crate::error::{invalid, Result};
use crate::signs::SignVector;
use serde::{Deserialize, Serialize};

/// Two inputs of `party` differing in exactly one coordinate.
///
/// The other party observes. `left` is the world the adversary tries to recognise.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborPair {
    pub party: Role,
    pub left: SignVector,
    pub right: SignVector,
}

impl NeighborPair {
    /// Checks the pair and returns the differing coordinate.
    pub fn index(&self) -> Result<usize> {
        let diff = self.left.differing_positions(&self.right)?;
        match diff.as_slice() {
            [i] => Ok(*i),
            _ => Err(invalid(format!("inputs are not neighbours: they differ in {} coordinates", diff.len()))),
        }
    }

    /// `base` and `base` with coordinate `i` flipped, so that `left[i] = +1`.
    pub fn around(party: Role, mut base: SignVector, i: usize) -> Result<Self> {
        if i >= base.len() {
            return Err(invalid(format!("coordinate {i} out of range for n = {}", base.len())));
        }
        base.set(i, 1);
        let right = base.flip_at(i)?;
        Ok(NeighborPair { party, left: base, right })
    }

    /// The same pair with the roles of the two worlds exchanged.
    pub fn swapped(&self) -> Self {
        NeighborPair { party: self.party, left: self.right.clone(), right: self.left.clone() }
    }

    fn pinned(&self, input: &SignVector) -> Pinned {
        match self.party {
            Role::A => Pinned::x(input.clone()),
            Role::B => Pinned::y(input.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditVerdict {
    pub adversary: String,
    /// Observing party.
    pub observer: String,
    pub index: usize,
    /// Whether `left` and `right` were exchanged relative to the given pair.
    pub swapped: bool,
    pub eps: f64,
    pub delta: f64,
    pub accept_left: EstimateReport,
    pub accept_right: EstimateReport,
    /// `lower(left) > e^eps * upper(right) + delta`.
    pub violation: bool,
}

fn observer_name(party: Role) -> &'static str {
    match party.other() {
        Role::A => "A",
        Role::B => "B",
    }
}

/// Audits every adversary on both orientations of `pair`, reusing one draw per world and trial.
///
/// Verdicts come in adversary order, the given orientation before the swapped one.
pub fn audit_suite(
    channel: &dyn Sampler,
    adversaries: &[Box<dyn ViewAdversary>],
    pair: &NeighborPair,
    eps: f64,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<Vec<AuditVerdict>> {
    if trials == 0 {
        return Err(invalid("an audit needs at least one trial"));
    }
    if !(eps >= 0.0) || !(0.0..=1.0).contains(&delta) {
        return Err(invalid("audit needs eps >= 0 and delta in [0, 1]"));
    }
    let index = pair.index()?;
    let swapped = pair.swapped();
    let orientations = [
        PairAdvice { left: &pair.left, right: &pair.right, index },
        PairAdvice { left: &swapped.left, right: &swapped.right, index },
    ];
    let (pin_left, pin_right) = (pair.pinned(&pair.left), pair.pinned(&pair.right));
    // Per trial: for each adversary and orientation, acceptance on the left and right draws.
    let rows = run_trials(seed, "audit", trials, |_, s| {
        let draws = [channel.sample_pinned(&pin_left, &mut s.fork("left"))?, channel.sample_pinned(&pin_right, &mut s.fork("right"))?];
        let mut adv = s.fork("adversary");
        let mut out = Vec::with_capacity(4 * adversaries.len());
        for a in adversaries {
            for advice in &orientations {
                for c in &draws {
                    let view = match pair.party {
                        Role::A => ChannelView { input: &c.y, payload: &c.v },
                        Role::B => ChannelView { input: &c.x, payload: &c.u },
                    };
                    out.push(a.accept(&view, advice, &mut adv));
                }
            }
        }
        Ok(out)
    })?;
    let count = |slot: usize| rows.iter().filter(|r| r[slot]).count() as u64;
    let mut verdicts = Vec::with_capacity(2 * adversaries.len());
    for (k, a) in adversaries.iter().enumerate() {
        for o in 0..2 {
            let base = 4 * k + 2 * o;
            // In the swapped orientation the left world is the right draw.
            let (l, r) = if o == 0 { (count(base), count(base + 1)) } else { (count(base + 1), count(base)) };
            let observer = observer_name(pair.party);
            let tag = format!("audit[{}/{observer}/{}]", a.name(), if o == 0 { "given" } else { "swapped" });
            let accept_left = EstimateReport::bernoulli(format!("{tag}|left"), l, trials, seed);
            let accept_right = EstimateReport::bernoulli(format!("{tag}|right"), r, trials, seed);
            verdicts.push(AuditVerdict {
                adversary: a.name().to_string(),
                observer: observer.into(),
                index,
                swapped: o == 1,
                eps,
                delta,
                violation: accept_left.ci_low > eps.exp() * accept_right.ci_high + delta,
                accept_left,
                accept_right,
            });
        }
    }
    Ok(verdicts)
}

/// Audits one adversary on `pair` as given.
pub fn dp_audit(
    channel: &dyn Sampler,
    adversary: Box<dyn ViewAdversary>,
    pair: &NeighborPair,
    eps: f64,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<AuditVerdict> {
    let mut v = audit_suite(channel, &[adversary], pair, eps, delta, trials, seed)?;
    Ok(v.swap_remove(0))
}
