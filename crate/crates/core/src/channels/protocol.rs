//! Next-message interface for two-party protocols and the driver that runs them.
//!
//! Parties are state machines stepped alternately, starting with A. A protocol
//! may also expose an ideal functionality that both parties invoke jointly.

use crate::error::{Error, Result};
use crate::signs::SignVector;
use crate::stream::RandomStream;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Upper bound on driver steps before a run is declared stuck.
pub const MAX_STEPS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    A,
    B,
}

impl Role {
    pub fn other(self) -> Role {
        match self {
            Role::A => Role::B,
            Role::B => Role::A,
        }
    }
}

/// A protocol message.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Message {
    Int(i64),
    Ints(Vec<i64>),
    Signs(SignVector),
}

/// Where a message in a party's view came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    Sent,
    Received,
    Invoked,
    Functionality,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Entry {
    pub origin: Origin,
    pub message: Message,
}

/// What a party does on its turn.
#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Send(Message),
    Invoke(Message),
    Wait,
    Finish(Option<i64>),
}

/// One party's next-message function.
pub trait PartyLogic: Send {
    /// `incoming` is the oldest undelivered message addressed to this party.
    fn step(&mut self, incoming: Option<Message>, stream: &mut RandomStream) -> Result<Action>;
}

pub trait TwoPartyProtocol: Send + Sync {
    fn name(&self) -> &str;
    fn start(&self, role: Role, input: &SignVector) -> Box<dyn PartyLogic>;
    /// Ideal functionality answering a joint invocation; `None` if the protocol has none.
    fn functionality(&self, _a: &Message, _b: &Message, _stream: &mut RandomStream) -> Option<Result<(Message, Message)>> {
        None
    }
}

/// Result of a completed run.
#[derive(Clone, Debug, PartialEq)]
pub struct Execution {
    pub view_a: Vec<Entry>,
    pub view_b: Vec<Entry>,
    pub output_a: Option<i64>,
    pub output_b: Option<i64>,
}

struct Slot {
    logic: Box<dyn PartyLogic>,
    stream: RandomStream,
    inbox: VecDeque<(Origin, Message)>,
    view: Vec<Entry>,
    invoked: Option<Message>,
    finished: Option<Option<i64>>,
}

fn fault(reason: impl Into<String>, slots: &[Slot; 2]) -> Error {
    let mut transcript: Vec<Message> = Vec::new();
    for e in slots[0].view.iter().chain(&slots[1].view) {
        if matches!(e.origin, Origin::Sent | Origin::Invoked) {
            transcript.push(e.message.clone());
        }
    }
    Error::ProtocolFault { reason: reason.into(), transcript }
}

/// Runs `protocol` on inputs `x` (A) and `y` (B) to completion.
pub fn execute(protocol: &dyn TwoPartyProtocol, x: &SignVector, y: &SignVector, stream: &mut RandomStream) -> Result<Execution> {
    let mut func_stream = stream.fork("functionality");
    let mut slots = [Role::A, Role::B].map(|role| Slot {
        logic: protocol.start(role, if role == Role::A { x } else { y }),
        stream: stream.fork(if role == Role::A { "party-a" } else { "party-b" }),
        inbox: VecDeque::new(),
        view: Vec::new(),
        invoked: None,
        finished: None,
    });
    let mut idle_turns = 0;
    for step in 0.. {
        if slots.iter().all(|s| s.finished.is_some()) {
            break;
        }
        if step >= MAX_STEPS {
            return Err(fault("step limit exceeded", &slots));
        }
        let me = step % 2;
        let them = 1 - me;
        if slots[me].finished.is_some() {
            idle_turns += 1;
            if idle_turns >= 2 {
                return Err(fault("deadlock: no party can make progress", &slots));
            }
            continue;
        }
        let incoming = slots[me].inbox.pop_front().map(|(origin, m)| {
            if origin == Origin::Functionality {
                slots[me].invoked = None;
            }
            slots[me].view.push(Entry { origin, message: m.clone() });
            m
        });
        let mut progressed = incoming.is_some();
        let slot = &mut slots[me];
        let action = match slot.logic.step(incoming, &mut slot.stream) {
            Ok(a) => a,
            Err(Error::ProtocolFault { reason, .. }) => return Err(fault(reason, &slots)),
            Err(e) => return Err(fault(e.to_string(), &slots)),
        };
        match action {
            Action::Send(m) => {
                if slots[them].finished.is_some() {
                    return Err(fault("message sent to a finished party", &slots));
                }
                slots[me].view.push(Entry { origin: Origin::Sent, message: m.clone() });
                slots[them].inbox.push_back((Origin::Received, m));
                progressed = true;
            }
            Action::Invoke(m) => {
                if slots[me].invoked.is_some() {
                    return Err(fault("repeated invocation before the functionality answered", &slots));
                }
                slots[me].view.push(Entry { origin: Origin::Invoked, message: m.clone() });
                slots[me].invoked = Some(m);
                progressed = true;
                if let (Some(a), Some(b)) = (&slots[0].invoked, &slots[1].invoked) {
                    let answer = protocol
                        .functionality(a, b, &mut func_stream)
                        .unwrap_or_else(|| Err(Error::InvalidParameter("protocol has no functionality".into())));
                    match answer {
                        Ok((to_a, to_b)) => {
                            slots[0].inbox.push_back((Origin::Functionality, to_a));
                            slots[1].inbox.push_back((Origin::Functionality, to_b));
                        }
                        Err(e) => return Err(fault(e.to_string(), &slots)),
                    }
                }
            }
            Action::Wait => {}
            Action::Finish(out) => {
                slots[me].finished = Some(out);
                progressed = true;
            }
        }
        idle_turns = if progressed { 0 } else { idle_turns + 1 };
        if idle_turns >= 2 && slots.iter().all(|s| s.inbox.is_empty()) {
            return Err(fault("deadlock: no party can make progress", &slots));
        }
    }
    let [a, b] = slots;
    Ok(Execution { view_a: a.view, view_b: b.view, output_a: a.finished.flatten(), output_b: b.finished.flatten() })
}

/// Both parties hand their inputs to an ideal functionality that returns
/// `<x,y>` plus discrete Laplace noise of scale `2/eps` to each of them.
pub struct LaplaceRelease {
    pub noise: super::laplace::DiscreteLaplace,
}

struct ReleaseParty {
    input: SignVector,
    sent: bool,
}

impl PartyLogic for ReleaseParty {
    fn step(&mut self, incoming: Option<Message>, _stream: &mut RandomStream) -> Result<Action> {
        match (self.sent, incoming) {
            (false, _) => {
                self.sent = true;
                Ok(Action::Invoke(Message::Signs(self.input.clone())))
            }
            (true, None) => Ok(Action::Wait),
            (true, Some(Message::Int(z))) => Ok(Action::Finish(Some(z))),
            (true, Some(other)) => Err(Error::ProtocolFault { reason: format!("expected an integer, got {other:?}"), transcript: vec![] }),
        }
    }
}

impl TwoPartyProtocol for LaplaceRelease {
    fn name(&self) -> &str {
        "laplace-release"
    }

    fn start(&self, _role: Role, input: &SignVector) -> Box<dyn PartyLogic> {
        Box::new(ReleaseParty { input: input.clone(), sent: false })
    }

    fn functionality(&self, a: &Message, b: &Message, stream: &mut RandomStream) -> Option<Result<(Message, Message)>> {
        Some(match (a, b) {
            (Message::Signs(x), Message::Signs(y)) => x.inner(y).map(|ip| {
                let z = ip + self.noise.sample(stream);
                (Message::Int(z), Message::Int(z))
            }),
            _ => Err(Error::InvalidParameter("functionality expects sign vectors".into())),
        })
    }
}

/// A sends a randomized-response copy of `x`; B outputs the debiased estimate.
pub struct RandomizedResponseRelease {
    pub eps: f64,
}

struct RrSender {
    input: SignVector,
    eps: f64,
}

impl PartyLogic for RrSender {
    fn step(&mut self, _incoming: Option<Message>, stream: &mut RandomStream) -> Result<Action> {
        if self.input.is_empty() {
            return Ok(Action::Finish(None));
        }
        let noisy = super::randomize(&self.input, self.eps, stream);
        self.input = SignVector::ones(0);
        Ok(Action::Send(Message::Signs(noisy)))
    }
}

struct RrReceiver {
    input: SignVector,
    eps: f64,
}

impl PartyLogic for RrReceiver {
    fn step(&mut self, incoming: Option<Message>, _stream: &mut RandomStream) -> Result<Action> {
        match incoming {
            None => Ok(Action::Wait),
            Some(Message::Signs(noisy)) => Ok(Action::Finish(Some(super::debiased_estimate(&noisy, &self.input, self.eps)?))),
            Some(other) => Err(Error::ProtocolFault { reason: format!("expected signs, got {other:?}"), transcript: vec![] }),
        }
    }
}

impl TwoPartyProtocol for RandomizedResponseRelease {
    fn name(&self) -> &str {
        "randomized-response"
    }

    fn start(&self, role: Role, input: &SignVector) -> Box<dyn PartyLogic> {
        match role {
            Role::A => Box::new(RrSender { input: input.clone(), eps: self.eps }),
            Role::B => Box::new(RrReceiver { input: input.clone(), eps: self.eps }),
        }
    }
}
