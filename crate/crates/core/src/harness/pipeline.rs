//! End-to-end report: channel accuracy, AWEC and WEC certificates, OT feasibility and a DP audit.

use super::audit::{audit_suite, AuditVerdict, NeighborPair};
use super::certify::{estimate_accuracy, estimate_awec, estimate_wec, AwecCertificate, WecCertificate};
use super::stats::EstimateReport;
use crate::attacks::Builtin;
use crate::awec::AwecParams;
use crate::channels::protocol::Role;
use crate::channels::{Channel, ChannelSpec};
use crate::error::{invalid, Error, Result};
use crate::signs::SignVector;
use crate::stream::RandomStream;
use crate::wec::{awec_to_wec, decimal, exact, ot_feasible, ChannelAwec, ErasureTargets};
use serde::{Deserialize, Serialize};

/// Adversaries registered when the caller names none.
pub const BASELINE: [Builtin; 3] = [Builtin::Constant, Builtin::RevealedMajority, Builtin::RandomBit];
/// Trial cap for the audit stage.
pub const AUDIT_TRIALS: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub channel: ChannelSpec,
    pub awec: AwecParams,
    pub adversaries: Vec<Builtin>,
    pub trials: u64,
}

/// The three upper bounds fed to the feasibility check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredBounds {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
}

impl MeasuredBounds {
    /// Upper CI of the WEC disagreement rate and of the largest registered `p` and `q`.
    pub fn from_certificate(wec: &WecCertificate) -> Self {
        let up = |r: Option<&EstimateReport>| r.map_or(1.0, |r| r.ci_high.clamp(0.0, 1.0));
        MeasuredBounds { alpha: wec.alpha.ci_high.clamp(0.0, 1.0), p: up(wec.p_max()), q: up(wec.q_max()) }
    }

    /// `44 (alpha + p) <= 1 - q` on the exact binary values of the bounds.
    pub fn feasible(&self) -> Result<bool> {
        ot_feasible(&exact(self.alpha)?, &exact(self.p)?, &exact(self.q)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetChain {
    pub awec: [String; 3],
    pub wec: [String; 3],
    pub feasible: bool,
}

/// AWEC targets `(0.001, 0.001, 0.001)` pushed through the AWEC-to-WEC map.
pub fn target_chain() -> Result<TargetChain> {
    let t = decimal("0.001")?;
    let awec = ErasureTargets { alpha: t.clone(), p: t.clone(), q: t };
    let wec = awec_to_wec(&awec);
    let show = |e: &ErasureTargets| [e.alpha.to_string(), e.p.to_string(), e.q.to_string()];
    Ok(TargetChain { awec: show(&awec), wec: show(&wec), feasible: ot_feasible(&wec.alpha, &wec.p, &wec.q)? })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub accuracy: EstimateReport,
    pub awec: AwecCertificate,
    pub wec: WecCertificate,
    pub measured: MeasuredBounds,
    pub ot_feasible: bool,
    pub target_chain: TargetChain,
    pub audit: Vec<AuditVerdict>,
    pub dp_violation: bool,
    pub diagnostics: Vec<String>,
}

impl PipelineReport {
    pub fn estimates(&self) -> Vec<&EstimateReport> {
        let mut out = vec![&self.accuracy, &self.awec.erasure, &self.awec.alpha];
        out.extend(&self.awec.p);
        out.extend(&self.awec.q);
        out.extend([&self.wec.erasure, &self.wec.alpha]);
        out.extend(&self.wec.p);
        out.extend(&self.wec.guess_rate);
        out.extend(&self.wec.q);
        out
    }
}

/// Audits both parties' inputs around the leak index (or coordinate 0) with every built-in view adversary.
pub fn pipeline_audit(channel: &Channel, trials: u64, seed: u64) -> Result<Vec<AuditVerdict>> {
    let spec = channel.spec();
    let i = spec.leak_index.unwrap_or(0);
    let adversaries: Vec<_> = Builtin::ALL.into_iter().filter_map(Builtin::view_adversary).collect();
    let mut base = RandomStream::from_seed(seed).derive("audit-pair");
    let mut out = Vec::new();
    for party in [Role::B, Role::A] {
        let pair = NeighborPair::around(party, SignVector::random(spec.n, &mut base), i)?;
        out.extend(audit_suite(channel, &adversaries, &pair, spec.eps, spec.delta, trials, seed)?);
    }
    Ok(out)
}

pub fn pipeline_report(config: &PipelineConfig, seed: u64) -> Result<PipelineReport> {
    if config.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if config.channel.n != config.awec.n {
        return Err(invalid("channel and AWEC disagree on n"));
    }
    let registry = if config.adversaries.is_empty() { BASELINE.to_vec() } else { config.adversaries.clone() };
    let distinguishers: Vec<_> = registry.iter().filter_map(|b| b.distinguisher()).collect();
    let estimators: Vec<_> = registry.iter().filter_map(|b| b.estimator()).collect();
    let guessers: Vec<_> = registry.iter().filter_map(|b| b.guesser()).collect();
    let channel = Channel::new(config.channel.clone())?;
    let runner = ChannelAwec { channel: &channel, params: config.awec.clone() };
    let trials = config.trials;
    let accuracy = estimate_accuracy(&channel, config.awec.ell, trials.max(100), seed)?;
    let awec = estimate_awec(&runner, &distinguishers, &estimators, trials, seed)?;
    let wec = estimate_wec(&runner, &distinguishers, &guessers, trials, seed)?;
    let measured = MeasuredBounds::from_certificate(&wec);
    let audit = pipeline_audit(&channel, trials.min(AUDIT_TRIALS), seed)?;
    let mut diagnostics = config.awec.regime_diagnostics(config.channel.delta);
    diagnostics.push("p and q are maxima over the registered adversaries and lower-bound the true parameters".into());
    Ok(PipelineReport {
        ot_feasible: measured.feasible()?,
        dp_violation: audit.iter().any(|v| v.violation),
        target_chain: target_chain()?,
        accuracy,
        awec,
        wec,
        measured,
        audit,
        diagnostics,
    })
}
