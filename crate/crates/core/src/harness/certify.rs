//! Accuracy, AWEC and WEC certificates.

use super::run_trials;
use super::stats::EstimateReport;
use crate::attacks::{Advice, Distinguisher, Estimator, Guesser};
use crate::awec::{AwecOutcome, TrialRecord};
use crate::channels::Sampler;
use crate::error::{invalid, Error, Result};
use crate::wec::{run_wec, AwecRunner, BucketParams, WIDTH_FACTOR};
use serde::{Deserialize, Serialize};

/// Targets for the AWEC certificate.
pub const AWEC_TARGETS: Targets = Targets { alpha: 0.001, p: 0.001, q: 0.001 };
/// Targets for the WEC certificate: the image of [`AWEC_TARGETS`] under the AWEC-to-WEC map.
pub const WEC_TARGETS: Targets = Targets { alpha: 0.002, p: 0.001, q: 0.522 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
}

/// Empirical `P[|out(v) - <x,y>| <= ell]`.
pub fn estimate_accuracy(channel: &dyn Sampler, ell: u64, trials: u64, seed: u64) -> Result<EstimateReport> {
    if trials < 100 {
        return Err(invalid("accuracy estimation needs at least 100 trials"));
    }
    let hits = run_trials(seed, "accuracy", trials, |_, s| {
        let c = channel.sample(s)?;
        let out = c.out_v.ok_or_else(|| invalid("channel has no designated output"))?;
        Ok(out.abs_diff(c.x.inner(&c.y)?) <= ell)
    })?;
    Ok(EstimateReport::bernoulli("accuracy", hits.iter().filter(|&&h| h).count() as u64, trials, seed))
}

fn check_upper(report: &EstimateReport, target: f64) -> bool {
    report.ci_high <= target + report.half_width()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AwecCertificate {
    pub ell: u64,
    pub erasure: EstimateReport,
    /// `P[|o_A - o_B| > ell | not erased]`.
    pub alpha: EstimateReport,
    /// Non-erased trials where `o_A - o_B != <x,y> - out(v)`.
    pub identity_failures: u64,
    /// `|P[D = 1 | not erased] - P[D = 1 | erased]|` per distinguisher.
    pub p: Vec<EstimateReport>,
    /// `P[|E(v_B) - o_A| <= 1000 ell | erased]` per estimator.
    pub q: Vec<EstimateReport>,
    pub targets: Targets,
    pub pass: bool,
}

impl AwecCertificate {
    /// Largest upper bound over registered distinguishers; a lower bound on the true `p`.
    pub fn p_max(&self) -> Option<&EstimateReport> {
        self.p.iter().max_by(|a, b| a.ci_high.total_cmp(&b.ci_high))
    }

    pub fn q_max(&self) -> Option<&EstimateReport> {
        self.q.iter().max_by(|a, b| a.ci_high.total_cmp(&b.ci_high))
    }
}

struct AwecTrial {
    erased: bool,
    inaccurate: bool,
    identity_ok: bool,
    accepts: Vec<bool>,
    estimates_ok: Vec<bool>,
}

fn identity_holds(o: &AwecOutcome) -> Result<bool> {
    let Some(o_b) = o.o_b else { return Ok(true) };
    let out_v = o.view_b.v.designated_output().ok_or_else(|| invalid("missing designated output"))?;
    Ok(o.o_a - o_b == o.view_a.x.inner(&o.view_b.y)? - out_v)
}

fn split_reports(name: &str, counts: &[(u64, u64)], totals: (u64, u64), seed: u64) -> Result<Vec<EstimateReport>> {
    let (n_kept, n_erased) = totals;
    if n_kept == 0 || n_erased == 0 {
        return Err(Error::InvalidParameter("a conditioning branch received no trials".into()));
    }
    Ok(counts
        .iter()
        .map(|&(kept, erased)| {
            let a = EstimateReport::bernoulli(format!("{name}|kept"), kept, n_kept, seed);
            let b = EstimateReport::bernoulli(format!("{name}|erased"), erased, n_erased, seed);
            EstimateReport::abs_difference(name.to_string(), &a, &b)
        })
        .collect())
}

/// Per-trial records for the same executions [`estimate_awec`] runs under `seed`.
pub fn awec_trial_log(runner: &dyn AwecRunner, trials: u64, seed: u64) -> Result<Vec<TrialRecord>> {
    run_trials(seed, "awec", trials, |_, s| Ok(runner.run(&mut s.fork("protocol"))?.record()))
}

pub fn estimate_awec(
    runner: &dyn AwecRunner,
    distinguishers: &[Box<dyn Distinguisher>],
    estimators: &[Box<dyn Estimator>],
    trials: u64,
    seed: u64,
) -> Result<AwecCertificate> {
    if distinguishers.is_empty() || estimators.is_empty() {
        return Err(invalid("register at least one distinguisher and one estimator"));
    }
    let ell = runner.ell();
    let radius = WIDTH_FACTOR * ell;
    let rows = run_trials(seed, "awec", trials, |_, s| {
        let o = runner.run(&mut s.fork("protocol"))?;
        let advice = Advice { x: &o.view_a.x, y: &o.view_b.y };
        let mut adv = s.fork("adversaries");
        Ok(AwecTrial {
            erased: o.erased(),
            inaccurate: o.o_b.is_some_and(|b| o.o_a.abs_diff(b) > ell),
            identity_ok: identity_holds(&o)?,
            accepts: distinguishers.iter().map(|d| d.distinguish(&o.view_a, &advice, &mut adv)).collect(),
            estimates_ok: estimators.iter().map(|e| e.estimate(&o.view_b, &advice, &mut adv).abs_diff(o.o_a) <= radius).collect(),
        })
    })?;
    let erased = rows.iter().filter(|r| r.erased).count() as u64;
    let kept = trials - erased;
    let inaccurate = rows.iter().filter(|r| r.inaccurate).count() as u64;
    let identity_failures = rows.iter().filter(|r| !r.identity_ok).count() as u64;
    let d_counts: Vec<(u64, u64)> = (0..distinguishers.len())
        .map(|k| {
            let c = |e: bool| rows.iter().filter(|r| r.erased == e && r.accepts[k]).count() as u64;
            (c(false), c(true))
        })
        .collect();
    let p: Vec<EstimateReport> = split_reports("p", &d_counts, (kept, erased), seed)?
        .into_iter()
        .zip(distinguishers)
        .map(|(mut r, d)| {
            r.name = format!("p[{}]", d.name());
            r
        })
        .collect();
    let q: Vec<EstimateReport> = estimators
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let wins = rows.iter().filter(|r| r.erased && r.estimates_ok[k]).count() as u64;
            EstimateReport::bernoulli(format!("q[{}]", e.name()), wins, erased, seed)
        })
        .collect();
    let erasure = EstimateReport::bernoulli("erasure", erased, trials, seed);
    let alpha = EstimateReport::bernoulli("alpha", inaccurate, kept, seed);
    let targets = AWEC_TARGETS;
    let pass = erasure.ci_low <= 0.5
        && 0.5 <= erasure.ci_high
        && identity_failures == 0
        && check_upper(&alpha, targets.alpha)
        && p.iter().all(|r| check_upper(r, targets.p))
        && q.iter().all(|r| check_upper(r, targets.q));
    Ok(AwecCertificate { ell, erasure, alpha, identity_failures, p, q, targets, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WecCertificate {
    pub erasure: EstimateReport,
    /// `P[ô_A != ô_B | not erased]`.
    pub alpha: EstimateReport,
    pub p: Vec<EstimateReport>,
    /// `P[guess = ô_A | erased]` per guesser.
    pub guess_rate: Vec<EstimateReport>,
    /// `2 P[guess = ô_A | erased] - 1` per guesser.
    pub q: Vec<EstimateReport>,
    pub targets: Targets,
    pub pass: bool,
}

impl WecCertificate {
    pub fn p_max(&self) -> Option<&EstimateReport> {
        self.p.iter().max_by(|a, b| a.ci_high.total_cmp(&b.ci_high))
    }

    pub fn q_max(&self) -> Option<&EstimateReport> {
        self.q.iter().max_by(|a, b| a.ci_high.total_cmp(&b.ci_high))
    }
}

struct WecTrial {
    erased: bool,
    disagree: bool,
    accepts: Vec<bool>,
    guesses_ok: Vec<bool>,
}

pub fn estimate_wec(
    runner: &dyn AwecRunner,
    distinguishers: &[Box<dyn Distinguisher>],
    guessers: &[Box<dyn Guesser>],
    trials: u64,
    seed: u64,
) -> Result<WecCertificate> {
    if distinguishers.is_empty() || guessers.is_empty() {
        return Err(invalid("register at least one distinguisher and one guesser"));
    }
    let buckets = BucketParams::new(runner.n(), runner.ell())?;
    let rows = run_trials(seed, "wec", trials, |_, s| {
        let o = run_wec(runner, &mut s.fork("protocol"))?;
        let advice = Advice { x: &o.view_a.awec.x, y: &o.view_b.awec.y };
        let mut adv = s.fork("adversaries");
        Ok(WecTrial {
            erased: o.o_b.is_none(),
            disagree: o.o_b.is_some_and(|b| b != o.o_a),
            accepts: distinguishers.iter().map(|d| d.distinguish(&o.view_a.awec, &advice, &mut adv)).collect(),
            guesses_ok: guessers.iter().map(|g| g.guess(&o.view_b, &buckets, &advice, &mut adv) == o.o_a).collect(),
        })
    })?;
    let erased = rows.iter().filter(|r| r.erased).count() as u64;
    let kept = trials - erased;
    let d_counts: Vec<(u64, u64)> = (0..distinguishers.len())
        .map(|k| {
            let c = |e: bool| rows.iter().filter(|r| r.erased == e && r.accepts[k]).count() as u64;
            (c(false), c(true))
        })
        .collect();
    let p: Vec<EstimateReport> = split_reports("p", &d_counts, (kept, erased), seed)?
        .into_iter()
        .zip(distinguishers)
        .map(|(mut r, d)| {
            r.name = format!("p[{}]", d.name());
            r
        })
        .collect();
    let guess_rate: Vec<EstimateReport> = guessers
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let wins = rows.iter().filter(|r| r.erased && r.guesses_ok[k]).count() as u64;
            EstimateReport::bernoulli(format!("guess[{}]", g.name()), wins, erased, seed)
        })
        .collect();
    let q: Vec<EstimateReport> = guess_rate.iter().zip(guessers).map(|(r, g)| r.affine(format!("q[{}]", g.name()), 2.0, -1.0)).collect();
    let erasure = EstimateReport::bernoulli("erasure", erased, trials, seed);
    let alpha = EstimateReport::bernoulli("alpha", rows.iter().filter(|r| r.disagree).count() as u64, kept, seed);
    let targets = WEC_TARGETS;
    let pass = erasure.ci_low <= 0.5
        && 0.5 <= erasure.ci_high
        && check_upper(&alpha, targets.alpha)
        && p.iter().all(|r| check_upper(r, targets.p))
        && q.iter().all(|r| r.ci_high <= targets.q + r.half_width());
    Ok(WecCertificate { erasure, alpha, p, guess_rate, q, targets, pass })
}
