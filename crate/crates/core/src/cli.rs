//! Command-line experiment runner.
//!
//! Values are layered: flags override the `--config` record, which overrides
//! built-in defaults. The config record holds one `key = value` per line, keys
//! named after the long flags (`leak-index` and `leak_index` are equivalent),
//! with `#` starting a comment.

use crate::attacks::{Builtin, PredictorTuning, ReferenceDist};
use crate::awec::{AwecParams, DEFAULT_LAMBDA1, DEFAULT_LAMBDA2};
use crate::channels::exact::max_privacy_loss;
use crate::channels::protocol::Role;
use crate::channels::{Channel, ChannelKind, ChannelSpec, WrappedKind};
use crate::error::{Error, Result};
use crate::harness::appendix_a::{view_equivalence_appendix_a, Simulator};
use crate::harness::audit::{audit_suite, AuditVerdict, NeighborPair};
use crate::harness::certify::{awec_trial_log, estimate_awec, estimate_wec};
use crate::harness::experiments::{a_tilde_experiment, b_tilde_experiment, gl_decode_experiment};
use crate::harness::pipeline::{pipeline_report, PipelineConfig, BASELINE};
use crate::harness::report::{to_csv, to_json, Format, Row};
use crate::signs::SignVector;
use crate::stream::RandomStream;
use crate::wec::ChannelAwec;
use clap::{Parser, ValueEnum};
use serde::Serialize;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

/// Exit status of a completed run whose certificate failed under `--gate`.
pub const EXIT_GATE: i32 = 2;
/// Exit status of a configuration or runtime fault.
pub const EXIT_FAULT: i32 = 1;
/// Appendix-A runs with a larger hashed-histogram TV fail the gate.
pub const GATE_TV: f64 = 0.02;
/// GL decoding runs with a lower recovery rate fail the gate.
pub const GATE_RECOVERY: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Accuracy, AWEC and WEC certificates, OT feasibility and a DP audit.
    Pipeline,
    /// AWEC certificate.
    Awec,
    /// WEC certificate.
    Wec,
    /// DP audit on neighbouring inputs.
    Audit,
    /// Algorithm Ã or B̃ aggregated into a DP-violation verdict.
    Attack,
    /// Key-agreement protocol against its trivial simulator.
    AppendixA,
    /// Weak Goldreich–Levin decoder against a noisy oracle.
    GlDecode,
}

impl Command {
    fn key(self) -> &'static str {
        match self {
            Command::Pipeline => "pipeline",
            Command::Awec => "awec",
            Command::Wec => "wec",
            Command::Audit => "audit",
            Command::Attack => "attack",
            Command::AppendixA => "appendix-a",
            Command::GlDecode => "gl-decode",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    ATilde,
    BTilde,
}

#[derive(Parser, Debug)]
#[command(name = "dpot", version, about = "DP inner-product channels, erasure channels and their attacks, by simulation")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Plain-text `key = value` record; flags take precedence.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// randomized-response, trusted-laplace, split-noise, leaky or wrapped-protocol.
    #[arg(long)]
    pub channel: Option<String>,
    /// Protocol for wrapped-protocol: laplace-release or randomized-response.
    #[arg(long)]
    pub protocol: Option<String>,
    /// Privacy parameter; inf for the noiseless limit
    #[arg(long)]
    pub eps: Option<f64>,
    /// Additive privacy slack
    #[arg(long)]
    pub delta: Option<f64>,
    /// Input length
    #[arg(long)]
    pub n: Option<usize>,
    /// Channel accuracy radius
    #[arg(long)]
    pub ell: Option<u64>,
    /// Exponent factor in the derived k
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Multiplier in the derived k
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Overrides the derived number of resampled indices.
    #[arg(long)]
    pub k: Option<usize>,
    /// Independent protocol executions
    #[arg(long)]
    pub trials: Option<u64>,
    /// Drawn at random and echoed to stderr when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated built-in adversary keys.
    #[arg(long)]
    pub adversaries: Option<String>,
    /// Leaked coordinate of the leaky channel, 1-based.
    #[arg(long)]
    pub leak_index: Option<usize>,
    /// Report destination; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// json-tree or csv.
    #[arg(long)]
    pub format: Option<String>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Exit with status 2 when the certificate fails.
    #[arg(long)]
    pub gate: bool,
    /// Exact enumeration where supported (audit, n <= 10).
    #[arg(long)]
    pub exact: bool,
    /// Audit: party whose input varies, a or b.
    #[arg(long)]
    pub party: Option<String>,
    /// Audit: differing coordinate, 1-based.
    #[arg(long)]
    pub index: Option<usize>,
    /// Attack: a-tilde or b-tilde.
    #[arg(long, value_enum)]
    pub attack: Option<AttackKind>,
    /// Attack: predictor sample count override for a-tilde.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Attack: predictor advantage override for a-tilde.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Appendix-A: faithful or broken.
    #[arg(long)]
    pub simulator: Option<String>,
    /// GL decode: per-query oracle accuracy.
    #[arg(long)]
    pub accuracy: Option<f64>,
    /// GL decode: secret length.
    #[arg(long)]
    pub bits: Option<u32>,
    /// AWEC: per-trial CSV log destination.
    #[arg(long, value_name = "PATH")]
    pub log: Option<PathBuf>,
}

const RECORD_KEYS: [&str; 27] = [
    "channel", "protocol", "eps", "delta", "n", "ell", "lambda1", "lambda2", "k", "trials", "seed", "adversaries", "leak_index", "output",
    "format", "threads", "gate", "exact", "party", "index", "attack", "samples", "gamma", "simulator", "accuracy", "bits", "log",
];

/// Parses a `key = value` record.
pub fn parse_record(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("config line {}: expected `key = value`", no + 1)))?;
        let key = k.trim().replace('-', "_");
        if !RECORD_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("config line {}: unknown key `{}`", no + 1, k.trim())));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

struct Layers<'a> {
    record: &'a BTreeMap<String, String>,
}

impl Layers<'_> {
    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.record
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| Error::Config(format!("config `{key}` = `{v}`: {e}"))))
            .transpose()
    }

    fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.get::<bool>(None, key)?.unwrap_or(false))
    }
}

/// Fully resolved configuration, embedded in every report.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub channel: ChannelSpec,
    pub awec: Option<AwecParams>,
    pub adversaries: Vec<Builtin>,
    pub trials: u64,
    pub seed: u64,
    pub format: Format,
    pub gate: bool,
    pub exact: bool,
    pub party: Option<String>,
    pub index: Option<usize>,
    pub attack: Option<AttackKind>,
    pub samples: Option<usize>,
    pub gamma: Option<f64>,
    pub simulator: Option<Simulator>,
    pub accuracy: Option<f64>,
    pub bits: Option<u32>,
    /// Destinations and worker count do not affect results and stay out of reports.
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub log: Option<PathBuf>,
    #[serde(skip)]
    pub threads: Option<usize>,
}

fn default_n(command: Command) -> usize {
    match command {
        Command::AppendixA => 8,
        Command::Attack => 100,
        _ => 100_000,
    }
}

fn default_ell(command: Command) -> u64 {
    match command {
        Command::Attack => 1,
        _ => 14,
    }
}

impl ExperimentConfig {
    pub fn resolve(cli: Cli) -> Result<Self> {
        let record = match &cli.config {
            Some(p) => parse_record(&std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?)?,
            None => BTreeMap::new(),
        };
        let l = Layers { record: &record };
        let command = cli.command;
        let kind: ChannelKind = l.get(cli.channel.clone(), "channel")?.as_deref().unwrap_or("trusted-laplace").parse()?;
        let n = l.get(cli.n, "n")?.unwrap_or(default_n(command));
        let eps = l.get(cli.eps, "eps")?.unwrap_or(1.0);
        let delta = l.get(cli.delta, "delta")?.unwrap_or(0.0);
        let mut channel = ChannelSpec::new(kind, n, eps, delta);
        if let Some(j) = l.get(cli.leak_index, "leak_index")? {
            if j == 0 {
                return Err(Error::Config("--leak-index is 1-based".into()));
            }
            channel.leak_index = Some(j - 1);
        }
        if let Some(p) = l.get(cli.protocol.clone(), "protocol")? {
            channel.protocol = Some(p.parse::<WrappedKind>()?);
        }
        channel.validate()?;
        let ell = l.get(cli.ell, "ell")?.unwrap_or(default_ell(command));
        let lambda1 = l.get(cli.lambda1, "lambda1")?.unwrap_or(DEFAULT_LAMBDA1);
        let lambda2 = l.get(cli.lambda2, "lambda2")?.unwrap_or(DEFAULT_LAMBDA2);
        let k = l.get(cli.k, "k")?;
        let awec = match command {
            Command::Pipeline | Command::Awec | Command::Wec | Command::Attack => {
                Some(match k {
                    Some(k) => AwecParams::overridden(n, ell, eps, lambda1, lambda2, k)?,
                    None => AwecParams::new(n, ell, eps, lambda1, lambda2)?,
                })
            }
            _ => None,
        };
        let adversaries = match l.get(cli.adversaries.clone(), "adversaries")? {
            Some(list) => Builtin::parse_list(&list)?,
            None => Vec::new(),
        };
        let trials = l.get(cli.trials, "trials")?.unwrap_or(10_000);
        if trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        let seed = match l.get(cli.seed, "seed")? {
            Some(s) => s,
            None => {
                let s = rand::random::<u64>();
                eprintln!("seed: {s}");
                s
            }
        };
        let threads = l.get(cli.threads, "threads")?;
        if threads == Some(0) {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        let simulator = match l.get(cli.simulator.clone(), "simulator")?.as_deref() {
            None => None,
            Some("faithful") => Some(Simulator::Faithful),
            Some("broken") => Some(Simulator::Broken),
            Some(other) => return Err(Error::Config(format!("unknown simulator `{other}` (expected faithful or broken)"))),
        };
        let attack = match cli.attack {
            Some(a) => Some(a),
            None => match record.get("attack").map(String::as_str) {
                None => None,
                Some("a-tilde") => Some(AttackKind::ATilde),
                Some("b-tilde") => Some(AttackKind::BTilde),
                Some(other) => return Err(Error::Config(format!("unknown attack `{other}`"))),
            },
        };
        Ok(ExperimentConfig {
            command,
            channel,
            awec,
            adversaries,
            trials,
            seed,
            format: l.get(cli.format.clone(), "format")?.as_deref().unwrap_or("json-tree").parse()?,
            gate: l.switch(cli.gate, "gate")?,
            exact: l.switch(cli.exact, "exact")?,
            party: l.get(cli.party.clone(), "party")?,
            index: l.get(cli.index, "index")?,
            attack,
            samples: l.get(cli.samples, "samples")?,
            gamma: l.get(cli.gamma, "gamma")?,
            simulator,
            accuracy: l.get(cli.accuracy, "accuracy")?,
            bits: l.get(cli.bits, "bits")?,
            output: l.get(cli.output.clone(), "output")?,
            log: l.get(cli.log.clone(), "log")?,
            threads,
        })
    }
}

/// Report text plus the certificate outcome and a one-line summary.
pub struct Outcome {
    pub report: String,
    pub passed: bool,
    pub summary: String,
}

fn render<R: Serialize>(cfg: &ExperimentConfig, result: &R, rows: Vec<Row>) -> Result<String> {
    match cfg.format {
        Format::JsonTree => to_json(cfg.command.key(), cfg.seed, cfg, result),
        Format::Csv => to_csv(&rows),
    }
}

fn awec_params(cfg: &ExperimentConfig) -> Result<AwecParams> {
    cfg.awec.clone().ok_or_else(|| Error::Config("command needs AWEC parameters".into()))
}

fn registry(cfg: &ExperimentConfig) -> Vec<Builtin> {
    if cfg.adversaries.is_empty() {
        BASELINE.to_vec()
    } else {
        cfg.adversaries.clone()
    }
}

fn reject_exact(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.exact {
        return Err(Error::InvalidParameter(format!("--exact is not supported by `{}`", cfg.command.key())));
    }
    Ok(())
}

#[derive(Serialize)]
struct AuditReport {
    verdicts: Vec<AuditVerdict>,
    violation: bool,
    /// Exact worst-case privacy loss of the observer's view; `null` when unbounded or not requested.
    exact_privacy_loss: Option<f64>,
    exact_violation: Option<bool>,
}

fn run_audit(cfg: &ExperimentConfig) -> Result<Outcome> {
    let channel = Channel::new(cfg.channel.clone())?;
    let party = match cfg.party.as_deref().unwrap_or("b") {
        "a" | "A" => Role::A,
        "b" | "B" => Role::B,
        other => return Err(Error::Config(format!("unknown party `{other}` (expected a or b)"))),
    };
    let index = match cfg.index {
        Some(0) => return Err(Error::Config("--index is 1-based".into())),
        Some(i) => i - 1,
        None => cfg.channel.leak_index.unwrap_or(0),
    };
    let keys = if cfg.adversaries.is_empty() { Builtin::ALL.to_vec() } else { cfg.adversaries.clone() };
    let adversaries: Vec<_> = keys.iter().filter_map(|b| b.view_adversary()).collect();
    if adversaries.is_empty() {
        return Err(Error::Config("no listed adversary can attack a channel view".into()));
    }
    let base = SignVector::random(cfg.channel.n, &mut RandomStream::from_seed(cfg.seed).derive("audit-pair"));
    let pair = NeighborPair::around(party, base, index)?;
    let verdicts = audit_suite(&channel, &adversaries, &pair, cfg.channel.eps, cfg.channel.delta, cfg.trials, cfg.seed)?;
    let (exact_privacy_loss, exact_violation) = if cfg.exact {
        let loss = max_privacy_loss(&cfg.channel, party.other())?;
        (loss.is_finite().then_some(loss), Some(loss > cfg.channel.eps + 1e-9))
    } else {
        (None, None)
    };
    let violation = verdicts.iter().any(|v| v.violation);
    let rows = verdicts.iter().flat_map(|v| [Row::from(&v.accept_left), Row::from(&v.accept_right)]).collect();
    let report = AuditReport { violation, verdicts, exact_privacy_loss, exact_violation };
    Ok(Outcome {
        report: render(cfg, &report, rows)?,
        passed: !violation && exact_violation != Some(true),
        summary: match exact_violation {
            Some(e) => format!("audit: violation={violation} exact_violation={e}"),
            None => format!("audit: violation={violation}"),
        },
    })
}

fn dispatch(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.command {
        Command::Pipeline => {
            reject_exact(cfg)?;
            let pc = PipelineConfig { channel: cfg.channel.clone(), awec: awec_params(cfg)?, adversaries: cfg.adversaries.clone(), trials: cfg.trials };
            let r = pipeline_report(&pc, cfg.seed)?;
            let mut rows: Vec<Row> = r.estimates().into_iter().map(Row::from).collect();
            rows.extend(r.audit.iter().flat_map(|v| [Row::from(&v.accept_left), Row::from(&v.accept_right)]));
            Ok(Outcome {
                summary: format!("pipeline: ot_feasible={} dp_violation={}", r.ot_feasible, r.dp_violation),
                passed: r.ot_feasible,
                report: render(cfg, &r, rows)?,
            })
        }
        Command::Awec => {
            reject_exact(cfg)?;
            let channel = Channel::new(cfg.channel.clone())?;
            let runner = ChannelAwec { channel: &channel, params: awec_params(cfg)? };
            let reg = registry(cfg);
            let ds: Vec<_> = reg.iter().filter_map(|b| b.distinguisher()).collect();
            let es: Vec<_> = reg.iter().filter_map(|b| b.estimator()).collect();
            let cert = estimate_awec(&runner, &ds, &es, cfg.trials, cfg.seed)?;
            if let Some(path) = &cfg.log {
                let log = awec_trial_log(&runner, cfg.trials, cfg.seed)?;
                let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
                for rec in &log {
                    w.serialize(rec).map_err(|e| Error::Io(e.to_string()))?;
                }
                w.flush().map_err(|e| Error::Io(e.to_string()))?;
            }
            let mut rows = vec![Row::from(&cert.erasure), Row::from(&cert.alpha)];
            rows.extend(cert.p.iter().chain(&cert.q).map(Row::from));
            Ok(Outcome {
                summary: format!("awec: pass={} erasure={:.4} alpha={:.5}", cert.pass, cert.erasure.point, cert.alpha.point),
                passed: cert.pass,
                report: render(cfg, &cert, rows)?,
            })
        }
        Command::Wec => {
            reject_exact(cfg)?;
            let channel = Channel::new(cfg.channel.clone())?;
            let runner = ChannelAwec { channel: &channel, params: awec_params(cfg)? };
            let reg = registry(cfg);
            let ds: Vec<_> = reg.iter().filter_map(|b| b.distinguisher()).collect();
            let gs: Vec<_> = reg.iter().filter_map(|b| b.guesser()).collect();
            let cert = estimate_wec(&runner, &ds, &gs, cfg.trials, cfg.seed)?;
            let mut rows = vec![Row::from(&cert.erasure), Row::from(&cert.alpha)];
            rows.extend(cert.p.iter().chain(&cert.guess_rate).chain(&cert.q).map(Row::from));
            Ok(Outcome {
                summary: format!("wec: pass={} erasure={:.4} alpha={:.5}", cert.pass, cert.erasure.point, cert.alpha.point),
                passed: cert.pass,
                report: render(cfg, &cert, rows)?,
            })
        }
        Command::Audit => run_audit(cfg),
        Command::Attack => {
            reject_exact(cfg)?;
            let channel = Channel::new(cfg.channel.clone())?;
            let k = awec_params(cfg)?.k;
            let (eps, delta) = (cfg.channel.eps, cfg.channel.delta);
            let r = match cfg.attack.unwrap_or(AttackKind::ATilde) {
                AttackKind::ATilde => {
                    let keys = if cfg.adversaries.is_empty() { vec![Builtin::RevealedMismatch] } else { cfg.adversaries.clone() };
                    let a = keys.iter().find_map(|b| b.distinguisher()).ok_or_else(|| Error::Config("a-tilde needs a distinguisher".into()))?;
                    let tuning = PredictorTuning { gamma: Some(cfg.gamma.unwrap_or(0.5)), samples: Some(cfg.samples.unwrap_or(256)) };
                    a_tilde_experiment(&channel, a.as_ref(), k, tuning, eps, delta, cfg.trials, cfg.seed)?
                }
                AttackKind::BTilde => {
                    let keys = if cfg.adversaries.is_empty() { vec![Builtin::ExactOA] } else { cfg.adversaries.clone() };
                    let b = keys.iter().find_map(|b| b.estimator()).ok_or_else(|| Error::Config("b-tilde needs an estimator".into()))?;
                    b_tilde_experiment(&channel, b.as_ref(), &ReferenceDist::default(), k, 16, eps, delta, cfg.trials, cfg.seed)?
                }
            };
            let rows = vec![Row::from(&r.verdict.hit), Row::from(&r.verdict.miss), Row::from(&r.abstain)];
            Ok(Outcome {
                summary: format!("attack {}[{}]: violation={}", r.attack, r.adversary, r.verdict.violation),
                passed: !r.verdict.violation,
                report: render(cfg, &r, rows)?,
            })
        }
        Command::AppendixA => {
            reject_exact(cfg)?;
            let sim = cfg.simulator.unwrap_or(Simulator::Faithful);
            let r = view_equivalence_appendix_a(cfg.channel.n, cfg.channel.eps, cfg.trials, cfg.seed, sim)?;
            let mut rows = vec![Row::point("tv", r.tv, r.trials, r.seed), Row::point("tv-noise", r.tv_noise, r.trials, r.seed)];
            for f in &r.features {
                rows.push(Row::point(format!("tv[{}]", f.feature), f.tv, r.trials, r.seed));
                rows.push(Row::point(format!("chi2-p[{}]", f.feature), f.chi2_p_value, r.trials, r.seed));
            }
            Ok(Outcome { summary: format!("appendix-a: tv={:.5} noise={:.5}", r.tv, r.tv_noise), passed: r.tv <= GATE_TV, report: render(cfg, &r, rows)? })
        }
        Command::GlDecode => {
            reject_exact(cfg)?;
            let r = gl_decode_experiment(cfg.bits.unwrap_or(32), cfg.accuracy.unwrap_or(0.9), cfg.samples, cfg.trials, cfg.seed)?;
            Ok(Outcome {
                summary: format!("gl-decode: recovery={:.4}", r.point),
                passed: r.point >= GATE_RECOVERY,
                report: render(cfg, &r, vec![Row::from(&r)])?,
            })
        }
    }
}

/// Runs a resolved configuration on a pool of `cfg.threads` workers.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| dispatch(cfg)),
        None => dispatch(cfg),
    }
}

fn write_report(cfg: &ExperimentConfig, text: &str) -> Result<()> {
    match &cfg.output {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Parses `argv`, runs the experiment and returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FAULT } else { 0 };
        }
    };
    let result = ExperimentConfig::resolve(cli).and_then(|cfg| {
        let out = execute(&cfg)?;
        write_report(&cfg, &out.report)?;
        Ok((cfg, out))
    });
    match result {
        Ok((cfg, out)) => {
            eprintln!("{} (seed {})", out.summary, cfg.seed);
            if cfg.gate && !out.passed {
                EXIT_GATE
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAULT
        }
    }
}
