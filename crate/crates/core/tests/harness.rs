use dpot::attacks::{Builtin, ChannelView, Distinguisher, PairAdvice, ViewAdversary};
use dpot::awec::{AwecParams, DEFAULT_LAMBDA1, DEFAULT_LAMBDA2};
use dpot::channels::exact::max_privacy_loss;
use dpot::channels::laplace::DiscreteLaplace;
use dpot::channels::protocol::Role;
use dpot::channels::{Channel, ChannelKind, ChannelSample, ChannelSpec, Payload, Pinned, Sampler};
use dpot::harness::pipeline::MeasuredBounds;
use dpot::harness::*;
use dpot::wec::{exact, ot_feasible, ChannelAwec};
use dpot::{Error, RandomStream, Result, SignVector};
use proptest::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};

struct Perfect(usize);

impl Sampler for Perfect {
    fn n(&self) -> usize {
        self.0
    }

    fn sample_pinned(&self, _: &Pinned, stream: &mut RandomStream) -> Result<ChannelSample> {
        let x = SignVector::random(self.0, stream);
        let y = SignVector::random(self.0, stream);
        let z = x.inner(&y)?;
        Ok(ChannelSample { x, u: Payload::Empty, y, v: Payload::Estimate { z }, out_v: Some(z) })
    }
}

fn channel(kind: ChannelKind, n: usize, eps: f64, delta: f64) -> Channel {
    Channel::new(ChannelSpec::new(kind, n, eps, delta)).unwrap()
}

fn view_adversaries() -> Vec<Box<dyn ViewAdversary>> {
    Builtin::ALL.into_iter().filter_map(Builtin::view_adversary).collect()
}

#[test]
fn clopper_pearson_tails_match_binomial() {
    let tail = (1.0 - CONFIDENCE) / 2.0;
    for (k, n) in [(1u64, 10u64), (37, 200), (500, 1000), (9_990, 10_000)] {
        let (lo, hi) = clopper_pearson(k, n, CONFIDENCE);
        // P[Bin(n, lo) >= k] = P[Bin(n, hi) <= k] = tail.
        let upper_tail = 1.0 - Binomial::new(lo, n).unwrap().cdf(k - 1);
        let lower_tail = Binomial::new(hi, n).unwrap().cdf(k);
        assert!((upper_tail - tail).abs() < 1e-6, "{k}/{n}: {upper_tail}");
        assert!((lower_tail - tail).abs() < 1e-6, "{k}/{n}: {lower_tail}");
    }
}

proptest! {
    #[test]
    fn intervals_bracket_the_point(n in 1u64..5000, frac in 0.0f64..=1.0) {
        let k = (frac * n as f64).floor() as u64;
        let r = EstimateReport::bernoulli("x", k, n, 0);
        prop_assert!(0.0 <= r.ci_low && r.ci_low <= r.point && r.point <= r.ci_high && r.ci_high <= 1.0);
    }

    #[test]
    fn feasibility_is_a_function_of_the_bounds(alpha in 0.0f64..0.05, p in 0.0f64..0.05, q in 0.0f64..1.0) {
        let m = MeasuredBounds { alpha, p, q };
        let direct = ot_feasible(&exact(alpha).unwrap(), &exact(p).unwrap(), &exact(q).unwrap()).unwrap();
        prop_assert_eq!(m.feasible().unwrap(), direct);
        prop_assert_eq!(m.feasible().unwrap(), m.feasible().unwrap());
    }
}

#[test]
fn accuracy_examples() {
    assert_eq!(estimate_accuracy(&Perfect(50), 0, 1000, 60).unwrap().point, 1.0);
    let tl = channel(ChannelKind::TrustedLaplace, 1000, 1.0, 0.0);
    let r = estimate_accuracy(&tl, 14, 100_000, 61).unwrap();
    assert!(r.point >= 0.999 && r.ci_high - r.ci_low <= 0.002, "{r:?}");
    let noise = DiscreteLaplace::for_epsilon(1.0).unwrap();
    let within_one = noise.mass(-1) + noise.mass(0) + noise.mass(1);
    let r = estimate_accuracy(&tl, 1, 100_000, 62).unwrap();
    assert!(r.ci_low <= within_one && within_one <= r.ci_high, "{r:?} vs {within_one}");
    assert!(estimate_accuracy(&tl, 1, 99, 0).is_err());
}

#[test]
fn awec_certificate_examples() {
    let n = 100_000;
    let ch = channel(ChannelKind::TrustedLaplace, n, 1.0, 0.0);
    let runner = ChannelAwec { channel: &ch, params: AwecParams::new(n, 14, 1.0, DEFAULT_LAMBDA1, DEFAULT_LAMBDA2).unwrap() };
    let d: Vec<Box<dyn Distinguisher>> = vec![Builtin::Constant.distinguisher().unwrap()];
    let e = vec![Builtin::Constant.estimator().unwrap()];
    let c = estimate_awec(&runner, &d, &e, 10_000, 63).unwrap();
    assert!((0.487..=0.513).contains(&c.erasure.point));
    assert_eq!(c.identity_failures, 0);
    assert_eq!(c.p[0].point, 0.0);
    // The blind estimate 0 is within 1000 ell of o_A unless a walk of at most n
    // steps strays past 14000; Hoeffding puts that below 2 exp(-14000^2 / 2n).
    let miss_bound = 2.0 * (-(14_000f64.powi(2)) / (2.0 * n as f64)).exp();
    assert!(c.q[0].ci_high >= 1.0 - miss_bound);
    assert_eq!(c.q[0].point, 1.0);
    assert!(!c.pass, "the blind estimator alone breaks the q target");
    assert!(estimate_awec(&runner, &[], &e, 10, 0).is_err());
}

#[test]
fn wec_certificate_examples() {
    let ideal = Perfect(400);
    let runner = ChannelAwec { channel: &ideal, params: AwecParams::overridden(400, 1, 1.0, 1.0, 10.0, 27).unwrap() };
    let d: Vec<Box<dyn Distinguisher>> = vec![Builtin::RandomBit.distinguisher().unwrap()];
    let g = vec![Builtin::RandomBit.guesser().unwrap(), Builtin::Natural.guesser().unwrap()];
    let c = estimate_wec(&runner, &d, &g, 10_000, 64).unwrap();
    assert_eq!(c.alpha.point, 0.0);
    assert!(c.guess_rate[0].ci_low <= 0.5 && 0.5 <= c.guess_rate[0].ci_high, "{:?}", c.guess_rate[0]);
    assert_eq!(c.targets.q, 0.522);
}

/// Accepts when B's randomized copy of x agrees with the left world at the audited coordinate.
struct Identity;

impl ViewAdversary for Identity {
    fn name(&self) -> &str {
        "identity"
    }

    fn accept(&self, view: &ChannelView<'_>, pair: &PairAdvice<'_>, _: &mut RandomStream) -> bool {
        match view.payload {
            Payload::NoisyInput { noisy, .. } => noisy.get(pair.index) == pair.left.get(pair.index),
            _ => false,
        }
    }
}

#[test]
fn randomized_response_acceptance_ratio() {
    let ch = channel(ChannelKind::RandomizedResponse, 1, 1.0, 0.0);
    let pair = NeighborPair::around(Role::A, SignVector::ones(1), 0).unwrap();
    let v = dp_audit(&ch, Box::new(Identity), &pair, 1.0, 0.0, 100_000, 65).unwrap();
    let ratio = v.accept_left.point / v.accept_right.point;
    assert!((ratio - 1f64.exp()).abs() < 0.1, "{ratio}");
    assert!(!v.violation);
    assert_eq!(v.observer, "B");
}

#[test]
fn exact_channels_pass_every_builtin_audit() {
    for kind in [ChannelKind::TrustedLaplace, ChannelKind::SplitNoise] {
        let ch = channel(kind, 8, 1.0, 0.0);
        for party in [Role::A, Role::B] {
            let observer = if party == Role::A { Role::B } else { Role::A };
            assert!(max_privacy_loss(ch.spec(), observer).unwrap() <= 1.0 + 1e-9);
            let pair = NeighborPair::around(party, SignVector::random(8, &mut RandomStream::from_seed(66)), 3).unwrap();
            let verdicts = audit_suite(&ch, &view_adversaries(), &pair, 1.0, 0.0, 10_000, 67).unwrap();
            assert_eq!(verdicts.len(), 2 * view_adversaries().len());
            assert!(verdicts.iter().all(|v| !v.violation), "{kind}: {verdicts:?}");
        }
    }
}

#[test]
fn leaky_channel_is_flagged_across_budgets() {
    let pair = NeighborPair::around(Role::B, SignVector::random(16, &mut RandomStream::from_seed(68)), 5).unwrap();
    for eps in [0.5, 1.0, 3.0] {
        for delta in [0.0, 0.01, 0.2] {
            let ch = Channel::new(ChannelSpec::new(ChannelKind::Leaky, 16, eps, delta).with_leak_index(5)).unwrap();
            let v = dp_audit(&ch, Builtin::LeakyCoordinate.view_adversary().unwrap(), &pair, eps, delta, 10_000, 69).unwrap();
            assert!(v.violation, "eps {eps} delta {delta}");
        }
    }
}

#[test]
fn audit_rejects_non_neighbours() {
    let ch = channel(ChannelKind::TrustedLaplace, 8, 1.0, 0.0);
    let left = SignVector::ones(8);
    let right = left.flip_at(1).unwrap().flip_at(2).unwrap();
    for r in [right, left.clone()] {
        let pair = NeighborPair { party: Role::A, left: left.clone(), right: r };
        assert!(audit_suite(&ch, &view_adversaries(), &pair, 1.0, 0.0, 100, 0).is_err());
    }
}

#[test]
fn appendix_a_simulators() {
    let faithful = view_equivalence_appendix_a(8, 1.0, 20_000, 70, Simulator::Faithful).unwrap();
    let broken = view_equivalence_appendix_a(8, 1.0, 20_000, 70, Simulator::Broken).unwrap();
    assert!(faithful.tv <= 2.0 * faithful.tv_noise, "{} vs noise {}", faithful.tv, faithful.tv_noise);
    assert!(broken.tv > 0.1, "{}", broken.tv);
    assert!(view_equivalence_appendix_a(17, 1.0, 10, 0, Simulator::Faithful).is_err());
}

fn pipeline(kind: ChannelKind, n: usize, trials: u64) -> PipelineConfig {
    let mut spec = ChannelSpec::new(kind, n, 1.0, 0.01);
    if kind == ChannelKind::Leaky {
        spec = spec.with_leak_index(2);
    }
    PipelineConfig { channel: spec, awec: AwecParams::new(n, 1, 1.0, DEFAULT_LAMBDA1, DEFAULT_LAMBDA2).unwrap(), adversaries: vec![], trials }
}

#[test]
fn pipeline_flags_leaky_channel() {
    let leaky = pipeline_report(&pipeline(ChannelKind::Leaky, 2000, 3000), 71).unwrap();
    assert!(leaky.dp_violation);
    let honest = pipeline_report(&pipeline(ChannelKind::TrustedLaplace, 2000, 3000), 71).unwrap();
    assert!(!honest.dp_violation);
    assert!(honest.target_chain.feasible);
    assert_eq!(honest.ot_feasible, honest.measured.feasible().unwrap());
}

#[test]
fn pipeline_rejects_zero_trials() {
    assert!(matches!(pipeline_report(&pipeline(ChannelKind::TrustedLaplace, 200, 0), 0), Err(Error::Config(_))));
}

#[test]
fn pipeline_is_identical_across_thread_counts() {
    let cfg = pipeline(ChannelKind::SplitNoise, 500, 800);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| serde_json::to_string(&pipeline_report(&cfg, 72).unwrap()).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(1));
}
