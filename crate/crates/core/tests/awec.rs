use dpot::awec::{count_flipped, run_awec, AwecParams, DEFAULT_LAMBDA1, DEFAULT_LAMBDA2};
use dpot::channels::{Channel, ChannelKind, ChannelSample, ChannelSpec, Payload, Pinned, Sampler};
use dpot::harness::run_trials;
use dpot::harness::stats::{clopper_pearson, CONFIDENCE};
use dpot::{RandomStream, Result, SignVector};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Releases `<x, y>` with no noise.
struct Perfect(usize);

impl Sampler for Perfect {
    fn n(&self) -> usize {
        self.0
    }

    fn sample_pinned(&self, pinned: &Pinned, stream: &mut RandomStream) -> Result<ChannelSample> {
        let x = pinned.x.clone().unwrap_or_else(|| SignVector::random(self.0, stream));
        let y = pinned.y.clone().unwrap_or_else(|| SignVector::random(self.0, stream));
        let z = x.inner(&y)?;
        Ok(ChannelSample { x, u: Payload::Empty, y, v: Payload::Estimate { z }, out_v: Some(z) })
    }
}

fn laplace(n: usize) -> Channel {
    Channel::new(ChannelSpec::new(ChannelKind::TrustedLaplace, n, 1.0, 0.0)).unwrap()
}

#[test]
fn derived_k_examples() {
    let p = AwecParams::new(100_000, 14, 1.0, DEFAULT_LAMBDA1, DEFAULT_LAMBDA2).unwrap();
    assert_eq!(p.k, (std::f64::consts::E * 10.0 * 196.0).floor() as usize);
    assert_eq!(p.k, 5327);
    assert!(AwecParams::new(1000, 14, 1.0, DEFAULT_LAMBDA1, DEFAULT_LAMBDA2).is_err());
    assert!(AwecParams::new(100, 1, 1.0, DEFAULT_LAMBDA1, DEFAULT_LAMBDA2).unwrap().with_k(0).is_err());
}

#[test]
fn perfect_channel_outputs_agree() {
    let ch = Perfect(64);
    let params = AwecParams::overridden(64, 1, 1.0, 1.0, 10.0, 8).unwrap();
    let mut s = RandomStream::from_seed(20);
    let mut kept = 0;
    for _ in 0..2000 {
        let o = run_awec(&ch, &params, &mut s).unwrap();
        if let Some(b) = o.o_b {
            assert_eq!(o.o_a, b);
            kept += 1;
        }
    }
    assert!(kept > 0);
}

#[test]
fn erasure_rate_is_one_half() {
    let ch = laplace(1000);
    let params = AwecParams::overridden(1000, 1, 1.0, 1.0, 10.0, 27).unwrap();
    let erased: Vec<bool> = run_trials(21, "erasure", 10_000, |_, s| Ok(run_awec(&ch, &params, s)?.erased())).unwrap();
    let count = erased.iter().filter(|&&e| e).count() as u64;
    let (lo, hi) = clopper_pearson(count, 10_000, CONFIDENCE);
    assert!(lo <= 0.5 && 0.5 <= hi);
    assert!(hi - lo < 0.027, "{lo} {hi}");
}

#[test]
fn laplace_awec_gap_is_within_ell() {
    let n = 100_000;
    let ch = laplace(n);
    let params = AwecParams::new(n, 14, 1.0, DEFAULT_LAMBDA1, DEFAULT_LAMBDA2).unwrap();
    let gaps: Vec<Option<u64>> = run_trials(22, "gap", 200_000, |_, s| Ok(run_awec(&ch, &params, s)?.record().gap)).unwrap();
    let kept: Vec<u64> = gaps.into_iter().flatten().collect();
    let far = kept.iter().filter(|&&g| g > 14).count() as u64;
    let (_, hi) = clopper_pearson(far, kept.len() as u64, CONFIDENCE);
    assert!(kept.len() > 99_000);
    assert!(hi <= 0.002, "{far} of {} gaps exceed ell, upper {hi}", kept.len());
}

#[test]
fn identity_holds_on_every_trial() {
    for kind in [ChannelKind::RandomizedResponse, ChannelKind::TrustedLaplace, ChannelKind::SplitNoise] {
        let ch = Channel::new(ChannelSpec::new(kind, 200, 1.0, 0.0)).unwrap();
        let params = AwecParams::overridden(200, 1, 1.0, 1.0, 10.0, 27).unwrap();
        let mut s = RandomStream::from_seed(23);
        for _ in 0..2000 {
            let o = run_awec(&ch, &params, &mut s).unwrap();
            let out_v = o.view_b.v.designated_output().unwrap();
            if let Some(b) = o.o_b {
                assert_eq!(o.o_a - b, o.view_a.x.inner(&o.view_b.y).unwrap() - out_v);
                assert_eq!(o.view_b.indices, None);
            }
        }
    }
}

#[test]
fn count_flipped_expectation() {
    // Distinct resampled coordinates: n (1 - (1 - 1/n)^k); each flips with probability 1/2.
    let (n, k) = (10_000usize, 100usize);
    let expected = n as f64 * (1.0 - (1.0 - 1.0 / n as f64).powi(k as i32)) / 2.0;
    let mut s = RandomStream::from_seed(24);
    let reps = 4000;
    let mut total = 0usize;
    for _ in 0..reps {
        let y = SignVector::random(n, &mut s);
        let mut t = y.clone();
        let idx: Vec<usize> = (0..k).map(|_| s.index(n)).collect();
        t.resample_at(&idx, &mut s);
        let c = count_flipped(&y, &t).unwrap();
        assert!(c <= k);
        total += c;
    }
    let mean = total as f64 / reps as f64;
    // Per-rep sd is at most sqrt(k)/2 = 5.
    assert!((mean - expected).abs() < 4.0 * 5.0 / (reps as f64).sqrt(), "{mean} vs {expected}");
    assert_eq!(count_flipped(&SignVector::ones(5), &SignVector::ones(5)).unwrap(), 0);
    assert!(count_flipped(&SignVector::ones(5), &SignVector::ones(6)).is_err());
}

#[test]
fn erasure_coin_is_independent_of_inputs() {
    // 2x4 contingency of the erasure bit against (x_0, y_0, |r| parity).
    let ch = laplace(100);
    let params = AwecParams::overridden(100, 1, 1.0, 1.0, 10.0, 27).unwrap();
    let rows: Vec<(bool, usize)> = run_trials(25, "indep", 10_000, |_, s| {
        let o = run_awec(&ch, &params, s)?;
        let cell = usize::from(o.view_a.x.get(0) == 1) * 2 + usize::from(o.view_b.y.get(0) == 1);
        Ok((o.erased(), cell + 4 * (o.view_a.r.count() % 2)))
    })
    .unwrap();
    let mut table = [[0f64; 8]; 2];
    for (e, c) in rows {
        table[usize::from(e)][c] += 1.0;
    }
    let total: f64 = table.iter().flatten().sum();
    let mut chi2 = 0.0;
    for row in &table {
        for c in 0..8 {
            let expected = row.iter().sum::<f64>() * (table[0][c] + table[1][c]) / total;
            chi2 += (row[c] - expected).powi(2) / expected;
        }
    }
    let p = 1.0 - ChiSquared::new(7.0).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 {chi2}, p {p}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn branch_structure(seed in any::<u64>(), k in 1usize..60) {
        let n = 60;
        let ch = laplace(n);
        let params = AwecParams::overridden(n, 1, 1.0, 1.0, 10.0, k).unwrap();
        let o = run_awec(&ch, &params, &mut RandomStream::from_seed(seed)).unwrap();
        let (a, b) = (&o.view_a, &o.view_b);
        prop_assert_eq!(&a.r, &b.r);
        // B holds x only on r.
        prop_assert_eq!(b.x_r.positions(), &b.r);
        for i in 0..n {
            prop_assert_eq!(b.x_r.get(i), b.r.contains(i).then(|| a.x.get(i)));
        }
        prop_assert_eq!(a.y_hat.positions(), &a.r.complement());
        prop_assert_eq!(o.o_a, a.y_hat.inner(&a.x).unwrap());
        match (&o.o_b, &b.indices, &b.y_tilde) {
            (Some(_), None, None) => {
                for i in a.r.complement().ones() {
                    prop_assert_eq!(a.y_hat.get(i), Some(b.y.get(i)));
                }
            }
            (None, Some(idx), Some(t)) => {
                prop_assert_eq!(idx.len(), k);
                for i in b.y.differing_positions(t).unwrap() {
                    prop_assert!(idx.contains(&i));
                }
                for i in a.r.complement().ones() {
                    prop_assert_eq!(a.y_hat.get(i), Some(t.get(i)));
                }
            }
            _ => prop_assert!(false, "inconsistent branch"),
        }
    }
}

#[test]
fn resampled_coordinates_are_uniform() {
    // With k = 1 the single resampled coordinate is +1 half the time, whatever y held.
    let n = 16;
    let ch = laplace(n);
    let params = AwecParams::overridden(n, 1, 1.0, 1.0, 10.0, 1).unwrap();
    let mut s = RandomStream::from_seed(26);
    let (mut plus, mut seen) = (0u64, 0u64);
    let pinned_y = SignVector::ones(n);
    for _ in 0..20_000 {
        let o = run_awec(&PinnedY(&ch, &pinned_y), &params, &mut s).unwrap();
        if let (Some(idx), Some(t)) = (&o.view_b.indices, &o.view_b.y_tilde) {
            seen += 1;
            plus += u64::from(t.get(idx[0]) == 1);
        }
    }
    let (lo, hi) = clopper_pearson(plus, seen, CONFIDENCE);
    assert!(lo <= 0.5 && 0.5 <= hi, "{plus}/{seen}");
}

struct PinnedY<'a>(&'a Channel, &'a SignVector);

impl Sampler for PinnedY<'_> {
    fn n(&self) -> usize {
        self.0.n()
    }

    fn sample_pinned(&self, _: &Pinned, stream: &mut RandomStream) -> Result<ChannelSample> {
        self.0.sample_pinned(&Pinned::y(self.1.clone()), stream)
    }
}
