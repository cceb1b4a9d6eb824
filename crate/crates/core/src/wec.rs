//! Weak erasure channel from an AWEC: random offset, bucketing, and a
//! Goldreich–Levin bit, plus the weak GL decoder and the OT feasibility test.

use crate::awec::{run_awec, AwecOutcome, AwecParams, AwecViewA, AwecViewB};
use crate::channels::Sampler;
use crate::error::{invalid, Error, Result};
use crate::stream::RandomStream;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

/// Bucket width is `WIDTH_FACTOR * ell`.
pub const WIDTH_FACTOR: u64 = 1000;

fn ceil_div(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

/// `ceil((o + s) / (1000 ell))` for `s` in `1..=1000 ell`.
pub fn bucket(o: i64, s: i64, ell: u64) -> Result<i64> {
    if ell < 1 {
        return Err(invalid("ell must be at least 1"));
    }
    let width = (WIDTH_FACTOR * ell) as i64;
    if !(1..=width).contains(&s) {
        return Err(invalid(format!("offset {s} outside [1, {width}]")));
    }
    Ok(ceil_div(o + s, width))
}

/// Bucketing geometry for outputs in `[-n, n]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketParams {
    pub n: usize,
    pub ell: u64,
    pub width: u64,
    pub min_index: i64,
    pub max_index: i64,
    /// Number of GL predicate bits.
    pub bit_width: u32,
}

impl BucketParams {
    pub fn new(n: usize, ell: u64) -> Result<Self> {
        if ell < 1 || n < 1 {
            return Err(invalid("n and ell must be at least 1"));
        }
        let width = WIDTH_FACTOR * ell;
        let (n_i, w_i) = (n as i64, width as i64);
        let min_index = ceil_div(-n_i + 1, w_i);
        let max_index = ceil_div(n_i + w_i, w_i);
        let needed = 64 - ((max_index - min_index) as u64).leading_zeros();
        let formula = (((2 * n) as f64 + width as f64) / width as f64).log2() + 1.0;
        let bit_width = (formula.ceil() as u32).max(needed).max(1);
        if bit_width > 64 {
            return Err(invalid("bucket range needs more than 64 predicate bits"));
        }
        Ok(BucketParams { n, ell, width, min_index, max_index, bit_width })
    }

    /// Bucket index shifted so that the smallest reachable index is 0.
    pub fn shifted(&self, index: i64) -> Result<u64> {
        if index < self.min_index || index > self.max_index {
            return Err(invalid(format!("bucket index {index} outside [{}, {}]", self.min_index, self.max_index)));
        }
        Ok((index - self.min_index) as u64)
    }

    pub fn r_gl_mask(&self) -> u64 {
        if self.bit_width == 64 {
            u64::MAX
        } else {
            (1u64 << self.bit_width) - 1
        }
    }
}

/// `<bits, r> mod 2`.
pub fn gl_bits(bits: u64, r: u64) -> u8 {
    ((bits & r).count_ones() & 1) as u8
}

/// GL bit of a bucket index after the canonical shift.
pub fn gl_predicate(index: i64, r_gl: u64, params: &BucketParams) -> Result<u8> {
    if r_gl & !params.r_gl_mask() != 0 {
        return Err(invalid("r_gl has bits beyond the predicate width"));
    }
    Ok(gl_bits(params.shifted(index)?, r_gl))
}

/// `gl(bucket(o, s), r_gl)` with `o` clamped to `[-n, n]`.
pub fn wec_bit(o: i64, s: i64, r_gl: u64, params: &BucketParams) -> Result<u8> {
    let n = params.n as i64;
    gl_predicate(bucket(o.clamp(-n, n), s, params.ell)?, r_gl, params)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WecViewA {
    pub awec: AwecViewA,
    pub s: i64,
    pub r_gl: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WecViewB {
    pub awec: AwecViewB,
    pub s: i64,
    pub r_gl: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WecOutcome {
    pub o_a: u8,
    pub view_a: WecViewA,
    pub o_b: Option<u8>,
    pub view_b: WecViewB,
    /// Underlying AWEC outputs.
    pub awec_o_a: i64,
    pub awec_o_b: Option<i64>,
}

/// Source of AWEC executions.
pub trait AwecRunner: Sync {
    fn n(&self) -> usize;
    fn ell(&self) -> u64;
    fn run(&self, stream: &mut RandomStream) -> Result<AwecOutcome>;
}

/// The AWEC protocol over a concrete channel.
pub struct ChannelAwec<'a> {
    pub channel: &'a dyn Sampler,
    pub params: AwecParams,
}

impl AwecRunner for ChannelAwec<'_> {
    fn n(&self) -> usize {
        self.params.n
    }

    fn ell(&self) -> u64 {
        self.params.ell
    }

    fn run(&self, stream: &mut RandomStream) -> Result<AwecOutcome> {
        run_awec(self.channel, &self.params, stream)
    }
}

/// One WEC execution on top of one AWEC execution.
pub fn run_wec(runner: &dyn AwecRunner, stream: &mut RandomStream) -> Result<WecOutcome> {
    let params = BucketParams::new(runner.n(), runner.ell())?;
    let awec = runner.run(&mut stream.fork("awec"))?;
    let mut a = stream.fork("offset");
    let s = a.range_inclusive(1, params.width as i64);
    let r_gl = a.next_u64() & params.r_gl_mask();
    let o_a = wec_bit(awec.o_a, s, r_gl, &params)?;
    let o_b = awec.o_b.map(|o| wec_bit(o, s, r_gl, &params)).transpose()?;
    Ok(WecOutcome {
        o_a,
        o_b,
        awec_o_a: awec.o_a,
        awec_o_b: awec.o_b,
        view_a: WecViewA { awec: awec.view_a, s, r_gl },
        view_b: WecViewB { awec: awec.view_b, s, r_gl },
    })
}

/// Recovers an `n_bits`-bit string `x` from an oracle approximating `r -> <x, r> mod 2`.
///
/// For each bit `i`, queries the oracle on `samples` random pairs `(R, R ^ e_i)`
/// and takes the majority of the XORed answers; ties decode to 0. `samples`
/// defaults to `n_bits`.
pub fn gl_weak_decode(pred: &mut dyn FnMut(u64) -> u8, n_bits: u32, samples: Option<usize>, stream: &mut RandomStream) -> Result<u64> {
    if n_bits == 0 || n_bits > 64 {
        return Err(invalid(format!("n_bits must lie in [1, 64], got {n_bits}")));
    }
    let samples = samples.unwrap_or(n_bits as usize);
    let mask = if n_bits == 64 { u64::MAX } else { (1u64 << n_bits) - 1 };
    let mut out = 0u64;
    for i in 0..n_bits {
        let e = 1u64 << i;
        let ones = (0..samples)
            .filter(|_| {
                let r = stream.next_u64() & mask;
                (pred(r) ^ pred(r ^ e)) & 1 == 1
            })
            .count();
        if 2 * ones > samples {
            out |= e;
        }
    }
    Ok(out)
}

/// Parses a decimal literal such as `0.001` into an exact rational.
pub fn decimal(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(Error::Config(format!("`{text}` is not a decimal number")));
    }
    let digits: BigInt = format!("{int}{frac}0").parse::<BigInt>().expect("digits only") / BigInt::from(10);
    let value = BigRational::new(digits, BigInt::from(10).pow(frac.len() as u32));
    Ok(if neg { -value } else { value })
}

/// Exact binary value of a finite float.
pub fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| invalid(format!("{x} is not finite")))
}

fn unit_interval(name: &str, x: &BigRational) -> Result<()> {
    if x < &BigRational::zero() || x > &BigRational::one() {
        return Err(invalid(format!("{name} = {x} lies outside [0, 1]")));
    }
    Ok(())
}

/// `44 (alpha + p) <= 1 - q`.
pub fn ot_feasible(alpha: &BigRational, p: &BigRational, q: &BigRational) -> Result<bool> {
    unit_interval("alpha", alpha)?;
    unit_interval("p", p)?;
    unit_interval("q", q)?;
    Ok(BigRational::from_integer(44.into()) * (alpha + p) <= BigRational::one() - q)
}

/// Secrecy and agreement parameters of an erasure channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErasureTargets {
    pub alpha: BigRational,
    pub p: BigRational,
    pub q: BigRational,
}

/// WEC parameters obtained from AWEC parameters: `(alpha + 1/1000, p, 1/2 + 2 (q + 1/100))`.
pub fn awec_to_wec(awec: &ErasureTargets) -> ErasureTargets {
    let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    ErasureTargets {
        alpha: &awec.alpha + r(1, 1000),
        p: awec.p.clone(),
        q: r(1, 2) + r(2, 1) * (&awec.q + r(1, 100)),
    }
}

/// Alternative `q' = 1/2 + 2.001 q`, reported alongside the main chain as a diagnostic.
pub fn awec_to_wec_q_variant(q: &BigRational) -> BigRational {
    BigRational::new(1.into(), 2.into()) + BigRational::new(2001.into(), 1000.into()) * q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_examples() {
        assert_eq!(bucket(5, 3, 1).unwrap(), 1);
        assert_eq!(bucket(1500, 200, 1).unwrap(), 2);
        assert_eq!(bucket(-1000, 1, 1).unwrap(), 0);
        assert_eq!(bucket(-1001, 1, 1).unwrap(), -1);
        assert!(bucket(0, 0, 1).is_err());
        assert!(bucket(0, 1001, 1).is_err());
    }

    #[test]
    fn bucket_params_cover_range() {
        let p = BucketParams::new(100_000, 14).unwrap();
        assert_eq!((p.min_index, p.max_index, p.bit_width), (-7, 9, 5));
        for o in [-100_000, 100_000] {
            for s in [1, 14_000] {
                assert!(p.shifted(bucket(o, s, 14).unwrap()).is_ok());
            }
        }
    }

    #[test]
    fn gl_examples() {
        let p = BucketParams::new(10, 1).unwrap();
        assert_eq!(gl_bits(0b101, 0b011), 1);
        assert_eq!(gl_predicate(p.min_index, 0, &p).unwrap(), 0);
        assert!(gl_predicate(p.max_index + 1, 1, &p).is_err());
    }

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(decimal("0.001").unwrap(), BigRational::new(1.into(), 1000.into()));
        assert_eq!(decimal("2").unwrap(), BigRational::from_integer(2.into()));
        assert_eq!(decimal("-.5").unwrap(), BigRational::new((-1).into(), 2.into()));
        assert!(decimal("1e-3").is_err());
    }

    #[test]
    fn feasibility_examples() {
        let d = |s| decimal(s).unwrap();
        assert!(ot_feasible(&d("0.002"), &d("0.001"), &d("0.522")).unwrap());
        assert!(ot_feasible(&d("0"), &d("0"), &d("1")).unwrap());
        assert!(!ot_feasible(&d("0.1"), &d("0.1"), &d("0.5")).unwrap());
        assert!(ot_feasible(&d("1.5"), &d("0"), &d("0")).is_err());
    }

    #[test]
    fn exact_decoder_recovers() {
        let mut s = RandomStream::from_seed(1);
        for _ in 0..20 {
            let x = s.next_u64() & 0xffff;
            let got = gl_weak_decode(&mut |r| gl_bits(x, r), 16, None, &mut s).unwrap();
            assert_eq!(got, x);
        }
    }
}
