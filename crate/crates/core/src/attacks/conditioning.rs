//! Fraction of coordinates on which conditioning a mask function shifts its mean.
//!
//! For `F: {0,1}^n -> {0,1}` and uniform `R`, an index `i` is bad when
//! `|E[F(R) | R_i = 0] - E[F(R) | R_i = 1]| >= alpha`. At most a `2 / (n alpha^2)`
//! fraction of indices can be bad.

use crate::error::{invalid, Result};
use crate::signs::IndexMask;
use crate::stream::RandomStream;
use serde::{Deserialize, Serialize};

/// Largest `n` the exact mode enumerates.
pub const MAX_EXACT_N: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditioningMode {
    /// All `2^n` masks.
    Exact,
    /// `samples` masks per conditioning event.
    Sampled { samples: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditioningReport {
    /// Per-index gap `|E[F | R_i = 0] - E[F | R_i = 1]|`.
    pub gaps: Vec<f64>,
    /// Fraction of indices with gap `>= alpha`.
    pub fraction: f64,
    /// `2 / (n alpha^2)`.
    pub bound: f64,
}

fn report(gaps: Vec<f64>, alpha: f64) -> ConditioningReport {
    let n = gaps.len();
    let bad = gaps.iter().filter(|&&g| g >= alpha).count();
    ConditioningReport { fraction: bad as f64 / n as f64, bound: 2.0 / (n as f64 * alpha * alpha), gaps }
}

/// Exact report for a function given as a packed truth table (`table` bit `m` is `F(m)`).
pub fn truth_table_gap(table: &[u64], n: usize, alpha: f64) -> Result<ConditioningReport> {
    if n == 0 || n > MAX_EXACT_N {
        return Err(invalid(format!("exact mode needs 1 <= n <= {MAX_EXACT_N}, got {n}")));
    }
    if table.len() != (1usize << n).div_ceil(64) {
        return Err(invalid("truth table has the wrong number of words"));
    }
    let total: u64 = table.iter().map(|w| w.count_ones() as u64).sum();
    let half = (1u64 << (n - 1)) as f64;
    let gaps = (0..n)
        .map(|i| {
            let with_i: u64 = if i < 6 {
                let pattern = (0..64u64).filter(|j| j >> i & 1 == 1).fold(0u64, |acc, j| acc | 1 << j);
                table.iter().map(|w| (w & pattern).count_ones() as u64).sum()
            } else {
                table.iter().enumerate().filter(|(wi, _)| wi >> (i - 6) & 1 == 1).map(|(_, w)| w.count_ones() as u64).sum()
            };
            ((total - with_i) as f64 - with_i as f64).abs() / half
        })
        .collect();
    Ok(report(gaps, alpha))
}

/// Gap report for an oracle `f` over masks of length `n`.
pub fn conditioning_gap(
    f: &dyn Fn(&IndexMask) -> bool,
    n: usize,
    alpha: f64,
    mode: ConditioningMode,
    stream: &mut RandomStream,
) -> Result<ConditioningReport> {
    if !(alpha > 0.0) {
        return Err(invalid("alpha must be positive"));
    }
    match mode {
        ConditioningMode::Exact => {
            if n == 0 || n > MAX_EXACT_N {
                return Err(invalid(format!("exact mode needs 1 <= n <= {MAX_EXACT_N}, got {n}")));
            }
            let mut table = vec![0u64; (1usize << n).div_ceil(64)];
            let mut mask = IndexMask::empty(n);
            for m in 0..1u64 << n {
                mask.set_word(m);
                if f(&mask) {
                    table[(m / 64) as usize] |= 1 << (m % 64);
                }
            }
            truth_table_gap(&table, n, alpha)
        }
        ConditioningMode::Sampled { samples } => {
            if n == 0 || samples == 0 {
                return Err(invalid("sampled mode needs n >= 1 and samples >= 1"));
            }
            let gaps = (0..n)
                .map(|i| {
                    let mut mean = |selected: bool| {
                        let hits = (0..samples)
                            .filter(|_| {
                                let mut r = IndexMask::random(n, stream);
                                if selected {
                                    r.insert(i);
                                } else {
                                    r.remove(i);
                                }
                                f(&r)
                            })
                            .count();
                        hits as f64 / samples as f64
                    };
                    (mean(false) - mean(true)).abs()
                })
                .collect();
            Ok(report(gaps, alpha))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_no_bad_indices() {
        let r = conditioning_gap(&|_| true, 8, 0.1, ConditioningMode::Exact, &mut RandomStream::from_seed(0)).unwrap();
        assert_eq!(r.fraction, 0.0);
    }

    #[test]
    fn dictator_has_one_bad_index() {
        let r = conditioning_gap(&|m| m.contains(0), 8, 0.5, ConditioningMode::Exact, &mut RandomStream::from_seed(0)).unwrap();
        assert_eq!(r.fraction, 1.0 / 8.0);
        assert_eq!(r.gaps[0], 1.0);
        assert_eq!(r.bound, 1.0);
    }

    #[test]
    fn table_counting_matches_direct_enumeration() {
        let mut s = RandomStream::from_seed(3);
        for n in [3usize, 6, 7, 10] {
            let words = (1usize << n).div_ceil(64);
            let mut table: Vec<u64> = (0..words).map(|_| rand::RngCore::next_u64(&mut s)).collect();
            if n < 6 {
                table[0] &= (1u64 << (1 << n)) - 1;
            }
            let fast = truth_table_gap(&table, n, 0.1).unwrap();
            for i in 0..n {
                let (mut c0, mut c1) = (0i64, 0i64);
                for m in 0..1usize << n {
                    let v = (table[m / 64] >> (m % 64) & 1) as i64;
                    if m >> i & 1 == 1 {
                        c1 += v;
                    } else {
                        c0 += v;
                    }
                }
                let gap = (c0 - c1).abs() as f64 / (1u64 << (n - 1)) as f64;
                assert!((gap - fast.gaps[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampled_mode_tracks_exact() {
        let mut s = RandomStream::from_seed(4);
        let r = conditioning_gap(&|m| m.contains(2), 6, 0.5, ConditioningMode::Sampled { samples: 200 }, &mut s).unwrap();
        assert_eq!(r.gaps[2], 1.0);
        assert_eq!(r.fraction, 1.0 / 6.0);
    }

    #[test]
    fn exact_mode_capacity() {
        let mut s = RandomStream::from_seed(0);
        assert!(conditioning_gap(&|_| false, 21, 0.5, ConditioningMode::Exact, &mut s).is_err());
    }
}
