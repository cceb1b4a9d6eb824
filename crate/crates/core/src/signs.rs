//! Packed sign vectors and index masks.
//!
//! A [`SignVector`] stores one bit per coordinate (bit set means `-1`), so inner
//! products reduce to XOR and popcount. An [`IndexMask`] uses the same layout
//! with bit set meaning "selected". A [`Revealed`] value is the subsequence of a
//! sign vector at the positions of a mask, kept in place so it can be combined
//! with full-length vectors without copying.

use crate::error::{check_len, invalid, Result};
use crate::stream::RandomStream;
use rand::RngCore;
use serde::{Deserialize, Serialize};

const W: usize = 64;

fn words_for(n: usize) -> usize {
    n.div_ceil(W)
}

fn tail_mask(n: usize) -> u64 {
    match n % W {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

fn random_words(n: usize, stream: &mut RandomStream) -> Vec<u64> {
    let mut words: Vec<u64> = (0..words_for(n)).map(|_| stream.next_u64()).collect();
    if let Some(last) = words.last_mut() {
        *last &= tail_mask(n);
    }
    words
}

fn popcount(words: &[u64]) -> u64 {
    words.iter().map(|w| w.count_ones() as u64).sum()
}

/// Sign of a single coordinate.
pub type Sign = i8;

/// Vector in `{-1, +1}^n`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct SignVector {
    len: usize,
    /// Bit `i` set iff coordinate `i` equals `-1`.
    neg: Vec<u64>,
}

impl SignVector {
    /// All-ones vector.
    pub fn ones(len: usize) -> Self {
        SignVector { len, neg: vec![0; words_for(len)] }
    }

    /// Uniformly random vector.
    pub fn random(len: usize, stream: &mut RandomStream) -> Self {
        SignVector { len, neg: random_words(len, stream) }
    }

    /// Builds a vector from explicit signs; every entry must be `-1` or `+1`.
    pub fn from_signs(signs: &[i64]) -> Result<Self> {
        let mut v = SignVector::ones(signs.len());
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => {}
                -1 => v.neg[i / W] |= 1 << (i % W),
                other => return Err(invalid(format!("coordinate {i} is {other}, not a sign"))),
            }
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> Sign {
        assert!(i < self.len, "index {i} out of range for length {}", self.len);
        if self.neg[i / W] >> (i % W) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn set(&mut self, i: usize, s: Sign) {
        assert!(i < self.len, "index {i} out of range for length {}", self.len);
        let bit = 1u64 << (i % W);
        if s < 0 {
            self.neg[i / W] |= bit;
        } else {
            self.neg[i / W] &= !bit;
        }
    }

    /// Copy with coordinate `i` negated.
    pub fn flip_at(&self, i: usize) -> Result<Self> {
        if i >= self.len {
            return Err(invalid(format!("flip index {i} out of range for length {}", self.len)));
        }
        let mut out = self.clone();
        out.neg[i / W] ^= 1 << (i % W);
        Ok(out)
    }

    /// Replaces the listed coordinates with fresh uniform signs.
    pub fn resample_at(&mut self, indices: &[usize], stream: &mut RandomStream) {
        for &i in indices {
            let s = if stream.next_u32() & 1 == 1 { -1 } else { 1 };
            self.set(i, s);
        }
    }

    /// `<self, other>`.
    pub fn inner(&self, other: &SignVector) -> Result<i64> {
        check_len(self.len, other.len)?;
        let differ: u64 = self.neg.iter().zip(&other.neg).map(|(a, b)| (a ^ b).count_ones() as u64).sum();
        Ok(self.len as i64 - 2 * differ as i64)
    }

    /// `<self_r, other_r>` over the coordinates selected by `mask`.
    pub fn inner_masked(&self, other: &SignVector, mask: &IndexMask) -> Result<i64> {
        check_len(self.len, other.len)?;
        check_len(self.len, mask.len)?;
        let mut size = 0u64;
        let mut differ = 0u64;
        for ((a, b), m) in self.neg.iter().zip(&other.neg).zip(&mask.bits) {
            size += m.count_ones() as u64;
            differ += ((a ^ b) & m).count_ones() as u64;
        }
        Ok(size as i64 - 2 * differ as i64)
    }

    /// Subsequence at the selected positions, in increasing index order.
    pub fn extract(&self, mask: &IndexMask) -> Result<SignVector> {
        check_len(self.len, mask.len)?;
        let mut out = SignVector::ones(mask.count());
        for (j, i) in mask.ones().enumerate() {
            if self.get(i) < 0 {
                out.neg[j / W] |= 1 << (j % W);
            }
        }
        Ok(out)
    }

    /// Subsequence at the listed positions, in the order given.
    pub fn gather(&self, positions: &[usize]) -> SignVector {
        let mut out = SignVector::ones(positions.len());
        for (j, &i) in positions.iter().enumerate() {
            out.set(j, self.get(i));
        }
        out
    }

    /// Writes `values[j]` to coordinate `positions[j]`.
    pub fn scatter(&mut self, positions: &[usize], values: &SignVector) -> Result<()> {
        check_len(positions.len(), values.len())?;
        for (j, &i) in positions.iter().enumerate() {
            self.set(i, values.get(j));
        }
        Ok(())
    }

    /// Vector of length `len + 1` with `s` inserted before position `i`.
    pub fn insert_at(&self, i: usize, s: Sign) -> Result<SignVector> {
        if i > self.len {
            return Err(invalid(format!("insert position {i} beyond length {}", self.len)));
        }
        let mut out = SignVector::ones(self.len + 1);
        for j in 0..self.len {
            let dst = if j < i { j } else { j + 1 };
            out.set(dst, self.get(j));
        }
        out.set(i, s);
        Ok(out)
    }

    /// Vector of length `len - 1` with position `i` removed.
    pub fn remove_at(&self, i: usize) -> Result<SignVector> {
        if i >= self.len {
            return Err(invalid(format!("remove position {i} out of range for length {}", self.len)));
        }
        let keep: Vec<usize> = (0..self.len).filter(|&j| j != i).collect();
        Ok(self.gather(&keep))
    }

    /// Sum of all coordinates.
    pub fn sum(&self) -> i64 {
        self.len as i64 - 2 * popcount(&self.neg) as i64
    }

    /// Sum of the coordinates selected by `mask`.
    pub fn sum_masked(&self, mask: &IndexMask) -> Result<i64> {
        check_len(self.len, mask.len)?;
        let size = mask.count() as i64;
        let negs: u64 = self.neg.iter().zip(&mask.bits).map(|(a, m)| (a & m).count_ones() as u64).sum();
        Ok(size - 2 * negs as i64)
    }

    pub fn to_signs(&self) -> Vec<i64> {
        (0..self.len).map(|i| self.get(i) as i64).collect()
    }

    /// Packed words, bit set meaning `-1`.
    pub fn negative_words(&self) -> &[u64] {
        &self.neg
    }

    /// Positions where `self` and `other` differ.
    pub fn differing_positions(&self, other: &SignVector) -> Result<Vec<usize>> {
        check_len(self.len, other.len)?;
        Ok((0..self.len).filter(|&i| self.get(i) != other.get(i)).collect())
    }
}

/// Subset of `[n]` as a bitmask.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct IndexMask {
    len: usize,
    bits: Vec<u64>,
}

impl IndexMask {
    pub fn empty(len: usize) -> Self {
        IndexMask { len, bits: vec![0; words_for(len)] }
    }

    pub fn full(len: usize) -> Self {
        IndexMask::empty(len).complement()
    }

    /// Uniform subset: each index selected independently with probability 1/2.
    pub fn random(len: usize, stream: &mut RandomStream) -> Self {
        IndexMask { len, bits: random_words(len, stream) }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut m = IndexMask::empty(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                m.insert(i);
            }
        }
        m
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Result<Self> {
        let mut m = IndexMask::empty(len);
        for &i in indices {
            if i >= len {
                return Err(invalid(format!("index {i} out of range for length {len}")));
            }
            m.insert(i);
        }
        Ok(m)
    }

    /// Mask of length `len <= 64` whose bit `i` is bit `i` of `word`.
    pub fn from_word(len: usize, word: u64) -> Result<Self> {
        if len > W {
            return Err(invalid(format!("word masks hold at most {W} indices, got {len}")));
        }
        Ok(IndexMask { len, bits: if len == 0 { vec![] } else { vec![word & tail_mask(len)] } })
    }

    /// Overwrites a mask of length `<= 64` in place.
    pub fn set_word(&mut self, word: u64) {
        assert!(self.len <= W && self.len > 0);
        self.bits[0] = word & tail_mask(self.len);
    }

    /// Low word of the mask; exact for masks of length `<= 64`.
    pub fn as_word(&self) -> u64 {
        self.bits.first().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.bits[i / W] >> (i % W) & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len);
        self.bits[i / W] |= 1 << (i % W);
    }

    pub fn remove(&mut self, i: usize) {
        assert!(i < self.len);
        self.bits[i / W] &= !(1 << (i % W));
    }

    /// Number of selected indices.
    pub fn count(&self) -> usize {
        popcount(&self.bits) as usize
    }

    pub fn complement(&self) -> IndexMask {
        let mut bits: Vec<u64> = self.bits.iter().map(|w| !w).collect();
        if let Some(last) = bits.last_mut() {
            *last &= tail_mask(self.len);
        }
        IndexMask { len: self.len, bits }
    }

    pub fn intersect(&self, other: &IndexMask) -> Result<IndexMask> {
        check_len(self.len, other.len)?;
        Ok(IndexMask { len: self.len, bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a & b).collect() })
    }

    pub fn union(&self, other: &IndexMask) -> Result<IndexMask> {
        check_len(self.len, other.len)?;
        Ok(IndexMask { len: self.len, bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a | b).collect() })
    }

    /// Selected indices in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * W + t)
                }
            })
        })
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }
}

/// The subsequence of a sign vector at the positions of a mask.
///
/// Coordinates outside the mask are stored as `+1` and are never exposed.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Revealed {
    positions: IndexMask,
    values: SignVector,
}

impl Revealed {
    pub fn new(source: &SignVector, positions: &IndexMask) -> Result<Self> {
        check_len(source.len(), positions.len())?;
        let values = SignVector {
            len: source.len,
            neg: source.neg.iter().zip(&positions.bits).map(|(a, m)| a & m).collect(),
        };
        Ok(Revealed { positions: positions.clone(), values })
    }

    /// Length of the ambient vector.
    pub fn ambient_len(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &IndexMask {
        &self.positions
    }

    pub fn get(&self, i: usize) -> Option<Sign> {
        self.positions.contains(i).then(|| self.values.get(i))
    }

    /// `<self, other>` restricted to the revealed positions.
    pub fn inner(&self, other: &SignVector) -> Result<i64> {
        self.values.inner_masked(other, &self.positions)
    }

    /// `<self, other>` where both are revealed on the same positions.
    pub fn inner_revealed(&self, other: &Revealed) -> Result<i64> {
        if self.positions != other.positions {
            return Err(invalid("revealed vectors are supported on different positions"));
        }
        self.values.inner_masked(&other.values, &self.positions)
    }

    pub fn sum(&self) -> i64 {
        self.values.sum_masked(&self.positions).expect("lengths agree by construction")
    }

    /// Compact subsequence in increasing index order.
    pub fn to_subsequence(&self) -> SignVector {
        self.values.extract(&self.positions).expect("lengths agree by construction")
    }

    /// True iff every hidden coordinate is stored as `+1`.
    pub fn hidden_are_canonical(&self) -> bool {
        let hidden = self.positions.complement();
        self.values.sum_masked(&hidden).expect("lengths agree") == hidden.count() as i64
    }
}
