//! n-gram shingles over a sign stream, and weighted Jaccard similarity.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::sketch::BitSketch;

/// Largest supported shingle length; tokens are packed into a `u64`.
pub const MAX_SHINGLE_LEN: usize = 64;

/// Multiset of n-bit tokens. A token packs its bits first-bit-most-significant
/// with `+1 -> 1` and `-1 -> 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedShingleSet {
    /// Sorted by token, weights >= 1.
    entries: Vec<(u64, u32)>,
    n: usize,
}

impl WeightedShingleSet {
    /// Builds a set from `(token, weight)` pairs; repeated tokens accumulate
    /// and zero weights are dropped.
    pub fn from_weights(n: usize, pairs: impl IntoIterator<Item = (u64, u32)>) -> Result<Self> {
        check_len(n)?;
        let mut entries: Vec<(u64, u32)> = pairs.into_iter().filter(|&(_, w)| w > 0).collect();
        if let Some(&(tok, _)) = entries.iter().find(|&&(t, _)| n < 64 && t >> n != 0) {
            return Err(Error::InvalidArgument(format!(
                "token {tok} does not fit in {n} bits"
            )));
        }
        entries.sort_unstable_by_key(|&(t, _)| t);
        entries.dedup_by(|next, prev| {
            if next.0 == prev.0 {
                prev.1 += next.1;
                true
            } else {
                false
            }
        });
        Ok(Self { entries, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(token, weight)` pairs in ascending token order.
    pub fn entries(&self) -> &[(u64, u32)] {
        &self.entries
    }

    pub fn get(&self, token: u64) -> u32 {
        self.entries
            .binary_search_by_key(&token, |&(t, _)| t)
            .map_or(0, |i| self.entries[i].1)
    }

    /// Number of distinct tokens.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.entries.iter().map(|&(_, w)| u64::from(w)).sum()
    }
}

fn check_len(n: usize) -> Result<()> {
    if n == 0 || n > MAX_SHINGLE_LEN {
        return Err(Error::InvalidArgument(format!(
            "shingle length n must be in 1..={MAX_SHINGLE_LEN}, got {n}"
        )));
    }
    Ok(())
}

/// Encodes a run of bits as a token.
pub fn encode_token(bits: &[bool]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
}

/// Counts every contiguous length-`n` substring of the sketch.
pub fn shingle_sketch(sketch: &BitSketch, n: usize) -> Result<WeightedShingleSet> {
    shingle_bits(sketch.bits(), n)
}

pub fn shingle_bits(bits: &[bool], n: usize) -> Result<WeightedShingleSet> {
    check_len(n)?;
    if n > bits.len() {
        return Err(Error::InvalidArgument(format!(
            "shingle length {n} exceeds sketch length {}",
            bits.len()
        )));
    }
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut tokens = Vec::with_capacity(bits.len() - n + 1);
    let mut token = encode_token(&bits[..n - 1]);
    for &b in &bits[n - 1..] {
        token = ((token << 1) | u64::from(b)) & mask;
        tokens.push(token);
    }
    tokens.sort_unstable();
    let mut entries: Vec<(u64, u32)> = Vec::new();
    for t in tokens {
        match entries.last_mut() {
            Some(last) if last.0 == t => last.1 += 1,
            _ => entries.push((t, 1)),
        }
    }
    Ok(WeightedShingleSet { entries, n })
}

/// `sum(min) / sum(max)` over the union of tokens.
pub fn weighted_jaccard(a: &WeightedShingleSet, b: &WeightedShingleSet) -> Result<f64> {
    if a.is_empty() && b.is_empty() {
        return Err(Error::UndefinedSimilarity);
    }
    let (mut num, mut den) = (0u64, 0u64);
    let (x, y) = (a.entries(), b.entries());
    let (mut i, mut j) = (0, 0);
    while i < x.len() && j < y.len() {
        match x[i].0.cmp(&y[j].0) {
            Ordering::Less => {
                den += u64::from(x[i].1);
                i += 1;
            }
            Ordering::Greater => {
                den += u64::from(y[j].1);
                j += 1;
            }
            Ordering::Equal => {
                num += u64::from(x[i].1.min(y[j].1));
                den += u64::from(x[i].1.max(y[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    den += x[i..]
        .iter()
        .chain(&y[j..])
        .map(|&(_, w)| u64::from(w))
        .sum::<u64>();
    Ok(num as f64 / den as f64)
}
