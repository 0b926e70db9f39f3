//! Weighted minwise hashing by consistent weighted sampling.
//!
//! Each hash draws, per token `k` with weight `S_k`, three variates
//! `r_k, c_k ~ Gamma(2, 1)` and `beta_k ~ U(0, 1)`, then
//!
//! ```text
//! t_k   = floor(ln S_k / r_k + beta_k)
//! ln a_k = ln c_k - r_k (t_k - beta_k) - r_k
//! ```
//!
//! and returns the pair `(argmin_k a_k, t_k)` mixed into one 64-bit key.
//! Two sets collide with probability equal to their weighted Jaccard
//! similarity. Variates come from a keyed mixing function of
//! `(seed, hash_index, token)`, so no random tables are stored.

use crate::error::{Error, Result};
use crate::shingle::WeightedShingleSet;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform in the open interval (0, 1).
#[inline]
pub fn unit_open(x: u64) -> f64 {
    ((x >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

#[inline]
fn token_key(seed: u64, token: u64) -> u64 {
    mix64(mix64(seed ^ 0x5353_485f_5345_4544) ^ token)
}

#[inline]
fn index_key(seed: u64, hash_index: u64) -> u64 {
    mix64(seed.wrapping_add(GOLDEN.wrapping_mul(hash_index.wrapping_add(1))))
}

/// Keyed CWS sample for one token: returns `(ln a, t)`.
#[inline]
fn sample(key: u64, ln_weight: f64) -> (f64, i64) {
    let h1 = mix64(key);
    let h2 = mix64(h1.wrapping_add(GOLDEN));
    let h3 = mix64(h2.wrapping_add(GOLDEN));
    let h4 = mix64(h3.wrapping_add(GOLDEN));
    let h5 = mix64(h4.wrapping_add(GOLDEN));
    // Gamma(2,1) as minus the log of a product of two uniforms
    let r = -(unit_open(h1) * unit_open(h2)).ln();
    let c = -(unit_open(h3) * unit_open(h4)).ln();
    let beta = unit_open(h5);
    let t = (ln_weight / r + beta).floor();
    let ln_a = c.ln() - r * (t - beta) - r;
    (ln_a, t as i64)
}

#[inline]
fn bucket_key(token: u64, t: i64) -> u64 {
    mix64(mix64(token ^ 0x544f_4b45_4e00_0000) ^ (t as u64).wrapping_mul(GOLDEN))
}

/// One consistent weighted sample of `set`, as a bucket key.
pub fn wmh_one(set: &WeightedShingleSet, hash_index: u64, seed: u64) -> Result<u64> {
    if set.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot hash an empty shingle set".into(),
        ));
    }
    let ik = index_key(seed, hash_index);
    let mut best = (f64::INFINITY, 0u64, 0i64);
    for &(token, w) in set.entries() {
        let (ln_a, t) = sample(token_key(seed, token) ^ ik, f64::from(w).ln());
        if ln_a < best.0 {
            best = (ln_a, token, t);
        }
    }
    Ok(bucket_key(best.1, best.2))
}

/// `d` weighted minhash keys, one per hash table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinHashSignature {
    values: Vec<u64>,
    seed: u64,
}

impl MinHashSignature {
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn d(&self) -> usize {
        self.values.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fraction of slots where both signatures agree.
    pub fn collision_rate(&self, other: &MinHashSignature) -> f64 {
        let hits = self
            .values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a == b)
            .count();
        hits as f64 / self.values.len().min(other.values.len()).max(1) as f64
    }
}

/// `values[i] = wmh_one(set, i, seed)` for `i in 0..d`.
pub fn signature(set: &WeightedShingleSet, d: usize, seed: u64) -> Result<MinHashSignature> {
    table_keys(set, d, 1, seed)
}

/// Keys for `d` tables where each key concatenates `per_table` consecutive
/// minhashes (`per_table = 1` gives [`signature`]).
pub fn table_keys(
    set: &WeightedShingleSet,
    d: usize,
    per_table: usize,
    seed: u64,
) -> Result<MinHashSignature> {
    if d == 0 || per_table == 0 {
        return Err(Error::InvalidArgument(
            "table count d and hashes per table must be >= 1".into(),
        ));
    }
    if set.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot hash an empty shingle set".into(),
        ));
    }
    let prepared: Vec<(u64, u64, f64)> = set
        .entries()
        .iter()
        .map(|&(tok, w)| (tok, token_key(seed, tok), f64::from(w).ln()))
        .collect();
    let mut values = Vec::with_capacity(d);
    for table in 0..d {
        let mut key = 0u64;
        for j in 0..per_table {
            let ik = index_key(seed, (table * per_table + j) as u64);
            let mut best = (f64::INFINITY, 0u64, 0i64);
            for &(token, tk, ln_w) in &prepared {
                let (ln_a, t) = sample(tk ^ ik, ln_w);
                if ln_a < best.0 {
                    best = (ln_a, token, t);
                }
            }
            let one = bucket_key(best.1, best.2);
            key = if per_table == 1 {
                one
            } else {
                mix64(key.rotate_left(17) ^ one)
            };
        }
        values.push(key);
    }
    Ok(MinHashSignature { values, seed })
}
