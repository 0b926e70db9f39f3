//! Signed random projections of whole series, the alignment-blind baseline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::series::TimeSeries;
use crate::wmh::mix64;

/// Packed sign bits; bit `j` set means the `j`-th projection was `>= 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SrpSignature {
    words: Vec<u64>,
    bits: usize,
}

impl SrpSignature {
    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn bit(&self, j: usize) -> bool {
        self.words[j / 64] >> (j % 64) & 1 == 1
    }
}

pub fn hamming(a: &SrpSignature, b: &SrpSignature) -> u32 {
    a.words
        .iter()
        .zip(&b.words)
        .map(|(x, y)| (x ^ y).count_ones())
        .sum()
}

/// `bits` Gaussian projection vectors of length `len`; vector `j` is drawn
/// from a generator keyed by `(seed, j)`.
#[derive(Debug, Clone)]
pub struct SrpHasher {
    len: usize,
    bits: usize,
    planes: Vec<f64>,
}

impl SrpHasher {
    pub fn new(len: usize, bits: usize, seed: u64) -> Result<Self> {
        if len == 0 || bits == 0 {
            return Err(Error::InvalidArgument(
                "projection length and bit count must be >= 1".into(),
            ));
        }
        let mut planes = Vec::with_capacity(len * bits);
        for j in 0..bits {
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(j as u64)));
            planes.extend((0..len).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
        }
        Ok(Self { len, bits, planes })
    }

    pub fn sign(&self, values: &[f64]) -> Result<SrpSignature> {
        if values.len() != self.len {
            return Err(Error::InvalidArgument(format!(
                "series has length {} but projections have length {}",
                values.len(),
                self.len
            )));
        }
        let mut words = vec![0u64; self.bits.div_ceil(64)];
        for (j, plane) in self.planes.chunks_exact(self.len).enumerate() {
            let dot: f64 = plane.iter().zip(values).map(|(a, b)| a * b).sum();
            if dot >= 0.0 {
                words[j / 64] |= 1 << (j % 64);
            }
        }
        Ok(SrpSignature {
            words,
            bits: self.bits,
        })
    }
}

pub fn srp_signature(series: &TimeSeries, bits: usize, seed: u64) -> Result<SrpSignature> {
    SrpHasher::new(series.len(), bits, seed)?.sign(series.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::generate_random_walk;

    #[test]
    fn self_distance_zero() {
        let x = generate_random_walk(100, 1).unwrap();
        let a = srp_signature(&x, 128, 3).unwrap();
        assert_eq!(hamming(&a, &srp_signature(&x, 128, 3).unwrap()), 0);
    }

    #[test]
    fn negation_flips_every_bit() {
        let x = generate_random_walk(100, 2).unwrap();
        let neg = TimeSeries::new(x.values().iter().map(|v| -v).collect()).unwrap();
        let a = srp_signature(&x, 200, 4).unwrap();
        let b = srp_signature(&neg, 200, 4).unwrap();
        assert_eq!(hamming(&a, &b), 200);
    }

    #[test]
    fn collision_rate_follows_angle() {
        let x = generate_random_walk(64, 5).unwrap();
        let y = generate_random_walk(64, 6).unwrap();
        let (a, b) = (x.values(), y.values());
        let dot: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
        let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let theta = (dot / (na * nb)).clamp(-1.0, 1.0).acos();
        let expected = 1.0 - theta / std::f64::consts::PI;
        let bits = 10_000;
        let sa = srp_signature(&x, bits, 8).unwrap();
        let sb = srp_signature(&y, bits, 8).unwrap();
        let agree = 1.0 - hamming(&sa, &sb) as f64 / bits as f64;
        assert!((agree - expected).abs() <= 0.02, "{agree} vs {expected}");
    }

    #[test]
    fn length_mismatch() {
        let h = SrpHasher::new(10, 8, 0).unwrap();
        assert!(h.sign(&[0.0; 9]).is_err());
        assert!(SrpHasher::new(0, 8, 0).is_err());
    }
}
