//! Sliding random-filter sketches: one sign bit per filter position.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// A Gaussian filter of length `W`, shared by every series of an index.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomFilter {
    weights: Vec<f64>,
    seed: u64,
}

impl RandomFilter {
    /// Wraps explicit weights; `seed` is kept only as provenance.
    pub fn from_weights(weights: Vec<f64>, seed: u64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument(
                "filter length W must be >= 1".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("filter weights must be finite".into()));
        }
        Ok(Self { weights, seed })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn width(&self) -> usize {
        self.weights.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Draws `width` i.i.d. standard normal weights from a generator seeded by `seed`.
pub fn make_filter(width: usize, seed: u64) -> Result<RandomFilter> {
    if width == 0 {
        return Err(Error::InvalidArgument(
            "filter length W must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..width)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    RandomFilter::from_weights(weights, seed)
}

/// Sign stream of a series; `true` encodes `+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSketch {
    bits: Vec<bool>,
    delta: usize,
    source_len: usize,
}

impl BitSketch {
    /// Builds a sketch from explicit signs, for tests and tooling.
    pub fn from_signs(signs: &[i8], delta: usize, source_len: usize) -> Self {
        Self {
            bits: signs.iter().map(|&s| s >= 0).collect(),
            delta,
            source_len,
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// The sketch as `+1` / `-1` values.
    pub fn signs(&self) -> Vec<i8> {
        self.bits.iter().map(|&b| if b { 1 } else { -1 }).collect()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }
}

/// Number of filter positions: `floor((m - W) / delta) + 1`.
pub fn sketch_len(series_len: usize, width: usize, delta: usize) -> usize {
    if series_len < width || delta == 0 {
        0
    } else {
        (series_len - width) / delta + 1
    }
}

pub fn sketch_series(
    series: &TimeSeries,
    filter: &RandomFilter,
    delta: usize,
) -> Result<BitSketch> {
    sketch_values(series.values(), filter, delta)
}

/// Bit `i` is `+1` iff `dot(filter, values[i*delta .. i*delta + W]) >= 0`.
pub fn sketch_values(values: &[f64], filter: &RandomFilter, delta: usize) -> Result<BitSketch> {
    let w = filter.width();
    if delta == 0 {
        return Err(Error::InvalidArgument(
            "step size delta must be >= 1".into(),
        ));
    }
    if values.len() < w {
        return Err(Error::InvalidArgument(format!(
            "series length {} is shorter than filter length W = {w}",
            values.len()
        )));
    }
    let weights = filter.weights();
    let bits = values
        .windows(w)
        .step_by(delta)
        .map(|window| dot(weights, window) >= 0.0)
        .collect();
    Ok(BitSketch {
        bits,
        delta,
        source_len: values.len(),
    })
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators so the loop vectorizes
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        for (lane, slot) in acc.iter_mut().enumerate() {
            let j = 4 * i + lane;
            *slot += a[j] * b[j];
        }
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in 4 * chunks..a.len() {
        sum += a[j] * b[j];
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::generate_random_walk;

    #[test]
    fn worked_example() {
        let x = TimeSeries::new(vec![1.0, 2.0, 4.0, 1.0]).unwrap();
        let r = RandomFilter::from_weights(vec![0.1, -0.1], 0).unwrap();
        let b = sketch_series(&x, &r, 2).unwrap();
        assert_eq!(b.signs(), vec![-1, 1]);
    }

    #[test]
    fn filter_is_deterministic() {
        assert_eq!(make_filter(30, 4).unwrap(), make_filter(30, 4).unwrap());
        assert_ne!(make_filter(30, 4).unwrap(), make_filter(30, 5).unwrap());
        assert_eq!(make_filter(80, 1).unwrap().width(), 80);
        assert!(make_filter(0, 1).is_err());
    }

    #[test]
    fn filter_moments() {
        let draws: Vec<f64> = (0..1000)
            .flat_map(|seed| make_filter(100, seed).unwrap().weights().to_vec())
            .collect();
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn self_projection_is_positive() {
        let f = make_filter(16, 3).unwrap();
        let x = TimeSeries::new(f.weights().to_vec()).unwrap();
        assert_eq!(sketch_series(&x, &f, 5).unwrap().bits(), &[true]);
    }

    #[test]
    fn matches_naive_loop() {
        let x = generate_random_walk(200, 11).unwrap();
        let f = make_filter(8, 12).unwrap();
        let sketch = sketch_series(&x, &f, 3).unwrap();
        let v = x.values();
        let mut naive = Vec::new();
        let mut start = 0;
        while start + 8 <= v.len() {
            let mut s = 0.0;
            for k in 0..8 {
                s += f.weights()[k] * v[start + k];
            }
            naive.push(if s >= 0.0 { 1i8 } else { -1 });
            start += 3;
        }
        assert_eq!(sketch.signs(), naive);
        assert_eq!(sketch.len(), sketch_len(200, 8, 3));
    }

    #[test]
    fn zero_projection_is_positive() {
        let x = TimeSeries::new(vec![0.0; 4]).unwrap();
        let f = make_filter(2, 1).unwrap();
        assert!(sketch_series(&x, &f, 1).unwrap().bits().iter().all(|&b| b));
    }

    #[test]
    fn too_short_or_zero_delta() {
        let f = make_filter(5, 1).unwrap();
        let x = TimeSeries::new(vec![1.0; 4]).unwrap();
        assert!(matches!(
            sketch_series(&x, &f, 1),
            Err(Error::InvalidArgument(_))
        ));
        let y = TimeSeries::new(vec![1.0; 8]).unwrap();
        assert!(matches!(
            sketch_series(&y, &f, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn bit_count(m in 1usize..200, w in 1usize..40, delta in 1usize..10, seed in 0u64..1000) {
                prop_assume!(w <= m);
                let x = generate_random_walk(m, seed).unwrap();
                let f = make_filter(w, seed + 1).unwrap();
                let b = sketch_series(&x, &f, delta).unwrap();
                prop_assert_eq!(b.len(), (m - w) / delta + 1);
            }

            #[test]
            fn sign_flip(m in 10usize..200, w in 1usize..10, delta in 1usize..5, seed in 0u64..1000) {
                let x = generate_random_walk(m, seed).unwrap();
                let neg = TimeSeries::new(x.values().iter().map(|v| -v).collect()).unwrap();
                let f = make_filter(w, seed).unwrap();
                let a = sketch_series(&x, &f, delta).unwrap();
                let b = sketch_series(&neg, &f, delta).unwrap();
                // exact zero projections are measure-zero for Gaussian data
                for (p, q) in a.bits().iter().zip(b.bits()) {
                    prop_assert_ne!(p, q);
                }
            }

            #[test]
            fn shift_drops_first_bit(m in 30usize..200, w in 1usize..10, delta in 1usize..6, seed in 0u64..1000) {
                let x = generate_random_walk(m, seed).unwrap();
                let shifted = TimeSeries::new(x.values()[delta..].to_vec()).unwrap();
                prop_assume!(shifted.len() >= w);
                let f = make_filter(w, seed ^ 7).unwrap();
                let a = sketch_series(&x, &f, delta).unwrap();
                let b = sketch_series(&shifted, &f, delta).unwrap();
                prop_assert_eq!(&a.bits()[1..1 + b.len()], b.bits());
            }
        }
    }
}
