//! Time series and fixed-length datasets.
//!
//! A [`Dataset`] either owns its rows or is a view of every length-`t` window
//! of one long recording. The windowed form keeps memory at `O(m)` instead of
//! `O(m * t)`, which matters for 50k windows of length 2048.

use std::borrow::Cow;
use std::path::PathBuf;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::Format;

/// Below this population standard deviation a series is treated as flat.
pub const FLAT_STD: f64 = 1e-12;

/// A uniformly sampled, finite, non-empty sequence of values.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    id: usize,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_id(0, values)
    }

    pub fn with_id(id: usize, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("time series must not be empty".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value {} at position {pos}",
                values[pos]
            )));
        }
        Ok(Self { id, values })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for TimeSeries {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Population mean and standard deviation.
pub fn moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn normalize_with(values: &[f64], mean: f64, std: f64, out: &mut [f64]) {
    if std < FLAT_STD {
        out.fill(0.0);
    } else {
        for (o, v) in out.iter_mut().zip(values) {
            *o = (v - mean) / std;
        }
    }
}

/// Z-normalizes `values` into `out`. Flat input becomes all zeros.
pub fn z_normalize_into(values: &[f64], out: &mut [f64]) {
    let (mean, std) = moments(values);
    normalize_with(values, mean, std, out);
}

pub fn z_normalize_values(values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    z_normalize_into(values, &mut out);
    out
}

/// Returns a copy of `series` with mean 0 and population standard deviation 1.
///
/// Series whose standard deviation is below [`FLAT_STD`] map to all zeros.
pub fn z_normalize(series: &TimeSeries) -> Result<TimeSeries> {
    TimeSeries::with_id(series.id, z_normalize_values(series.values()))
}

/// Random walk with standard normal increments, starting at the first draw.
pub fn generate_random_walk(length: usize, seed: u64) -> Result<TimeSeries> {
    if length == 0 {
        return Err(Error::InvalidArgument(
            "random walk length must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    let values = (0..length)
        .map(|_| {
            let step: f64 = StandardNormal.sample(&mut rng);
            acc += step;
            acc
        })
        .collect();
    TimeSeries::new(values)
}

/// Where a dataset's values came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    InMemory,
    File { path: PathBuf, format: Format },
    RandomWalk { length: usize, seed: u64 },
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::InMemory => write!(f, "in-memory"),
            Source::File { path, .. } => write!(f, "file:{}", path.display()),
            Source::RandomWalk { length, seed } => write!(f, "random-walk:{length}:{seed}"),
        }
    }
}

#[derive(Debug, Clone)]
enum Storage {
    Rows(Arc<[f64]>),
    Windows {
        recording: Arc<[f64]>,
        /// Per-window (mean, std) when the windows are z-normalized.
        norm: Option<Arc<[(f64, f64)]>>,
    },
}

/// Equal-length series with contiguous ids `0..len()`.
#[derive(Debug, Clone)]
pub struct Dataset {
    series_len: usize,
    count: usize,
    storage: Storage,
    source: Source,
    normalized: bool,
}

impl Dataset {
    /// Builds a dataset from explicit series. Ids are reassigned by position.
    pub fn from_series(series: Vec<TimeSeries>, source: Source) -> Result<Self> {
        let Some(first) = series.first() else {
            return Err(Error::InvalidInput(
                "dataset must contain at least one series".into(),
            ));
        };
        let series_len = first.len();
        let mut rows = Vec::with_capacity(series.len() * series_len);
        for (i, s) in series.iter().enumerate() {
            if s.len() != series_len {
                return Err(Error::InvalidData(format!(
                    "series {i} has length {} but series 0 has length {series_len}",
                    s.len()
                )));
            }
            rows.extend_from_slice(s.values());
        }
        Ok(Self {
            series_len,
            count: series.len(),
            storage: Storage::Rows(rows.into()),
            source,
            normalized: false,
        })
    }

    /// Row-major constructor used by the file loaders.
    pub(crate) fn from_rows(rows: Vec<f64>, series_len: usize, source: Source) -> Result<Self> {
        if series_len == 0 || rows.is_empty() || !rows.len().is_multiple_of(series_len) {
            return Err(Error::InvalidData(format!(
                "{} values cannot be split into rows of length {series_len}",
                rows.len()
            )));
        }
        if let Some(pos) = rows.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value in series {} at position {}",
                pos / series_len,
                pos % series_len
            )));
        }
        Ok(Self {
            series_len,
            count: rows.len() / series_len,
            storage: Storage::Rows(rows.into()),
            source,
            normalized: false,
        })
    }

    /// Flags already-normalized rows without recomputing them.
    pub(crate) fn mark_normalized(mut self) -> Self {
        self.normalized = true;
        self
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn is_windowed(&self) -> bool {
        matches!(self.storage, Storage::Windows { .. })
    }

    /// True when the dataset was produced by [`Dataset::z_normalized`].
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// The recording behind a windowed dataset.
    pub fn recording(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Windows { recording, .. } => Some(recording),
            Storage::Rows(_) => None,
        }
    }

    /// Values of series `id`. Borrowed unless the window must be normalized.
    pub fn series(&self, id: usize) -> Cow<'_, [f64]> {
        let t = self.series_len;
        match &self.storage {
            Storage::Rows(rows) => Cow::Borrowed(&rows[id * t..(id + 1) * t]),
            Storage::Windows {
                recording,
                norm: None,
            } => Cow::Borrowed(&recording[id..id + t]),
            Storage::Windows { .. } => {
                let mut out = vec![0.0; t];
                self.fill(id, &mut out);
                Cow::Owned(out)
            }
        }
    }

    /// Writes series `id` into `out`, which must have length `series_len()`.
    pub fn fill(&self, id: usize, out: &mut [f64]) {
        let t = self.series_len;
        match &self.storage {
            Storage::Rows(rows) => out.copy_from_slice(&rows[id * t..(id + 1) * t]),
            Storage::Windows { recording, norm } => {
                let window = &recording[id..id + t];
                match norm {
                    None => out.copy_from_slice(window),
                    Some(norm) => {
                        let (mean, std) = norm[id];
                        normalize_with(window, mean, std, out);
                    }
                }
            }
        }
    }

    /// Single value of series `id` at position `pos`.
    #[inline]
    pub fn value_at(&self, id: usize, pos: usize) -> f64 {
        let t = self.series_len;
        match &self.storage {
            Storage::Rows(rows) => rows[id * t + pos],
            Storage::Windows {
                recording,
                norm: None,
            } => recording[id + pos],
            Storage::Windows {
                recording,
                norm: Some(norm),
            } => {
                let (mean, std) = norm[id];
                if std < FLAT_STD {
                    0.0
                } else {
                    (recording[id + pos] - mean) / std
                }
            }
        }
    }

    pub fn get(&self, id: usize) -> TimeSeries {
        TimeSeries {
            id,
            values: self.series(id).into_owned(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = TimeSeries> + '_ {
        (0..self.count).map(|id| self.get(id))
    }

    /// Returns the dataset with every series z-normalized independently.
    pub fn z_normalized(&self) -> Dataset {
        let storage = match &self.storage {
            Storage::Rows(rows) => {
                let mut out = vec![0.0; rows.len()];
                for (src, dst) in rows
                    .chunks_exact(self.series_len)
                    .zip(out.chunks_exact_mut(self.series_len))
                {
                    z_normalize_into(src, dst);
                }
                Storage::Rows(out.into())
            }
            Storage::Windows { norm: Some(_), .. } => self.storage.clone(),
            Storage::Windows {
                recording,
                norm: None,
            } => {
                let norm: Vec<(f64, f64)> = (0..self.count)
                    .map(|i| moments(&recording[i..i + self.series_len]))
                    .collect();
                Storage::Windows {
                    recording: Arc::clone(recording),
                    norm: Some(norm.into()),
                }
            }
        };
        Dataset {
            storage,
            source: self.source.clone(),
            normalized: true,
            ..*self
        }
    }

    /// Copies every series into owned row storage.
    pub fn to_rows(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.count * self.series_len];
        for (id, dst) in out.chunks_exact_mut(self.series_len).enumerate() {
            self.fill(id, dst);
        }
        out
    }

    /// SHA-256 binding the shape and content. Windowed datasets hash their
    /// recording and normalization flag instead of every window.
    pub fn checksum(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update((self.count as u64).to_le_bytes());
        hasher.update((self.series_len as u64).to_le_bytes());
        let values: &[f64] = match &self.storage {
            Storage::Rows(rows) => {
                hasher.update(b"rows");
                rows
            }
            Storage::Windows { recording, norm } => {
                hasher.update(if norm.is_some() {
                    b"znorm" as &[u8]
                } else {
                    b"raw"
                });
                recording
            }
        };
        let mut bytes = Vec::with_capacity(8 * 4096);
        for chunk in values.chunks(4096) {
            bytes.clear();
            for v in chunk {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            hasher.update(&bytes);
        }
        hasher.finalize().into()
    }
}

/// All `m - t + 1` contiguous windows of length `t`, in order.
///
/// The result is a view over `long_series`; windows are not normalized.
pub fn extract_subsequences(long_series: &TimeSeries, t: usize) -> Result<Dataset> {
    extract_windows(Arc::from(long_series.values()), t, Source::InMemory)
}

pub(crate) fn extract_windows(recording: Arc<[f64]>, t: usize, source: Source) -> Result<Dataset> {
    let m = recording.len();
    if t == 0 {
        return Err(Error::InvalidArgument(
            "subsequence length must be >= 1".into(),
        ));
    }
    if t > m {
        return Err(Error::InvalidArgument(format!(
            "subsequence length {t} exceeds series length {m}"
        )));
    }
    Ok(Dataset {
        series_len: t,
        count: m - t + 1,
        storage: Storage::Windows {
            recording,
            norm: None,
        },
        source,
        normalized: false,
    })
}

/// Windows of a random-walk recording, with the generator recorded as source.
pub fn random_walk_dataset(length: usize, seed: u64, t: usize) -> Result<Dataset> {
    let walk = generate_random_walk(length, seed)?;
    extract_windows(
        walk.into_values().into(),
        t,
        Source::RandomWalk { length, seed },
    )
}

/// Windows of `recording`, tagged with an explicit source.
pub fn windows_with_source(recording: Vec<f64>, t: usize, source: Source) -> Result<Dataset> {
    if let Some(pos) = recording.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite value at position {pos}"
        )));
    }
    extract_windows(recording.into(), t, source)
}
