//! The hash index: sketch every series, shingle the sketch, and file the
//! series under one weighted-minhash key per table. Queries probe the same
//! keys and rerank the union of the probed buckets by exact DTW.

mod persist;
mod srp;

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::dtw::{ScanOrder, SearchOutcome, Searcher, WarpingParams};
use crate::error::{Error, Result};
use crate::series::{z_normalize, Dataset, TimeSeries};
use crate::shingle::{shingle_bits, WeightedShingleSet, MAX_SHINGLE_LEN};
use crate::sketch::{make_filter, sketch_len, sketch_values, RandomFilter};
use crate::wmh::{mix64, table_keys};

pub use persist::{load_index, rebuild_index, save_index, INDEX_MAGIC, INDEX_VERSION};
pub use srp::{hamming, srp_signature, SrpHasher, SrpSignature};

/// Index parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SshParams {
    /// Filter length `W`.
    pub window: usize,
    /// Filter step `delta`.
    pub delta: usize,
    /// Shingle length `n`.
    pub shingle: usize,
    /// Number of hash tables `d`.
    pub tables: usize,
    /// Minhashes concatenated into each table key.
    pub per_table: usize,
    pub seed: u64,
    /// Sakoe-Chiba band fraction used when reranking.
    pub band: f64,
}

impl SshParams {
    /// W = 80, delta = 3, n = 15, d = 20.
    pub fn ecg() -> Self {
        Self {
            window: 80,
            delta: 3,
            shingle: 15,
            tables: 20,
            per_table: 1,
            seed: 0,
            band: crate::dtw::DEFAULT_BAND,
        }
    }

    /// W = 30, delta = 5, n = 15, d = 20.
    pub fn random_walk() -> Self {
        Self {
            window: 30,
            delta: 5,
            ..Self::ecg()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.window == 0 {
            return fail("filter length W must be >= 1".into());
        }
        if self.delta == 0 {
            return fail("step size delta must be >= 1".into());
        }
        if self.shingle == 0 || self.shingle > MAX_SHINGLE_LEN {
            return fail(format!(
                "shingle length n must satisfy 1 <= n <= {MAX_SHINGLE_LEN}, got {}",
                self.shingle
            ));
        }
        if self.tables == 0 {
            return fail("table count d must be >= 1".into());
        }
        if self.per_table == 0 {
            return fail("hashes per table must be >= 1".into());
        }
        WarpingParams::new(self.band).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    /// Checks that series of length `t` yield at least one shingle.
    pub fn validate_for_len(&self, t: usize) -> Result<()> {
        self.validate()?;
        if t < self.window {
            return Err(Error::InvalidConfig(format!(
                "series length t = {t} must be >= filter length W = {}",
                self.window
            )));
        }
        let bits = sketch_len(t, self.window, self.delta);
        if bits < self.shingle {
            return Err(Error::InvalidConfig(format!(
                "sketch length floor((t - W) / delta) + 1 = {bits} must be >= shingle length n = {}",
                self.shingle
            )));
        }
        Ok(())
    }

    pub fn warping(&self) -> WarpingParams {
        WarpingParams::new(self.band).expect("band validated")
    }

    /// Seed for the minhash family, distinct from the filter seed.
    pub(crate) fn hash_seed(&self) -> u64 {
        mix64(self.seed ^ 0x4d49_4e48_4153_4800)
    }
}

impl Default for SshParams {
    fn default() -> Self {
        Self::ecg()
    }
}

/// Sketch, shingle and hash one series with a prepared filter.
#[derive(Debug, Clone)]
pub struct SshHasher {
    params: SshParams,
    filter: RandomFilter,
}

impl SshHasher {
    pub fn new(params: SshParams) -> Result<Self> {
        params.validate()?;
        let filter = make_filter(params.window, params.seed)?;
        Ok(Self { params, filter })
    }

    pub(crate) fn with_filter(params: SshParams, filter: RandomFilter) -> Result<Self> {
        params.validate()?;
        if filter.width() != params.window {
            return Err(Error::InvalidConfig(format!(
                "filter has {} weights but W = {}",
                filter.width(),
                params.window
            )));
        }
        Ok(Self { params, filter })
    }

    pub fn params(&self) -> &SshParams {
        &self.params
    }

    pub fn filter(&self) -> &RandomFilter {
        &self.filter
    }

    pub fn shingles(&self, values: &[f64]) -> Result<WeightedShingleSet> {
        let sketch = sketch_values(values, &self.filter, self.params.delta)?;
        shingle_bits(sketch.bits(), self.params.shingle)
    }

    /// One key per table.
    pub fn keys(&self, values: &[f64]) -> Result<Vec<u64>> {
        let set = self.shingles(values)?;
        let sig = table_keys(
            &set,
            self.params.tables,
            self.params.per_table,
            self.params.hash_seed(),
        )?;
        Ok(sig.values().to_vec())
    }
}

/// Bucket key -> ids, one map per table.
pub type Table = HashMap<u64, Vec<u32>>;

#[derive(Debug, Clone)]
pub struct SshIndex {
    hasher: SshHasher,
    tables: Vec<Table>,
    dataset: Dataset,
}

impl SshIndex {
    pub fn params(&self) -> &SshParams {
        self.hasher.params()
    }

    pub fn filter(&self) -> &RandomFilter {
        self.hasher.filter()
    }

    pub fn hasher(&self) -> &SshHasher {
        &self.hasher
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn len(&self) -> usize {
        self.dataset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dataset.is_empty()
    }

    /// Applies the dataset's normalization to a raw query.
    pub fn prepare_query(&self, q: &TimeSeries) -> Result<TimeSeries> {
        if self.dataset.is_normalized() {
            z_normalize(q)
        } else {
            Ok(q.clone())
        }
    }

    /// Tables in a canonical form: buckets sorted by key.
    pub fn sorted_tables(&self) -> Vec<Vec<(u64, &[u32])>> {
        self.tables
            .iter()
            .map(|t| {
                let mut buckets: Vec<(u64, &[u32])> =
                    t.iter().map(|(&k, ids)| (k, ids.as_slice())).collect();
                buckets.sort_unstable_by_key(|&(k, _)| k);
                buckets
            })
            .collect()
    }

    /// Sorted, deduplicated union of the buckets `keys` land in.
    pub fn probe(&self, keys: &[u64]) -> Vec<usize> {
        let mut ids: Vec<u32> = Vec::new();
        for (table, key) in self.tables.iter().zip(keys) {
            if let Some(bucket) = table.get(key) {
                ids.extend_from_slice(bucket);
            }
        }
        ids.sort_unstable();
        ids.dedup();
        ids.into_iter().map(|i| i as usize).collect()
    }
}

/// Builds `d` tables over `dataset`. Hashing runs in parallel; insertion is
/// sequential in id order so bucket contents are deterministic.
pub fn build_index(dataset: &Dataset, params: SshParams) -> Result<SshIndex> {
    let hasher = SshHasher::new(params)?;
    build_with_hasher(dataset, hasher)
}

pub(crate) fn build_with_hasher(dataset: &Dataset, hasher: SshHasher) -> Result<SshIndex> {
    hasher.params().validate_for_len(dataset.series_len())?;
    if dataset.len() > u32::MAX as usize {
        return Err(Error::InvalidConfig(
            "at most 2^32 - 1 series per index".into(),
        ));
    }
    let keys: Vec<Vec<u64>> = (0..dataset.len())
        .into_par_iter()
        .map(|id| hasher.keys(&dataset.series(id)))
        .collect::<Result<_>>()?;
    let mut tables: Vec<Table> = vec![HashMap::new(); hasher.params().tables];
    for (id, row) in keys.iter().enumerate() {
        for (table, &key) in tables.iter_mut().zip(row) {
            table.entry(key).or_default().push(id as u32);
        }
    }
    Ok(SshIndex {
        hasher,
        tables,
        dataset: dataset.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryStatus {
    Ok,
    /// No bucket matched; the result is empty.
    NoCandidates,
    /// No bucket matched and the whole dataset was searched instead.
    FellBack,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub hash: Duration,
    pub probe: Duration,
    pub rerank: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.hash + self.probe + self.rerank
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub outcome: SearchOutcome,
    pub status: QueryStatus,
    /// `|R|`, the number of distinct ids retrieved from the tables.
    pub candidates: usize,
    pub dataset_len: usize,
    pub timings: PhaseTimings,
}

impl QueryResult {
    /// Fraction of the dataset never touched because no bucket held it.
    pub fn hash_pruned_fraction(&self) -> f64 {
        1.0 - self.candidates as f64 / self.dataset_len as f64
    }

    /// Fraction of the dataset that never reached a full DTW computation.
    pub fn total_pruned_fraction(&self) -> f64 {
        1.0 - self.outcome.stats.dtw_computed as f64 / self.dataset_len as f64
    }

    /// Fraction of `R` removed by the lower bounds.
    pub fn bound_pruned_fraction(&self) -> f64 {
        self.outcome.stats.pruned_fraction()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryOptions {
    /// Search the whole dataset when no bucket matches.
    pub fallback_to_exact: bool,
}

pub fn query_index(index: &SshIndex, q: &TimeSeries, k: usize) -> Result<QueryResult> {
    query_with(index, q, k, QueryOptions::default())
}

/// Probes the tables with `q`'s keys and returns the exact DTW top-k of the
/// retrieved candidates, scanned in ascending LB_Keogh order.
pub fn query_with(
    index: &SshIndex,
    q: &TimeSeries,
    k: usize,
    options: QueryOptions,
) -> Result<QueryResult> {
    let t = index.dataset.series_len();
    if q.len() != t {
        return Err(Error::InvalidArgument(format!(
            "query has length {} but the index holds series of length {t}",
            q.len()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let start = Instant::now();
    let keys = index.hasher.keys(q.values())?;
    let hashed = Instant::now();
    let ids = index.probe(&keys);
    let probed = Instant::now();

    let mut searcher = Searcher::new(q, t, index.params().warping())?;
    let (status, outcome) = if ids.is_empty() {
        if options.fallback_to_exact {
            let all = searcher.search(
                &index.dataset,
                0..index.dataset.len(),
                k,
                ScanOrder::AsGiven,
            );
            (QueryStatus::FellBack, all)
        } else {
            let empty = searcher.search(&index.dataset, std::iter::empty(), k, ScanOrder::AsGiven);
            (QueryStatus::NoCandidates, empty)
        }
    } else {
        let found = searcher.search(&index.dataset, ids.iter().copied(), k, ScanOrder::LbKeogh);
        (QueryStatus::Ok, found)
    };
    let done = Instant::now();
    let candidates = if status == QueryStatus::FellBack {
        index.dataset.len()
    } else {
        ids.len()
    };
    Ok(QueryResult {
        outcome,
        status,
        candidates,
        dataset_len: index.dataset.len(),
        timings: PhaseTimings {
            hash: hashed - start,
            probe: probed - hashed,
            rerank: done - probed,
        },
    })
}
