//! Experiment drivers. Each returns typed rows that render to CSV with a
//! fixed header.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ssh_core::index::{hamming, SrpHasher, SrpSignature};
use ssh_core::wmh::mix64;
use ssh_core::{
    build_index, exact_search, generate_random_walk, query_index, random_walk_dataset,
    weighted_jaccard, z_normalize, Dataset, Error, Result, SshParams, TimeSeries, WarpingParams,
    WeightedShingleSet,
};

use crate::metrics::{mean_stderr, ndcg_at_k, precision_at_k};
use crate::oracle::{brute_force_topk, RankedResult};

/// How query series are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryProtocol {
    /// Indexed windows picked uniformly at random.
    Member,
    /// Fresh z-normalized random walks that are not in the dataset.
    Independent,
}

impl FromStr for QueryProtocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "member" => Ok(Self::Member),
            "independent" | "indep" => Ok(Self::Independent),
            other => Err(Error::InvalidArgument(format!(
                "unknown query protocol '{other}' (expected member or independent)"
            ))),
        }
    }
}

impl fmt::Display for QueryProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Member => "member",
            Self::Independent => "independent",
        })
    }
}

/// A random-walk recording cut into `series` z-normalized windows per length,
/// plus a seeded query set.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub series: usize,
    pub data_seed: u64,
    pub queries: usize,
    pub query_seed: u64,
    pub protocol: QueryProtocol,
    pub band: f64,
}

impl Default for Workload {
    fn default() -> Self {
        Self {
            series: 50_000,
            data_seed: 1,
            queries: 20,
            query_seed: 2,
            protocol: QueryProtocol::Member,
            band: ssh_core::DEFAULT_BAND,
        }
    }
}

impl Workload {
    pub fn warping(&self) -> Result<WarpingParams> {
        WarpingParams::new(self.band)
    }

    pub fn dataset(&self, t: usize) -> Result<Dataset> {
        if self.series == 0 || t == 0 {
            return Err(Error::InvalidArgument(
                "series count and length must be >= 1".into(),
            ));
        }
        Ok(random_walk_dataset(self.series + t - 1, self.data_seed, t)?.z_normalized())
    }

    pub fn query_set(&self, dataset: &Dataset) -> Result<Vec<TimeSeries>> {
        let t = dataset.series_len();
        match self.protocol {
            QueryProtocol::Member => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.query_seed);
                Ok((0..self.queries)
                    .map(|_| dataset.get(rng.random_range(0..dataset.len())))
                    .collect())
            }
            QueryProtocol::Independent => (0..self.queries as u64)
                .map(|i| {
                    let seed = mix64(self.query_seed ^ mix64(i.wrapping_add(1)));
                    z_normalize(&generate_random_walk(t, seed)?)
                })
                .collect(),
        }
    }
}

/// Index parameters as a function of series length.
pub type ParamFn<'a> = &'a (dyn Fn(usize) -> SshParams + Sync);

/// Parameters tuned on a held-out random-walk recording (data seed 11) for
/// member queries: a short filter at unit step, 30-bit shingles, and 40
/// minhashes per series split into tables of `K` concatenated hashes, with `K`
/// growing for long series whose shingle sets overlap more. Filter seed 7
/// draws a filter with near-zero sum; filters with a large sum mostly encode
/// the local level and leave far less to prune.
pub fn tuned_params(t: usize) -> SshParams {
    let window = 10;
    let per_table = (t / 512).max(2);
    SshParams {
        window,
        delta: 1,
        shingle: 30.min(t.saturating_sub(window) + 1).max(1),
        tables: (40 / per_table).max(1),
        per_table,
        seed: 7,
        band: ssh_core::DEFAULT_BAND,
    }
}

/// Rows that render as one CSV line under a fixed header.
pub trait CsvRow {
    const HEADER: &'static str;
    fn csv(&self) -> String;
}

pub fn write_csv<T: CsvRow>(rows: &[T], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{}", T::HEADER)?;
    for r in rows {
        writeln!(out, "{}", r.csv())?;
    }
    Ok(())
}

pub fn to_csv<T: CsvRow>(rows: &[T]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs
        .into_iter()
        .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

fn nonempty(name: &str, len: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::InvalidArgument(format!("{name} must not be empty")));
    }
    Ok(())
}

fn prepared(t: usize, workload: &Workload) -> Result<(Dataset, Vec<TimeSeries>)> {
    let data = workload.dataset(t)?;
    let queries = workload.query_set(&data)?;
    nonempty("query set", queries.len())?;
    Ok((data, queries))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruningRow {
    pub t: usize,
    /// Mean fraction of the dataset the exact cascade never ran full DTW on.
    pub ucr_pruned: f64,
    /// Mean fraction never retrieved from the hash tables.
    pub ssh_hash_pruned: f64,
    /// Mean fraction that never reached full DTW under the index.
    pub ssh_total_pruned: f64,
}

impl CsvRow for PruningRow {
    const HEADER: &'static str = "t,ucr_pruned,ssh_hash_pruned,ssh_total_pruned";
    fn csv(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6}",
            self.t, self.ucr_pruned, self.ssh_hash_pruned, self.ssh_total_pruned
        )
    }
}

/// Pruned fractions of the exact cascade and of the index, per length.
pub fn run_pruning_experiment(
    lengths: &[usize],
    workload: &Workload,
    params: ParamFn,
    k: usize,
) -> Result<Vec<PruningRow>> {
    nonempty("length list", lengths.len())?;
    let band = workload.warping()?;
    lengths
        .iter()
        .map(|&t| {
            let (data, queries) = prepared(t, workload)?;
            let index = build_index(
                &data,
                SshParams {
                    band: band.band(),
                    ..params(t)
                },
            )?;
            let per_query: Vec<(f64, f64, f64)> = queries
                .par_iter()
                .map(|q| {
                    let exact = exact_search(&data, q, k, band)?;
                    let ssh = query_index(&index, q, k)?;
                    let ucr = 1.0 - exact.stats.dtw_computed as f64 / data.len() as f64;
                    Ok((ucr, ssh.hash_pruned_fraction(), ssh.total_pruned_fraction()))
                })
                .collect::<Result<_>>()?;
            Ok(PruningRow {
                t,
                ucr_pruned: mean(per_query.iter().map(|r| r.0)),
                ssh_hash_pruned: mean(per_query.iter().map(|r| r.1)),
                ssh_total_pruned: mean(per_query.iter().map(|r| r.2)),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ssh,
    Srp,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ssh" => Ok(Self::Ssh),
            "srp" => Ok(Self::Srp),
            other => Err(Error::InvalidArgument(format!(
                "unknown method '{other}' (expected ssh or srp)"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ssh => "ssh",
            Self::Srp => "srp",
        })
    }
}

/// Whole-series sign projections, ranked by Hamming distance then id.
pub struct SrpRanker {
    hasher: SrpHasher,
    signatures: Vec<SrpSignature>,
}

impl SrpRanker {
    pub fn new(dataset: &Dataset, bits: usize, seed: u64) -> Result<Self> {
        let hasher = SrpHasher::new(dataset.series_len(), bits, seed)?;
        let signatures = (0..dataset.len())
            .into_par_iter()
            .map(|id| hasher.sign(&dataset.series(id)))
            .collect::<Result<_>>()?;
        Ok(Self { hasher, signatures })
    }

    pub fn top_k(&self, q: &TimeSeries, k: usize) -> Result<Vec<usize>> {
        let qs = self.hasher.sign(q.values())?;
        let mut ranked: Vec<(u32, usize)> = self
            .signatures
            .iter()
            .enumerate()
            .map(|(id, s)| (hamming(&qs, s), id))
            .collect();
        let k = k.min(ranked.len());
        if k > 0 && k < ranked.len() {
            ranked.select_nth_unstable(k - 1);
            ranked.truncate(k);
        }
        ranked.sort_unstable();
        Ok(ranked.into_iter().map(|(_, id)| id).collect())
    }
}

/// SRP gets one sign bit per minhash the index evaluates.
pub fn srp_bits(params: &SshParams) -> usize {
    params.tables * params.per_table
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub t: usize,
    pub method: Method,
    pub k: usize,
    pub precision: f64,
    pub precision_stderr: f64,
    pub ndcg: f64,
    pub ndcg_stderr: f64,
}

impl CsvRow for AccuracyRow {
    const HEADER: &'static str = "t,method,k,precision,precision_stderr,ndcg,ndcg_stderr";
    fn csv(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6}",
            self.t,
            self.method,
            self.k,
            self.precision,
            self.precision_stderr,
            self.ndcg,
            self.ndcg_stderr
        )
    }
}

/// Precision and NDCG against the unpruned DTW ranking, per (length, method, k).
pub fn run_accuracy_experiment(
    lengths: &[usize],
    ks: &[usize],
    methods: &[Method],
    workload: &Workload,
    params: ParamFn,
) -> Result<Vec<AccuracyRow>> {
    nonempty("length list", lengths.len())?;
    nonempty("k list", ks.len())?;
    nonempty("method list", methods.len())?;
    if ks.contains(&0) {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let k_max = *ks.iter().max().expect("non-empty");
    let band = workload.warping()?;
    let mut rows = Vec::new();
    for &t in lengths {
        let (data, queries) = prepared(t, workload)?;
        let p = SshParams {
            band: band.band(),
            ..params(t)
        };
        let gold: Vec<RankedResult> = queries
            .par_iter()
            .map(|q| brute_force_topk(&data, q, k_max, band))
            .collect::<Result<_>>()?;
        for &method in methods {
            let retrieved: Vec<Vec<usize>> = match method {
                Method::Ssh => {
                    let index = build_index(&data, p)?;
                    queries
                        .par_iter()
                        .map(|q| Ok(query_index(&index, q, k_max)?.outcome.ids()))
                        .collect::<Result<_>>()?
                }
                Method::Srp => {
                    let ranker = SrpRanker::new(&data, srp_bits(&p), p.seed)?;
                    queries
                        .par_iter()
                        .map(|q| ranker.top_k(q, k_max))
                        .collect::<Result<_>>()?
                }
            };
            for &k in ks {
                let mut prec = Vec::with_capacity(queries.len());
                let mut ndcg = Vec::with_capacity(queries.len());
                for (got, gold) in retrieved.iter().zip(&gold) {
                    prec.push(precision_at_k(got, &gold.ids, k)?);
                    ndcg.push(ndcg_at_k(got, &gold.ids, k)?);
                }
                let (precision, precision_stderr) = mean_stderr(&prec);
                let (ndcg, ndcg_stderr) = mean_stderr(&ndcg);
                rows.push(AccuracyRow {
                    t,
                    method,
                    k,
                    precision,
                    precision_stderr,
                    ndcg,
                    ndcg_stderr,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub t: usize,
    /// Mean seconds per query, hashing the query included.
    pub ssh_secs: f64,
    pub exact_secs: f64,
    pub ssh_hash_secs: f64,
    pub ssh_probe_secs: f64,
    pub ssh_rerank_secs: f64,
}

impl TimingRow {
    pub fn speedup(&self) -> f64 {
        self.exact_secs / self.ssh_secs
    }
}

impl CsvRow for TimingRow {
    const HEADER: &'static str =
        "t,ssh_secs,exact_secs,speedup,ssh_hash_secs,ssh_probe_secs,ssh_rerank_secs";
    fn csv(&self) -> String {
        format!(
            "{},{:.6e},{:.6e},{:.3},{:.6e},{:.6e},{:.6e}",
            self.t,
            self.ssh_secs,
            self.exact_secs,
            self.speedup(),
            self.ssh_hash_secs,
            self.ssh_probe_secs,
            self.ssh_rerank_secs
        )
    }
}

/// Mean query wall-clock of the index and of the exact cascade. Queries run
/// one after another on the calling thread; index construction is excluded.
pub fn run_timing_experiment(
    lengths: &[usize],
    workload: &Workload,
    params: ParamFn,
    k: usize,
) -> Result<Vec<TimingRow>> {
    nonempty("length list", lengths.len())?;
    let band = workload.warping()?;
    lengths
        .iter()
        .map(|&t| {
            let (data, queries) = prepared(t, workload)?;
            let index = build_index(
                &data,
                SshParams {
                    band: band.band(),
                    ..params(t)
                },
            )?;
            let n = queries.len() as f64;
            let mut row = TimingRow {
                t,
                ssh_secs: 0.0,
                exact_secs: 0.0,
                ssh_hash_secs: 0.0,
                ssh_probe_secs: 0.0,
                ssh_rerank_secs: 0.0,
            };
            for q in &queries {
                let start = Instant::now();
                let res = query_index(&index, q, k)?;
                let ranked = RankedResult::from_query(&res, start.elapsed().as_secs_f64());
                row.ssh_secs += ranked.total_secs / n;
                row.ssh_hash_secs += ranked.hash_secs / n;
                row.ssh_probe_secs += ranked.probe_secs / n;
                row.ssh_rerank_secs += ranked.rerank_secs / n;
                let start = Instant::now();
                exact_search(&data, q, k, band)?;
                row.exact_secs += start.elapsed().as_secs_f64() / n;
            }
            Ok(row)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Window,
    Delta,
    Shingle,
}

impl SweepAxis {
    pub fn apply(self, base: SshParams, value: usize) -> SshParams {
        match self {
            Self::Window => SshParams {
                window: value,
                ..base
            },
            Self::Delta => SshParams {
                delta: value,
                ..base
            },
            Self::Shingle => SshParams {
                shingle: value,
                ..base
            },
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "W" | "w" | "window" => Ok(Self::Window),
            "delta" => Ok(Self::Delta),
            "n" | "shingle" => Ok(Self::Shingle),
            other => Err(Error::InvalidArgument(format!(
                "unknown sweep axis '{other}' (expected W, delta or n)"
            ))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Window => "W",
            Self::Delta => "delta",
            Self::Shingle => "n",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: usize,
    pub k: usize,
    /// Top-`k` precision when the whole dataset is ranked by weighted
    /// Jaccard similarity of shingle sets, the quantity the minhashes estimate.
    pub precision: f64,
    /// Top-`k` precision of the index (candidates reranked by exact DTW).
    pub index_precision: f64,
    pub hash_pruned: f64,
    /// Index construction time divided by the number of series.
    pub preprocess_secs: f64,
}

impl CsvRow for SweepRow {
    const HEADER: &'static str =
        "axis,value,k,precision,index_precision,hash_pruned,preprocess_secs_per_series";
    fn csv(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6e}",
            self.axis,
            self.value,
            self.k,
            self.precision,
            self.index_precision,
            self.hash_pruned,
            self.preprocess_secs
        )
    }
}

/// Ranking quality and per-series preprocessing time as one parameter varies.
pub fn parameter_sweep(
    axis: SweepAxis,
    values: &[usize],
    t: usize,
    workload: &Workload,
    base: SshParams,
    k: usize,
) -> Result<Vec<SweepRow>> {
    nonempty("sweep values", values.len())?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let band = workload.warping()?;
    let (data, queries) = prepared(t, workload)?;
    let gold: Vec<RankedResult> = queries
        .par_iter()
        .map(|q| brute_force_topk(&data, q, k, band))
        .collect::<Result<_>>()?;
    values
        .iter()
        .map(|&value| {
            let p = SshParams {
                band: band.band(),
                ..axis.apply(base, value)
            };
            let start = Instant::now();
            let index = build_index(&data, p)?;
            let preprocess_secs = start.elapsed().as_secs_f64() / data.len() as f64;
            let hasher = index.hasher();
            let sets: Vec<WeightedShingleSet> = (0..data.len())
                .into_par_iter()
                .map(|id| hasher.shingles(&data.series(id)))
                .collect::<Result<_>>()?;
            let per_query: Vec<(f64, f64, f64)> = queries
                .par_iter()
                .zip(&gold)
                .map(|(q, g)| {
                    let ranked = jaccard_top_k(&hasher.shingles(q.values())?, &sets, k)?;
                    let res = query_index(&index, q, k)?;
                    Ok((
                        precision_at_k(&ranked, &g.ids, k)?,
                        precision_at_k(&res.outcome.ids(), &g.ids, k)?,
                        res.hash_pruned_fraction(),
                    ))
                })
                .collect::<Result<_>>()?;
            Ok(SweepRow {
                axis,
                value,
                k,
                precision: mean(per_query.iter().map(|r| r.0)),
                index_precision: mean(per_query.iter().map(|r| r.1)),
                hash_pruned: mean(per_query.iter().map(|r| r.2)),
                preprocess_secs,
            })
        })
        .collect()
}

/// Ids of the `k` sets most similar to `q`, ties by id.
fn jaccard_top_k(
    q: &WeightedShingleSet,
    sets: &[WeightedShingleSet],
    k: usize,
) -> Result<Vec<usize>> {
    let mut scored: Vec<(f64, usize)> = sets
        .iter()
        .enumerate()
        .map(|(id, s)| Ok((-weighted_jaccard(q, s)?, id)))
        .collect::<Result<_>>()?;
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let k = k.min(scored.len());
    if k < scored.len() {
        scored.select_nth_unstable_by(k, cmp);
        scored.truncate(k);
    }
    scored.sort_unstable_by(cmp);
    Ok(scored.into_iter().map(|(_, id)| id).collect())
}
