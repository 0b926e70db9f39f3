//! Banded DTW, the LB_Kim / LB_Keogh / LB_Keogh2 lower bounds, and an exact
//! branch-and-bound top-k searcher built on them.
//!
//! Everything is computed on squared costs; square roots are taken only on
//! values handed back to callers.

use std::collections::{BinaryHeap, VecDeque};

use crate::error::{Error, Result};
use crate::series::{Dataset, TimeSeries};

/// Default Sakoe-Chiba half-width, as a fraction of the series length.
pub const DEFAULT_BAND: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpingParams {
    band: f64,
}

impl WarpingParams {
    pub fn new(band: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&band) {
            return Err(Error::InvalidArgument(format!(
                "warping band must be in [0, 1], got {band}"
            )));
        }
        Ok(Self { band })
    }

    pub fn band(&self) -> f64 {
        self.band
    }

    /// Band half-width in samples for series of length `m`.
    pub fn radius(&self, m: usize) -> usize {
        ((self.band * m as f64).round() as usize).min(m)
    }
}

impl Default for WarpingParams {
    fn default() -> Self {
        Self { band: DEFAULT_BAND }
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidArgument(format!(
            "series lengths differ: {a} vs {b}"
        )));
    }
    if a == 0 {
        return Err(Error::InvalidArgument("series must not be empty".into()));
    }
    Ok(())
}

/// DTW distance under a Sakoe-Chiba band.
///
/// With `abandon_above = Some(b)` the computation stops and returns
/// `f64::INFINITY` as soon as every cell of a row exceeds `b * b`.
pub fn dtw_distance(
    x: &TimeSeries,
    y: &TimeSeries,
    params: WarpingParams,
    abandon_above: Option<f64>,
) -> Result<f64> {
    check_lengths(x.len(), y.len())?;
    let limit = abandon_above.map_or(f64::INFINITY, |b| b * b);
    let mut scratch = DtwScratch::default();
    Ok(scratch
        .dtw_sq(x.values(), y.values(), params.radius(x.len()), limit)
        .sqrt())
}

/// Reusable rows for [`DtwScratch::dtw_sq`].
#[derive(Debug, Default, Clone)]
pub struct DtwScratch {
    prev: Vec<f64>,
    cur: Vec<f64>,
}

impl DtwScratch {
    /// Squared DTW with band radius `r`; `INFINITY` when a row minimum exceeds `limit_sq`.
    pub fn dtw_sq(&mut self, x: &[f64], y: &[f64], r: usize, limit_sq: f64) -> f64 {
        let m = x.len();
        // Slot 0 is the j = -1 sentinel; slot j + 1 holds column j.
        self.prev.clear();
        self.prev.resize(m + 1, f64::INFINITY);
        self.cur.clear();
        self.cur.resize(m + 1, f64::INFINITY);

        for (i, &xi) in x.iter().enumerate() {
            let lo = i.saturating_sub(r);
            let hi = (i + r).min(m - 1);
            let cur = &mut self.cur;
            let prev = &self.prev;
            cur[lo] = f64::INFINITY;
            let mut row_min = f64::INFINITY;
            for j in lo..=hi {
                let d = xi - y[j];
                let best = if i == 0 && j == 0 {
                    0.0
                } else {
                    prev[j + 1].min(prev[j]).min(cur[j])
                };
                let v = d * d + best;
                cur[j + 1] = v;
                row_min = row_min.min(v);
            }
            if hi + 2 <= m {
                // keep the cell right of the band unreachable for the next row
                cur[hi + 2] = f64::INFINITY;
            }
            if row_min > limit_sq {
                return f64::INFINITY;
            }
            std::mem::swap(&mut self.prev, &mut self.cur);
        }
        self.prev[m]
    }
}

/// Squared LB_Kim. For length-1 series the first and last points coincide,
/// so only one term is counted.
pub fn lb_kim_sq(x_first: f64, x_last: f64, y_first: f64, y_last: f64, len: usize) -> f64 {
    let a = x_first - y_first;
    if len == 1 {
        return a * a;
    }
    let b = x_last - y_last;
    a * a + b * b
}

/// Distance between the first pair and the last pair of points.
pub fn lb_kim(x: &TimeSeries, y: &TimeSeries) -> Result<f64> {
    check_lengths(x.len(), y.len())?;
    let (a, b) = (x.values(), y.values());
    let m = a.len();
    Ok(lb_kim_sq(a[0], a[m - 1], b[0], b[m - 1], m).sqrt())
}

/// Running max / min of a series over a `±r` window.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    upper: Vec<f64>,
    lower: Vec<f64>,
}

impl Envelope {
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn len(&self) -> usize {
        self.upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.upper.is_empty()
    }

    pub(crate) fn with_len(m: usize) -> Self {
        Self {
            upper: vec![0.0; m],
            lower: vec![0.0; m],
        }
    }

    pub(crate) fn rebuild(&mut self, values: &[f64], r: usize, scratch: &mut EnvelopeScratch) {
        envelope_into(values, r, &mut self.upper, &mut self.lower, scratch);
    }
}

pub fn build_envelope(q: &TimeSeries, params: WarpingParams) -> Envelope {
    let mut env = Envelope::with_len(q.len());
    env.rebuild(
        q.values(),
        params.radius(q.len()),
        &mut EnvelopeScratch::default(),
    );
    env
}

#[derive(Debug, Default)]
pub(crate) struct EnvelopeScratch {
    maxq: VecDeque<usize>,
    minq: VecDeque<usize>,
}

/// Monotonic-deque sliding max/min: `O(m)` regardless of `r`.
fn envelope_into(
    values: &[f64],
    r: usize,
    upper: &mut [f64],
    lower: &mut [f64],
    scratch: &mut EnvelopeScratch,
) {
    let m = values.len();
    let (maxq, minq) = (&mut scratch.maxq, &mut scratch.minq);
    maxq.clear();
    minq.clear();
    // `next` is the first index not yet pushed
    let mut next = 0;
    for i in 0..m {
        let right = (i + r).min(m - 1);
        while next <= right {
            let v = values[next];
            while maxq.back().is_some_and(|&b| values[b] <= v) {
                maxq.pop_back();
            }
            maxq.push_back(next);
            while minq.back().is_some_and(|&b| values[b] >= v) {
                minq.pop_back();
            }
            minq.push_back(next);
            next += 1;
        }
        let left = i.saturating_sub(r);
        while maxq.front().is_some_and(|&f| f < left) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&f| f < left) {
            minq.pop_front();
        }
        upper[i] = values[maxq[0]];
        lower[i] = values[minq[0]];
    }
}

/// Squared LB_Keogh, stopping early once the partial sum exceeds `limit_sq`.
pub fn lb_keogh_sq(env: &Envelope, c: &[f64], limit_sq: f64) -> f64 {
    let mut sum = 0.0;
    for ((&v, &u), &l) in c.iter().zip(&env.upper).zip(&env.lower) {
        let d = if v > u {
            v - u
        } else if v < l {
            l - v
        } else {
            continue;
        };
        sum += d * d;
        if sum > limit_sq {
            break;
        }
    }
    sum
}

pub fn lb_keogh(env: &Envelope, c: &TimeSeries) -> Result<f64> {
    check_lengths(env.len(), c.len())?;
    Ok(lb_keogh_sq(env, c.values(), f64::INFINITY).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub distance: f64,
}

/// Counters for one branch-and-bound pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PruneStats {
    /// Candidates examined.
    pub candidates: usize,
    pub pruned_kim: usize,
    pub pruned_keogh: usize,
    pub pruned_keogh2: usize,
    /// Full DTW started but abandoned early.
    pub abandoned: usize,
    /// Full DTW started (including abandoned ones).
    pub dtw_computed: usize,
}

impl PruneStats {
    pub fn pruned(&self) -> usize {
        self.pruned_kim + self.pruned_keogh + self.pruned_keogh2
    }

    fn frac(&self, n: usize) -> f64 {
        if self.candidates == 0 {
            0.0
        } else {
            n as f64 / self.candidates as f64
        }
    }

    /// Fraction of candidates removed by any lower bound.
    pub fn pruned_fraction(&self) -> f64 {
        self.frac(self.pruned())
    }

    pub fn kim_fraction(&self) -> f64 {
        self.frac(self.pruned_kim)
    }

    pub fn keogh_fraction(&self) -> f64 {
        self.frac(self.pruned_keogh)
    }

    pub fn keogh2_fraction(&self) -> f64 {
        self.frac(self.pruned_keogh2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Ascending by distance, ties by id.
    pub neighbors: Vec<Neighbor>,
    pub stats: PruneStats,
    /// Set when fewer than `k` candidates existed.
    pub truncated: bool,
}

impl SearchOutcome {
    pub fn ids(&self) -> Vec<usize> {
        self.neighbors.iter().map(|n| n.id).collect()
    }
}

/// Order in which a candidate set is scanned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanOrder {
    /// As given.
    AsGiven,
    /// Ascending LB_Keogh against the query envelope.
    LbKeogh,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    dist_sq: f64,
    id: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact top-k by DTW over the whole dataset, scanned in id order.
pub fn exact_search(
    dataset: &Dataset,
    q: &TimeSeries,
    k: usize,
    params: WarpingParams,
) -> Result<SearchOutcome> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let mut searcher = Searcher::new(q, dataset.series_len(), params)?;
    Ok(searcher.search(dataset, 0..dataset.len(), k, ScanOrder::AsGiven))
}

/// Branch-and-bound searcher bound to one query; reusable across calls.
#[derive(Debug)]
pub struct Searcher {
    query: Vec<f64>,
    radius: usize,
    env: Envelope,
    cand: Vec<f64>,
    cand_env: Envelope,
    env_scratch: EnvelopeScratch,
    dtw: DtwScratch,
}

impl Searcher {
    pub fn new(q: &TimeSeries, series_len: usize, params: WarpingParams) -> Result<Self> {
        check_lengths(q.len(), series_len)?;
        let m = q.len();
        let radius = params.radius(m);
        let mut env_scratch = EnvelopeScratch::default();
        let mut env = Envelope::with_len(m);
        env.rebuild(q.values(), radius, &mut env_scratch);
        Ok(Self {
            query: q.values().to_vec(),
            radius,
            env,
            cand: vec![0.0; m],
            cand_env: Envelope::with_len(m),
            env_scratch,
            dtw: DtwScratch::default(),
        })
    }

    pub fn envelope(&self) -> &Envelope {
        &self.env
    }

    /// Top-k of `ids` by DTW. A candidate is pruned once
    /// `max(LB_Kim, LB_Keogh, LB_Keogh2)` reaches the current k-th best.
    pub fn search(
        &mut self,
        dataset: &Dataset,
        ids: impl IntoIterator<Item = usize>,
        k: usize,
        order: ScanOrder,
    ) -> SearchOutcome {
        let mut ids: Vec<usize> = ids.into_iter().collect();
        if k == 0 {
            return SearchOutcome {
                neighbors: Vec::new(),
                stats: PruneStats::default(),
                truncated: false,
            };
        }
        if order == ScanOrder::LbKeogh {
            let mut keyed: Vec<(f64, usize)> = ids
                .iter()
                .map(|&id| {
                    dataset.fill(id, &mut self.cand);
                    (lb_keogh_sq(&self.env, &self.cand, f64::INFINITY), id)
                })
                .collect();
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            ids = keyed.into_iter().map(|(_, id)| id).collect();
        }

        let m = self.query.len();
        let (q_first, q_last) = (self.query[0], self.query[m - 1]);
        let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(k + 1);
        let mut stats = PruneStats::default();

        for id in ids {
            stats.candidates += 1;
            let full = heap.len() == k;
            let (bsf, worst_id) = match heap.peek() {
                Some(top) if full => (top.dist_sq, top.id),
                _ => (f64::INFINITY, usize::MAX),
            };
            // lb == bsf can only tie, and a tie is won by the lower id
            let prunes = |lb: f64| lb > bsf || (lb == bsf && id > worst_id);

            let kim = lb_kim_sq(
                q_first,
                q_last,
                dataset.value_at(id, 0),
                dataset.value_at(id, m - 1),
                m,
            );
            if prunes(kim) {
                stats.pruned_kim += 1;
                continue;
            }
            dataset.fill(id, &mut self.cand);
            if prunes(lb_keogh_sq(&self.env, &self.cand, bsf)) {
                stats.pruned_keogh += 1;
                continue;
            }
            if bsf.is_finite() {
                self.cand_env
                    .rebuild(&self.cand, self.radius, &mut self.env_scratch);
                if prunes(lb_keogh_sq(&self.cand_env, &self.query, bsf)) {
                    stats.pruned_keogh2 += 1;
                    continue;
                }
            }
            stats.dtw_computed += 1;
            let d = self.dtw.dtw_sq(&self.query, &self.cand, self.radius, bsf);
            if d.is_infinite() && bsf.is_finite() {
                stats.abandoned += 1;
                continue;
            }
            let entry = HeapEntry { dist_sq: d, id };
            if !full {
                heap.push(entry);
            } else if entry < *heap.peek().expect("heap is full") {
                heap.pop();
                heap.push(entry);
            }
        }

        let truncated = heap.len() < k;
        let neighbors = heap
            .into_sorted_vec()
            .into_iter()
            .map(|e| Neighbor {
                id: e.id,
                distance: e.dist_sq.sqrt(),
            })
            .collect();
        SearchOutcome {
            neighbors,
            stats,
            truncated,
        }
    }
}
