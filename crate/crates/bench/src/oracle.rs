//! Unpruned DTW ranking used as the gold standard.

use std::time::Instant;

use ssh_core::dtw::DtwScratch;
use ssh_core::{Dataset, Result, TimeSeries, WarpingParams};

/// One ranked answer with per-phase wall-clock times in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    pub ids: Vec<usize>,
    /// DTW distances, ascending, aligned with `ids`.
    pub distances: Vec<f64>,
    pub hash_secs: f64,
    pub probe_secs: f64,
    pub rerank_secs: f64,
    pub total_secs: f64,
    /// `(mechanism, fraction of the dataset it removed)`.
    pub pruned_fractions: Vec<(&'static str, f64)>,
}

impl RankedResult {
    pub fn from_query(res: &ssh_core::QueryResult, total_secs: f64) -> Self {
        let n = &res.outcome.neighbors;
        Self {
            ids: n.iter().map(|x| x.id).collect(),
            distances: n.iter().map(|x| x.distance).collect(),
            hash_secs: res.timings.hash.as_secs_f64(),
            probe_secs: res.timings.probe.as_secs_f64(),
            rerank_secs: res.timings.rerank.as_secs_f64(),
            total_secs,
            pruned_fractions: vec![
                ("hash", res.hash_pruned_fraction()),
                ("total", res.total_pruned_fraction()),
            ],
        }
    }
}

/// Full banded DTW against every series, no bounds and no abandoning.
/// Ties are broken by id.
pub fn brute_force_topk(
    dataset: &Dataset,
    q: &TimeSeries,
    k: usize,
    params: WarpingParams,
) -> Result<RankedResult> {
    let start = Instant::now();
    // validates the query length
    let _ = ssh_core::dtw::Searcher::new(q, dataset.series_len(), params)?;
    let r = params.radius(q.len());
    let mut scratch = DtwScratch::default();
    let mut cand = vec![0.0; dataset.series_len()];
    let mut all: Vec<(f64, usize)> = (0..dataset.len())
        .map(|id| {
            dataset.fill(id, &mut cand);
            (scratch.dtw_sq(q.values(), &cand, r, f64::INFINITY), id)
        })
        .collect();
    let k = k.min(all.len());
    if k > 0 && k < all.len() {
        all.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.truncate(k);
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let total = start.elapsed().as_secs_f64();
    Ok(RankedResult {
        ids: all.iter().map(|x| x.1).collect(),
        distances: all.iter().map(|x| x.0.sqrt()).collect(),
        hash_secs: 0.0,
        probe_secs: 0.0,
        rerank_secs: total,
        total_secs: total,
        pruned_fractions: vec![("total", 0.0)],
    })
}
