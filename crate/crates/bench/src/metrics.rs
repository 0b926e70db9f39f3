//! Ranking quality against a gold ordering.

use ssh_core::{Error, Result};

/// `|retrieved[..k] ∩ gold[..k]| / k`. Short lists count missing slots as misses.
pub fn precision_at_k(retrieved: &[usize], gold: &[usize], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let gold = &gold[..gold.len().min(k)];
    let hits = retrieved
        .iter()
        .take(k)
        .filter(|id| gold.contains(id))
        .count();
    Ok(hits as f64 / k as f64)
}

/// Graded relevance of `id`: `k - rank` for gold rank `1..=k`, else 0.
fn relevance(id: usize, gold: &[usize], k: usize) -> f64 {
    gold.iter()
        .take(k)
        .position(|&g| g == id)
        .map_or(0.0, |p| (k - (p + 1)) as f64)
}

fn dcg(list: &[usize], gold: &[usize], k: usize) -> f64 {
    list.iter()
        .take(k)
        .enumerate()
        .map(|(i, &id)| relevance(id, gold, k) / ((i + 2) as f64).log2())
        .sum()
}

/// Normalized discounted gain with relevance `k - gold_rank` and discount
/// `log2(i + 1)` at 1-based position `i`. For `k = 1` every relevance is zero,
/// so the score is 1 when the first items agree and 0 otherwise.
pub fn ndcg_at_k(retrieved: &[usize], gold: &[usize], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let ideal = dcg(gold, gold, k);
    if ideal == 0.0 {
        let same = matches!((retrieved.first(), gold.first()), (Some(a), Some(b)) if a == b);
        return Ok(if same { 1.0 } else { 0.0 });
    }
    Ok(dcg(retrieved, gold, k) / ideal)
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn precision_cases() {
        let gold: Vec<usize> = (0..10).collect();
        assert_eq!(precision_at_k(&gold, &gold, 10).unwrap(), 1.0);
        let disjoint: Vec<usize> = (100..110).collect();
        assert_eq!(precision_at_k(&disjoint, &gold, 10).unwrap(), 0.0);
        let half: Vec<usize> = (5..15).collect();
        assert_eq!(precision_at_k(&half, &gold, 10).unwrap(), 0.5);
        assert_eq!(precision_at_k(&gold[..3], &gold, 10).unwrap(), 0.3);
        assert!(precision_at_k(&gold, &gold, 0).is_err());
    }

    /// Direct evaluation of the textbook sums, one term at a time.
    fn ndcg_oracle(retrieved: &[usize], gold: &[usize], k: usize) -> f64 {
        let rel = |id: usize| -> f64 {
            for r in 1..=k {
                if gold[r - 1] == id {
                    return (k - r) as f64;
                }
            }
            0.0
        };
        let mut dcg = 0.0;
        let mut idcg = 0.0;
        for i in 1..=k {
            let disc = (i as f64 + 1.0).ln() / 2f64.ln();
            dcg += rel(retrieved[i - 1]) / disc;
            idcg += rel(gold[i - 1]) / disc;
        }
        dcg / idcg
    }

    #[test]
    fn ndcg_cases() {
        let gold: Vec<usize> = (0..10).collect();
        assert_eq!(ndcg_at_k(&gold, &gold, 10).unwrap(), 1.0);
        let rev: Vec<usize> = gold.iter().rev().copied().collect();
        let got = ndcg_at_k(&rev, &gold, 10).unwrap();
        assert!((got - ndcg_oracle(&rev, &gold, 10)).abs() < 1e-12);
        assert!(got > 0.0 && got < 1.0);
        let disjoint: Vec<usize> = (50..60).collect();
        assert_eq!(ndcg_at_k(&disjoint, &gold, 10).unwrap(), 0.0);
    }

    #[test]
    fn ndcg_k_one() {
        assert_eq!(ndcg_at_k(&[3], &[3], 1).unwrap(), 1.0);
        assert_eq!(ndcg_at_k(&[4], &[3], 1).unwrap(), 0.0);
        assert!(ndcg_at_k(&[4], &[3], 0).is_err());
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        assert_eq!(mean_stderr(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        let (m, s) = mean_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn perfect_ranking_scores_one(k in 1usize..60, offset in 0usize..1000) {
            let gold: Vec<usize> = (offset..offset + k).collect();
            prop_assert_eq!(precision_at_k(&gold, &gold, k).unwrap(), 1.0);
            prop_assert_eq!(ndcg_at_k(&gold, &gold, k).unwrap(), 1.0);
        }

        #[test]
        fn scores_in_unit_interval(
            retrieved in proptest::collection::vec(0usize..30, 1..20),
            k in 1usize..20,
        ) {
            let gold: Vec<usize> = (0..20).collect();
            let p = precision_at_k(&retrieved, &gold, k).unwrap();
            let n = ndcg_at_k(&retrieved, &gold, k).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(n >= 0.0);
        }
    }
}
