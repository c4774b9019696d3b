//! Recall@k, median/mean rank and rank standard deviation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::RankVector;

pub const DEFAULT_RECALL_KS: [usize; 3] = [1, 5, 10];

/// Divisor used for the rank standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdConvention {
    /// Divide by `n`.
    #[default]
    Population,
    /// Divide by `n - 1`; a single rank gives 0.
    Sample,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub recall_ks: Vec<usize>,
    pub std: StdConvention,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            recall_ks: DEFAULT_RECALL_KS.to_vec(),
            std: StdConvention::Population,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Percentages in `[0, 100]`, keyed by `k`.
    pub recall_at: BTreeMap<usize, f64>,
    pub median_rank: f64,
    pub mean_rank: f64,
    pub std_rank: f64,
    pub query_count: usize,
    pub gallery_size: usize,
}

fn non_empty(ranks: &[usize]) -> Result<()> {
    if ranks.is_empty() {
        Err(Error::EmptyRanks)
    } else {
        Ok(())
    }
}

pub fn recall_at_k(ranks: &[usize], k: usize) -> Result<f64> {
    non_empty(ranks)?;
    let hits = ranks.iter().filter(|&&r| r <= k).count();
    Ok(100.0 * hits as f64 / ranks.len() as f64)
}

/// Middle element, or the mean of the two middle elements for even counts.
pub fn median_rank(ranks: &[usize]) -> Result<f64> {
    non_empty(ranks)?;
    let mut sorted = ranks.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    })
}

pub fn mean_rank(ranks: &[usize]) -> Result<f64> {
    non_empty(ranks)?;
    Ok(ranks.iter().map(|&r| r as f64).sum::<f64>() / ranks.len() as f64)
}

/// Two-pass standard deviation.
pub fn std_rank(ranks: &[usize], convention: StdConvention) -> Result<f64> {
    let mean = mean_rank(ranks)?;
    let ss: f64 = ranks
        .iter()
        .map(|&r| {
            let d = r as f64 - mean;
            d * d
        })
        .sum();
    let denom = match convention {
        StdConvention::Population => ranks.len(),
        StdConvention::Sample if ranks.len() > 1 => ranks.len() - 1,
        StdConvention::Sample => return Ok(0.0),
    };
    Ok((ss / denom as f64).sqrt())
}

pub fn evaluate(ranks: &RankVector, opts: &EvalOptions) -> Result<MetricReport> {
    let r = &ranks.ranks;
    non_empty(r)?;
    let recall_at = opts
        .recall_ks
        .iter()
        .map(|&k| Ok((k, recall_at_k(r, k)?)))
        .collect::<Result<_>>()?;
    Ok(MetricReport {
        recall_at,
        median_rank: median_rank(r)?,
        mean_rank: mean_rank(r)?,
        std_rank: std_rank(r, opts.std)?,
        query_count: r.len(),
        gallery_size: ranks.gallery_size,
    })
}

impl MetricReport {
    /// `key=value` lines; recalls to one decimal, mean and deviation to two.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "queries={}", self.query_count);
        let _ = writeln!(out, "gallery={}", self.gallery_size);
        for (k, v) in &self.recall_at {
            let _ = writeln!(out, "R@{k}={v:.1}");
        }
        let _ = writeln!(out, "MdR={:.1}", self.median_rank);
        let _ = writeln!(out, "MnR={:.2}", self.mean_rank);
        let _ = writeln!(out, "StdR={:.2}", self.std_rank);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recall_examples() {
        assert_eq!(recall_at_k(&[1, 3, 7, 12], 5).unwrap(), 50.0);
        assert_eq!(recall_at_k(&[1, 3, 7, 12], 12).unwrap(), 100.0);
        assert_eq!(recall_at_k(&[2, 2, 2], 1).unwrap(), 0.0);
        assert!(matches!(recall_at_k(&[], 1), Err(Error::EmptyRanks)));
    }

    #[test]
    fn median_examples() {
        assert_eq!(median_rank(&[1, 3, 7, 12]).unwrap(), 5.0);
        assert_eq!(median_rank(&[12, 1, 7, 3]).unwrap(), 5.0);
        assert_eq!(median_rank(&[4]).unwrap(), 4.0);
        // An even number of queries can land between two integer ranks.
        let mut ranks = vec![3usize; 500];
        ranks.extend(vec![4usize; 500]);
        assert_eq!(median_rank(&ranks).unwrap(), 3.5);
        assert!(median_rank(&[]).is_err());
    }

    #[test]
    fn mean_std_examples() {
        assert_eq!(mean_rank(&[2, 4]).unwrap(), 3.0);
        assert_eq!(std_rank(&[2, 4], StdConvention::Population).unwrap(), 1.0);
        assert!((std_rank(&[2, 4], StdConvention::Sample).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(mean_rank(&[5, 5, 5]).unwrap(), 5.0);
        assert_eq!(
            std_rank(&[5, 5, 5], StdConvention::Population).unwrap(),
            0.0
        );
        assert_eq!(std_rank(&[5], StdConvention::Sample).unwrap(), 0.0);
    }

    #[test]
    fn mean_std_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let ranks: Vec<usize> = (0..100).map(|_| rng.gen_range(1..=500)).collect();
        let mut total = 0u64;
        for &r in &ranks {
            total += r as u64;
        }
        let mean = total as f64 / 100.0;
        let mut var = 0.0;
        for &r in &ranks {
            var += (r as f64 - mean).powi(2) / 100.0;
        }
        assert!((mean_rank(&ranks).unwrap() - mean).abs() < 1e-9);
        assert!((std_rank(&ranks, StdConvention::Population).unwrap() - var.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn evaluate_examples() {
        let perfect = RankVector::from_ranks(vec![1; 8], 8).unwrap();
        let r = evaluate(&perfect, &EvalOptions::default()).unwrap();
        assert_eq!(r.recall_at[&1], 100.0);
        assert_eq!((r.median_rank, r.mean_rank, r.std_rank), (1.0, 1.0, 0.0));

        let ladder = RankVector::from_ranks((1..=10).collect(), 10).unwrap();
        let r = evaluate(&ladder, &EvalOptions::default()).unwrap();
        assert_eq!(r.recall_at[&1], 10.0);
        assert_eq!(r.recall_at[&5], 50.0);
        assert_eq!(r.recall_at[&10], 100.0);
        assert_eq!((r.median_rank, r.mean_rank), (5.5, 5.5));

        let worst = RankVector::from_ranks(vec![50; 50], 50).unwrap();
        let r = evaluate(&worst, &EvalOptions::default()).unwrap();
        assert!(r.recall_at.values().all(|&v| v == 0.0));
        assert_eq!(r.median_rank, 50.0);
    }

    #[test]
    fn text_report_layout() {
        let ladder = RankVector::from_ranks((1..=10).collect(), 10).unwrap();
        let r = evaluate(&ladder, &EvalOptions::default()).unwrap();
        assert_eq!(
            r.to_text(),
            "queries=10\ngallery=10\nR@1=10.0\nR@5=50.0\nR@10=100.0\nMdR=5.5\nMnR=5.50\nStdR=2.87\n"
        );
        let back: MetricReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    proptest! {
        #[test]
        fn recall_monotone_and_complete(ranks in prop::collection::vec(1usize..=60, 1..80)) {
            let mut prev = 0.0;
            for k in 1..=60 {
                let r = recall_at_k(&ranks, k).unwrap();
                prop_assert!(r >= prev);
                prev = r;
            }
            prop_assert_eq!(recall_at_k(&ranks, 60).unwrap(), 100.0);
        }

        #[test]
        fn std_zero_iff_constant(ranks in prop::collection::vec(1usize..=5, 1..20)) {
            let constant = ranks.iter().all(|&r| r == ranks[0]);
            prop_assert_eq!(std_rank(&ranks, StdConvention::Population).unwrap() == 0.0, constant);
        }

        #[test]
        fn improving_a_rank_never_hurts(ranks in prop::collection::vec(2usize..=60, 1..40), idx in any::<prop::sample::Index>(), by in 1usize..60) {
            let i = idx.index(ranks.len());
            let mut better = ranks.clone();
            better[i] = better[i].saturating_sub(by).max(1);
            for k in DEFAULT_RECALL_KS {
                prop_assert!(recall_at_k(&better, k).unwrap() >= recall_at_k(&ranks, k).unwrap());
            }
            prop_assert!(median_rank(&better).unwrap() <= median_rank(&ranks).unwrap());
            prop_assert!(mean_rank(&better).unwrap() <= mean_rank(&ranks).unwrap());
        }

        #[test]
        fn evaluate_permutation_invariant(ranks in prop::collection::vec(1usize..=60, 1..40)) {
            let mut rev = ranks.clone();
            rev.reverse();
            let a = evaluate(&RankVector::from_ranks(ranks, 60).unwrap(), &EvalOptions::default()).unwrap();
            let b = evaluate(&RankVector::from_ranks(rev, 60).unwrap(), &EvalOptions::default()).unwrap();
            prop_assert_eq!(a.recall_at, b.recall_at);
            prop_assert_eq!(a.median_rank, b.median_rank);
            prop_assert!((a.mean_rank - b.mean_rank).abs() < 1e-9);
            prop_assert!((a.std_rank - b.std_rank).abs() < 1e-9);
        }
    }
}
