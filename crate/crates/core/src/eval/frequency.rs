//! Target rank versus target frequency, in power-of-two frequency buckets
//! with bootstrap percentile confidence intervals.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvalReport;
use crate::corpus::Query;

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
pub const CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankStats {
    pub mean_rank: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyPoint {
    /// Inclusive lower bound.
    pub bucket_lo: usize,
    /// Exclusive upper bound.
    pub bucket_hi: usize,
    pub method: String,
    /// `None` when every query in the bucket was a miss.
    pub stats: Option<RankStats>,
    /// Queries with a ranked target.
    pub n: usize,
    pub n_missed: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrequencyAnalysis {
    pub points: Vec<FrequencyPoint>,
}

/// `[0, 1)` for frequency 0, otherwise `[2^i, 2^(i+1))` containing `freq`.
pub fn bucket_of(freq: usize) -> (usize, usize) {
    if freq == 0 {
        return (0, 1);
    }
    let i = usize::BITS - 1 - freq.leading_zeros();
    let lo = 1usize << i;
    (lo, lo.saturating_mul(2))
}

/// The RNG for one (cell, bucket) pair, so buckets can be processed in any
/// order with identical output.
pub fn bucket_rng(seed: u64, cell_index: usize, bucket_lo: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bucket_index = if bucket_lo == 0 {
        0
    } else {
        bucket_lo.trailing_zeros() as u64 + 1
    };
    rng.set_stream(((cell_index as u64) << 8) | bucket_index);
    rng
}

/// Mean with a percentile bootstrap interval. The interval is widened to
/// contain the sample mean if resampling lands entirely on one side.
pub fn bootstrap_mean_ci(values: &[f64], resamples: usize, rng: &mut impl Rng) -> RankStats {
    let n = values.len();
    let mean_rank = values.iter().sum::<f64>() / n as f64;
    let mut means = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let total: f64 = (0..n).map(|_| values[rng.gen_range(0..n)]).sum();
        means.push(total / n as f64);
    }
    means.sort_by(f64::total_cmp);
    let alpha = (1.0 - CONFIDENCE) / 2.0;
    let lo_idx = ((alpha * resamples as f64).floor() as usize).min(resamples - 1);
    let hi_idx = (((1.0 - alpha) * resamples as f64).ceil() as usize).clamp(1, resamples) - 1;
    RankStats {
        mean_rank,
        ci_low: means[lo_idx].min(mean_rank),
        ci_high: means[hi_idx].max(mean_rank),
    }
}

/// Buckets each evaluated query by its target's frequency and summarizes
/// target ranks per bucket for every cell that carries per-query ranks.
/// Misses are excluded from the mean and counted separately.
pub fn frequency_analysis(
    queries: &[Query],
    report: &EvalReport,
    frequencies: &BTreeMap<String, usize>,
    seed: u64,
) -> FrequencyAnalysis {
    let mut points = Vec::new();
    for (cell_index, cell) in report.cells.iter().enumerate() {
        if cell.ranks.len() != queries.len() {
            continue;
        }
        let mut buckets: BTreeMap<(usize, usize), (Vec<f64>, usize)> = BTreeMap::new();
        for (q, rank) in queries.iter().zip(&cell.ranks) {
            let freq = frequencies.get(&q.target).copied().unwrap_or(0);
            let slot = buckets.entry(bucket_of(freq)).or_default();
            match rank {
                Some(r) => slot.0.push(*r as f64),
                None => slot.1 += 1,
            }
        }
        for ((lo, hi), (ranks, n_missed)) in buckets {
            let stats = (!ranks.is_empty()).then(|| {
                bootstrap_mean_ci(
                    &ranks,
                    BOOTSTRAP_RESAMPLES,
                    &mut bucket_rng(seed, cell_index, lo),
                )
            });
            points.push(FrequencyPoint {
                bucket_lo: lo,
                bucket_hi: hi,
                method: cell.label(),
                stats,
                n: ranks.len(),
                n_missed,
            });
        }
    }
    FrequencyAnalysis { points }
}
