use rand::seq::SliceRandom;

use super::{
    check_budget, kcenter_greedy, kmeanspp_select, random_select, round_robin_select, select_lowest_margin,
};
use crate::data::Matrix;
use crate::rng;
use crate::Result;

/// A selector that can be run on an arbitrary subset of the pool.
pub trait BatchSampler {
    fn select(&self, pool: &[usize], k: usize, seed: u64) -> Result<Vec<usize>>;
}

pub struct RandomSampler;

impl BatchSampler for RandomSampler {
    fn select(&self, pool: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
        random_select(pool, k, seed)
    }
}

/// Lowest-margin selection over precomputed per-index scores.
pub struct MarginSampler<'a> {
    pub scores: &'a [f64],
}

impl BatchSampler for MarginSampler<'_> {
    fn select(&self, pool: &[usize], k: usize, _seed: u64) -> Result<Vec<usize>> {
        select_lowest_margin(pool, self.scores, k)
    }
}

/// Farthest-first traversal from the labeled centers.
pub struct KCenterSampler<'a> {
    pub embeddings: &'a Matrix,
    pub centers: &'a [usize],
}

impl BatchSampler for KCenterSampler<'_> {
    fn select(&self, pool: &[usize], k: usize, _seed: u64) -> Result<Vec<usize>> {
        kcenter_greedy(self.embeddings, self.centers, pool, k)
    }
}

/// k-means++ seeding over gradient embeddings; row `i` belongs to index `i`.
pub struct BadgeSampler<'a> {
    pub gradients: &'a Matrix,
}

impl BatchSampler for BadgeSampler<'_> {
    fn select(&self, pool: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
        let vectors = self.gradients.select_rows(pool);
        let pick = kmeanspp_select(&vectors, k, seed)?;
        Ok(pick.indices.into_iter().map(|j| pool[j]).collect())
    }
}

/// Lowest-margin candidates followed by cluster round-robin.
///
/// The candidate count scales with the requested batch as
/// `ceil(k * margin_batch / target_batch)`, so a full-pool call with
/// `k = target_batch` uses exactly `margin_batch` candidates.
pub struct ClusterMarginSampler<'a> {
    pub scores: &'a [f64],
    /// Cluster id of every index.
    pub cluster_of: &'a [usize],
    pub margin_batch: usize,
    pub target_batch: usize,
}

impl BatchSampler for ClusterMarginSampler<'_> {
    fn select(&self, pool: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
        check_budget(k, pool.len())?;
        let k_m = (k * self.margin_batch).div_ceil(self.target_batch.max(1)).clamp(k, pool.len());
        let m = select_lowest_margin(pool, self.scores, k_m)?;
        round_robin_select(&m, |i| self.cluster_of[i], k, seed)
    }
}

/// Splits a seeded shuffle of `pool` into `m` near-equal parts and runs
/// `sampler` on each with quota `floor(k / m)`, the remainder going to the
/// first parts.
pub fn partitioned_select(
    sampler: &dyn BatchSampler,
    pool: &[usize],
    k: usize,
    m: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    check_budget(k, pool.len())?;
    if m <= 1 {
        return sampler.select(pool, k, seed);
    }
    let m = m.min(pool.len().max(1));
    let mut shuffled = pool.to_vec();
    shuffled.shuffle(&mut rng::stream(seed, 1));
    let (base, extra) = (pool.len() / m, pool.len() % m);
    let (quota, quota_extra) = (k / m, k % m);
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for j in 0..m {
        let len = base + usize::from(j < extra);
        let part = &shuffled[start..start + len];
        start += len;
        let q = quota + usize::from(j < quota_extra);
        if q > 0 {
            out.extend(sampler.select(part, q, rng::mix(seed, j as u64 + 1))?);
        }
    }
    Ok(out)
}
