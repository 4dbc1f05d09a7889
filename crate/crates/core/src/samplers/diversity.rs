use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use super::check_budget;
use crate::data::{squared_distance, Matrix};
use crate::rng;
use crate::{Error, Result};

const PARALLEL_MIN: usize = 4096;

fn check_rows(indices: &[usize], m: &Matrix) -> Result<()> {
    match indices.iter().find(|&&i| i >= m.rows()) {
        Some(&bad) => Err(Error::arg(format!("index {bad} out of range for {} rows", m.rows()))),
        None => Ok(()),
    }
}

fn relax(dist: &mut [f64], pool: &[usize], embeddings: &Matrix, center: &[f64]) {
    let update = |(d, &i): (&mut f64, &usize)| {
        let v = squared_distance(embeddings.row(i), center);
        if v < *d {
            *d = v;
        }
    };
    if pool.len() >= PARALLEL_MIN {
        dist.par_iter_mut().zip(pool.par_iter()).for_each(update);
    } else {
        dist.iter_mut().zip(pool.iter()).for_each(update);
    }
}

/// Farthest-first traversal: repeatedly picks the pool point farthest from
/// every center chosen so far. Starts from `centers`, or from the smallest
/// pool index when there are none. Ties go to the smaller index.
pub fn kcenter_greedy(embeddings: &Matrix, centers: &[usize], pool: &[usize], k: usize) -> Result<Vec<usize>> {
    check_budget(k, pool.len())?;
    check_rows(centers, embeddings)?;
    check_rows(pool, embeddings)?;
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut pool = pool.to_vec();
    pool.sort_unstable();
    pool.dedup();
    let mut dist = vec![f64::INFINITY; pool.len()];
    for &c in centers {
        relax(&mut dist, &pool, embeddings, embeddings.row(c));
    }
    let mut chosen = vec![false; pool.len()];
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let mut best: Option<usize> = None;
        for (j, &d) in dist.iter().enumerate() {
            if !chosen[j] && best.is_none_or(|b| d > dist[b]) {
                best = Some(j);
            }
        }
        let j = best.expect("pool larger than k");
        chosen[j] = true;
        out.push(pool[j]);
        let center = embeddings.row(pool[j]).to_vec();
        relax(&mut dist, &pool, embeddings, &center);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KmeansppSelection {
    /// Row indices in selection order.
    pub indices: Vec<usize>,
    /// Set when the squared-distance mass vanished and a uniform fallback was used.
    pub degenerate: bool,
}

/// k-means++ seeding over the rows of `vectors`.
pub fn kmeanspp_select(vectors: &Matrix, k: usize, seed: u64) -> Result<KmeansppSelection> {
    let n = vectors.rows();
    check_budget(k, n)?;
    let mut r = rng::stream(seed, 0);
    let mut indices = Vec::with_capacity(k);
    let mut degenerate = false;
    if k == 0 {
        return Ok(KmeansppSelection { indices, degenerate });
    }
    let all: Vec<usize> = (0..n).collect();
    let mut chosen = vec![false; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut next = r.random_range(0..n);
    loop {
        chosen[next] = true;
        indices.push(next);
        if indices.len() == k {
            break;
        }
        let center = vectors.row(next).to_vec();
        relax(&mut dist, &all, vectors, &center);
        let total: f64 = dist.iter().zip(&chosen).filter(|(_, &c)| !c).map(|(d, _)| d).sum();
        next = if total > 0.0 {
            let target = r.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in dist.iter().enumerate() {
                if chosen[i] || d <= 0.0 {
                    continue;
                }
                acc += d;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive mass has a support point")
        } else {
            degenerate = true;
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[r.random_range(0..free.len())]
        };
    }
    Ok(KmeansppSelection { indices, degenerate })
}

/// `k` distinct pool entries drawn uniformly without replacement.
pub fn random_select(pool: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
    check_budget(k, pool.len())?;
    let mut r = rng::stream(seed, 0);
    Ok(index::sample(&mut r, pool.len(), k).into_iter().map(|j| pool[j]).collect())
}
