use std::collections::BinaryHeap;

use rand::Rng;
use rayon::prelude::*;

use super::{average_update, count_invocation, within_threshold, Candidate, Clustering, Merge};
use crate::data::{euclidean_distance, matrix::distance, Matrix};
use crate::rng;
use crate::{Error, Result};

/// Grid resolution used by [`tune_epsilon`].
pub const EPSILON_GRID_STEPS: usize = 64;
const GRID_SAMPLE_PAIRS: usize = 10_000;
const GRID_SEED: u64 = 0x00A1_C0DE;

/// Mean pairwise Euclidean distance between the rows indexed by `a` and `b`.
pub fn average_linkage(a: &[usize], b: &[usize], points: &Matrix) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::arg("average linkage of an empty cluster"));
    }
    if let Some(&i) = a.iter().chain(b).find(|&&i| i >= points.rows()) {
        return Err(Error::arg(format!("row {i} outside {} points", points.rows())));
    }
    if a.iter().any(|i| b.contains(i)) {
        return Err(Error::arg("average linkage of overlapping clusters"));
    }
    let mut total = 0.0;
    for &i in a {
        for &j in b {
            total += euclidean_distance(points.row(i), points.row(j))?;
        }
    }
    Ok(total / (a.len() * b.len()) as f64)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::arg(format!("epsilon must be >= 0, got {epsilon}")));
    }
    Ok(())
}

/// Upper-triangular pairwise distance table.
struct Condensed {
    n: usize,
    values: Vec<f64>,
}

impl Condensed {
    fn build(points: &Matrix) -> Self {
        let n = points.rows();
        let mut values = vec![0.0; n * n.saturating_sub(1) / 2];
        let mut rows: Vec<(usize, &mut [f64])> = Vec::with_capacity(n);
        let mut rest = values.as_mut_slice();
        for i in 0..n.saturating_sub(1) {
            let (head, tail) = rest.split_at_mut(n - 1 - i);
            rows.push((i, head));
            rest = tail;
        }
        rows.into_par_iter().for_each(|(i, row)| {
            let xi = points.row(i);
            for (off, slot) in row.iter_mut().enumerate() {
                *slot = distance(xi, points.row(i + 1 + off));
            }
        });
        Self { n, values }
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.index(i, j)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.index(i, j);
        self.values[k] = v;
    }
}

/// Runs the merge loop on all pairs and returns the partition and merge log.
fn agglomerate(points: &Matrix, epsilon: f64) -> (Vec<Vec<usize>>, Vec<Merge>) {
    let n = points.rows();
    let mut dist = Condensed::build(points);
    let mut heap: BinaryHeap<Candidate> = {
        let mut init = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let d = dist.get(i, j);
                if within_threshold(d, epsilon) {
                    init.push(Candidate::new(d, i, j));
                }
            }
        }
        BinaryHeap::from(init)
    };

    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut alive = vec![true; n];
    let mut live: Vec<usize> = (0..n).collect();
    let mut log = Vec::new();

    while let Some(cand) = heap.pop() {
        let (a, b) = (cand.a as usize, cand.b as usize);
        if !alive[a] || !alive[b] || dist.get(a, b) != cand.distance {
            continue;
        }
        log.push(Merge {
            a,
            b,
            distance: cand.distance,
        });
        let (wa, wb) = (members[a].len() as f64, members[b].len() as f64);
        alive[b] = false;
        if let Some(pos) = live.iter().position(|&c| c == b) {
            live.swap_remove(pos);
        }
        for &c in &live {
            if c == a {
                continue;
            }
            let d = average_update(dist.get(a, c), wa, dist.get(b, c), wb);
            dist.set(a, c, d);
            if within_threshold(d, epsilon) {
                heap.push(Candidate::new(d, a, c));
            }
        }
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
    }

    let clusters = members.into_iter().filter(|m| !m.is_empty()).collect();
    (clusters, log)
}

/// Average-linkage HAC: merge the closest pair while its linkage is `<= epsilon`.
pub fn hac_exact(points: &Matrix, epsilon: f64) -> Result<Clustering> {
    if points.rows() == 0 {
        return Err(Error::arg("cannot cluster zero points"));
    }
    check_epsilon(epsilon)?;
    count_invocation();
    let (clusters, log) = agglomerate(points, epsilon);
    Clustering::new(epsilon, clusters, log)
}

/// Replays the prefix of a monotone merge log whose distances are `<= epsilon`.
fn cut(n: usize, log: &[Merge], epsilon: f64) -> Result<Clustering> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let prefix: Vec<Merge> = log.iter().take_while(|m| within_threshold(m.distance, epsilon)).copied().collect();
    for m in &prefix {
        let ra = find(&mut parent, m.a);
        let rb = find(&mut parent, m.b);
        parent[rb.max(ra)] = ra.min(rb);
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        groups[r].push(i);
    }
    Clustering::new(epsilon, groups, prefix)
}

/// Geometric grid between the 1st and 99th percentile of sampled pairwise distances.
fn epsilon_grid(points: &Matrix) -> Vec<f64> {
    let n = points.rows();
    if n < 2 {
        return vec![0.0];
    }
    let all_pairs = n * (n - 1) / 2;
    let mut sample: Vec<f64> = if all_pairs <= GRID_SAMPLE_PAIRS {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| distance(points.row(i), points.row(j)))
            .collect()
    } else {
        let mut r = rng::stream(GRID_SEED, 0);
        (0..GRID_SAMPLE_PAIRS)
            .map(|_| {
                let i = r.random_range(0..n);
                let mut j = r.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                distance(points.row(i), points.row(j))
            })
            .collect()
    };
    sample.sort_unstable_by(f64::total_cmp);
    let pct = |q: f64| sample[((q * (sample.len() - 1) as f64).round() as usize).min(sample.len() - 1)];
    let hi = pct(0.99);
    if hi <= 0.0 {
        return vec![0.0];
    }
    let lo = pct(0.01).max(hi * 1e-6);
    let steps = EPSILON_GRID_STEPS - 1;
    (0..EPSILON_GRID_STEPS)
        .map(|t| lo * (hi / lo).powf(t as f64 / steps as f64))
        .collect()
}

/// Smallest grid epsilon whose clustering has mean size `>= target_mean_size`,
/// together with that clustering. Runs HAC once, at the top of the grid, and
/// cuts the merge log for every other grid value.
pub fn hac_to_target_size(points: &Matrix, target_mean_size: f64) -> Result<(f64, Clustering)> {
    let n = points.rows();
    if n == 0 {
        return Err(Error::arg("cannot cluster zero points"));
    }
    if target_mean_size.is_nan() || target_mean_size < 1.0 {
        return Err(Error::arg(format!(
            "target mean cluster size must be >= 1, got {target_mean_size}"
        )));
    }
    let grid = epsilon_grid(points);
    let top = *grid.last().unwrap();
    count_invocation();
    let (_, log) = agglomerate(points, top);
    for &eps in &grid {
        let merges = log.iter().take_while(|m| within_threshold(m.distance, eps)).count();
        let clusters = n - merges;
        if n as f64 / clusters as f64 >= target_mean_size {
            return Ok((eps, cut(n, &log, eps)?));
        }
    }
    Err(Error::Tuning(format!(
        "mean cluster size {target_mean_size} not reached on the grid up to epsilon {top}"
    )))
}

pub fn tune_epsilon(points: &Matrix, target_mean_size: f64) -> Result<f64> {
    hac_to_target_size(points, target_mean_size).map(|(eps, _)| eps)
}
