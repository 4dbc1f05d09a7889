use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use super::{check_trials, mean_and_se, run_trials, BetaEstimate, Cdf, UniformCdf};
use crate::rng::Rng as StreamRng;
use crate::{Error, Result};

/// `H_k = 1 + 1/2 + ... + 1/k`.
pub fn harmonic(k: usize) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum()
}

/// Largest gap in `F`-space between consecutive sample points, counting the
/// endpoints 0 and 1.
pub fn max_gap_diameter_1d(sample: &[f64], cdf: &dyn Cdf) -> Result<f64> {
    if sample.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::arg("sample must lie in [0, 1]"));
    }
    if sample.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::arg("sample must be sorted"));
    }
    let mut prev = cdf.cdf(0.0);
    let mut gap: f64 = 0.0;
    for &x in sample {
        let f = cdf.cdf(x);
        gap = gap.max(f - prev);
        prev = f;
    }
    Ok(gap.max(cdf.cdf(1.0) - prev))
}

fn nearest_sorted(sorted: &[f64], target: f64) -> usize {
    let pos = sorted.partition_point(|&v| v < target);
    if pos == 0 {
        return 0;
    }
    if pos == sorted.len() {
        return pos - 1;
    }
    if target - sorted[pos - 1] <= sorted[pos] - target {
        pos - 1
    } else {
        pos
    }
}

fn quantile_points_sorted(sorted: &[f64], k: usize, cdf: &dyn Cdf) -> Vec<f64> {
    (1..=k)
        .map(|i| sorted[nearest_sorted(sorted, cdf.quantile(i as f64 / k as f64))])
        .collect()
}

/// For `i = 1..=k`, the point of `x` closest to `F^{-1}(i/k)`, ties to the
/// smaller value. The result is sorted and may repeat points.
pub fn quantile_sampler_1d(x: &[f64], k: usize, cdf: &dyn Cdf) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::arg("quantile sampler needs a nonempty pool"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("pool values must be finite"));
    }
    let mut sorted = x.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(quantile_points_sorted(&sorted, k, cdf))
}

fn uniform_pool(n: usize, r: &mut StreamRng) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
    x.sort_unstable_by(f64::total_cmp);
    x
}

fn uniform_subset(sorted: &[f64], k: usize, r: &mut StreamRng) -> Vec<f64> {
    let mut idx = index::sample(r, sorted.len(), k).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| sorted[i]).collect()
}

/// Threshold classifiers on Uniform[0, 1]: quantile sampler versus `k`
/// uniform picks from the same pool of `n` points.
pub fn beta_estimate_1d(n: usize, k: usize, trials: usize, seed: u64) -> Result<BetaEstimate> {
    check_trials(trials, n, k)?;
    let pairs = run_trials(trials, seed, |r| {
        let x = uniform_pool(n, r);
        let s = quantile_points_sorted(&x, k, &UniformCdf);
        let u = uniform_subset(&x, k, r);
        let db = max_gap_diameter_1d(&s, &UniformCdf).expect("sorted sample in range");
        let du = max_gap_diameter_1d(&u, &UniformCdf).expect("sorted sample in range");
        (db, du)
    });
    let (b, u): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (mb, sb) = mean_and_se(&b);
    let (mu, su) = mean_and_se(&u);
    Ok(BetaEstimate {
        k,
        n,
        d: 1,
        trials,
        mean_diam_structured: mb,
        mean_diam_uniform: mu,
        beta_hat: mb / mu,
        std_errors: [sb, su],
        regime_warning: (k as f64).powi(2) > n as f64,
        bound_violations: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub mean_diam_quantile: f64,
    /// One uniformly random pool point from each nonempty bin of width `1/k`.
    pub mean_diam_cluster: f64,
    pub mean_diam_uniform: f64,
    /// `mean_diam_cluster / mean_diam_quantile`.
    pub ratio: f64,
    pub std_errors: [f64; 3],
}

/// Quantile sampling against equal-width clusters with a random
/// representative each, both compared with uniform picks.
pub fn equivalence_check_1d(n: usize, k: usize, trials: usize, seed: u64) -> Result<EquivalenceReport> {
    check_trials(trials, n, k)?;
    let triples = run_trials(trials, seed, |r| {
        let x = uniform_pool(n, r);
        let q = quantile_points_sorted(&x, k, &UniformCdf);
        let mut reps = Vec::with_capacity(k);
        let mut lo = 0;
        for j in 1..=k {
            let edge = j as f64 / k as f64;
            let hi = if j == k { x.len() } else { x.partition_point(|&v| v < edge) };
            if hi > lo {
                reps.push(x[r.random_range(lo..hi)]);
            }
            lo = hi;
        }
        let u = uniform_subset(&x, k, r);
        let d = |s: &[f64]| max_gap_diameter_1d(s, &UniformCdf).expect("sorted sample in range");
        (d(&q), d(&reps), d(&u))
    });
    let col = |f: fn(&(f64, f64, f64)) -> f64| mean_and_se(&triples.iter().map(f).collect::<Vec<_>>());
    let (mq, sq) = col(|t| t.0);
    let (mc, sc) = col(|t| t.1);
    let (mu, su) = col(|t| t.2);
    Ok(EquivalenceReport {
        n,
        k,
        trials,
        mean_diam_quantile: mq,
        mean_diam_cluster: mc,
        mean_diam_uniform: mu,
        ratio: mc / mq,
        std_errors: [sq, sc, su],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gap_examples() {
        assert_eq!(max_gap_diameter_1d(&[0.25, 0.5, 0.75], &UniformCdf).unwrap(), 0.25);
        assert_eq!(max_gap_diameter_1d(&[], &UniformCdf).unwrap(), 1.0);
        assert_eq!(max_gap_diameter_1d(&[0.9], &UniformCdf).unwrap(), 0.9);
        assert!(max_gap_diameter_1d(&[0.5, 0.2], &UniformCdf).is_err());
    }

    #[test]
    fn quantile_examples() {
        let grid = [0.25, 0.5, 0.75, 1.0];
        assert_eq!(quantile_sampler_1d(&grid, 4, &UniformCdf).unwrap(), grid);
        assert_eq!(quantile_sampler_1d(&[0.1, 0.9], 2, &UniformCdf).unwrap(), vec![0.1, 0.9]);
        assert_eq!(quantile_sampler_1d(&[0.2, 0.7, 0.4], 1, &UniformCdf).unwrap(), vec![0.7]);
        assert!(quantile_sampler_1d(&[], 1, &UniformCdf).is_err());
    }

    #[test]
    fn small_k_beta() {
        let e = beta_estimate_1d(10_000, 4, 1000, 3).unwrap();
        let scaled = e.mean_diam_structured * 4.0;
        assert!((0.95..=1.3).contains(&scaled), "{scaled}");
        assert!(e.mean_diam_structured <= e.mean_diam_uniform);
        assert!(!e.regime_warning);
        assert!(beta_estimate_1d(100, 4, 0, 3).is_err());
    }

    #[test]
    fn equivalence_trends() {
        let one = equivalence_check_1d(2000, 1, 50, 1).unwrap();
        assert!(one.mean_diam_quantile > 0.9 && one.mean_diam_cluster > 0.0);
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for k in [8, 16, 32, 64] {
            let r = equivalence_check_1d(10_000, k, 200, 7).unwrap();
            assert!(r.mean_diam_quantile < prev.0 && r.mean_diam_cluster < prev.1);
            prev = (r.mean_diam_quantile, r.mean_diam_cluster);
        }
    }

    proptest! {
        #[test]
        fn pigeonhole(mut xs in proptest::collection::vec(0.0f64..=1.0, 0..30)) {
            xs.sort_unstable_by(f64::total_cmp);
            let g = max_gap_diameter_1d(&xs, &UniformCdf).unwrap();
            prop_assert!(g >= 1.0 / (xs.len() + 1) as f64 - 1e-12);
        }
    }
}
