//! Margin-based active learning of a homogeneous halfspace under an
//! isotropic Gaussian, with a pluggable subset selector inside the margin
//! band.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::EmpiricalCdf;
use crate::rng::{self, Rng as StreamRng};
use crate::{Error, Result};

const DRAW_BUDGET: usize = 1_000_000;
const EVAL_DRAWS: usize = 100_000;
const PERCEPTRON_UPDATES: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsetSelector {
    /// `k` band points uniformly without replacement.
    Uniform,
    /// Band points at the empirical `j/k` quantiles of `w.x`.
    QuantileCluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct CMVConfig {
    /// Band width scale: `b_i = c1 / 2^i`.
    pub c1: f64,
    /// Label count scale.
    pub c2: f64,
    /// Rounds are `ceil(log2(1 / (c epsilon)))`.
    pub c: f64,
    /// Oversampling factor of the band pool over the labeled subset.
    pub gamma: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub d: usize,
    pub seed: u64,
    /// Efficiency factor of the selector in the label schedule.
    pub beta: f64,
}

impl Default for CMVConfig {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c: 0.2,
            gamma: 10.0,
            epsilon: 0.05,
            delta: 0.1,
            d: 2,
            seed: 0,
            beta: 1.0,
        }
    }
}

impl CMVConfig {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.25) {
            return Err(Error::arg(format!("epsilon must lie in (0, 1/4), got {}", self.epsilon)));
        }
        if !(self.gamma > 1.0) {
            return Err(Error::arg(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::arg(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.d == 0 || !(self.c1 > 0.0 && self.c2 > 0.0 && self.c > 0.0 && self.beta > 0.0) {
            return Err(Error::arg("d, c1, c2, c and beta must be positive"));
        }
        if self.c * self.epsilon >= 1.0 {
            return Err(Error::arg("c * epsilon must be below 1"));
        }
        Ok(())
    }

    pub fn rounds(&self) -> usize {
        (1.0 / (self.c * self.epsilon)).log2().ceil() as usize
    }
}

/// Labels requested in each round: `ceil(2 beta c2 (d + ln((1 + n - i) / delta)))`
/// for `i = 0..n`.
pub fn label_schedule(config: &CMVConfig) -> Result<Vec<usize>> {
    config.validate()?;
    let n = config.rounds();
    Ok((0..n)
        .map(|i| {
            let t = config.d as f64 + ((1 + n - i) as f64 / config.delta).ln();
            (2.0 * config.beta * config.c2 * t).ceil() as usize
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CMVReport {
    /// Unit-norm final hypothesis.
    pub hypothesis: Vec<f64>,
    pub labels_used: usize,
    pub schedule: Vec<usize>,
    /// Disagreement with the target on fresh draws.
    pub final_error: f64,
    /// Whether every round found a hypothesis consistent with all labels.
    pub consistent: bool,
    pub draws: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(w: &mut [f64]) {
    let norm = dot(w, w).sqrt();
    if norm > 0.0 {
        w.iter_mut().for_each(|v| *v /= norm);
    }
}

fn gaussian(d: usize, r: &mut StreamRng) -> Vec<f64> {
    (0..d).map(|_| r.sample(StandardNormal)).collect()
}

fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Perceptron cycled over `(points, labels)` from `init` until no mistakes
/// remain or the update cap is hit. Points are normalised so the step size
/// does not depend on their length. Returns the unit-norm weights and
/// whether they are consistent.
pub fn consistent_hypothesis(points: &[Vec<f64>], labels: &[f64], init: &[f64], max_updates: usize) -> (Vec<f64>, bool) {
    let mut w = init.to_vec();
    let unit: Vec<Vec<f64>> = points
        .iter()
        .map(|x| {
            let mut u = x.clone();
            normalize(&mut u);
            u
        })
        .collect();
    let mut updates = 0;
    loop {
        let mut clean = true;
        for (x, &y) in unit.iter().zip(labels) {
            if y * dot(&w, x) <= 0.0 {
                if updates == max_updates {
                    normalize(&mut w);
                    return (w, false);
                }
                w.iter_mut().zip(x).for_each(|(wi, xi)| *wi += y * xi);
                updates += 1;
                clean = false;
            }
        }
        if clean {
            normalize(&mut w);
            return (w, true);
        }
    }
}

fn select(band: &[Vec<f64>], w: &[f64], k: usize, selector: SubsetSelector, r: &mut StreamRng) -> Vec<usize> {
    match selector {
        SubsetSelector::Uniform => index::sample(r, band.len(), k).into_vec(),
        SubsetSelector::QuantileCluster => {
            let proj: Vec<f64> = band.iter().map(|x| dot(w, x)).collect();
            let mut order: Vec<usize> = (0..band.len()).collect();
            order.sort_unstable_by(|&a, &b| proj[a].total_cmp(&proj[b]).then(a.cmp(&b)));
            let cdf = EmpiricalCdf::new(proj).expect("finite projections");
            (1..=k).map(|j| order[cdf.rank(j as f64 / k as f64)]).collect()
        }
    }
}

/// Runs the margin-based learner against a hidden target `w*` drawn from the
/// seed. Round 0 labels Gaussian draws; round `i >= 1` rejection-samples
/// `ceil(gamma k_i)` draws with `|w.x| < c1 / 2^i`, labels `k_i` of them
/// through `selector`, and refits on every label so far.
pub fn cluster_margin_v(config: &CMVConfig, selector: SubsetSelector) -> Result<CMVReport> {
    let schedule = label_schedule(config)?;
    let d = config.d;
    let mut target = gaussian(d, &mut rng::stream(config.seed, 0));
    normalize(&mut target);
    let mut w = vec![0.0; d];
    w[0] = 1.0;
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    let mut consistent = true;
    let mut draws = 0;
    for (i, &k) in schedule.iter().enumerate() {
        let mut r = rng::stream(config.seed, 1 + i as u64);
        let chosen = if i == 0 {
            draws += k;
            (0..k).map(|_| gaussian(d, &mut r)).collect::<Vec<_>>()
        } else {
            let width = config.c1 / 2f64.powi(i as i32);
            let want = (config.gamma * k as f64).ceil() as usize;
            let mut band = Vec::with_capacity(want);
            let mut round_draws = 0;
            while band.len() < want {
                if round_draws == DRAW_BUDGET {
                    return Err(Error::Budget(format!(
                        "round {i}: {} of {want} band points after {DRAW_BUDGET} draws at width {width}",
                        band.len()
                    )));
                }
                let x = gaussian(d, &mut r);
                round_draws += 1;
                if dot(&w, &x).abs() < width {
                    band.push(x);
                }
            }
            draws += round_draws;
            select(&band, &w, k, selector, &mut r).into_iter().map(|j| band[j].clone()).collect()
        };
        for x in chosen {
            labels.push(sign(dot(&target, &x)));
            points.push(x);
        }
        let (next, ok) = consistent_hypothesis(&points, &labels, &w, PERCEPTRON_UPDATES);
        consistent &= ok;
        w = next;
    }
    let mut r = rng::stream(config.seed, u64::MAX);
    let wrong = (0..EVAL_DRAWS)
        .filter(|_| {
            let x = gaussian(d, &mut r);
            sign(dot(&w, &x)) != sign(dot(&target, &x))
        })
        .count();
    Ok(CMVReport {
        hypothesis: w,
        labels_used: labels.len(),
        schedule,
        final_error: wrong as f64 / EVAL_DRAWS as f64,
        consistent,
        draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_matches_closed_form() {
        let cfg = CMVConfig::default();
        assert_eq!(cfg.rounds(), 7);
        let s = label_schedule(&cfg).unwrap();
        assert_eq!(s.len(), 7);
        assert_eq!(s[0], (2.0 * (2.0 + (8.0f64 / 0.1).ln())).ceil() as usize);
        assert_eq!(*s.last().unwrap(), (2.0 * (2.0 + (2.0f64 / 0.1).ln())).ceil() as usize);
        let report = cluster_margin_v(&cfg, SubsetSelector::Uniform).unwrap();
        assert_eq!(report.labels_used, s.iter().sum::<usize>());
        assert!((dot(&report.hypothesis, &report.hypothesis) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_constants() {
        let mut cfg = CMVConfig {
            epsilon: 0.5,
            ..CMVConfig::default()
        };
        assert!(cluster_margin_v(&cfg, SubsetSelector::Uniform).is_err());
        cfg.epsilon = 0.05;
        cfg.gamma = 1.0;
        assert!(cluster_margin_v(&cfg, SubsetSelector::Uniform).is_err());
    }

    #[test]
    fn thin_band_exhausts_budget() {
        let cfg = CMVConfig {
            c1: 1e-7,
            ..CMVConfig::default()
        };
        assert!(matches!(cluster_margin_v(&cfg, SubsetSelector::Uniform), Err(Error::Budget(_))));
    }

    #[test]
    fn perceptron_separates_realizable_data() {
        let mut r = rng::stream(3, 0);
        let target = [0.6, -0.8];
        let pts: Vec<Vec<f64>> = (0..200).map(|_| gaussian(2, &mut r)).collect();
        let ys: Vec<f64> = pts.iter().map(|x| sign(dot(&target, x))).collect();
        let (w, ok) = consistent_hypothesis(&pts, &ys, &[1.0, 0.0], PERCEPTRON_UPDATES);
        assert!(ok);
        assert!(pts.iter().zip(&ys).all(|(x, &y)| y * dot(&w, x) > 0.0));
    }

    #[test]
    fn quantile_selector_is_deterministic_and_distinct() {
        let cfg = CMVConfig {
            d: 1,
            seed: 4,
            ..CMVConfig::default()
        };
        let a = cluster_margin_v(&cfg, SubsetSelector::QuantileCluster).unwrap();
        let b = cluster_margin_v(&cfg, SubsetSelector::QuantileCluster).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn one_dimension_learns_with_either_selector() {
        for seed in 0..5 {
            for selector in [SubsetSelector::Uniform, SubsetSelector::QuantileCluster] {
                let cfg = CMVConfig { d: 1, seed, ..CMVConfig::default() };
                let report = cluster_margin_v(&cfg, selector).unwrap();
                assert!(report.consistent);
                assert!(report.final_error <= cfg.epsilon, "{selector:?} seed {seed}: {}", report.final_error);
            }
        }
    }
}
