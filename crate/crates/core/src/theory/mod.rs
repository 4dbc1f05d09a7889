//! Monte Carlo checks of volume-based sampling: version-space diameters of
//! thresholds and origin-anchored boxes, quantile samplers, and a
//! margin-based active learner for homogeneous halfspaces.

mod cdf;
mod cmv;
mod one_d;
mod rect;

pub use cdf::{Cdf, EmpiricalCdf, PowerCdf, UniformCdf};
pub use cmv::{cluster_margin_v, consistent_hypothesis, label_schedule, CMVConfig, CMVReport, SubsetSelector};
pub use one_d::{
    beta_estimate_1d, equivalence_check_1d, harmonic, max_gap_diameter_1d, quantile_sampler_1d, EquivalenceReport,
};
pub use rect::{
    axis_quantile_sampler, beta_estimate_rect, rectangle_diameter, version_space_box, version_space_diameter,
    VersionSpaceBox,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::rng::{self, Rng};
use crate::{Error, Result};

/// Mean version-space diameters of a structured and a uniform sampler.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaEstimate {
    pub k: usize,
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    pub mean_diam_structured: f64,
    pub mean_diam_uniform: f64,
    /// `mean_diam_structured / mean_diam_uniform`.
    pub beta_hat: f64,
    /// Standard errors of the two means, structured first.
    pub std_errors: [f64; 2],
    /// Set when `k^2 > n`, outside the regime where quantile targets are
    /// reliably matched by distinct pool points.
    pub regime_warning: bool,
    /// Trials whose structured diameter exceeded `d^2 / k` (boxes only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_violations: Option<usize>,
}

pub(crate) fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `trial` for every index in parallel, each with its own stream, and
/// returns results in trial order.
pub(crate) fn run_trials<T: Send>(trials: usize, seed: u64, trial: impl Fn(&mut Rng) -> T + Sync) -> Vec<T> {
    (0..trials)
        .into_par_iter()
        .map(|t| trial(&mut rng::stream(rng::mix(seed, t as u64), 0)))
        .collect()
}

pub(crate) fn check_trials(trials: usize, n: usize, k: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::arg("need at least one trial"));
    }
    if k == 0 || k > n {
        return Err(Error::arg(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    Ok(())
}
