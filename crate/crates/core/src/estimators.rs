//! Risk estimators over a vector of per-instance losses.

use crate::hac::Clustering;
use crate::{Error, Result};

fn check_losses(losses: &[f64]) -> Result<()> {
    if losses.is_empty() {
        return Err(Error::arg("empty loss vector"));
    }
    if losses.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::Estimator("losses must be finite and nonnegative".into()));
    }
    Ok(())
}

/// Mean loss.
pub fn empirical_risk(losses: &[f64]) -> Result<f64> {
    check_losses(losses)?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// `sum_{n in sample} l_n / p_n` scaled by `1 / (N |sample|)`; unbiased for
/// the empirical risk when `sample` is drawn i.i.d. from `p`.
pub fn importance_weighted_risk(losses: &[f64], p: &[f64], sample: &[usize]) -> Result<f64> {
    check_losses(losses)?;
    if p.len() != losses.len() {
        return Err(Error::Dimension {
            expected: losses.len(),
            got: p.len(),
        });
    }
    if sample.is_empty() {
        return Err(Error::arg("empty sample"));
    }
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Estimator("sampling weights must lie on the simplex".into()));
    }
    let mut total = 0.0;
    for &n in sample {
        let pn = *p
            .get(n)
            .ok_or_else(|| Error::arg(format!("sampled index {n} out of range")))?;
        if pn <= 0.0 {
            return Err(Error::Estimator(format!("index {n} sampled with zero probability")));
        }
        total += losses[n] / pn;
    }
    Ok(total / (losses.len() * sample.len()) as f64)
}

/// `sum_k |C_k| / N * mean_{C_k} l`.
pub fn cluster_stratified_risk(losses: &[f64], clustering: &Clustering) -> Result<f64> {
    check_losses(losses)?;
    if clustering.len() != losses.len() {
        return Err(Error::Estimator(format!(
            "clustering covers {} instances, losses have {}",
            clustering.len(),
            losses.len()
        )));
    }
    let n = losses.len() as f64;
    Ok(clustering
        .clusters()
        .iter()
        .map(|c| {
            let size = c.len() as f64;
            let mean = c.iter().map(|&i| losses[i]).sum::<f64>() / size;
            size / n * mean
        })
        .sum())
}

/// `p_k` proportional to `sizes_k ^ alpha`.
pub fn cluster_sampling_pmf(sizes: &[usize], alpha: f64) -> Result<Vec<f64>> {
    if sizes.is_empty() {
        return Err(Error::arg("no cluster sizes"));
    }
    if sizes.contains(&0) {
        return Err(Error::arg("cluster sizes must be positive"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::arg(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let w: Vec<f64> = sizes.iter().map(|&s| (s as f64).powf(alpha)).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / total).collect())
}

/// Mean of the `k` largest losses.
pub fn average_top_k_loss(losses: &[f64], k: usize) -> Result<f64> {
    check_losses(losses)?;
    if k == 0 || k > losses.len() {
        return Err(Error::arg(format!("k must lie in 1..={}, got {k}", losses.len())));
    }
    let mut sorted = losses.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(sorted[..k].iter().sum::<f64>() / k as f64)
}

/// Exact variance of the single-draw importance-weighted estimate under `p`.
pub fn single_draw_variance(losses: &[f64], p: &[f64]) -> Result<f64> {
    let risk = empirical_risk(losses)?;
    let n = losses.len() as f64;
    let mut second = 0.0;
    for (&l, &pn) in losses.iter().zip(p) {
        if pn > 0.0 {
            second += pn * (l / (n * pn)).powi(2);
        } else if l > 0.0 {
            return Err(Error::Estimator("positive loss with zero probability".into()));
        }
    }
    Ok(second - risk * risk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn means() {
        assert_eq!(empirical_risk(&[1.0, 3.0]).unwrap(), 2.0);
        assert_eq!(empirical_risk(&[0.0; 3]).unwrap(), 0.0);
        assert_eq!(empirical_risk(&[5.0]).unwrap(), 5.0);
        assert!(empirical_risk(&[]).is_err());
    }

    #[test]
    fn importance_weighting() {
        let l = [1.0, 3.0, 2.0, 0.5];
        let u = [0.25; 4];
        assert_eq!(importance_weighted_risk(&l, &u, &[0, 1, 2, 3]).unwrap(), empirical_risk(&l).unwrap());
        let p = [0.25, 0.75];
        for draw in [0, 1] {
            assert_eq!(importance_weighted_risk(&[1.0, 3.0], &p, &[draw]).unwrap(), 2.0);
        }
        assert!(importance_weighted_risk(&[1.0, 3.0], &[1.0, 0.0], &[1]).is_err());
    }

    #[test]
    fn stratified_and_pmf() {
        let c = Clustering::new(1.0, vec![vec![0, 1], vec![2]], vec![]).unwrap();
        assert!((cluster_stratified_risk(&[1.0, 3.0, 2.0], &c).unwrap() - 2.0).abs() < 1e-12);
        let p = cluster_sampling_pmf(&[1, 4], 0.5).unwrap();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15 && (p[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(cluster_sampling_pmf(&[3, 9], 0.0).unwrap(), vec![0.5, 0.5]);
        let p = cluster_sampling_pmf(&[1, 4], 1.0).unwrap();
        assert!((p[0] - 0.2).abs() < 1e-15);
        assert!(cluster_sampling_pmf(&[], 1.0).is_err());
    }

    #[test]
    fn top_k() {
        let l = [3.0, 1.0, 2.0];
        assert_eq!(average_top_k_loss(&l, 1).unwrap(), 3.0);
        assert_eq!(average_top_k_loss(&l, 2).unwrap(), 2.5);
        assert_eq!(average_top_k_loss(&l, 3).unwrap(), 2.0);
        assert!(average_top_k_loss(&l, 0).is_err());
        assert!(average_top_k_loss(&l, 4).is_err());
    }

    #[test]
    fn loss_proportional_sampling_has_no_more_variance() {
        let l = [0.1, 0.4, 2.0, 0.7, 1.3];
        let total: f64 = l.iter().sum();
        let prop: Vec<f64> = l.iter().map(|v| v / total).collect();
        let uniform = [0.2; 5];
        let vp = single_draw_variance(&l, &prop).unwrap();
        let vu = single_draw_variance(&l, &uniform).unwrap();
        assert!(vp <= vu);
        assert!(vp.abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn identities(losses in proptest::collection::vec(0.0f64..10.0, 1..40), labels in proptest::collection::vec(0usize..5, 40)) {
            let n = losses.len();
            let mut groups = vec![Vec::new(); 5];
            for i in 0..n {
                groups[labels[i]].push(i);
            }
            let c = Clustering::new(1.0, groups, vec![]).unwrap();
            let r = empirical_risk(&losses).unwrap();
            prop_assert!((cluster_stratified_risk(&losses, &c).unwrap() - r).abs() <= 1e-12 * r.max(1.0));
            let mut prev = f64::INFINITY;
            for k in 1..=n {
                let t = average_top_k_loss(&losses, k).unwrap();
                prop_assert!(t <= prev + 1e-12);
                prop_assert!(t >= r - 1e-12);
                prev = t;
            }
            prop_assert!((prev - r).abs() <= 1e-12 * r.max(1.0));
        }
    }
}
