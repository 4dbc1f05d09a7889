use crate::{Error, Result};

/// A continuous distribution on `[0, 1]`.
pub trait Cdf: Sync {
    fn cdf(&self, x: f64) -> f64;
    /// Generalised inverse, `inf { x : F(x) >= u }`.
    fn quantile(&self, u: f64) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct UniformCdf;

impl Cdf for UniformCdf {
    fn cdf(&self, x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }

    fn quantile(&self, u: f64) -> f64 {
        u.clamp(0.0, 1.0)
    }
}

/// `F(x) = x^alpha`.
#[derive(Debug, Clone, Copy)]
pub struct PowerCdf {
    alpha: f64,
}

impl PowerCdf {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::arg(format!("power must be positive, got {alpha}")));
        }
        Ok(Self { alpha })
    }
}

impl Cdf for PowerCdf {
    fn cdf(&self, x: f64) -> f64 {
        x.clamp(0.0, 1.0).powf(self.alpha)
    }

    fn quantile(&self, u: f64) -> f64 {
        u.clamp(0.0, 1.0).powf(1.0 / self.alpha)
    }
}

/// Step CDF of a finite sample.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("empirical CDF needs a nonempty finite sample"));
        }
        values.sort_unstable_by(f64::total_cmp);
        Ok(Self { sorted: values })
    }

    /// Position in sorted order of the point returned by `quantile(u)`.
    pub fn rank(&self, u: f64) -> usize {
        let m = self.sorted.len();
        ((u.clamp(0.0, 1.0) * m as f64).ceil() as usize).clamp(1, m) - 1
    }
}

impl Cdf for EmpiricalCdf {
    fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    fn quantile(&self, u: f64) -> f64 {
        self.sorted[self.rank(u)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverses() {
        let p = PowerCdf::new(2.0).unwrap();
        assert!((p.cdf(p.quantile(0.3)) - 0.3).abs() < 1e-15);
        assert_eq!(UniformCdf.quantile(1.5), 1.0);
        let e = EmpiricalCdf::new(vec![0.3, 0.1, 0.2, 0.4]).unwrap();
        assert_eq!(e.cdf(0.25), 0.5);
        assert_eq!(e.quantile(0.5), 0.2);
        assert_eq!(e.quantile(0.51), 0.3);
        assert_eq!(e.quantile(0.0), 0.1);
        assert_eq!(e.quantile(1.0), 0.4);
    }
}
