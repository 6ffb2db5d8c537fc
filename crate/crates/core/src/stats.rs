//! Monte Carlo tallies with confidence intervals.
//!
//! Moments use the normal approximation; probabilities use Clopper-Pearson,
//! which stays valid at very low error counts.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Mean of a scalar Monte Carlo sample with a 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub half_width_95: f64,
    pub samples: u64,
}

impl MomentEstimate {
    /// Normal-approximation interval from raw observations.
    pub fn from_samples(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "moment estimate needs samples");
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        MomentEstimate {
            mean,
            half_width_95: Z_95 * (var / n).sqrt(),
            samples: values.len() as u64,
        }
    }

    /// Rescales the estimated quantity by a positive constant.
    pub fn scaled(&self, factor: f64) -> Self {
        MomentEstimate {
            mean: self.mean * factor,
            half_width_95: self.half_width_95 * factor.abs(),
            samples: self.samples,
        }
    }

    pub fn lo(&self) -> f64 {
        self.mean - self.half_width_95
    }

    pub fn hi(&self) -> f64 {
        self.mean + self.half_width_95
    }

    /// True when the two 95% intervals intersect.
    pub fn overlaps(&self, other: &MomentEstimate) -> bool {
        self.lo() <= other.hi() && other.lo() <= self.hi()
    }
}

/// Binomial proportion with an exact 95% Clopper-Pearson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRateEstimate {
    pub errors: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl ErrorRateEstimate {
    pub fn from_counts(errors: u64, trials: u64) -> Self {
        assert!(trials >= 1, "error rate needs at least one trial");
        assert!(errors <= trials);
        let (ci_lo, ci_hi) = clopper_pearson(errors, trials, 0.05);
        ErrorRateEstimate {
            errors,
            trials,
            p_hat: errors as f64 / trials as f64,
            ci_lo,
            ci_hi,
        }
    }

    pub fn overlaps(&self, other: &ErrorRateEstimate) -> bool {
        self.ci_lo <= other.ci_hi && other.ci_lo <= self.ci_hi
    }
}

/// Exact binomial interval at confidence 1 - alpha.
pub fn clopper_pearson(successes: u64, trials: u64, alpha: f64) -> (f64, f64) {
    let x = successes as f64;
    let n = trials as f64;
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(x, n - x + 1.0)
            .expect("valid beta parameters")
            .inverse_cdf(alpha / 2.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        Beta::new(x + 1.0, n - x)
            .expect("valid beta parameters")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}
