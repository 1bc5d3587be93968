//! Least-squares power-law fits on log-log axes.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// `log(y) ≈ intercept + slope · log(x)` over `sample_count` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub tau_range: (f64, f64),
    pub sample_count: usize,
}

pub const MIN_FIT_SAMPLES: usize = 5;

/// Fits a power law to `(τ, modulus)` samples.
pub fn fit_decay_exponent(samples: &[(f64, f64)]) -> Result<DecayFit> {
    ensure(samples.len() >= MIN_FIT_SAMPLES, || {
        format!("need at least {MIN_FIT_SAMPLES} samples, got {}", samples.len())
    })?;
    for &(x, y) in samples {
        ensure(x > 0.0 && x.is_finite(), || format!("abscissa must be positive, got {x}"))?;
        ensure(y > 0.0 && y.is_finite(), || format!("modulus must be positive, got {y}"))?;
    }
    let n = samples.len() as f64;
    let lx: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ly: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx <= 1e-300 {
        return Err(Error::Degenerate("abscissae are not distinct".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayFit {
        slope,
        intercept,
        r_squared,
        tau_range: (lo, hi),
        sample_count: samples.len(),
    })
}

/// `count` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > 0.0 && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect();
    v[0] = lo;
    v[count - 1] = hi;
    v
}
