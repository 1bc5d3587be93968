//! Decay checks for the transform of the oscillating symbol: the small-τ
//! exponent with its bounded branch, and the dyadic `E₂` tail and `E₃` scaling.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::fit::{fit_decay_exponent, log_space, DecayFit};
use crate::quadrature::oscillatory::{
    fourier_cosine_mu_derivative, fourier_cosine_mu_dyadic, QuadratureSpec,
};
use crate::symbols::{CutoffProfile, SymbolParams};

/// Largest τ for which the small-τ bound is asserted.
pub const SMALL_TAU_LIMIT: f64 = 200.0;
pub const SLOPE_TOLERANCE: f64 = 0.2;
pub const BOUNDED_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformSample {
    pub tau: f64,
    pub value: Complex64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayBranch {
    /// `|∂^L μ̂(τ)| ~ τ^e` with `e < 0`; the fitted slope is compared with `e`.
    Slope,
    /// `e >= 0`: only boundedness near the origin is asserted.
    Bounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallTauReport {
    pub alpha: f64,
    pub beta: f64,
    pub order: u32,
    pub predicted_exponent: f64,
    pub branch: DecayBranch,
    pub fitted: Option<DecayFit>,
    /// `sup |∂^L μ̂| / |∂^L μ̂(τ_hi)|` over the samples.
    pub sup_ratio: f64,
    pub samples: Vec<TransformSample>,
    pub pass: bool,
}

/// `-L/(1-α) + (α - 2 + 2β)/(2(1-α))`.
pub fn small_tau_exponent(alpha: f64, beta: f64, order: u32) -> f64 {
    -(order as f64) / (1.0 - alpha) + (alpha - 2.0 + 2.0 * beta) / (2.0 * (1.0 - alpha))
}

fn sample_transform(
    taus: &[f64],
    eval: impl Fn(f64) -> Result<crate::quadrature::QuadValue> + Sync,
) -> Result<Vec<TransformSample>> {
    taus.par_iter()
        .map(|&tau| {
            eval(tau).map(|q| TransformSample {
                tau,
                value: q.value,
                error: q.error,
            })
        })
        .collect()
}

/// Samples `|∂^L μ̂(τ)|` at `count` log-spaced points of `[τ_lo, τ_hi]` and
/// checks the small-τ law: slope within 0.2 of the predicted exponent when it
/// is negative, otherwise `sup <= 10 × |value at τ_hi|`.
pub fn verify_small_tau_decay(
    params: &SymbolParams,
    profile: &CutoffProfile,
    order: u32,
    tau_lo: f64,
    tau_hi: f64,
    count: usize,
    spec: &QuadratureSpec,
) -> Result<SmallTauReport> {
    ensure(tau_lo > 0.0 && tau_lo < tau_hi && tau_hi <= SMALL_TAU_LIMIT, || {
        format!("need 0 < tau_lo < tau_hi <= {SMALL_TAU_LIMIT}, got [{tau_lo}, {tau_hi}]")
    })?;
    ensure(count >= 5, || format!("need at least 5 samples, got {count}"))?;
    let predicted = small_tau_exponent(params.alpha(), params.beta(), order);
    let taus = log_space(tau_lo, tau_hi, count);
    let samples = sample_transform(&taus, |tau| {
        fourier_cosine_mu_derivative(params, profile, tau, order, spec)
    })?;
    let points: Vec<(f64, f64)> = samples.iter().map(|s| (s.tau, s.value.norm())).collect();
    let fitted = fit_decay_exponent(&points).ok();
    let sup = points.iter().map(|p| p.1).fold(0.0, f64::max);
    let at_hi = points[count - 1].1;
    let sup_ratio = sup / at_hi;
    let (branch, pass) = if predicted < 0.0 {
        let ok = fitted.is_some_and(|f| (f.slope - predicted).abs() <= SLOPE_TOLERANCE);
        (DecayBranch::Slope, ok)
    } else {
        (DecayBranch::Bounded, sup_ratio <= BOUNDED_RATIO)
    };
    Ok(SmallTauReport {
        alpha: params.alpha(),
        beta: params.beta(),
        order,
        predicted_exponent: predicted,
        branch,
        fitted,
        sup_ratio,
        samples,
        pass,
    })
}

/// Required decay order of the dyadic transform in `|2^k τ|` on `E₂`.
pub const E2_MIN_ORDER: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct E2TailReport {
    pub k: u32,
    pub c2: f64,
    /// Lower edge `c₂ 2^{k(α-1)}` of `E₂`.
    pub tau_start: f64,
    pub samples: Vec<TransformSample>,
    /// Fit of `|μ̂_k|` against `2^k τ` over samples above the quadrature floor.
    pub fitted: DecayFit,
    pub decay_order: f64,
    pub pass: bool,
}

/// Samples `|μ̂_k(τ)|` for `τ` from the lower edge of `E₂` up to `span` times
/// it and fits the decay in `2^k τ`. Samples whose modulus is not at least
/// 100 times their error estimate are excluded from the fit.
pub fn dyadic_e2_tail_check(
    params: &SymbolParams,
    profile: &CutoffProfile,
    k: u32,
    c2: f64,
    span: f64,
    count: usize,
    spec: &QuadratureSpec,
) -> Result<E2TailReport> {
    ensure(c2 > 0.0, || format!("c2 must be positive, got {c2}"))?;
    ensure(span > 1.0, || format!("span must exceed 1, got {span}"))?;
    let scale = 2f64.powi(k as i32);
    let tau_start = c2 * scale.powf(params.alpha() - 1.0);
    let taus = log_space(tau_start, tau_start * span, count.max(5));
    let samples = sample_transform(&taus, |tau| fourier_cosine_mu_dyadic(params, profile, k, tau, 0, spec))?;
    let points: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.value.norm() > 100.0 * s.error)
        .map(|s| (scale * s.tau, s.value.norm()))
        .collect();
    let fitted = fit_decay_exponent(&points)?;
    let decay_order = -fitted.slope;
    Ok(E2TailReport {
        k,
        c2,
        tau_start,
        samples,
        fitted,
        decay_order,
        pass: decay_order >= E2_MIN_ORDER,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct E3Report {
    pub ks: Vec<u32>,
    pub c1: f64,
    pub c2: f64,
    /// Per `k`: `sup |μ̂_k(τ)| / 2^{k(1-β-α/2)}` over `τ ∈ E₃`.
    pub normalized_sup: Vec<f64>,
    /// Per `k`: the τ attaining the sup.
    pub argmax_tau: Vec<f64>,
    pub ratio: f64,
    pub pass: bool,
}

/// For each `k`, the sup of `|μ̂_k|` over `τ = c·2^{k(α-1)}` with `c` on a
/// log grid of `[c₁/2, 2c₂]` (the whole of `E₃`), normalized by
/// `2^{k(1-β-α/2)}`. Passes when the normalized values agree within a
/// factor 10 across `k`.
pub fn dyadic_e3_check(
    params: &SymbolParams,
    profile: &CutoffProfile,
    ks: &[u32],
    c1: f64,
    c2: f64,
    count: usize,
    spec: &QuadratureSpec,
) -> Result<E3Report> {
    ensure(0.0 < c1 && c1 < c2, || format!("need 0 < c1 < c2, got c1={c1}, c2={c2}"))?;
    ensure(!ks.is_empty(), || "need at least one scale".to_string())?;
    let (alpha, beta) = (params.alpha(), params.beta());
    let cs = log_space(0.5 * c1, 2.0 * c2, count.max(5));
    let mut normalized_sup = Vec::with_capacity(ks.len());
    let mut argmax_tau = Vec::with_capacity(ks.len());
    for &k in ks {
        let kf = k as f64;
        let taus: Vec<f64> = cs.iter().map(|c| c * 2f64.powf(kf * (alpha - 1.0))).collect();
        let samples = sample_transform(&taus, |tau| fourier_cosine_mu_dyadic(params, profile, k, tau, 0, spec))?;
        let best = samples
            .iter()
            .max_by(|a, b| a.value.norm().total_cmp(&b.value.norm()))
            .expect("nonempty");
        normalized_sup.push(best.value.norm() / 2f64.powf(kf * (1.0 - beta - alpha / 2.0)));
        argmax_tau.push(best.tau);
    }
    let max = normalized_sup.iter().copied().fold(0.0, f64::max);
    let min = normalized_sup.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = max / min;
    Ok(E3Report {
        ks: ks.to_vec(),
        c1,
        c2,
        normalized_sup,
        argmax_tau,
        ratio,
        pass: ratio <= BOUNDED_RATIO,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_formula() {
        assert!((small_tau_exponent(0.5, 0.5, 0) + 0.5).abs() < 1e-15);
        assert!((small_tau_exponent(0.5, 0.5, 1) + 2.5).abs() < 1e-15);
        assert!((small_tau_exponent(0.25, 0.5, 1) + 1.0 / 0.75 - (-0.75) / 1.5).abs() < 1e-15);
        assert!((small_tau_exponent(0.25, 0.5, 1) + 1.833_333_333_333_333).abs() < 1e-12);
        assert!((small_tau_exponent(0.5, 3.0, 0) - 4.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_windows() {
        let prm = SymbolParams::new(0.5, 0.5).unwrap();
        let p = CutoffProfile::default();
        let s = QuadratureSpec::default();
        assert!(verify_small_tau_decay(&prm, &p, 0, 1.0, 300.0, 25, &s).is_err());
        assert!(verify_small_tau_decay(&prm, &p, 0, 0.1, 0.01, 25, &s).is_err());
        assert!(dyadic_e3_check(&prm, &p, &[4], 2.0, 1.0, 10, &s).is_err());
    }
}
