//! Scalar symbols: the cutoffs `Φ`, `Ψ = 1 - Φ`, the dyadic partition
//! `φ, Ψ₀`, the oscillating symbol and its dyadic pieces, the Γ-region
//! classifier, the Riesz-mean symbol and the combination remainder.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::quadrature::gauss_kronrod::{integrate, Tolerance};

/// The exponents `(α, β)` of the oscillating symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolParams {
    alpha: f64,
    beta: f64,
}

impl SymbolParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        ensure(alpha > 0.0 && alpha < 1.0, || {
            format!("alpha must lie in (0, 1), got {alpha}")
        })?;
        ensure(beta > 0.0 && beta.is_finite(), || {
            format!("beta must be positive, got {beta}")
        })?;
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffKind {
    /// Polynomial smoothstep with `order` vanishing derivatives at both ends.
    SmoothstepPoly,
    /// `e^{-1/x}`-based C^∞ transition.
    SmoothExp,
}

/// Shape of the monotone transition used by `Φ` on `1 < |λ| < 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub kind: CutoffKind,
    pub order: u32,
}

impl Default for CutoffProfile {
    fn default() -> Self {
        Self {
            kind: CutoffKind::SmoothstepPoly,
            order: 7,
        }
    }
}

impl CutoffProfile {
    pub fn new(kind: CutoffKind, order: u32) -> Result<Self> {
        ensure(order >= 3, || format!("cutoff order must be >= 3, got {order}"))?;
        ensure(order <= 30, || format!("cutoff order {order} too large"))?;
        Ok(Self { kind, order })
    }

    pub fn smooth_exp() -> Self {
        Self {
            kind: CutoffKind::SmoothExp,
            order: 3,
        }
    }

    /// Monotone transition from 0 at `x <= 0` to 1 at `x >= 1`.
    pub fn transition(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        match self.kind {
            CutoffKind::SmoothstepPoly => {
                if x > 0.5 {
                    1.0 - smoothstep(self.order, 1.0 - x)
                } else {
                    smoothstep(self.order, x)
                }
            }
            CutoffKind::SmoothExp => {
                let h = |s: f64| (-1.0 / s).exp();
                let a = h(x);
                a / (a + h(1.0 - x))
            }
        }
    }

    /// `Φ(λ)`: 0 for `|λ| <= 1`, 1 for `|λ| >= 2`.
    pub fn phi(&self, lambda: f64) -> f64 {
        self.transition(lambda.abs() - 1.0)
    }
}

/// `x^{m+1} Σ_{j=0}^{m} C(m+j, j) (1-x)^j`, the regularized incomplete beta
/// `I_x(m+1, m+1)`.
fn smoothstep(m: u32, x: f64) -> f64 {
    let y = 1.0 - x;
    let mut binom = 1.0;
    let mut power = 1.0;
    let mut sum = 0.0;
    for j in 0..=m {
        if j > 0 {
            binom *= (m + j) as f64 / j as f64;
            power *= y;
        }
        sum += binom * power;
    }
    x.powi(m as i32 + 1) * sum
}

pub fn phi_cutoff(profile: &CutoffProfile, lambda: f64) -> f64 {
    profile.phi(lambda)
}

/// `Ψ = 1 - Φ`.
pub fn psi_complement(profile: &CutoffProfile, lambda: f64) -> f64 {
    1.0 - profile.phi(lambda)
}

/// The dyadic bump `φ(u) = Φ(2u) - Φ(u)`, supported on `1/2 <= |u| <= 2`.
pub fn dyadic_bump(profile: &CutoffProfile, lambda: f64) -> f64 {
    let u = lambda.abs();
    profile.phi(2.0 * u) - profile.phi(u)
}

/// `Ψ₀(u) = 1 - Φ(2u)`: 1 on `|u| <= 1/2`, 0 on `|u| >= 1`.
pub fn psi0(profile: &CutoffProfile, lambda: f64) -> f64 {
    1.0 - profile.phi(2.0 * lambda.abs())
}

/// `|Σ_{k=0}^{K} φ(|u|/2^k) + Ψ₀(|u|) - 1|`.
pub fn partition_residual(profile: &CutoffProfile, u: f64, levels: u32) -> f64 {
    let u = u.abs();
    let mut sum = psi0(profile, u);
    for k in 0..=levels {
        sum += dyadic_bump(profile, u / 2f64.powi(k as i32));
    }
    (sum - 1.0).abs()
}

/// `μ_{α,β}(λ, t) = e^{i(tλ)^α} (tλ)^{-β} Φ(tλ)`, zero whenever `tλ <= 1`.
pub fn mu_symbol(params: &SymbolParams, profile: &CutoffProfile, t: f64, lambda: f64) -> Result<Complex64> {
    ensure(t > 0.0, || format!("time must be positive, got {t}"))?;
    Ok(mu_unchecked(params, profile, t * lambda.abs()))
}

pub(crate) fn mu_unchecked(params: &SymbolParams, profile: &CutoffProfile, s: f64) -> Complex64 {
    if s <= 1.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::from_polar(s.powf(-params.beta) * profile.phi(s), s.powf(params.alpha))
}

/// `μ_{α,β,k}(λ) = e^{i|λ|^α} |λ|^{-β} φ(|λ|/2^k)`.
pub fn mu_dyadic(params: &SymbolParams, profile: &CutoffProfile, k: u32, lambda: f64) -> Complex64 {
    let l = lambda.abs();
    let bump = dyadic_bump(profile, l / 2f64.powi(k as i32));
    if bump == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::from_polar(l.powf(-params.beta) * bump, l.powf(params.alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GammaRegion {
    E1,
    E2,
    E3,
    Overlap,
}

/// Membership of `τ` in the three regions `E_{1,k}, E_{2,k}, E_{3,k}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaMembership {
    pub e1: bool,
    pub e2: bool,
    pub e3: bool,
}

impl GammaMembership {
    pub fn region(&self) -> GammaRegion {
        match (self.e1, self.e2, self.e3) {
            (true, false, false) => GammaRegion::E1,
            (false, true, false) => GammaRegion::E2,
            (false, false, true) => GammaRegion::E3,
            _ => GammaRegion::Overlap,
        }
    }
}

/// Classifies `τ` against
/// `E₁ = {|τ| <= c₁ s}`, `E₂ = {|τ| >= c₂ s}`, `E₃ = {c₁ s/2 <= |τ| <= 2 c₂ s}`
/// with `s = 2^{k(α-1)}`.
pub fn gamma_region(tau: f64, k: u32, alpha: f64, c1: f64, c2: f64) -> Result<GammaMembership> {
    ensure(c1 > 0.0 && c1 < c2, || format!("need 0 < c1 < c2, got c1={c1}, c2={c2}"))?;
    let s = 2f64.powf(k as f64 * (alpha - 1.0));
    let a = tau.abs();
    Ok(GammaMembership {
        e1: a <= c1 * s,
        e2: a >= c2 * s,
        e3: a >= 0.5 * c1 * s && a <= 2.0 * c2 * s,
    })
}

const RIESZ_TOL: f64 = 1e-12;
const RIESZ_MAX_PANELS: usize = 1_000_000;

/// `k ∫₀¹ (1-r)^{k-1} e^{izr} dr`, the per-mode Riesz-mean factor with
/// `z = t|λ|^α`. The exponent `α` enters only through `z`.
pub fn riesz_mean_symbol(k: f64, alpha: f64, z: f64) -> Result<Complex64> {
    ensure(k > 0.0 && k.is_finite(), || format!("Riesz order must be positive, got {k}"))?;
    ensure(alpha > 0.0 && alpha < 1.0, || format!("alpha must lie in (0, 1), got {alpha}"))?;
    ensure(z >= 0.0 && z.is_finite(), || format!("z must be nonnegative, got {z}"))?;
    if z == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let tol = Tolerance::new(RIESZ_TOL, 1e-13);
    beta_weighted_integral(k, z, &|_| 1.0, 0.0, 1.0, tol)
}

/// The Riesz-mean symbol split as `origin + endpoint` with a smooth partition
/// `χ₀ + χ₁ = 1` switching on `1/4 <= r <= 3/4`. The endpoint part carries the
/// oscillating factor `e^{iz}` and decays like `Γ(k+1) z^{-k}`; the origin part
/// is non-oscillatory and decays like `k/z`.
pub fn riesz_mean_symbol_parts(profile: &CutoffProfile, k: f64, z: f64) -> Result<(Complex64, Complex64)> {
    ensure(k > 0.0 && k.is_finite(), || format!("Riesz order must be positive, got {k}"))?;
    ensure(z >= 0.0 && z.is_finite(), || format!("z must be nonnegative, got {z}"))?;
    let chi1 = |r: f64| profile.transition(2.0 * (r - 0.25));
    let tol = Tolerance::new(1e-16, 1e-11);
    let origin = beta_weighted_integral(k, z, &|r| 1.0 - chi1(r), 0.0, 0.75, tol)?;
    let endpoint = beta_weighted_integral(k, z, &chi1, 0.25, 1.0, tol)?;
    Ok((origin, endpoint))
}

/// `k ∫_lo^hi (1-r)^{k-1} cut(r) e^{izr} dr` for `0 <= lo < hi <= 1`. The part
/// above `r = 1/2` is written in `v = 1 - r`, and for `k < 1` further in
/// `w = v^k`, which removes the endpoint singularity.
fn beta_weighted_integral(
    k: f64,
    z: f64,
    cut: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: Tolerance,
) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    let split = 0.5f64.clamp(lo, hi);
    let tol = tol.scaled(0.5);
    if split > lo {
        let n = panel_count(z * (split - lo));
        let pts = linspace(lo, split, n);
        let q = integrate(
            |r| Complex64::from_polar(k * (1.0 - r).powf(k - 1.0) * cut(r), z * r),
            &pts,
            tol,
            RIESZ_MAX_PANELS,
        )?;
        total += q.value;
    }
    if hi > split {
        let (v_lo, v_hi) = (1.0 - hi, 1.0 - split);
        if k >= 1.0 {
            let n = panel_count(z * (v_hi - v_lo));
            let pts = linspace(v_lo, v_hi, n);
            let q = integrate(
                |v| Complex64::from_polar(k * v.powf(k - 1.0) * cut(1.0 - v), z * (1.0 - v)),
                &pts,
                tol,
                RIESZ_MAX_PANELS,
            )?;
            total += q.value;
        } else {
            let (w_lo, w_hi) = (v_lo.powf(k), v_hi.powf(k));
            // Phase derivative in w is at most z v^{1-k} / k.
            let n = panel_count(z * (w_hi - w_lo) * v_hi.powf(1.0 - k) / k);
            let pts = linspace(w_lo, w_hi, n);
            let inv = 1.0 / k;
            let q = integrate(
                |w| {
                    let v = w.powf(inv);
                    Complex64::from_polar(cut(1.0 - v), z * (1.0 - v))
                },
                &pts,
                tol,
                RIESZ_MAX_PANELS,
            )?;
            total += q.value;
        }
    }
    Ok(total)
}

fn panel_count(phase_span: f64) -> usize {
    (phase_span.abs() / PI).ceil() as usize + 1
}

pub(crate) fn linspace(a: f64, b: f64, panels: usize) -> Vec<f64> {
    let panels = panels.max(1);
    let mut pts: Vec<f64> = (0..=panels)
        .map(|i| a + (b - a) * i as f64 / panels as f64)
        .collect();
    pts[panels] = b;
    pts
}

/// `E(w) = Σ_k c_k e^{ikw} - 1`, computed as
/// `Σ_k c_k (e^{ikw} - 1) + (Σ_k c_k - 1)` to avoid cancellation at small `w`.
#[allow(non_snake_case)]
pub fn taylor_remainder_E(coeffs: &[f64], w: f64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for (i, c) in coeffs.iter().enumerate() {
        let theta = (i + 1) as f64 * w;
        let half = (0.5 * theta).sin();
        let expm1 = Complex64::new(-2.0 * half * half, theta.sin());
        sum += expm1 * *c;
    }
    sum + Complex64::new(coeffs.iter().sum::<f64>() - 1.0, 0.0)
}

/// Validates a Riesz order, used by operators taking `k` as a parameter.
pub(crate) fn check_riesz_order(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("Riesz order must be positive, got {k}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profiles() -> [CutoffProfile; 2] {
        [CutoffProfile::default(), CutoffProfile::smooth_exp()]
    }

    #[test]
    fn phi_support_and_evenness() {
        for p in profiles() {
            assert_eq!(phi_cutoff(&p, 0.5), 0.0);
            assert_eq!(phi_cutoff(&p, 1.0), 0.0);
            assert_eq!(phi_cutoff(&p, 3.0), 1.0);
            assert_eq!(phi_cutoff(&p, -3.0), 1.0);
            assert_eq!(phi_cutoff(&p, -1.3), phi_cutoff(&p, 1.3));
            let mut prev = 0.0;
            for i in 0..=100 {
                let v = phi_cutoff(&p, 1.0 + i as f64 / 100.0);
                assert!(v >= prev && (0.0..=1.0).contains(&v));
                prev = v;
            }
            assert_eq!(psi_complement(&p, 0.0), 1.0);
            assert_eq!(psi_complement(&p, 3.0), 0.0);
            assert_eq!(phi_cutoff(&p, 1.5) + psi_complement(&p, 1.5), 1.0);
        }
    }

    #[test]
    fn smoothstep_matches_derivatives_at_edges() {
        // The order-m smoothstep is flat to order m at 0: S(x) = O(x^{m+1}).
        let p = CutoffProfile::default();
        let small = p.transition(1e-3);
        assert!(small < 1e-3f64.powi(8) * 7000.0 && small > 0.0);
        assert!((p.transition(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bump_and_psi0() {
        for p in profiles() {
            assert_eq!(dyadic_bump(&p, 0.25), 0.0);
            assert_eq!(dyadic_bump(&p, 4.0), 0.0);
            let at_one = dyadic_bump(&p, 1.0);
            assert!(at_one > 0.0 && at_one <= 1.0);
            assert_eq!(psi0(&p, 0.3), 1.0);
            assert_eq!(psi0(&p, 1.5), 0.0);
            assert_eq!(psi0(&p, -0.3), 1.0);
            assert!((0..200).all(|i| dyadic_bump(&p, i as f64 * 0.02) >= 0.0));
        }
    }

    #[test]
    fn partition_examples() {
        for p in profiles() {
            assert_eq!(partition_residual(&p, 0.0, 3), 0.0);
            assert!(partition_residual(&p, 10.0, 10) <= 1e-12);
            assert!(partition_residual(&p, 0.75, 2) <= 1e-12);
            // Truncation is reported, not hidden.
            assert!(partition_residual(&p, 1000.0, 3) > 0.5);
        }
    }

    #[test]
    fn mu_symbol_examples() {
        let p = CutoffProfile::default();
        let s = SymbolParams::new(0.5, 1.0).unwrap();
        assert_eq!(mu_symbol(&s, &p, 0.8, 1.0).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(mu_symbol(&s, &p, 1.0, 0.0).unwrap(), Complex64::new(0.0, 0.0));
        let v = mu_symbol(&s, &p, 2.0, 2.0).unwrap();
        assert!((v.norm() - 0.25).abs() < 1e-15);
        assert!((v.arg() - 2.0).abs() < 1e-14);
        let s2 = SymbolParams::new(0.5, 2.0).unwrap();
        let v = mu_symbol(&s2, &p, 1.0, 9.0).unwrap();
        assert!((v.norm() - 1.0 / 81.0).abs() < 1e-16);
        assert!((v.arg() - 3.0).abs() < 1e-14);
        assert!(mu_symbol(&s, &p, 0.0, 1.0).is_err());
        assert!(SymbolParams::new(1.0, 1.0).is_err());
        assert!(SymbolParams::new(0.5, 0.0).is_err());
    }

    #[test]
    fn mu_dyadic_examples() {
        let p = CutoffProfile::default();
        let s = SymbolParams::new(0.5, 1.0).unwrap();
        assert_eq!(mu_dyadic(&s, &p, 0, 4.0), Complex64::new(0.0, 0.0));
        let expect = Complex64::from_polar(0.25 * dyadic_bump(&p, 1.0), 2.0);
        assert!((mu_dyadic(&s, &p, 2, 4.0) - expect).norm() < 1e-15);
        for lambda in [2.0, 3.3, 17.0, 1000.0, 123_456.7] {
            let total: Complex64 = (0..=40).map(|k| mu_dyadic(&s, &p, k, lambda)).sum();
            let direct = Complex64::from_polar(1.0 / lambda, lambda.sqrt());
            assert!((total - direct).norm() <= 1e-12, "lambda = {lambda}");
        }
    }

    #[test]
    fn gamma_region_examples() {
        let (alpha, c1, c2, k) = (0.5, 0.125, 8.0, 4u32);
        let s = 2f64.powf(k as f64 * (alpha - 1.0));
        assert_eq!(gamma_region(0.0, k, alpha, c1, c2).unwrap().region(), GammaRegion::E1);
        assert_eq!(gamma_region(10.0 * c2 * s, k, alpha, c1, c2).unwrap().region(), GammaRegion::E2);
        let edge = gamma_region(c1 * s / 2.0, k, alpha, c1, c2).unwrap();
        assert!(edge.e3 && edge.e1);
        assert_eq!(edge.region(), GammaRegion::Overlap);
        assert_eq!(gamma_region(s, k, alpha, c1, c2).unwrap().region(), GammaRegion::E3);
        assert!(gamma_region(1.0, k, alpha, 2.0, 1.0).is_err());
    }

    #[test]
    fn riesz_symbol_examples() {
        for k in [0.5, 1.0, 2.0, 3.7] {
            assert_eq!(riesz_mean_symbol(k, 0.5, 0.0).unwrap(), Complex64::new(1.0, 0.0));
        }
        let v = riesz_mean_symbol(1.0, 0.5, PI).unwrap();
        let closed = (Complex64::from_polar(1.0, PI) - 1.0) / Complex64::new(0.0, PI);
        assert!((v - closed).norm() < 1e-12);
        assert!((v.norm() - 2.0 / PI).abs() < 1e-12);
        let v = riesz_mean_symbol(1.0, 0.5, 0.01).unwrap();
        assert!(((v - 1.0).norm() - 0.005).abs() < 0.05 * 0.005);
        assert!(riesz_mean_symbol(0.0, 0.5, 1.0).is_err());
        assert!(riesz_mean_symbol(-1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn riesz_symbol_matches_closed_form_k2() {
        // 2∫(1-r)e^{izr} = 2i/z + 2/z² - 2e^{iz}/z².
        for z in [0.3, 5.0, 77.0, 1234.5] {
            let i = Complex64::new(0.0, 1.0);
            let closed = 2.0 * i / z + 2.0 / (z * z) - 2.0 * (i * z).exp() / (z * z);
            let v = riesz_mean_symbol(2.0, 0.3, z).unwrap();
            assert!((v - closed).norm() < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn riesz_parts_sum_to_symbol() {
        let p = CutoffProfile::default();
        for k in [0.5, 1.0, 2.0] {
            for z in [0.0, 3.0, 250.0] {
                let (a, b) = riesz_mean_symbol_parts(&p, k, z).unwrap();
                let s = riesz_mean_symbol(k, 0.5, z).unwrap();
                assert!((a + b - s).norm() < 1e-11, "k={k} z={z}");
            }
        }
    }

    #[test]
    fn taylor_remainder_examples() {
        assert_eq!(taylor_remainder_E(&[2.0, -1.0], 0.0), Complex64::new(0.0, 0.0));
        assert_eq!(taylor_remainder_E(&[3.0, -3.0, 1.0], 0.0), Complex64::new(0.0, 0.0));
        let e = taylor_remainder_E(&[2.0, -1.0], 0.01).norm();
        assert!((e - 1e-4).abs() < 0.05 * 1e-4);
    }
}
