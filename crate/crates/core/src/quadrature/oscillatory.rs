//! Fourier cosine transform of the oscillating symbol and its τ-derivatives.
//!
//! The transform
//!
//! ```text
//! μ̂^{(L)}(τ) = 2 ∫₀^∞ λ^{L-β} W(λ) e^{iσλ^α} cos(τλ + Lπ/2) dλ
//! ```
//!
//! is split into the two exponentials `e^{±iτλ}`. Each piece
//! `∫ λ^p W(λ) e^{i(σλ^α + ωλ)} dλ` is integrated on the real axis across the
//! cutoff band and any stationary point, and the remaining tail is rotated
//! into the complex plane where the integrand decays exponentially:
//!
//! * `ω ≠ 0`: the vertical ray `λ = R + i·sign(ω)·s`. When `σ` and `ω` have
//!   opposite signs, `R` is pushed past the stationary point so that
//!   `α R^{α-1} <= |ω|/4` and the `λ^α` term cannot outgrow `e^{-|ω|s}`.
//! * `ω = 0`: the substitution `u = λ^α` followed by the ray `u = R^α + iσs`.
//!
//! Both rays come with an explicit bound on the neglected far tail, which is
//! added to the reported error. For `p >= -1` the tail integral converges only
//! in the Abel sense; the rotated value is that limit.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::quadrature::gauss_kronrod::{integrate, QuadValue, Tolerance};
use crate::symbols::{CutoffProfile, SymbolParams};

/// Highest τ-derivative order supported.
pub const MAX_DERIVATIVE_ORDER: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tolerance: f64,
    pub rel_tolerance: f64,
    pub max_panels: usize,
    /// Point where the tail leaves the real axis. `None` picks the smallest
    /// admissible point; a smaller override is rejected.
    pub upper_cutoff_lambda: Option<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tolerance: 1e-10,
            rel_tolerance: 1e-10,
            max_panels: 2_000_000,
            upper_cutoff_lambda: None,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerance(abs_tolerance: f64, rel_tolerance: f64) -> Self {
        Self {
            abs_tolerance,
            rel_tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.abs_tolerance > 0.0 && self.abs_tolerance.is_finite(), || {
            format!("abs_tolerance must be positive, got {}", self.abs_tolerance)
        })?;
        ensure(self.rel_tolerance >= 0.0 && self.rel_tolerance < 1.0, || {
            format!("rel_tolerance must lie in [0, 1), got {}", self.rel_tolerance)
        })?;
        ensure(self.max_panels >= 1, || "max_panels must be at least 1".to_string())?;
        if let Some(r) = self.upper_cutoff_lambda {
            ensure(r > 0.0 && r.is_finite(), || {
                format!("upper_cutoff_lambda must be positive, got {r}")
            })?;
        }
        Ok(())
    }

    pub fn tolerance(&self) -> Tolerance {
        Tolerance::new(self.abs_tolerance, self.rel_tolerance)
    }
}

/// Sign of the phase `e^{±iλ^α}`; `Negative` yields the complex conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseSign {
    Positive,
    Negative,
}

impl PhaseSign {
    pub fn value(self) -> f64 {
        match self {
            PhaseSign::Positive => 1.0,
            PhaseSign::Negative => -1.0,
        }
    }
}

/// Frequency window `W(λ) = Φ̃(λ/a) (1 - Φ̃(λ/b))` where `Φ̃` is the cutoff
/// restricted to `λ >= 0`. With no high edge this is `Φ(λ/a)`; with `b = 2a`
/// it is the dyadic bump `φ(λ/b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolWindow {
    pub low_edge: f64,
    pub high_edge: Option<f64>,
}

impl SymbolWindow {
    pub fn new(low_edge: f64, high_edge: Option<f64>) -> Result<Self> {
        ensure(low_edge > 0.0 && low_edge.is_finite(), || {
            format!("window low edge must be positive, got {low_edge}")
        })?;
        if let Some(b) = high_edge {
            ensure(b >= 2.0 * low_edge && b.is_finite(), || {
                format!("window high edge {b} must be at least twice the low edge {low_edge}")
            })?;
        }
        Ok(Self { low_edge, high_edge })
    }

    /// The full symbol, window `Φ(λ)`.
    pub fn full() -> Self {
        Self {
            low_edge: 1.0,
            high_edge: None,
        }
    }

    /// Window `Φ(λ/a)`.
    pub fn high_pass(low_edge: f64) -> Result<Self> {
        Self::new(low_edge, None)
    }

    /// The bump `φ(λ/2^k)`, supported on `[2^{k-1}, 2^{k+1}]`.
    pub fn dyadic(k: u32) -> Self {
        let b = 2f64.powi(k as i32);
        Self {
            low_edge: 0.5 * b,
            high_edge: Some(b),
        }
    }

    pub fn weight(&self, profile: &CutoffProfile, lambda: f64) -> f64 {
        let l = lambda.abs();
        let low = profile.transition(l / self.low_edge - 1.0);
        match self.high_edge {
            Some(b) => low * (1.0 - profile.transition(l / b - 1.0)),
            None => low,
        }
    }

    fn edges(&self) -> Vec<f64> {
        let mut e = vec![self.low_edge, 2.0 * self.low_edge];
        if let Some(b) = self.high_edge {
            e.extend([b, 2.0 * b]);
        }
        e
    }
}

/// `μ̂_{α,β}(τ) = 2∫₀^∞ e^{iλ^α} λ^{-β} Φ(λ) cos(τλ) dλ`.
pub fn fourier_cosine_mu(
    params: &SymbolParams,
    profile: &CutoffProfile,
    tau: f64,
    spec: &QuadratureSpec,
) -> Result<QuadValue> {
    fourier_cosine_windowed(params, profile, SymbolWindow::full(), tau, 0, PhaseSign::Positive, spec)
}

/// `∂_τ^L μ̂_{α,β}(τ)` for `L <= 4`.
pub fn fourier_cosine_mu_derivative(
    params: &SymbolParams,
    profile: &CutoffProfile,
    tau: f64,
    order: u32,
    spec: &QuadratureSpec,
) -> Result<QuadValue> {
    fourier_cosine_windowed(params, profile, SymbolWindow::full(), tau, order, PhaseSign::Positive, spec)
}

/// `∂_τ^L μ̂_{α,β,k}(τ)`, the transform of the dyadic piece at scale `2^k`.
pub fn fourier_cosine_mu_dyadic(
    params: &SymbolParams,
    profile: &CutoffProfile,
    k: u32,
    tau: f64,
    order: u32,
    spec: &QuadratureSpec,
) -> Result<QuadValue> {
    fourier_cosine_windowed(params, profile, SymbolWindow::dyadic(k), tau, order, PhaseSign::Positive, spec)
}

/// `2 ∫₀^∞ λ^{L-β} W(λ) e^{iσλ^α} cos(τλ + Lπ/2) dλ` for an arbitrary window.
pub fn fourier_cosine_windowed(
    params: &SymbolParams,
    profile: &CutoffProfile,
    window: SymbolWindow,
    tau: f64,
    order: u32,
    sign: PhaseSign,
    spec: &QuadratureSpec,
) -> Result<QuadValue> {
    spec.validate()?;
    if order > MAX_DERIVATIVE_ORDER {
        return Err(Error::Unsupported(format!(
            "derivative order {order} exceeds {MAX_DERIVATIVE_ORDER}"
        )));
    }
    ensure(tau.is_finite(), || format!("tau must be finite, got {tau}"))?;
    let piece = Piece {
        alpha: params.alpha(),
        sigma: sign.value(),
        power: order as f64 - params.beta(),
        profile,
        window,
        rotation: spec.upper_cutoff_lambda,
    };
    let tol = spec.tolerance();
    let il = Complex64::i().powu(order);
    if tau == 0.0 {
        if order % 2 == 1 {
            return Ok(QuadValue::zero());
        }
        let j = piece.integral(0.0, tol, spec.max_panels)?;
        return Ok(j.scale(il * 2.0));
    }
    let plus = piece.integral(tau, tol.scaled(0.5), spec.max_panels)?;
    let budget = spec.max_panels.saturating_sub(plus.panels).max(1);
    let minus = piece.integral(-tau, tol.scaled(0.5), budget)?;
    Ok(plus.scale(il).combine(minus.scale(il.conj())))
}

struct Piece<'a> {
    alpha: f64,
    sigma: f64,
    power: f64,
    profile: &'a CutoffProfile,
    window: SymbolWindow,
    rotation: Option<f64>,
}

impl Piece<'_> {
    /// `∫ λ^p W(λ) e^{i(σλ^α + ωλ)} dλ` over the support of the window.
    fn integral(&self, omega: f64, tol: Tolerance, budget: usize) -> Result<QuadValue> {
        let a = self.window.low_edge;
        if let Some(b) = self.window.high_edge {
            return self.real_segment(omega, a, 2.0 * b, tol, budget);
        }
        let smooth_end = 2.0 * a;
        let r_min = if omega == 0.0 || self.sigma * omega > 0.0 {
            smooth_end
        } else {
            smooth_end.max((4.0 * self.alpha / omega.abs()).powf(1.0 / (1.0 - self.alpha)))
        };
        let r = match self.rotation {
            Some(r) if r < r_min => {
                return Err(Error::domain(format!(
                    "rotation point {r} lies below the admissible minimum {r_min}"
                )))
            }
            Some(r) => r,
            None => r_min,
        };
        let real = self.real_segment(omega, a, r, tol.scaled(0.5), budget)?;
        let budget = budget.saturating_sub(real.panels).max(1);
        let tail = if omega == 0.0 {
            self.substituted_ray(r, tol.scaled(0.5), budget)?
        } else {
            self.vertical_ray(omega, r, tol.scaled(0.5), budget)?
        };
        Ok(real.combine(tail))
    }

    fn real_segment(&self, omega: f64, lo: f64, hi: f64, tol: Tolerance, budget: usize) -> Result<QuadValue> {
        if hi <= lo {
            return Ok(QuadValue::zero());
        }
        let pts = phase_breakpoints(lo, hi, self.alpha, omega, &self.window.edges(), budget)?;
        let (p, alpha, sigma) = (self.power, self.alpha, self.sigma);
        integrate(
            |x| {
                let w = self.window.weight(self.profile, x);
                if w == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                Complex64::from_polar(x.powf(p) * w, sigma * x.powf(alpha) + omega * x)
            },
            &pts,
            tol,
            budget,
        )
    }

    /// `∫_R^∞` along `λ = R + i d s`, `d = sign(ω)`.
    fn vertical_ray(&self, omega: f64, r: f64, tol: Tolerance, budget: usize) -> Result<QuadValue> {
        let (p, alpha, sigma) = (self.power, self.alpha, self.sigma);
        let d = omega.signum();
        // Guaranteed decay rate of |g| on the ray; see the module comment.
        let kappa = if sigma * omega > 0.0 { omega.abs() } else { 0.75 * omega.abs() };
        let i = Complex64::i();
        let g = |s: f64| {
            let lam = Complex64::new(r, d * s);
            i * d * lam.powf(p) * (i * (sigma * lam.powf(alpha) + omega * lam)).exp()
        };
        // For s >= 2p/κ, log|g| decreases at rate >= κ/2.
        let tail_bound = |s: f64| g(s).norm() * 2.0 / kappa;
        let step = 0.5 * r.min(1.0 / kappa);
        let end = ray_end(step.max(2.0 * p.max(0.0) / kappa), &tail_bound, 0.05 * tol.abs)?;
        let pts = geometric_breakpoints(step, end);
        let mut q = integrate(g, &pts, tol.scaled(0.9), budget)?;
        q.error += tail_bound(end);
        Ok(q)
    }

    /// `∫_R^∞` via `u = λ^α`, then `u = R^α + iσs`.
    fn substituted_ray(&self, r: f64, tol: Tolerance, budget: usize) -> Result<QuadValue> {
        let (alpha, sigma) = (self.alpha, self.sigma);
        let q_exp = (self.power + 1.0) / alpha - 1.0;
        let u0 = r.powf(alpha);
        let i = Complex64::i();
        let prefactor = i * sigma / alpha * Complex64::from_polar(1.0, sigma * u0);
        let h = |s: f64| Complex64::new(u0, sigma * s).powf(q_exp) * (-s).exp();
        let tail_bound = |s: f64| 2.0 * h(s).norm();
        let inner_tol = tol.scaled(alpha);
        let step = 0.5 * u0.min(1.0);
        let end = ray_end(step.max(2.0 * q_exp.max(0.0)), &tail_bound, 0.05 * inner_tol.abs)?;
        let pts = geometric_breakpoints(step, end);
        let mut q = integrate(h, &pts, inner_tol.scaled(0.9), budget)?;
        q.error += tail_bound(end);
        Ok(q.scale(prefactor))
    }
}

/// Doubles `s` from `start` until `bound(s) <= target`.
fn ray_end(start: f64, bound: &dyn Fn(f64) -> f64, target: f64) -> Result<f64> {
    let mut s = start;
    for _ in 0..200 {
        let b = bound(s);
        if b <= target {
            return Ok(s);
        }
        if !b.is_finite() {
            break;
        }
        s *= 2.0;
    }
    Err(Error::Convergence {
        value: Complex64::new(f64::NAN, f64::NAN),
        error_estimate: bound(s),
        panels: 0,
    })
}

fn geometric_breakpoints(step: f64, end: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    let mut s = step;
    while s < end {
        pts.push(s);
        s *= 2.0;
    }
    pts.push(end);
    pts
}

/// Breakpoints on `[lo, hi]` such that the phase `σx^α + ωx` turns by at
/// most `π` per panel and no panel is wider than its left endpoint.
fn phase_breakpoints(lo: f64, hi: f64, alpha: f64, omega: f64, edges: &[f64], budget: usize) -> Result<Vec<f64>> {
    let mut pts = vec![lo];
    let mut x = lo;
    while x < hi {
        let rate = alpha * x.powf(alpha - 1.0) + omega.abs();
        x = (x + x.min(PI / rate)).min(hi);
        pts.push(x);
        if pts.len() > budget {
            return Err(Error::Convergence {
                value: Complex64::new(f64::NAN, f64::NAN),
                error_estimate: f64::INFINITY,
                panels: pts.len(),
            });
        }
    }
    pts.extend(edges.iter().copied().filter(|&e| e > lo && e < hi));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::mu_unchecked;

    fn params(alpha: f64, beta: f64) -> SymbolParams {
        SymbolParams::new(alpha, beta).unwrap()
    }

    #[test]
    fn absolutely_convergent_case_matches_direct_quadrature() {
        // β = 3: the integrand is absolutely integrable, so truncating the real
        // axis at Λ = 10⁴ leaves a tail below Λ^{-2}/2.
        let prm = params(0.5, 3.0);
        let profile = CutoffProfile::default();
        for tau in [0.0, 0.7, 3.0] {
            let v = fourier_cosine_mu(&prm, &profile, tau, &QuadratureSpec::default()).unwrap();
            let pts: Vec<f64> = (0..=4000).map(|i| 1.0 + i as f64 * (1e4 - 1.0) / 4000.0).collect();
            let direct = integrate(
                |x| mu_unchecked(&prm, &profile, x) * (2.0 * (tau * x).cos()),
                &pts,
                Tolerance::absolute(1e-12),
                1_000_000,
            )
            .unwrap();
            assert!((v.value - direct.value).norm() < 1e-8, "tau = {tau}");
        }
    }

    #[test]
    fn rotation_point_does_not_change_the_value() {
        let prm = params(0.5, 0.5);
        let profile = CutoffProfile::default();
        let base = fourier_cosine_mu(&prm, &profile, 0.3, &QuadratureSpec::default()).unwrap();
        let spec = QuadratureSpec {
            upper_cutoff_lambda: Some(500.0),
            ..QuadratureSpec::default()
        };
        let moved = fourier_cosine_mu(&prm, &profile, 0.3, &spec).unwrap();
        assert!((base.value - moved.value).norm() < 1e-9);
        let spec = QuadratureSpec {
            upper_cutoff_lambda: Some(3.0),
            ..QuadratureSpec::default()
        };
        assert!(fourier_cosine_mu(&prm, &profile, 0.3, &spec).is_err());
    }

    #[test]
    fn zero_frequency_uses_substitution() {
        // β = 1/2, α = 1/2: ∫_R^∞ λ^{-1/2} e^{iλ^{1/2}} dλ = 2∫_{√R}^∞ e^{iu} du
        // = 2i e^{i√R} in the Abel sense. Compare the rotated piece against it
        // through two rotation points.
        let prm = params(0.5, 0.5);
        let profile = CutoffProfile::default();
        let a = fourier_cosine_mu(&prm, &profile, 0.0, &QuadratureSpec::default()).unwrap();
        let spec = QuadratureSpec {
            upper_cutoff_lambda: Some(40.0),
            ..QuadratureSpec::default()
        };
        let b = fourier_cosine_mu(&prm, &profile, 0.0, &spec).unwrap();
        assert!((a.value - b.value).norm() < 1e-9);
        // Only the cutoff band is non-trivial; beyond it the closed form applies.
        let band = integrate(
            |x| mu_unchecked(&prm, &profile, x),
            &[1.0, 1.5, 2.0],
            Tolerance::absolute(1e-14),
            10_000,
        )
        .unwrap();
        let closed = 2.0 * (band.value + 2.0 * Complex64::i() * Complex64::from_polar(1.0, 2f64.sqrt()));
        assert!((a.value - closed).norm() < 1e-9);
    }

    #[test]
    fn rejects_high_orders_and_bad_specs() {
        let prm = params(0.5, 1.0);
        let profile = CutoffProfile::default();
        let spec = QuadratureSpec::default();
        assert!(matches!(
            fourier_cosine_mu_derivative(&prm, &profile, 1.0, 5, &spec),
            Err(Error::Unsupported(_))
        ));
        let bad = QuadratureSpec {
            abs_tolerance: 0.0,
            ..spec
        };
        assert!(fourier_cosine_mu(&prm, &profile, 1.0, &bad).is_err());
        assert!(SymbolWindow::new(1.0, Some(1.5)).is_err());
    }

    #[test]
    fn odd_derivative_vanishes_at_origin() {
        let prm = params(0.5, 1.0);
        let v = fourier_cosine_mu_derivative(&prm, &CutoffProfile::default(), 0.0, 1, &QuadratureSpec::default())
            .unwrap();
        assert_eq!(v.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn dyadic_window_matches_bump() {
        let profile = CutoffProfile::default();
        for k in 0..6 {
            let w = SymbolWindow::dyadic(k);
            for i in 0..400 {
                let lambda = i as f64 * 2f64.powi(k as i32) / 80.0;
                let expect = crate::symbols::dyadic_bump(&profile, lambda / 2f64.powi(k as i32));
                assert!((w.weight(&profile, lambda) - expect).abs() < 1e-15);
            }
        }
    }
}
