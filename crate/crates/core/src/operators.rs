//! Diagonal spectral operators, maximal functions over time grids, the
//! oscillating kernel on the circle, and the associated decay checks.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::fit::{fit_decay_exponent, log_space, DecayFit};
use crate::symbols::{
    check_riesz_order, mu_unchecked, riesz_mean_symbol, riesz_mean_symbol_parts, CutoffProfile,
    SymbolParams,
};
use crate::torus::{inverse_transform, GridField, SpectralField};

/// Largest admissible `σ`: a sixth of the injectivity radius `π`, rounded
/// down to 1/2.
pub const MAX_SIGMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeSpacing {
    Geometric,
    Uniform,
}

/// Strictly increasing sample times in `(0, σ]`, ending at `σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    sigma: f64,
    spacing: TimeSpacing,
    times: Vec<f64>,
}

impl TimeGrid {
    /// `count` geometric times from `t_min` to `σ`.
    pub fn geometric(sigma: f64, count: usize, t_min: f64) -> Result<Self> {
        check_sigma(sigma)?;
        ensure(count >= 2, || format!("time grid needs at least 2 points, got {count}"))?;
        ensure(t_min > 0.0 && t_min < sigma, || {
            format!("t_min must lie in (0, sigma), got {t_min}")
        })?;
        Ok(Self {
            sigma,
            spacing: TimeSpacing::Geometric,
            times: log_space(t_min, sigma, count),
        })
    }

    /// 64 geometric times from `σ 2^{-20}` to `σ`.
    pub fn default_for(sigma: f64) -> Result<Self> {
        Self::geometric(sigma, 64, sigma * 2f64.powi(-20))
    }

    /// `σ i / count` for `i = 1..=count`.
    pub fn uniform(sigma: f64, count: usize) -> Result<Self> {
        check_sigma(sigma)?;
        ensure(count >= 2, || format!("time grid needs at least 2 points, got {count}"))?;
        let mut times: Vec<f64> = (1..=count).map(|i| sigma * i as f64 / count as f64).collect();
        times[count - 1] = sigma;
        Ok(Self {
            sigma,
            spacing: TimeSpacing::Uniform,
            times,
        })
    }

    /// Every original time plus the (geometric or arithmetic) midpoint of each
    /// consecutive pair.
    pub fn refined(&self) -> Self {
        let mut times = Vec::with_capacity(2 * self.times.len());
        for w in self.times.windows(2) {
            times.push(w[0]);
            times.push(match self.spacing {
                TimeSpacing::Geometric => (w[0] * w[1]).sqrt(),
                TimeSpacing::Uniform => 0.5 * (w[0] + w[1]),
            });
        }
        times.push(self.sigma);
        Self {
            sigma: self.sigma,
            spacing: self.spacing,
            times,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn spacing(&self) -> TimeSpacing {
        self.spacing
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn count(&self) -> usize {
        self.times.len()
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    ensure(sigma > 0.0 && sigma <= MAX_SIGMA, || {
        format!("sigma must lie in (0, {MAX_SIGMA}], got {sigma}")
    })
}

/// Multiplies the coefficient at `ξ` by `m(|ξ|)`.
pub fn apply_multiplier(f: &SpectralField, m: impl Fn(f64) -> Complex64 + Sync) -> SpectralField {
    apply_radial(f, |l| Ok(m(l))).expect("infallible multiplier")
}

/// Diagonal action of a radial symbol that may fail. The symbol is evaluated
/// once per distinct `|ξ|²`, which is an integer on the lattice.
pub fn apply_radial(
    f: &SpectralField,
    m: impl Fn(f64) -> Result<Complex64> + Sync,
) -> Result<SpectralField> {
    let grid = *f.grid();
    let norms: Vec<i64> = (0..grid.lattice_len())
        .map(|i| {
            let [a, b] = grid.frequency_at(i);
            a * a + b * b
        })
        .collect();
    let mut distinct = norms.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let values: Vec<Complex64> = distinct
        .par_iter()
        .map(|&n2| m((n2 as f64).sqrt()))
        .collect::<Result<_>>()?;
    let table: HashMap<i64, Complex64> = distinct.into_iter().zip(values).collect();
    let coefficients = f
        .coefficients()
        .iter()
        .zip(&norms)
        .map(|(c, n2)| table[n2] * c)
        .collect();
    SpectralField::from_coefficients(grid, coefficients)
}

fn check_alpha(alpha: f64) -> Result<()> {
    ensure(alpha > 0.0 && alpha < 1.0, || format!("alpha must lie in (0, 1), got {alpha}"))
}

/// `e^{is|ξ|^α}` applied diagonally.
pub fn schrodinger_propagate(f: &SpectralField, alpha: f64, s: f64) -> Result<SpectralField> {
    check_alpha(alpha)?;
    ensure(s.is_finite(), || format!("time must be finite, got {s}"))?;
    Ok(apply_multiplier(f, |l| Complex64::from_polar(1.0, s * l.powf(alpha))))
}

/// `T_{α,β,t}`: multiplier `e^{i(t|ξ|)^α} (t|ξ|)^{-β} Φ(t|ξ|)`.
pub fn oscillating_op(
    f: &SpectralField,
    params: &SymbolParams,
    profile: &CutoffProfile,
    t: f64,
) -> Result<SpectralField> {
    ensure(t > 0.0 && t.is_finite(), || format!("time must be positive, got {t}"))?;
    Ok(apply_multiplier(f, |l| mu_unchecked(params, profile, t * l)))
}

/// Riesz mean of order `k`: multiplier `k∫₀¹(1-r)^{k-1} e^{itr|ξ|^α} dr`.
pub fn riesz_mean_op(f: &SpectralField, k: f64, alpha: f64, t: f64) -> Result<SpectralField> {
    check_alpha(alpha)?;
    check_riesz_order(k)?;
    ensure(t > 0.0 && t.is_finite(), || format!("time must be positive, got {t}"))?;
    apply_radial(f, |l| riesz_mean_symbol(k, alpha, t * l.powf(alpha)))
}

/// Pointwise `max_{t ∈ grid} |(family(t) f)(x)|`.
pub fn maximal_over_times(
    f: &SpectralField,
    family: impl Fn(&SpectralField, f64) -> Result<SpectralField> + Sync,
    grid: &TimeGrid,
) -> Result<GridField> {
    maximal_over(f, family, grid.times())
}

pub(crate) fn maximal_over(
    f: &SpectralField,
    family: impl Fn(&SpectralField, f64) -> Result<SpectralField> + Sync,
    times: &[f64],
) -> Result<GridField> {
    let moduli: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&t| family(f, t).map(|g| inverse_transform(&g).moduli()))
        .collect::<Result<_>>()?;
    let mut out = vec![0.0f64; f.grid().spatial_len()];
    for row in &moduli {
        for (o, v) in out.iter_mut().zip(row) {
            *o = o.max(*v);
        }
    }
    GridField::from_real(*f.grid(), out)
}

/// The oscillating kernel on the circle at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub x: f64,
    pub t: f64,
    pub value: Complex64,
    pub regularization_eps: f64,
    pub m_cap: usize,
    /// Bound on the modes `|m| > m_cap` dropped from the sum.
    pub tail_bound: f64,
}

/// `Σ_{|m| <= M} μ(|m| t) e^{imx} e^{-ε m²}`.
pub fn kernel_lattice_sum(
    params: &SymbolParams,
    profile: &CutoffProfile,
    t: f64,
    x: f64,
    eps: f64,
    m_cap: usize,
) -> Result<KernelSample> {
    ensure(t > 0.0 && t.is_finite(), || format!("time must be positive, got {t}"))?;
    ensure(eps >= 0.0 && eps.is_finite(), || format!("regularization must be nonnegative, got {eps}"))?;
    ensure(eps > 0.0 || params.beta() > 1.0, || {
        format!("unregularized sum diverges for beta = {} <= 1", params.beta())
    })?;
    ensure(m_cap >= 1, || "m_cap must be at least 1".to_string())?;
    let mut sum = Complex64::new(0.0, 0.0);
    for m in 1..=m_cap {
        let mf = m as f64;
        let s = mf * t;
        if s <= 1.0 {
            continue;
        }
        let weight = 2.0 * (mf * x).cos() * (-eps * mf * mf).exp();
        if weight == 0.0 && eps > 0.0 && eps * mf * mf > 745.0 {
            break;
        }
        sum += mu_unchecked(params, profile, s) * weight;
    }
    let mf = m_cap as f64;
    let envelope = (mf * t).powf(-params.beta()).min(1.0);
    let tail_bound = if eps > 0.0 {
        2.0 * envelope * (-eps * mf * mf).exp() / (2.0 * eps * mf)
    } else {
        2.0 * t.powf(-params.beta()) * mf.powf(1.0 - params.beta()) / (params.beta() - 1.0)
    };
    Ok(KernelSample {
        x,
        t,
        value: sum,
        regularization_eps: eps,
        m_cap,
        tail_bound,
    })
}

/// Mode cap at which the Gaussian weight `e^{-ε m²}` has fallen to `e^{-40}`.
pub fn default_m_cap(eps: f64) -> usize {
    (40.0 / eps).sqrt().ceil() as usize
}

pub const KERNEL_SLOPE_TOLERANCE: f64 = 0.3;
/// Largest admitted slope change under doubling of `m_cap`.
pub const CAP_DOUBLING_TOLERANCE: f64 = 0.05;
/// Largest admitted relative change under halving of the regularization.
pub const EPS_HALVING_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelBranch {
    Slope,
    Bounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDecayReport {
    pub alpha: f64,
    pub beta: f64,
    /// `β - α/2`.
    pub epsilon: f64,
    pub t: f64,
    pub predicted_slope: f64,
    pub branch: KernelBranch,
    pub samples: Vec<KernelSample>,
    /// Fit of `|Ω(x, t)|` against `x/t`.
    pub fitted: DecayFit,
    /// `sup |Ω| / inf |Ω|` over the samples.
    pub sup_inf_ratio: f64,
    /// Largest `|Ω_ε - Ω_{ε/2}| / |Ω_ε|` over the samples.
    pub eps_halving_change: f64,
    /// Largest truncation tail bound over both regularizations.
    pub max_tail_bound: f64,
    /// Change of the fitted slope when `m_cap` is doubled.
    pub cap_doubling_slope_change: f64,
    pub pass: bool,
}

/// Fits `|Ω(x, t)|` against `x/t` on the given radii (all with `x/t <= 1`)
/// and compares with `-1 + ε/(1-α)`, `ε = β - α/2`. When the predicted slope
/// is nonnegative the check is `sup/inf <= 10` instead. Passing also requires
/// the fit to be stable under doubling `m_cap` and halving `eps`.
pub fn verify_kernel_decay(
    params: &SymbolParams,
    profile: &CutoffProfile,
    t: f64,
    radii: &[f64],
    eps: f64,
    m_cap: usize,
) -> Result<KernelDecayReport> {
    let (alpha, beta) = (params.alpha(), params.beta());
    let epsilon = beta - alpha / 2.0;
    ensure(epsilon > 0.0, || format!("need beta > alpha/2, got epsilon = {epsilon}"))?;
    ensure(radii.iter().all(|&x| x > 0.0 && x / t <= 1.0), || {
        "every radius must satisfy 0 < x <= t".to_string()
    })?;
    let predicted = -1.0 + epsilon / (1.0 - alpha);
    let triples: Vec<[KernelSample; 3]> = radii
        .par_iter()
        .map(|&x| {
            Ok([
                kernel_lattice_sum(params, profile, t, x, eps, m_cap)?,
                kernel_lattice_sum(params, profile, t, x, 0.5 * eps, m_cap)?,
                kernel_lattice_sum(params, profile, t, x, eps, 2 * m_cap)?,
            ])
        })
        .collect::<Result<_>>()?;
    let eps_halving_change = triples
        .iter()
        .map(|[a, b, _]| (a.value - b.value).norm() / a.value.norm())
        .fold(0.0, f64::max);
    let max_tail_bound = triples
        .iter()
        .map(|[a, b, _]| a.tail_bound.max(b.tail_bound))
        .fold(0.0, f64::max);
    let fit_of = |j: usize| {
        let points: Vec<(f64, f64)> = triples.iter().map(|s| (s[j].x / t, s[j].value.norm())).collect();
        fit_decay_exponent(&points).map(|f| (f, points))
    };
    let (fitted, points) = fit_of(0)?;
    let (doubled, _) = fit_of(2)?;
    let cap_doubling_slope_change = (doubled.slope - fitted.slope).abs();
    let samples: Vec<KernelSample> = triples.into_iter().map(|s| s[0]).collect();
    let sup = points.iter().map(|p| p.1).fold(0.0, f64::max);
    let inf = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let sup_inf_ratio = sup / inf;
    let (branch, shape_ok) = if predicted < -1e-12 {
        (
            KernelBranch::Slope,
            (fitted.slope - predicted).abs() <= KERNEL_SLOPE_TOLERANCE,
        )
    } else {
        (KernelBranch::Bounded, sup_inf_ratio <= 10.0)
    };
    let pass = shape_ok
        && cap_doubling_slope_change < CAP_DOUBLING_TOLERANCE
        && eps_halving_change < EPS_HALVING_TOLERANCE;
    Ok(KernelDecayReport {
        alpha,
        beta,
        epsilon,
        t,
        predicted_slope: predicted,
        branch,
        samples,
        fitted,
        sup_inf_ratio,
        eps_halving_change,
        max_tail_bound,
        cap_doubling_slope_change,
        pass,
    })
}

/// `count` radii with `x/t` log-spaced over `[0.05, 1]`.
pub fn kernel_fit_radii(t: f64, count: usize) -> Vec<f64> {
    log_space(0.05, 1.0, count).into_iter().map(|r| r * t).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Checks `sup|f| <= (b∫t^ε|f'|²)^{1/2} + (b^{-1}∫t^{-ε}|f|²)^{1/2} + |f(0)|`
/// on `[0, σ]` for samples on a uniform grid, with slack `2 h max|f'|`.
/// The weighted integrals interpolate `|f|²` and `|f'|²` linearly and
/// integrate the weights exactly, so `|ε| < 1` is required.
pub fn sup_bound_1d_check(
    f: &[Complex64],
    f_prime: &[Complex64],
    sigma: f64,
    b: f64,
    eps: f64,
) -> Result<SupBoundReport> {
    ensure(b > 0.0 && b.is_finite(), || format!("b must be positive, got {b}"))?;
    ensure(eps.abs() < 1.0, || format!("|eps| must be below 1, got {eps}"))?;
    ensure(sigma > 0.0, || format!("sigma must be positive, got {sigma}"))?;
    ensure(f.len() >= 2 && f.len() == f_prime.len(), || {
        format!("need matching samples, got {} and {}", f.len(), f_prime.len())
    })?;
    let h = sigma / (f.len() - 1) as f64;
    let sq = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).collect::<Vec<_>>();
    let energy = weighted_trapezoid(&sq(f_prime), h, eps);
    let mass = weighted_trapezoid(&sq(f), h, -eps);
    let lhs = f.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let rhs = (b * energy).sqrt() + (mass / b).sqrt() + f[0].norm();
    let slack = 2.0 * h * f_prime.iter().map(|c| c.norm()).fold(0.0, f64::max);
    Ok(SupBoundReport {
        lhs,
        rhs,
        slack,
        pass: lhs <= rhs + slack,
    })
}

/// `∫₀^{(n-1)h} g(t) t^w dt` with `g` piecewise linear through the samples.
fn weighted_trapezoid(g: &[f64], h: f64, w: f64) -> f64 {
    let p = w + 1.0;
    let mut total = 0.0;
    for (i, pair) in g.windows(2).enumerate() {
        let (t0, t1) = (i as f64 * h, (i + 1) as f64 * h);
        let i0 = (t1.powf(p) - t0.powf(p)) / p;
        let i1 = (t1.powf(p + 1.0) - t0.powf(p + 1.0)) / (p + 1.0);
        total += pair[0] * i0 + (pair[1] - pair[0]) / h * (i1 - t0 * i0);
    }
    total
}

pub const RIESZ_SLOPE_TOLERANCE: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszDecayReport {
    pub k: f64,
    pub alpha: f64,
    /// Window centers and the window maxima of `|S|` and of the oscillating
    /// endpoint component.
    pub z: Vec<f64>,
    pub envelope: Vec<f64>,
    pub endpoint_envelope: Vec<f64>,
    /// Fit of the window maxima of `|S|`.
    pub raw_fit: DecayFit,
    /// Fit of the window maxima of the endpoint component `~ Γ(k+1) z^{-k}`.
    pub endpoint_fit: DecayFit,
    pub pass: bool,
}

/// Envelope decay of the Riesz-mean symbol `S(z)` for large `z`.
///
/// `S` splits smoothly into a non-oscillating part from `r = 0`, decaying like
/// `k/z`, and the part carrying `e^{iz}` from `r = 1`, decaying like
/// `Γ(k+1) z^{-k}`. The check compares the envelope slope of the latter with
/// `-k`; the raw envelope of `|S|` is reported alongside.
pub fn riesz_symbol_decay_check(k: f64, alpha: f64, z_lo: f64, z_hi: f64) -> Result<RieszDecayReport> {
    check_alpha(alpha)?;
    check_riesz_order(k)?;
    ensure(z_lo >= 10.0 && z_hi >= 10.0 * z_lo, || {
        format!("need z_hi >= 10 z_lo >= 100, got [{z_lo}, {z_hi}]")
    })?;
    let profile = CutoffProfile::default();
    let centers = log_space(z_lo, z_hi, 25);
    // Each window spans two periods of e^{iz}.
    let per_window = 24;
    let rows: Vec<(f64, f64)> = centers
        .par_iter()
        .map(|&zc| {
            let mut raw = 0.0f64;
            let mut end = 0.0f64;
            for j in 0..per_window {
                let z = zc + 4.0 * PI * j as f64 / per_window as f64;
                let s = riesz_mean_symbol(k, alpha, z)?;
                let (_, e) = riesz_mean_symbol_parts(&profile, k, z)?;
                raw = raw.max(s.norm());
                end = end.max(e.norm());
            }
            Ok((raw, end))
        })
        .collect::<Result<_>>()?;
    let envelope: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let endpoint_envelope: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let pair = |v: &[f64]| centers.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
    let raw_fit = fit_decay_exponent(&pair(&envelope))?;
    let endpoint_fit = fit_decay_exponent(&pair(&endpoint_envelope))?;
    Ok(RieszDecayReport {
        k,
        alpha,
        z: centers,
        envelope,
        endpoint_envelope,
        raw_fit,
        endpoint_fit,
        pass: (endpoint_fit.slope + k).abs() <= RIESZ_SLOPE_TOLERANCE,
    })
}
