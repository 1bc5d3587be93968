//! Vandermonde combination of propagators, convergence-rate fits, and the
//! rate and atom-uniformity experiments.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::fit::{fit_decay_exponent, log_space, DecayFit, MIN_FIT_SAMPLES};
use crate::hardy::{
    hp_quasinorm_estimate, make_regular_atom, riesz_potential, weak_lp_quasinorm, AtomSpec, HeatTimes,
    MAX_ATOM_RADIUS,
};
use crate::operators::{apply_multiplier, maximal_over_times, oscillating_op, riesz_mean_op, TimeGrid};
use crate::symbols::{taylor_remainder_E, CutoffProfile, SymbolParams};
use crate::torus::{forward_transform, grid_norm, inverse_transform, GridField, LatticeGrid, SpectralField};

pub const MAX_TERMS: usize = 12;
/// Errors at or below this multiple of `1e-15 ‖f‖` are left out of rate fits.
pub const ROUNDOFF_MARGIN: f64 = 10.0;
pub const RATE_SLACK: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationScheme {
    pub n_terms: usize,
    pub coefficients: Vec<f64>,
    /// `max_j |Σ_k c_k k^j - δ_{j0}|`.
    pub residual: f64,
}

impl CombinationScheme {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
}

/// Solves `Σ_k c_k k^j = δ_{j0}`, `j = 0..N-1`, `k = 1..N`.
///
/// Rows are scaled to unit maximum before an LU solve with partial pivoting,
/// followed by one step of iterative refinement against the unscaled system.
pub fn combination_coefficients(n_terms: usize) -> Result<CombinationScheme> {
    ensure((1..=MAX_TERMS).contains(&n_terms), || {
        format!("number of terms must lie in 1..={MAX_TERMS}, got {n_terms}")
    })?;
    let n = n_terms;
    let exact = DMatrix::from_fn(n, n, |j, k| ((k + 1) as f64).powi(j as i32));
    let scale = DVector::from_fn(n, |j, _| (n as f64).powi(j as i32));
    let scaled = DMatrix::from_fn(n, n, |j, k| exact[(j, k)] / scale[j]);
    let lu = scaled.lu();
    let mut rhs = DVector::zeros(n);
    rhs[0] = 1.0;
    let mut c = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Degenerate("Vandermonde matrix is singular".into()))?;
    let r = &rhs - &exact * &c;
    if let Some(fix) = lu.solve(&r.component_div(&scale)) {
        c += fix;
    }
    let coefficients: Vec<f64> = c.iter().copied().collect();
    let residual = vandermonde_residual(&coefficients);
    Ok(CombinationScheme {
        n_terms,
        coefficients,
        residual,
    })
}

/// `max_j |Σ_k c_k k^j - δ_{j0}|` with compensated summation.
pub fn vandermonde_residual(c: &[f64]) -> f64 {
    (0..c.len())
        .map(|j| {
            let (mut sum, mut comp) = (if j == 0 { -1.0 } else { 0.0 }, 0.0f64);
            for (i, ck) in c.iter().enumerate() {
                let term = ck * ((i + 1) as f64).powi(j as i32);
                let t = sum + term;
                comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
                sum = t;
            }
            (sum + comp).abs()
        })
        .fold(0.0, f64::max)
}

/// `c_k = (-1)^{k+1} C(N, k)`, the closed-form solution used as a cross-check.
pub fn alternating_binomial(n_terms: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_terms);
    let mut binom = 1.0f64;
    for k in 1..=n_terms {
        binom = binom * (n_terms + 1 - k) as f64 / k as f64;
        out.push(if k % 2 == 1 { binom } else { -binom });
    }
    out
}

/// `Σ_k c_k e^{ikt|ξ|^α} f`.
pub fn combination_apply(f: &SpectralField, alpha: f64, t: f64, scheme: &CombinationScheme) -> Result<SpectralField> {
    check_rate_args(alpha, t)?;
    Ok(apply_multiplier(f, |l| {
        let z = t * l.powf(alpha);
        scheme
            .coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| Complex64::from_polar(*c, (k + 1) as f64 * z))
            .sum()
    }))
}

fn check_rate_args(alpha: f64, t: f64) -> Result<()> {
    ensure(alpha > 0.0 && alpha < 1.0, || format!("alpha must lie in (0, 1), got {alpha}"))?;
    ensure(t > 0.0 && t.is_finite(), || format!("time must be positive, got {t}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorNormKind {
    GridSup,
    L2,
}

fn field_norm(g: &GridField, kind: ErrorNormKind) -> Result<f64> {
    match kind {
        ErrorNormKind::GridSup => Ok(g.max_modulus()),
        ErrorNormKind::L2 => grid_norm(g, 2.0),
    }
}

/// Norm of `combination_apply(f) - f`. The difference is applied as the
/// single multiplier `E(t|ξ|^α)`, evaluated without cancellation.
pub fn convergence_error(
    f: &SpectralField,
    alpha: f64,
    t: f64,
    scheme: &CombinationScheme,
    kind: ErrorNormKind,
) -> Result<f64> {
    check_rate_args(alpha, t)?;
    let diff = apply_multiplier(f, |l| taylor_remainder_E(&scheme.coefficients, t * l.powf(alpha)));
    field_norm(&inverse_transform(&diff), kind)
}

/// Rate fit over samples whose error exceeds `1e-15`.
pub fn fit_rate(times: &[f64], errors: &[f64]) -> Result<DecayFit> {
    fit_rate_above(times, errors, 1e-15)
}

/// Rate fit over samples whose error exceeds `floor`.
pub fn fit_rate_above(times: &[f64], errors: &[f64], floor: f64) -> Result<DecayFit> {
    ensure(times.len() == errors.len(), || {
        format!("{} times but {} errors", times.len(), errors.len())
    })?;
    let kept: Vec<(f64, f64)> = times
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > floor)
        .map(|(t, e)| (*t, *e))
        .collect();
    if kept.len() < MIN_FIT_SAMPLES {
        return Err(Error::Degenerate(format!(
            "only {} of {} errors exceed the floor {floor:e}",
            kept.len(),
            errors.len()
        )));
    }
    fit_decay_exponent(&kept)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub n_terms: usize,
    /// `None` when every error sits at the roundoff floor.
    pub fit: Option<DecayFit>,
    pub predicted_rate: f64,
    pub time_grid: TimeGrid,
    pub error_norm_kind: ErrorNormKind,
    pub errors: Vec<f64>,
    /// Heat-maximal `L^p` estimate of `R_β f`; finite for band-limited `f`.
    pub regularity_certificate: f64,
    /// Every error was at the roundoff floor, so the pass is vacuous.
    pub degenerate: bool,
    pub pass: bool,
}

/// `β ≥ nα(1/p - 1/2)`.
pub fn regularity_threshold(dimension: usize, alpha: f64, p: f64) -> f64 {
    dimension as f64 * alpha * (1.0 / p - 0.5)
}

/// Convergence rate of the `N`-term combination, `N = floor(β/α) + 1` unless
/// overridden with a larger value, against the rate `β/α`.
pub fn combination_rate_experiment(
    f: &SpectralField,
    alpha: f64,
    beta: f64,
    p: f64,
    grid: &TimeGrid,
    kind: ErrorNormKind,
    n_terms: Option<usize>,
) -> Result<RateReport> {
    ensure(p > 0.0 && p < 1.0, || format!("p must lie in (0, 1), got {p}"))?;
    ensure(alpha > 0.0 && alpha < 1.0, || format!("alpha must lie in (0, 1), got {alpha}"))?;
    let threshold = regularity_threshold(f.grid().dimension(), alpha, p);
    ensure(beta >= threshold - 1e-12, || {
        format!("beta = {beta} is below the threshold nα(1/p - 1/2) = {threshold}")
    })?;
    let minimal = (beta / alpha).floor() as usize + 1;
    let n = n_terms.unwrap_or(minimal);
    ensure(n >= minimal, || format!("need more than floor(β/α) = {} terms, got {n}", minimal - 1))?;
    let scheme = combination_coefficients(n)?;
    let errors: Vec<f64> = grid
        .times()
        .par_iter()
        .map(|&t| convergence_error(f, alpha, t, &scheme, kind))
        .collect::<Result<_>>()?;
    let scale = field_norm(&inverse_transform(f), kind)?;
    let floor = ROUNDOFF_MARGIN * 1e-15 * scale;
    let predicted_rate = beta / alpha;
    let (fit, degenerate) = match fit_rate_above(grid.times(), &errors, floor) {
        Ok(fit) => (Some(fit), false),
        Err(Error::Degenerate(_)) if errors.iter().all(|e| *e <= floor) => (None, true),
        Err(e) => return Err(e),
    };
    let pass = fit.map_or(degenerate, |fit| fit.slope >= predicted_rate - RATE_SLACK);
    let regularity_certificate = hp_quasinorm_estimate(&riesz_potential(f, beta), p, &HeatTimes::default())?;
    Ok(RateReport {
        alpha,
        beta,
        p,
        n_terms: n,
        fit,
        predicted_rate,
        time_grid: grid.clone(),
        error_norm_kind: kind,
        errors,
        regularity_certificate,
        degenerate,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszConvergenceReport {
    pub k: f64,
    pub alpha: f64,
    pub threshold: f64,
    /// Grid times in descending order.
    pub times: Vec<f64>,
    pub sup_errors: Vec<f64>,
    pub exceedance_measures: Vec<f64>,
    /// Fit of the sup error against `t`, when enough errors are above roundoff.
    pub fit: Option<DecayFit>,
    pub pass: bool,
}

/// Length of the tail (smallest times) on which monotone decay is checked.
fn tail_len(count: usize) -> usize {
    (count / 4).max(3).min(count)
}

/// `sup |I_{k,α}(f)(·,t) - f|` and the measure where it exceeds `threshold`,
/// for `t` descending. Passes when the tail ends with sup error below the
/// threshold and empty exceedance set, or when the exceedance measure is
/// nonincreasing along the tail and ends below its starting value.
pub fn riesz_convergence_experiment(
    f: &SpectralField,
    k: f64,
    alpha: f64,
    grid: &TimeGrid,
    threshold: f64,
) -> Result<RieszConvergenceReport> {
    ensure(threshold > 0.0, || format!("threshold must be positive, got {threshold}"))?;
    let base = inverse_transform(f);
    let cell = f.grid().cell_volume();
    let mut times: Vec<f64> = grid.times().to_vec();
    times.reverse();
    let rows: Vec<(f64, f64)> = times
        .par_iter()
        .map(|&t| {
            let diff = &inverse_transform(&riesz_mean_op(f, k, alpha, t)?) - &base;
            let moduli = diff.moduli();
            let sup = moduli.iter().copied().fold(0.0, f64::max);
            let count = moduli.iter().filter(|v| **v > threshold).count();
            Ok((sup, count as f64 * cell))
        })
        .collect::<Result<_>>()?;
    let (sup_errors, exceedance_measures): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let scale = base.max_modulus();
    let fit = fit_rate_above(&times, &sup_errors, ROUNDOFF_MARGIN * 1e-15 * scale).ok();
    let tail = tail_len(times.len());
    let from = times.len() - tail;
    let last = times.len() - 1;
    let settled = sup_errors[last] < threshold && exceedance_measures[last] == 0.0;
    let shrinking = exceedance_measures[from..].windows(2).all(|w| w[1] <= w[0])
        && exceedance_measures[last] < exceedance_measures[from];
    Ok(RieszConvergenceReport {
        k,
        alpha,
        threshold,
        times,
        sup_errors,
        exceedance_measures,
        fit,
        pass: settled || shrinking,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomUniformityReport {
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    /// `nα(1/p - 1/2)`.
    pub beta_threshold: f64,
    pub radii: Vec<f64>,
    pub quasinorms: Vec<f64>,
    pub max: f64,
    pub median: f64,
    pub ratio: f64,
    /// Asserted only when `β` is at or above the threshold.
    pub pass: Option<bool>,
}

pub const UNIFORMITY_RATIO: f64 = 10.0;

/// Weak-`L^p` quasinorm of the maximal function `sup_t |T_{α,β,t} a|` over
/// `atom_count` regular atoms, radii geometric from 4 grid cells across to
/// `π/10`, pseudorandom centers.
#[allow(clippy::too_many_arguments)]
pub fn atom_uniformity_experiment(
    p: f64,
    alpha: f64,
    beta: f64,
    atom_count: usize,
    seed: u64,
    lattice: &LatticeGrid,
    times: &TimeGrid,
    profile: &CutoffProfile,
) -> Result<AtomUniformityReport> {
    ensure(atom_count >= 1, || "need at least one atom".to_string())?;
    let params = SymbolParams::new(alpha, beta)?;
    let r_min = 2.0 * lattice.spacing();
    ensure(r_min <= MAX_ATOM_RADIUS, || {
        format!("grid too coarse: smallest atom radius {r_min} exceeds π/10")
    })?;
    let radii = if atom_count == 1 {
        vec![MAX_ATOM_RADIUS]
    } else {
        log_space(r_min, MAX_ATOM_RADIUS, atom_count)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<AtomSpec> = radii
        .iter()
        .map(|&r| {
            let cx = rng.gen_range(0.0..2.0 * PI);
            let cy = if lattice.dimension() == 2 { rng.gen_range(0.0..2.0 * PI) } else { 0.0 };
            AtomSpec::new(p, [cx, cy], r, rng.gen())
        })
        .collect::<Result<_>>()?;
    let quasinorms: Vec<f64> = specs
        .par_iter()
        .map(|spec| {
            let atom = make_regular_atom(spec, lattice)?;
            let coefficients = forward_transform(&atom.field);
            let maximal = maximal_over_times(&coefficients, |g, t| oscillating_op(g, &params, profile, t), times)?;
            weak_lp_quasinorm(&maximal, p)
        })
        .collect::<Result<_>>()?;
    let max = quasinorms.iter().copied().fold(0.0, f64::max);
    let median = median(&quasinorms);
    let ratio = max / median;
    let beta_threshold = regularity_threshold(lattice.dimension(), alpha, p);
    let pass = (beta >= beta_threshold - 1e-12).then_some(ratio <= UNIFORMITY_RATIO);
    Ok(AtomUniformityReport {
        p,
        alpha,
        beta,
        seed,
        beta_threshold,
        radii,
        quasinorms,
        max,
        median,
        ratio,
        pass,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn small_schemes() {
        assert_eq!(combination_coefficients(1).unwrap().coefficients, vec![1.0]);
        let two = combination_coefficients(2).unwrap();
        assert!((two.coefficients[0] - 2.0).abs() < 1e-14 && (two.coefficients[1] + 1.0).abs() < 1e-14);
        let three = combination_coefficients(3).unwrap();
        for (a, b) in three.coefficients.iter().zip([3.0, -3.0, 1.0]) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(combination_coefficients(0).is_err());
        assert!(combination_coefficients(13).is_err());
    }

    #[test]
    fn schemes_match_binomials_and_certify() {
        for n in 1..=MAX_TERMS {
            let s = combination_coefficients(n).unwrap();
            let b = alternating_binomial(n);
            for (x, y) in s.coefficients.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-9 * y.abs(), "N={n}: {x} vs {y}");
            }
            assert!((s.coefficients.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            if n <= 8 {
                assert!(s.residual <= 1e-8, "N={n}: residual {}", s.residual);
            }
            assert_eq!(vandermonde_residual(&b), 0.0);
        }
    }

    #[test]
    fn apply_examples() {
        let grid = LatticeGrid::new(1, 16).unwrap();
        let s2 = combination_coefficients(2).unwrap();
        let one = SpectralField::constant(grid, c(0.5, -1.0));
        let out = combination_apply(&one, 0.5, 0.7, &s2).unwrap();
        assert!((&out - &one).max_modulus() < 1e-15);
        let f = SpectralField::mode(grid, &[4], c(1.0, 0.0)).unwrap();
        let t = 0.3;
        let z = t * 2.0;
        let got = combination_apply(&f, 0.5, t, &s2).unwrap().coefficient(&[4]).unwrap();
        let expect = Complex64::from_polar(2.0, z) - Complex64::from_polar(1.0, 2.0 * z);
        assert!((got - expect).norm() < 1e-14);
        let tiny = combination_apply(&f, 0.5, 1e-12, &s2).unwrap();
        assert!((&tiny - &f).max_modulus() < 1e-10);
    }

    #[test]
    fn convergence_error_examples() {
        let grid = LatticeGrid::new(1, 32).unwrap();
        let s2 = combination_coefficients(2).unwrap();
        let one = SpectralField::constant(grid, c(2.0, 0.0));
        assert_eq!(convergence_error(&one, 0.5, 0.1, &s2, ErrorNormKind::GridSup).unwrap(), 0.0);
        let f = SpectralField::mode(grid, &[4], c(1.0, 0.0)).unwrap();
        let e = convergence_error(&f, 0.5, 1e-3, &s2, ErrorNormKind::GridSup).unwrap();
        assert!((e / 4e-6 - 1.0).abs() < 0.1);
        let shifted = SpectralField::from_fn(grid, |xi| {
            f.coefficient(&[xi[0]]).unwrap() * Complex64::from_polar(1.0, -0.7 * xi[0] as f64)
        });
        let es = convergence_error(&shifted, 0.5, 1e-3, &s2, ErrorNormKind::GridSup).unwrap();
        assert!((e - es).abs() < 1e-18);
    }

    #[test]
    fn fit_rate_examples() {
        let ts = log_space(1e-4, 1e-2, 11);
        let sq: Vec<f64> = ts.iter().map(|t| t * t).collect();
        assert!((fit_rate(&ts, &sq).unwrap().slope - 2.0).abs() < 1e-10);
        let zeros = vec![1e-17; 11];
        assert!(matches!(fit_rate(&ts, &zeros), Err(Error::Degenerate(_))));
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
