//! One function per experiment kind. Each returns its checks and sweeps in a
//! fixed order; parallelism lives inside the core routines.

use std::f64::consts::PI;

use num_complex::Complex64;
use oscimax::extrapolation::{
    atom_uniformity_experiment, combination_rate_experiment, regularity_threshold, riesz_convergence_experiment,
    ErrorNormKind, RateReport, RATE_SLACK, UNIFORMITY_RATIO,
};
use oscimax::hardy::{make_regular_atom, weak_lp_quasinorm, AtomSpec};
use oscimax::operators::{
    default_m_cap, kernel_fit_radii, KernelBranch, maximal_over_times, oscillating_op, riesz_symbol_decay_check, verify_kernel_decay,
    TimeGrid, CAP_DOUBLING_TOLERANCE, EPS_HALVING_TOLERANCE, KERNEL_SLOPE_TOLERANCE, RIESZ_SLOPE_TOLERANCE,
};
use oscimax::quadrature::decay::{BOUNDED_RATIO, E2_MIN_ORDER, SLOPE_TOLERANCE};
use oscimax::quadrature::{
    dyadic_e2_tail_check, dyadic_e3_check, fourier_cosine_mu, verify_small_tau_decay, DecayBranch, QuadratureSpec,
};
use oscimax::symbols::partition_residual;
use oscimax::torus::forward_transform;
use oscimax::{CutoffProfile, LatticeGrid, SpectralField, SymbolParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentKind, ResolvedConfig};
use crate::report::{Check, RunOutput, Summary, Table};
use crate::CliError;

/// Largest admitted `|μ̂(300)| / |μ̂(1)|`.
pub const LARGE_TAU_RATIO: f64 = 1e-6;
pub const PARTITION_TOLERANCE: f64 = 1e-12;
/// Admitted distance of the Riesz error slope from 1.
pub const RIESZ_RATE_TOLERANCE: f64 = 0.05;

pub fn run(cfg: &ResolvedConfig) -> Result<RunOutput, CliError> {
    let (checks, tables) = match cfg.kind {
        ExperimentKind::SymbolDecay => symbol_decay(cfg)?,
        ExperimentKind::DyadicDecay => dyadic_decay(cfg)?,
        ExperimentKind::KernelDecay => kernel_decay(cfg)?,
        ExperimentKind::RateCombo => rate_combo(cfg)?,
        ExperimentKind::RateRiesz => rate_riesz(cfg)?,
        ExperimentKind::AtomUniformity => atom_uniformity(cfg)?,
        ExperimentKind::MaximalSweep => maximal_sweep(cfg)?,
        ExperimentKind::PartitionCheck => partition_check(cfg)?,
    };
    Ok(RunOutput {
        summary: Summary::new(cfg.kind, cfg.report_view(), checks),
        tables,
    })
}

type Outcome = (Vec<Check>, Vec<Table>);

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn profile(cfg: &ResolvedConfig) -> Result<CutoffProfile, CliError> {
    Ok(CutoffProfile::new(cfg.profile(), cfg.profile_order())?)
}

fn lattice(cfg: &ResolvedConfig) -> Result<LatticeGrid, CliError> {
    let dim = cfg.dimension();
    if dim != 1 && dim != 2 {
        return Err(usage(format!("dimension must be 1 or 2, got {dim}")));
    }
    Ok(LatticeGrid::new(dim, cfg.n_modes())?)
}

fn mode_index(grid: &LatticeGrid, m: i64) -> Vec<i64> {
    let mut xi = vec![0; grid.dimension()];
    xi[0] = m;
    xi
}

fn quadrature_spec(cfg: &ResolvedConfig) -> QuadratureSpec {
    QuadratureSpec::with_tolerance(cfg.abs_tolerance(), cfg.rel_tolerance())
}

fn symbol_decay(cfg: &ResolvedConfig) -> Result<Outcome, CliError> {
    let params = SymbolParams::new(cfg.alpha(), cfg.beta())?;
    let profile = profile(cfg)?;
    let spec = quadrature_spec(cfg);
    let r = verify_small_tau_decay(&params, &profile, cfg.order(), cfg.tau_lo(), cfg.tau_hi(), cfg.samples(), &spec)?;
    let mut checks = Vec::new();
    match r.branch {
        DecayBranch::Slope => {
            let slope = r.fitted.map_or(f64::NAN, |f| f.slope);
            checks.push(
                Check::new("small_tau_slope", r.pass, slope)
                    .predicted(r.predicted_exponent)
                    .tolerance(SLOPE_TOLERANCE)
                    .detail(format!("derivative order {}", r.order)),
            );
        }
        DecayBranch::Bounded => {
            checks.push(
                Check::new("small_tau_bounded", r.pass, r.sup_ratio)
                    .tolerance(BOUNDED_RATIO)
                    .detail(format!("predicted exponent {} is nonnegative; sup/|value at tau_hi|", r.predicted_exponent)),
            );
        }
    }
    let near = fourier_cosine_mu(&params, &profile, 1.0, &spec)?;
    let far = fourier_cosine_mu(&params, &profile, 300.0, &spec)?;
    let ratio = far.value.norm() / near.value.norm();
    checks.push(
        Check::new("large_tau_ratio", ratio <= LARGE_TAU_RATIO, ratio)
            .tolerance(LARGE_TAU_RATIO)
            .detail("|transform(300)| / |transform(1)|"),
    );
    let mut small = Table::new("small_tau", &["tau", "re", "im", "modulus", "error"]);
    for s in &r.samples {
        small.push(&[s.tau, s.value.re, s.value.im, s.value.norm(), s.error]);
    }
    let mut large = Table::new("large_tau", &["tau", "re", "im", "modulus", "error"]);
    for (tau, q) in [(1.0, near), (300.0, far)] {
        large.push(&[tau, q.value.re, q.value.im, q.value.norm(), q.error]);
    }
    Ok((checks, vec![small, large]))
}

fn dyadic_decay(cfg: &ResolvedConfig) -> Result<Outcome, CliError> {
    let params = SymbolParams::new(cfg.alpha(), cfg.beta())?;
    let profile = profile(cfg)?;
    let spec = quadrature_spec(cfg);
    let scales = cfg.scales();
    if scales.is_empty() {
        return Err(usage("scales must not be empty"));
    }
    let mut checks = Vec::new();
    let mut tail = Table::new("e2_tail", &["k", "tau", "re", "im", "modulus", "error"]);
    for &k in &scales {
        let r = dyadic_e2_tail_check(&params, &profile, k, cfg.c2(), cfg.span(), cfg.samples(), &spec)?;
        checks.push(
            Check::new(format!("e2_tail_order_k{k}"), r.pass, r.decay_order)
                .predicted(E2_MIN_ORDER)
                .detail(format!("fitted decay order in 2^k tau, required at least the predicted value, from tau = {}", r.tau_start)),
        );
        for s in &r.samples {
            tail.push(&[k as f64, s.tau, s.value.re, s.value.im, s.value.norm(), s.error]);
        }
    }
    let e3 = dyadic_e3_check(&params, &profile, &scales, cfg.c1(), cfg.c2(), cfg.samples(), &spec)?;
    checks.push(
        Check::new("e3_normalized_ratio", e3.pass, e3.ratio)
            .tolerance(BOUNDED_RATIO)
            .detail("max/min over scales of sup |dyadic transform| / 2^{k(1-beta-alpha/2)}"),
    );
    let mut band = Table::new("e3_scaling", &["k", "normalized_sup", "argmax_tau"]);
    for ((k, v), tau) in e3.ks.iter().zip(&e3.normalized_sup).zip(&e3.argmax_tau) {
        band.push(&[*k as f64, *v, *tau]);
    }
    Ok((checks, vec![tail, band]))
}

fn kernel_decay(cfg: &ResolvedConfig) -> Result<Outcome, CliError> {
    let params = SymbolParams::new(cfg.alpha(), cfg.beta())?;
    let profile = profile(cfg)?;
    let (t, eps) = (cfg.t(), cfg.eps());
    if eps.is_nan() || eps <= 0.0 {
        return Err(usage(format!("eps must be positive, got {eps}")));
    }
    let radii = kernel_fit_radii(t, cfg.samples());
    let r = verify_kernel_decay(&params, &profile, t, &radii, eps, default_m_cap(eps))?;
    let slope_ok = match r.branch {
        KernelBranch::Slope => (r.fitted.slope - r.predicted_slope).abs() <= KERNEL_SLOPE_TOLERANCE,
        KernelBranch::Bounded => r.sup_inf_ratio <= BOUNDED_RATIO,
    };
    let checks = vec![
        match r.branch {
            KernelBranch::Slope => Check::new("kernel_slope", slope_ok, r.fitted.slope)
                .predicted(r.predicted_slope)
                .tolerance(KERNEL_SLOPE_TOLERANCE)
                .detail(format!("fit of |kernel| against x/t, epsilon = {}", r.epsilon)),
            KernelBranch::Bounded => Check::new("kernel_bounded", slope_ok, r.sup_inf_ratio)
                .tolerance(BOUNDED_RATIO)
                .detail("sup/inf of |kernel| on the fit radii"),
        },
        Check::new(
            "cap_doubling_slope_change",
            r.cap_doubling_slope_change < CAP_DOUBLING_TOLERANCE,
            r.cap_doubling_slope_change,
        )
        .tolerance(CAP_DOUBLING_TOLERANCE)
        .detail(format!("m_cap = {}", default_m_cap(eps))),
        Check::new("eps_halving_change", r.eps_halving_change < EPS_HALVING_TOLERANCE, r.eps_halving_change)
            .tolerance(EPS_HALVING_TOLERANCE)
            .detail("largest relative change of the kernel"),
        Check::info("max_tail_bound", r.max_tail_bound),
    ];
    let mut table = Table::new("kernel", &["x", "x_over_t", "re", "im", "modulus", "tail_bound"]);
    for s in &r.samples {
        table.push(&[s.x, s.x / t, s.value.re, s.value.im, s.value.norm(), s.tail_bound]);
    }
    Ok((checks, vec![table]))
}

fn rate_table(name: &str, r: &RateReport) -> Table {
    let mut table = Table::new(name, &["t", "error"]);
    for (t, e) in r.time_grid.times().iter().zip(&r.errors) {
        table.push(&[*t, *e]);
    }
    table
}

fn rate_check(name: &str, r: &RateReport) -> Check {
    let measured = r.fit.map_or(f64::NAN, |f| f.slope);
    let detail = if r.degenerate {
        "every error at the roundoff floor".to_string()
    } else {
        format!("{} terms, regularity certificate {}", r.n_terms, r.regularity_certificate)
    };
    Check::new(name, r.pass, measured)
        .predicted(r.predicted_rate)
        .tolerance(RATE_SLACK)
        .detail(detail)
}

fn rate_times(cfg: &ResolvedConfig) -> Result<TimeGrid, CliError> {
    Ok(TimeGrid::geometric(cfg.sigma(), cfg.time_count(), cfg.t_min())?)
}

fn rate_combo(cfg: &ResolvedConfig) -> Result<Outcome, CliError> {
    let grid = lattice(cfg)?;
    let (alpha, beta, p) = (cfg.alpha(), cfg.beta(), cfg.p());
    let threshold = regularity_threshold(grid.dimension(), alpha, p);
    if beta < threshold {
        return Err(usage(format!(
            "beta = {beta} is below the regularity threshold n*alpha*(1/p - 1/2) = {threshold}"
        )));
    }
    let times = rate_times(cfg)?;
    let single = SpectralField::mode(grid, &mode_index(&grid, cfg.mode()), Complex64::new(1.0, 0.0))?;
    let band = cfg.band();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let limited = SpectralField::from_fn(grid, |xi| {
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if xi[0].abs() <= band && xi[1].abs() <= band {
            c
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let n_terms = cfg.n_terms();
    let a = combination_rate_experiment(&single, alpha, beta, p, &times, ErrorNormKind::GridSup, n_terms)?;
    let b = combination_rate_experiment(&limited, alpha, beta, p, &times, ErrorNormKind::GridSup, n_terms)?;
    let checks = vec![rate_check("single_mode_rate", &a), rate_check("band_limited_rate", &b)];
    Ok((checks, vec![rate_table("rate_single_mode", &a), rate_table("rate_band_limited", &b)]))
}

fn order_label(k: f64) -> String {
    format!("{k}").replace('.', "p")
}

fn rate_riesz(cfg: &ResolvedConfig) -> Result<Outcome, CliError> {
    let grid = lattice(cfg)?;
    let alpha = cfg.alpha();
    let times = rate_times(cfg)?;
    let f = SpectralField::mode(grid, &mode_index(&grid, cfg.mode()), Complex64::new(1.0, 0.0))?;
    let orders = cfg.k();
    if orders.is_empty() {
        return Err(usage("k must list at least one order"));
    }
    let mut checks = Vec::new();
    let mut tables = Vec::new();
    let mut intercepts = Vec::new();
    for &k in &orders {
        let r = riesz_convergence_experiment(&f, k, alpha, &times, cfg.threshold())?;
        let label = order_label(k);
        checks.push(Check::new(format!("convergence_k{label}"), r.pass, r.exceedance_measures[r.times.len() - 1])
            .detail("exceedance measure at the smallest time"));
        let slope = r.fit.map_or(f64::NAN, |fit| fit.slope);
        checks.push(
            Check::new(format!("error_rate_k{label}"), (slope - 1.0).abs() <= RIESZ_RATE_TOLERANCE, slope)
                .predicted(1.0)
                .tolerance(RIESZ_RATE_TOLERANCE),
        );
        intercepts.push((k, r.fit.map_or(f64::NAN, |fit| fit.intercept)));
        let mut table = Table::new(format!("riesz_k{label}"), &["t", "sup_error", "exceedance_measure"]);
        for ((t, e), m) in r.times.iter().zip(&r.sup_errors).zip(&r.exceedance_measures) {
            table.push(&[*t, *e, *m]);
        }
        tables.push(table);
    }
    if intercepts.len() > 1 {
        let mut sorted = intercepts.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let decreasing = sorted.windows(2).all(|w| w[1].1 < w[0].1);
        let spread = sorted[0].1 - sorted[sorted.len() - 1].1;
        checks.push(
            Check::new("intercepts_decrease_with_k", decreasing, spread)
                .detail("log-intercept of the smallest order minus that of the largest"),
        );
    }
    for &k in &cfg.envelope_k() {
        let r = riesz_symbol_decay_check(k, alpha, cfg.z_lo(), cfg.z_hi())?;
        let label = order_label(k);
        checks.push(
            Check::new(format!("symbol_envelope_k{label}"), r.pass, r.endpoint_fit.slope)
                .predicted(-k)
                .tolerance(RIESZ_SLOPE_TOLERANCE)
                .detail(format!("oscillating endpoint part; raw envelope slope {}", r.raw_fit.slope)),
        );
        let mut table = Table::new(format!("riesz_envelope_k{label}"), &["z", "envelope", "endpoint_envelope"]);
        for ((z, a), b) in r.z.iter().zip(&r.envelope).zip(&r.endpoint_envelope) {
            table.push(&[*z, *a, *b]);
        }
        tables.push(table);
    }
    Ok((checks, tables))
}

fn maximal_times(cfg: &ResolvedConfig) -> Result<TimeGrid, CliError> {
    let sigma = cfg.sigma();
    Ok(TimeGrid::geometric(sigma, cfg.time_count(), sigma * 2f64.powi(-20))?)
}

fn atom_uniformity(cfg: &ResolvedConfig) -> Result<Outcome, CliError> {
    let grid = lattice(cfg)?;
    let times = maximal_times(cfg)?;
    let r = atom_uniformity_experiment(
        cfg.p(),
        cfg.alpha(),
        cfg.beta(),
        cfg.atom_count(),
        cfg.seed(),
        &grid,
        &times,
        &profile(cfg)?,
    )?;
    let check = match r.pass {
        Some(pass) => Check::new("weak_lp_max_over_median", pass, r.ratio).tolerance(UNIFORMITY_RATIO),
        None => Check::info("weak_lp_max_over_median", r.ratio)
            .detail(format!("beta below threshold {}; reported only", r.beta_threshold)),
    };
    let checks = vec![
        check,
        Check::info("weak_lp_max", r.max),
        Check::info("weak_lp_median", r.median),
    ];
    let mut table = Table::new("atoms", &["radius", "weak_lp_quasinorm"]);
    for (a, q) in r.radii.iter().zip(&r.quasinorms) {
        table.push(&[*a, *q]);
    }
    Ok((checks, vec![table]))
}

fn maximal_sweep(cfg: &ResolvedConfig) -> Result<Outcome, CliError> {
    let grid = lattice(cfg)?;
    let params = SymbolParams::new(cfg.alpha(), cfg.beta())?;
    let profile = profile(cfg)?;
    let spec = AtomSpec::new(cfg.p(), [PI, PI], cfg.radius(), cfg.seed())?;
    let atom = make_regular_atom(&spec, &grid)?;
    let f = forward_transform(&atom.field);
    let coarse_times = maximal_times(cfg)?;
    let fine_times = coarse_times.refined();
    let family = |g: &SpectralField, t: f64| oscillating_op(g, &params, &profile, t);
    let coarse = maximal_over_times(&f, family, &coarse_times)?;
    let fine = maximal_over_times(&f, family, &fine_times)?;
    let peak = fine.max_modulus();
    let mut delta = 0.0f64;
    let mut monotone = true;
    for (a, b) in coarse.samples().iter().zip(fine.samples()) {
        monotone &= b.re >= a.re;
        delta = delta.max(b.re - a.re);
    }
    let weak_coarse = weak_lp_quasinorm(&coarse, cfg.p())?;
    let weak_fine = weak_lp_quasinorm(&fine, cfg.p())?;
    let checks = vec![
        Check::new("refinement_monotone", monotone, delta / peak).detail("refined grid never lowers the maximal function"),
        Check::info("refinement_delta", delta / peak).detail("largest pointwise gain relative to the peak"),
        Check::info("weak_lp_coarse", weak_coarse),
        Check::info("weak_lp_refined", weak_fine),
    ];
    let mut table = Table::new("maximal", &["x", "y", "coarse", "refined"]);
    for (i, (a, b)) in coarse.samples().iter().zip(fine.samples()).enumerate() {
        let pt = grid.point_at(i);
        table.push(&[pt[0], pt[1], a.re, b.re]);
    }
    Ok((checks, vec![table]))
}

fn partition_check(cfg: &ResolvedConfig) -> Result<Outcome, CliError> {
    let profile = profile(cfg)?;
    let (levels, u_max) = (cfg.levels(), cfg.u_max());
    if !(u_max > 0.0 && u_max.is_finite()) {
        return Err(usage(format!("u_max must be positive, got {u_max}")));
    }
    if levels >= 1000 || 2f64.powi(levels as i32) <= u_max {
        return Err(usage(format!("need 2^levels > u_max, got levels = {levels}, u_max = {u_max}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let mut table = Table::new("partition", &["u", "residual"]);
    let mut worst = 0.0f64;
    for _ in 0..cfg.samples() {
        let u = rng.gen_range(-u_max..=u_max);
        let r = partition_residual(&profile, u, levels);
        worst = worst.max(r);
        table.push(&[u, r]);
    }
    let checks = vec![Check::new("max_residual", worst <= PARTITION_TOLERANCE, worst).tolerance(PARTITION_TOLERANCE)];
    Ok((checks, vec![table]))
}
