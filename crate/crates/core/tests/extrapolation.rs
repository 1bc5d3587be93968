use num_complex::Complex64;
use oscimax::extrapolation::*;
use oscimax::hardy::{make_regular_atom, AtomSpec};
use oscimax::operators::TimeGrid;
use oscimax::symbols::taylor_remainder_E;
use oscimax::torus::{forward_transform, inverse_transform};
use oscimax::{CutoffProfile, Error, LatticeGrid, SpectralField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn small_times() -> TimeGrid {
    TimeGrid::geometric(1e-2, 25, 1e-4).unwrap()
}

#[test]
fn single_mode_error_is_the_taylor_remainder() {
    let grid = LatticeGrid::new(1, 64).unwrap();
    let f = SpectralField::mode(grid, &[9], one()).unwrap();
    for n in 1..=6 {
        let scheme = combination_coefficients(n).unwrap();
        for t in [1e-3, 1e-2, 0.1, 0.4] {
            let e = convergence_error(&f, 0.5, t, &scheme, ErrorNormKind::GridSup).unwrap();
            let direct = taylor_remainder_E(&scheme.coefficients, t * 3.0).norm();
            assert!((e - direct).abs() <= 1e-12);
            let applied = combination_apply(&f, 0.5, t, &scheme).unwrap();
            let difference = inverse_transform(&(&applied - &f)).max_modulus();
            assert!((e - difference).abs() <= 1e-12);
        }
    }
}

#[test]
fn combination_rate_single_mode_slope_equals_term_count() {
    let grid = LatticeGrid::new(1, 64).unwrap();
    let f = SpectralField::mode(grid, &[4], one()).unwrap();
    let r = combination_rate_experiment(&f, 0.5, 0.75, 0.5, &small_times(), ErrorNormKind::GridSup, None).unwrap();
    assert_eq!(r.n_terms, 2);
    assert!(r.pass);
    assert!((r.fit.unwrap().slope - 2.0).abs() < 0.05);
    let r3 = combination_rate_experiment(&f, 0.5, 0.75, 0.5, &small_times(), ErrorNormKind::L2, Some(3)).unwrap();
    assert!((r3.fit.unwrap().slope - 3.0).abs() < 0.05);
}

#[test]
fn combination_rate_band_limited_fields() {
    let grid = LatticeGrid::new(1, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let f = SpectralField::from_fn(grid, |xi| {
        if xi[0].abs() <= 12 {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    for kind in [ErrorNormKind::GridSup, ErrorNormKind::L2] {
        let r = combination_rate_experiment(&f, 0.5, 0.75, 0.5, &small_times(), kind, None).unwrap();
        assert!(r.pass && r.fit.unwrap().slope >= 2.0 - 0.1);
        assert!(r.regularity_certificate.is_finite());
    }
}

#[test]
fn combination_rate_constant_is_vacuous() {
    let grid = LatticeGrid::new(1, 32).unwrap();
    let f = SpectralField::constant(grid, one());
    let r = combination_rate_experiment(&f, 0.5, 0.75, 0.5, &small_times(), ErrorNormKind::GridSup, None).unwrap();
    assert!(r.degenerate && r.pass && r.fit.is_none());
    assert!(r.errors.iter().all(|e| *e == 0.0));
}

#[test]
fn combination_rate_rejects_low_regularity() {
    let grid = LatticeGrid::new(1, 32).unwrap();
    let f = SpectralField::mode(grid, &[2], one()).unwrap();
    let r = combination_rate_experiment(&f, 0.5, 0.5, 0.5, &small_times(), ErrorNormKind::GridSup, None);
    assert!(matches!(r, Err(Error::Domain(_))));
    let r = combination_rate_experiment(&f, 0.5, 0.75, 0.5, &small_times(), ErrorNormKind::GridSup, Some(1));
    assert!(matches!(r, Err(Error::Domain(_))));
}

#[test]
fn riesz_single_mode_rates_and_intercepts() {
    let grid = LatticeGrid::new(1, 64).unwrap();
    let f = SpectralField::mode(grid, &[4], one()).unwrap();
    let mut intercepts = Vec::new();
    for k in [1.0, 2.0, 4.0] {
        let r = riesz_convergence_experiment(&f, k, 0.5, &small_times(), 1e-3).unwrap();
        let fit = r.fit.unwrap();
        assert!((fit.slope - 1.0).abs() < 0.05);
        // Error ≈ z/(k+1) with z = 2t.
        assert!((fit.intercept - (2.0 / (k + 1.0)).ln()).abs() < 0.01);
        assert!(r.pass);
        intercepts.push(fit.intercept);
    }
    assert!(intercepts.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn riesz_constant_has_no_error() {
    let grid = LatticeGrid::new(2, 16).unwrap();
    let f = SpectralField::constant(grid, Complex64::new(0.3, 0.4));
    let r = riesz_convergence_experiment(&f, 2.0, 0.5, &small_times(), 1e-6).unwrap();
    assert!(r.sup_errors.iter().all(|e| *e < 1e-15));
    assert!(r.exceedance_measures.iter().all(|m| *m == 0.0));
    assert!(r.pass);
}

#[test]
fn riesz_atom_exceedance_shrinks() {
    let grid = LatticeGrid::new(1, 1024).unwrap();
    let atom = make_regular_atom(&AtomSpec::new(0.5, [3.0, 0.0], 0.1, 5).unwrap(), &grid).unwrap();
    let f = forward_transform(&atom.field);
    let times = TimeGrid::default_for(0.5).unwrap();
    let r = riesz_convergence_experiment(&f, 1.0, 0.5, &times, 1.0).unwrap();
    assert!(r.pass);
    assert_eq!(*r.exceedance_measures.last().unwrap(), 0.0);
}

#[test]
fn atom_uniformity_single_atom_and_determinism() {
    let lattice = LatticeGrid::new(1, 512).unwrap();
    let times = TimeGrid::geometric(0.5, 16, 1e-4).unwrap();
    let profile = CutoffProfile::default();
    let single = atom_uniformity_experiment(0.5, 0.5, 0.75, 1, 3, &lattice, &times, &profile).unwrap();
    assert_eq!(single.ratio, 1.0);
    let a = atom_uniformity_experiment(0.5, 0.5, 0.75, 8, 3, &lattice, &times, &profile).unwrap();
    let b = atom_uniformity_experiment(0.5, 0.5, 0.75, 8, 3, &lattice, &times, &profile).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.pass, Some(true));
    let below = atom_uniformity_experiment(0.5, 0.5, 0.375, 8, 3, &lattice, &times, &profile).unwrap();
    assert_eq!(below.pass, None);
}
