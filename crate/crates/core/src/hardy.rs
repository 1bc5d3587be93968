//! Hardy-space tooling: atoms with certified cancellation, the heat
//! semigroup and its maximal function, Riesz potentials, weak-`L^p`.

use std::f64::consts::PI;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::fit::log_space;
use crate::operators::{apply_multiplier, maximal_over};
use crate::torus::{grid_norm, inverse_transform, GridField, LatticeGrid, SpectralField};

pub const MAX_ATOM_RADIUS: f64 = PI / 10.0;
/// Retries with fresh pseudorandom streams before a projection is declared
/// degenerate.
pub const ATOM_RETRIES: u64 = 8;
/// Cancellation certificate relative to `‖a‖₂`.
pub const MOMENT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub p: f64,
    pub center: [f64; 2],
    pub radius: f64,
    pub seed: u64,
}

impl AtomSpec {
    pub fn new(p: f64, center: [f64; 2], radius: f64, seed: u64) -> Result<Self> {
        ensure(p > 0.0 && p < 1.0, || format!("p must lie in (0, 1), got {p}"))?;
        ensure(radius > 0.0 && radius <= MAX_ATOM_RADIUS * (1.0 + 1e-12), || {
            format!("radius must lie in (0, π/10], got {radius}")
        })?;
        ensure(center.iter().all(|c| c.is_finite()), || "center must be finite".to_string())?;
        Ok(Self { p, center, radius, seed })
    }

    /// `floor(n(1/p - 1))`.
    pub fn degree(&self, dimension: usize) -> usize {
        cancellation_degree(self.p, dimension)
    }

    /// Measure of the ball: `2r` on the circle, `πr²` on the 2-torus.
    pub fn ball_measure(&self, dimension: usize) -> f64 {
        if dimension == 1 {
            2.0 * self.radius
        } else {
            PI * self.radius * self.radius
        }
    }
}

/// `floor(n(1/p - 1))`, robust to `1/p` landing a rounding error below an
/// integer.
pub fn cancellation_degree(p: f64, dimension: usize) -> usize {
    (dimension as f64 * (1.0 / p - 1.0) + 1e-9).floor().max(0.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomKind {
    Regular,
    Exceptional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub field: GridField,
    pub kind: AtomKind,
    /// Present for regular atoms.
    pub spec: Option<AtomSpec>,
    pub seed: u64,
    /// Largest `|∫ a (x-z)^γ|` over `|γ| <= d`; regular atoms only.
    pub certified_moment_bound: Option<f64>,
    pub certified_l2: f64,
}

/// Multi-indices of total degree `<= d` in `n` variables, graded, and
/// lexicographically descending within a degree.
pub fn multi_indices(dimension: usize, degree: usize) -> Vec<[usize; 2]> {
    let mut out = Vec::new();
    for total in 0..=degree {
        if dimension == 1 {
            out.push([total, 0]);
        } else {
            for first in (0..=total).rev() {
                out.push([first, total - first]);
            }
        }
    }
    out
}

fn wrap(d: f64) -> f64 {
    (d + PI).rem_euclid(2.0 * PI) - PI
}

/// Local coordinates `x - z`, wrapped to `[-π, π)` per axis.
fn local(grid: &LatticeGrid, index: usize, center: [f64; 2]) -> [f64; 2] {
    let x = grid.point_at(index);
    let dy = if grid.dimension() == 1 { 0.0 } else { wrap(x[1] - center[1]) };
    [wrap(x[0] - center[0]), dy]
}

fn monomial(y: [f64; 2], gamma: [usize; 2]) -> f64 {
    y[0].powi(gamma[0] as i32) * y[1].powi(gamma[1] as i32)
}

/// `∫ f(x) (x - center)^γ dx` by grid quadrature, one entry per multi-index
/// of [`multi_indices`].
pub fn moment_integrals(f: &GridField, center: [f64; 2], degree: usize) -> Vec<Complex64> {
    let grid = *f.grid();
    let indices = multi_indices(grid.dimension(), degree);
    let mut out = vec![Complex64::new(0.0, 0.0); indices.len()];
    for (i, v) in f.samples().iter().enumerate() {
        if *v == Complex64::new(0.0, 0.0) {
            continue;
        }
        let y = local(&grid, i, center);
        for (o, g) in out.iter_mut().zip(&indices) {
            *o += v * monomial(y, *g);
        }
    }
    let cell = grid.cell_volume();
    out.into_iter().map(|m| m * cell).collect()
}

/// `exp(1 - 1/(1 - ρ²))` on `ρ < 1`.
fn bump(rho: f64) -> f64 {
    if rho >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - rho * rho)).exp()
    }
}

/// Smooth pseudorandom profile on the unit ball in scaled coordinates.
fn random_profile(rng: &mut ChaCha8Rng, dimension: usize) -> impl Fn([f64; 2]) -> f64 {
    let terms: Vec<(f64, [f64; 2], f64)> = (0..6)
        .map(|_| {
            let w1 = if dimension == 1 { 0.0 } else { rng.gen_range(-3.0..3.0) };
            (rng.gen_range(-1.0..1.0), [rng.gen_range(-3.0..3.0), w1], rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    move |y| {
        terms
            .iter()
            .map(|(a, w, phase)| a * (w[0] * y[0] + w[1] * y[1] + phase).cos())
            .sum()
    }
}

/// Regular `(p, 2)`-atom supported in `B(z, r)`.
///
/// A pseudorandom profile `g` times the bump `w` is corrected by `w·P`, with
/// `P` the polynomial of degree `<= d` that makes every moment vanish. This is
/// the projection orthogonal in the `w`-weighted inner product, which keeps
/// the atom smooth at the edge of the ball. One step of residual correction
/// follows, then the atom is scaled to `‖a‖₂ = |B|^{1/2-1/p}`.
pub fn make_regular_atom(spec: &AtomSpec, grid: &LatticeGrid) -> Result<Atom> {
    let n = grid.dimension();
    let h = grid.spacing();
    if 2.0 * spec.radius < 4.0 * h {
        return Err(Error::Resolution(format!(
            "radius {} spans fewer than 4 cells of width {h}",
            spec.radius
        )));
    }
    let d = spec.degree(n);
    let indices = multi_indices(n, d);
    let support: Vec<(usize, [f64; 2], f64)> = (0..grid.spatial_len())
        .filter_map(|i| {
            let y = local(grid, i, spec.center);
            let ys = [y[0] / spec.radius, y[1] / spec.radius];
            let w = bump(ys[0].hypot(ys[1]));
            (w > 0.0).then_some((i, ys, w))
        })
        .collect();
    ensure(support.len() > indices.len(), || {
        format!("ball holds {} points, need more than {}", support.len(), indices.len())
    })?;
    let basis = DMatrix::from_fn(support.len(), indices.len(), |r, c| monomial(support[r].1, indices[c]));
    let weights = DVector::from_iterator(support.len(), support.iter().map(|s| s.2));
    let weighted = DMatrix::from_fn(support.len(), indices.len(), |r, c| basis[(r, c)] * weights[r]);
    let gram = basis.transpose() * &weighted;
    let lu = gram.clone().lu();
    let target = spec.ball_measure(n).powf(0.5 - 1.0 / spec.p);
    let cell = grid.cell_volume();

    for attempt in 0..=ATOM_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(attempt);
        let profile = random_profile(&mut rng, n);
        let g = DVector::from_iterator(support.len(), support.iter().map(|s| profile(s.1)));
        let raw = g.component_mul(&weights);
        let Some(coef) = lu.solve(&(weighted.transpose() * &g)) else {
            return Err(Error::Degenerate("moment Gram matrix is singular".into()));
        };
        let mut a = &raw - weighted.clone() * coef;
        if let Some(fix) = lu.solve(&(basis.transpose() * &a)) {
            a -= weighted.clone() * fix;
        }
        let norm = (a.norm_squared() * cell).sqrt();
        if norm <= 1e-6 * (raw.norm_squared() * cell).sqrt() {
            continue;
        }
        let mut samples = vec![Complex64::new(0.0, 0.0); grid.spatial_len()];
        for (s, v) in support.iter().zip(a.iter()) {
            samples[s.0] = Complex64::new(v * target / norm, 0.0);
        }
        let field = GridField::from_samples(*grid, samples)?;
        let certified_l2 = grid_norm(&field, 2.0)?;
        let bound = moment_integrals(&field, spec.center, d)
            .iter()
            .map(|m| m.norm())
            .fold(0.0, f64::max);
        if bound <= MOMENT_TOLERANCE * certified_l2 {
            return Ok(Atom {
                field,
                kind: AtomKind::Regular,
                spec: Some(*spec),
                seed: spec.seed,
                certified_moment_bound: Some(bound),
                certified_l2,
            });
        }
    }
    Err(Error::Degenerate(format!(
        "no certified atom after {ATOM_RETRIES} retries (seed {})",
        spec.seed
    )))
}

/// Pseudorandom smooth real field with sup modulus exactly 1.
pub fn make_exceptional_atom(grid: &LatticeGrid, seed: u64) -> Result<Atom> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coefficients = SpectralField::from_fn(*grid, |xi| {
        if xi[0].abs() <= 4 && xi[1].abs() <= 4 {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let real: Vec<f64> = inverse_transform(&coefficients).samples().iter().map(|c| c.re).collect();
    let sup = real.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup == 0.0 {
        return Err(Error::Degenerate("random field vanished".into()));
    }
    let field = GridField::from_real(*grid, real.into_iter().map(|v| v / sup).collect())?;
    let certified_l2 = grid_norm(&field, 2.0)?;
    Ok(Atom {
        field,
        kind: AtomKind::Exceptional,
        spec: None,
        seed,
        certified_moment_bound: None,
        certified_l2,
    })
}

/// Multiplier `|ξ|^s`. The zero mode is dropped for `s != 0`.
pub fn riesz_potential(f: &SpectralField, s: f64) -> SpectralField {
    if s == 0.0 {
        return f.clone();
    }
    apply_multiplier(f, |l| {
        if l == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(l.powf(s), 0.0)
        }
    })
}

/// Multiplier `e^{-t|ξ|²}`.
pub fn heat_semigroup(f: &SpectralField, t: f64) -> Result<SpectralField> {
    ensure(t >= 0.0 && t.is_finite(), || format!("heat time must be nonnegative, got {t}"))?;
    Ok(apply_multiplier(f, |l| Complex64::new((-t * l * l).exp(), 0.0)))
}

/// Positive, strictly increasing heat times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatTimes {
    times: Vec<f64>,
}

impl Default for HeatTimes {
    /// 48 geometric times from `1e-6` to `10`.
    fn default() -> Self {
        Self::geometric(1e-6, 10.0, 48).expect("valid default")
    }
}

impl HeatTimes {
    pub fn geometric(t_min: f64, t_max: f64, count: usize) -> Result<Self> {
        ensure(t_min > 0.0 && t_min < t_max && t_max.is_finite(), || {
            format!("need 0 < t_min < t_max, got [{t_min}, {t_max}]")
        })?;
        ensure(count >= 2, || format!("need at least 2 heat times, got {count}"))?;
        Ok(Self {
            times: log_space(t_min, t_max, count),
        })
    }

    /// Adds the geometric midpoint of every consecutive pair.
    pub fn refined(&self) -> Self {
        let mut times = Vec::with_capacity(2 * self.times.len());
        for w in self.times.windows(2) {
            times.push(w[0]);
            times.push((w[0] * w[1]).sqrt());
        }
        times.push(*self.times.last().expect("nonempty"));
        Self { times }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

/// `‖max_{t ∈ heat} |e^{-tL} f|‖_{L^p}` on the grid. A lower estimate of the
/// heat-maximal quasinorm, since the continuous sup is replaced by a max.
pub fn hp_quasinorm_estimate(f: &SpectralField, p: f64, heat: &HeatTimes) -> Result<f64> {
    let grid = f.grid();
    let top = grid.max_eigenvalue();
    let t_min = heat.times()[0];
    if (-t_min * top * top).exp() < 0.5 {
        return Err(Error::Resolution(format!(
            "t_min = {t_min} damps the top mode |ξ| = {top} below 1/2"
        )));
    }
    let maximal = maximal_over(f, heat_semigroup, heat.times())?;
    grid_norm(&maximal, p)
}

/// `sup_λ λ |{|f| > λ}|^{1/p}`, exact for the grid's simple function: the sup
/// is approached as `λ` rises to a sample modulus `v`, where the level set is
/// `{|f| >= v}`.
pub fn weak_lp_quasinorm(f: &GridField, p: f64) -> Result<f64> {
    ensure(p > 0.0 && p.is_finite(), || format!("p must be positive, got {p}"))?;
    let mut values = f.moduli();
    values.sort_unstable_by(|a, b| b.total_cmp(a));
    let cell = f.grid().cell_volume();
    let mut best = 0.0f64;
    let mut i = 0;
    while i < values.len() {
        let v = values[i];
        while i < values.len() && values[i] == v {
            i += 1;
        }
        best = best.max(v * (i as f64 * cell).powf(1.0 / p));
    }
    Ok(best)
}

/// One row of an atom batch file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub seed: u64,
    pub kind: AtomKind,
    pub p: Option<f64>,
    pub center_x: Option<f64>,
    pub center_y: Option<f64>,
    pub radius: Option<f64>,
    pub degree: Option<usize>,
    pub certified_moment_bound: Option<f64>,
    pub certified_l2: f64,
}

impl From<&Atom> for AtomRecord {
    fn from(atom: &Atom) -> Self {
        let n = atom.field.grid().dimension();
        Self {
            seed: atom.seed,
            kind: atom.kind,
            p: atom.spec.map(|s| s.p),
            center_x: atom.spec.map(|s| s.center[0]),
            center_y: atom.spec.map(|s| s.center[1]),
            radius: atom.spec.map(|s| s.radius),
            degree: atom.spec.map(|s| s.degree(n)),
            certified_moment_bound: atom.certified_moment_bound,
            certified_l2: atom.certified_l2,
        }
    }
}

/// Writes one CSV record per atom.
pub fn write_atom_batch(writer: impl Write, atoms: &[Atom]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for atom in atoms {
        w.serialize(AtomRecord::from(atom)).map_err(io_error)?;
    }
    w.flush().map_err(|e| Error::Unsupported(format!("write failed: {e}")))
}

pub fn read_atom_batch(reader: impl Read) -> Result<Vec<AtomRecord>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(io_error))
        .collect()
}

/// Rebuilds a regular atom from its record.
pub fn rebuild_regular_atom(record: &AtomRecord, grid: &LatticeGrid) -> Result<Atom> {
    let (Some(p), Some(x), Some(y), Some(r)) = (record.p, record.center_x, record.center_y, record.radius) else {
        return Err(Error::domain("record does not describe a regular atom"));
    };
    make_regular_atom(&AtomSpec::new(p, [x, y], r, record.seed)?, grid)
}

fn io_error(e: csv::Error) -> Error {
    Error::Unsupported(format!("atom batch I/O failed: {e}"))
}
