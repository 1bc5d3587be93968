//! Discrete spectral model of the flat torus `[0, 2π)^n`, `n ∈ {1, 2}`.
//!
//! Eigenfunctions of the Laplacian are the exponentials `e^{i⟨ξ,x⟩}` with
//! eigenvalue `|ξ|²`. A [`SpectralField`] stores the coefficients `c(ξ)` of
//! `f(x) = Σ c(ξ) e^{i⟨ξ,x⟩}` on the truncated lattice `[-M/2, M/2-1]^n`;
//! a [`GridField`] stores samples on the uniform spatial grid.
//!
//! Normalization: `c(ξ) = S^{-n} Σ_x f(x) e^{-i⟨ξ,x⟩}` where `S` is the number
//! of spatial points per axis, so that `∫|f|² = (2π)^n Σ|c|²`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Frequency lattice and spatial grid of the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeGrid {
    dimension: usize,
    modes_per_axis: usize,
    spatial_points_per_axis: usize,
}

impl LatticeGrid {
    /// Grid with one spatial point per lattice mode along each axis.
    pub fn new(dimension: usize, modes_per_axis: usize) -> Result<Self> {
        Self::with_oversampling(dimension, modes_per_axis, modes_per_axis)
    }

    pub fn with_oversampling(
        dimension: usize,
        modes_per_axis: usize,
        spatial_points_per_axis: usize,
    ) -> Result<Self> {
        ensure(dimension == 1 || dimension == 2, || {
            format!("dimension must be 1 or 2, got {dimension}")
        })?;
        ensure(modes_per_axis >= 8 && modes_per_axis.is_multiple_of(2), || {
            format!("modes per axis must be even and >= 8, got {modes_per_axis}")
        })?;
        ensure(spatial_points_per_axis >= modes_per_axis, || {
            format!(
                "spatial points per axis ({spatial_points_per_axis}) must be >= modes per axis ({modes_per_axis})"
            )
        })?;
        Ok(Self {
            dimension,
            modes_per_axis,
            spatial_points_per_axis,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn modes_per_axis(&self) -> usize {
        self.modes_per_axis
    }

    pub fn spatial_points_per_axis(&self) -> usize {
        self.spatial_points_per_axis
    }

    /// Number of lattice points, `M^n`.
    pub fn lattice_len(&self) -> usize {
        self.modes_per_axis.pow(self.dimension as u32)
    }

    /// Number of spatial samples, `S^n`.
    pub fn spatial_len(&self) -> usize {
        self.spatial_points_per_axis.pow(self.dimension as u32)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.spatial_points_per_axis as f64
    }

    /// Lebesgue measure of one spatial cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dimension as i32)
    }

    /// Total measure of the torus, `(2π)^n`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dimension as i32)
    }

    pub fn max_frequency(&self) -> i64 {
        self.modes_per_axis as i64 / 2
    }

    /// Largest eigenvalue `|ξ|` present on the lattice.
    pub fn max_eigenvalue(&self) -> f64 {
        let m = self.max_frequency() as f64;
        m * (self.dimension as f64).sqrt()
    }

    fn axis_frequency(&self, i: usize) -> i64 {
        let m = self.modes_per_axis;
        if i < m / 2 {
            i as i64
        } else {
            i as i64 - m as i64
        }
    }

    fn axis_index(&self, xi: i64) -> Result<usize> {
        let half = self.max_frequency();
        if xi < -half || xi >= half {
            return Err(Error::Range {
                what: "frequency",
                detail: format!("{xi} not in [{}, {}]", -half, half - 1),
            });
        }
        Ok(xi.rem_euclid(self.modes_per_axis as i64) as usize)
    }

    /// Lattice point stored at `index`; the second coordinate is 0 when `n = 1`.
    pub fn frequency_at(&self, index: usize) -> [i64; 2] {
        let m = self.modes_per_axis;
        if self.dimension == 1 {
            [self.axis_frequency(index), 0]
        } else {
            [self.axis_frequency(index / m), self.axis_frequency(index % m)]
        }
    }

    pub fn index_of(&self, xi: &[i64]) -> Result<usize> {
        if xi.len() != self.dimension {
            return Err(Error::Shape {
                expected: self.dimension,
                actual: xi.len(),
            });
        }
        let m = self.modes_per_axis;
        match xi {
            [a] => self.axis_index(*a),
            [a, b] => Ok(self.axis_index(*a)? * m + self.axis_index(*b)?),
            _ => unreachable!(),
        }
    }

    /// Eigenvalue `|ξ|` at a storage index.
    pub fn eigenvalue_at(&self, index: usize) -> f64 {
        let [a, b] = self.frequency_at(index);
        ((a * a + b * b) as f64).sqrt()
    }

    /// Spatial coordinates of the sample stored at `index`.
    pub fn point_at(&self, index: usize) -> [f64; 2] {
        let s = self.spatial_points_per_axis;
        let h = self.spacing();
        if self.dimension == 1 {
            [index as f64 * h, 0.0]
        } else {
            [(index / s) as f64 * h, (index % s) as f64 * h]
        }
    }

    /// Periodic (geodesic) distance between two torus points.
    pub fn distance(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let wrap = |d: f64| {
            let d = (d).rem_euclid(2.0 * PI);
            d.min(2.0 * PI - d)
        };
        let dx = wrap(x[0] - y[0]);
        if self.dimension == 1 {
            dx
        } else {
            let dy = wrap(x[1] - y[1]);
            dx.hypot(dy)
        }
    }
}

/// Square root of the Laplacian eigenvalue at lattice point `xi`, i.e. `|ξ|`.
pub fn eigenvalue(grid: &LatticeGrid, xi: &[i64]) -> Result<f64> {
    grid.index_of(xi)?;
    Ok(xi.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt())
}

/// Fourier coefficients on the truncated lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: LatticeGrid,
    coefficients: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: LatticeGrid) -> Self {
        Self {
            grid,
            coefficients: vec![Complex64::new(0.0, 0.0); grid.lattice_len()],
        }
    }

    pub fn from_coefficients(grid: LatticeGrid, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.lattice_len() {
            return Err(Error::Shape {
                expected: grid.lattice_len(),
                actual: coefficients.len(),
            });
        }
        Ok(Self { grid, coefficients })
    }

    /// Builds a field by evaluating `f` at every lattice point.
    pub fn from_fn(grid: LatticeGrid, mut f: impl FnMut([i64; 2]) -> Complex64) -> Self {
        let coefficients = (0..grid.lattice_len())
            .map(|i| f(grid.frequency_at(i)))
            .collect();
        Self { grid, coefficients }
    }

    /// The single exponential `amplitude · e^{i⟨ξ,x⟩}`.
    pub fn mode(grid: LatticeGrid, xi: &[i64], amplitude: Complex64) -> Result<Self> {
        let mut field = Self::zeros(grid);
        let idx = grid.index_of(xi)?;
        field.coefficients[idx] = amplitude;
        Ok(field)
    }

    /// Constant field `value`.
    pub fn constant(grid: LatticeGrid, value: Complex64) -> Self {
        let mut field = Self::zeros(grid);
        field.coefficients[0] = value;
        field
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<Complex64> {
        self.coefficients
    }

    pub fn coefficient(&self, xi: &[i64]) -> Result<Complex64> {
        Ok(self.coefficients[self.grid.index_of(xi)?])
    }

    /// Diagonal action: multiplies the coefficient at `ξ` by `m(|ξ|)`.
    pub fn map_radial(&self, m: impl Fn(f64) -> Complex64) -> SpectralField {
        let coefficients = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| m(self.grid.eigenvalue_at(i)) * c)
            .collect();
        SpectralField {
            grid: self.grid,
            coefficients,
        }
    }

    /// `L²` norm via Parseval, `((2π)^n Σ|c|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.volume() * self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Largest coefficient modulus.
    pub fn max_modulus(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// True when `c(-ξ) = conj(c(ξ))` within `tol` for every `ξ` whose mirror
    /// is on the lattice; modes at `-M/2` must vanish.
    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        let half = self.grid.max_frequency();
        (0..self.grid.lattice_len()).all(|i| {
            let xi = self.grid.frequency_at(i);
            let c = self.coefficients[i];
            if xi.iter().any(|&v| v == -half) {
                return c.norm() <= tol;
            }
            let mirror: Vec<i64> = xi[..self.grid.dimension()].iter().map(|v| -v).collect();
            let j = self.grid.index_of(&mirror).expect("mirror on lattice");
            (self.coefficients[j] - c.conj()).norm() <= tol
        })
    }

    /// Mean (zero-mode coefficient) removed.
    pub fn without_mean(&self) -> SpectralField {
        let mut out = self.clone();
        out.coefficients[0] = Complex64::new(0.0, 0.0);
        out
    }

    fn assert_same_grid(&self, other: &SpectralField) {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.assert_same_grid(rhs);
        SpectralField {
            grid: self.grid,
            coefficients: self
                .coefficients
                .iter()
                .zip(&rhs.coefficients)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.assert_same_grid(rhs);
        SpectralField {
            grid: self.grid,
            coefficients: self
                .coefficients
                .iter()
                .zip(&rhs.coefficients)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul<Complex64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: Complex64) -> SpectralField {
        SpectralField {
            grid: self.grid,
            coefficients: self.coefficients.iter().map(|a| a * rhs).collect(),
        }
    }
}

/// Samples on the uniform spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: LatticeGrid,
    samples: Vec<Complex64>,
}

impl GridField {
    pub fn from_samples(grid: LatticeGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.spatial_len() {
            return Err(Error::Shape {
                expected: grid.spatial_len(),
                actual: samples.len(),
            });
        }
        Ok(Self { grid, samples })
    }

    pub fn from_real(grid: LatticeGrid, samples: Vec<f64>) -> Result<Self> {
        Self::from_samples(
            grid,
            samples.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        )
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: LatticeGrid, mut f: impl FnMut([f64; 2]) -> Complex64) -> Self {
        let samples = (0..grid.spatial_len()).map(|i| f(grid.point_at(i))).collect();
        Self { grid, samples }
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.samples.iter().map(|c| c.norm()).collect()
    }

    pub fn max_modulus(&self) -> f64 {
        self.samples.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_imaginary(&self) -> f64 {
        self.samples.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> GridField {
        GridField {
            grid: self.grid,
            samples: self.samples.iter().map(|&c| f(c)).collect(),
        }
    }

    /// Sum of samples times cell volume.
    pub fn integral(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() * self.grid.cell_volume()
    }
}

impl Sub for &GridField {
    type Output = GridField;
    fn sub(self, rhs: &GridField) -> GridField {
        assert_eq!(self.grid, rhs.grid, "fields live on different grids");
        GridField {
            grid: self.grid,
            samples: self
                .samples
                .iter()
                .zip(&rhs.samples)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

type PlanCache = HashMap<(usize, bool), Arc<dyn Fft<f64>>>;

thread_local! {
    static PLANNER: RefCell<(FftPlanner<f64>, PlanCache)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        cache
            .entry((len, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    })
}

/// Unnormalized n-dimensional FFT over an `s^n` row-major buffer.
fn fft_nd(buffer: &mut [Complex64], s: usize, dimension: usize, inverse: bool) {
    let fft = plan(s, inverse);
    for row in buffer.chunks_exact_mut(s) {
        fft.process(row);
    }
    if dimension == 2 {
        let mut column = vec![Complex64::new(0.0, 0.0); s];
        for j in 0..s {
            for i in 0..s {
                column[i] = buffer[i * s + j];
            }
            fft.process(&mut column);
            for i in 0..s {
                buffer[i * s + j] = column[i];
            }
        }
    }
}

fn spatial_index(grid: &LatticeGrid, xi: [i64; 2]) -> usize {
    let s = grid.spatial_points_per_axis as i64;
    let a = xi[0].rem_euclid(s) as usize;
    if grid.dimension == 1 {
        a
    } else {
        a * grid.spatial_points_per_axis + xi[1].rem_euclid(s) as usize
    }
}

/// Coefficients of `f` on the lattice. When the grid oversamples, modes
/// outside the lattice are discarded.
pub fn forward_transform(f: &GridField) -> SpectralField {
    let grid = f.grid;
    let s = grid.spatial_points_per_axis;
    let mut buffer = f.samples.clone();
    fft_nd(&mut buffer, s, grid.dimension, false);
    let scale = 1.0 / grid.spatial_len() as f64;
    let coefficients = (0..grid.lattice_len())
        .map(|i| buffer[spatial_index(&grid, grid.frequency_at(i))] * scale)
        .collect();
    SpectralField { grid, coefficients }
}

/// Samples of `Σ c(ξ) e^{i⟨ξ,x⟩}` on the spatial grid.
pub fn inverse_transform(field: &SpectralField) -> GridField {
    let grid = field.grid;
    let s = grid.spatial_points_per_axis;
    let mut buffer = vec![Complex64::new(0.0, 0.0); grid.spatial_len()];
    for (i, c) in field.coefficients.iter().enumerate() {
        buffer[spatial_index(&grid, grid.frequency_at(i))] = *c;
    }
    fft_nd(&mut buffer, s, grid.dimension, true);
    GridField {
        grid,
        samples: buffer,
    }
}

/// `(Σ_x |f(x)|^p · cell)^{1/p}`.
pub fn grid_norm(f: &GridField, p: f64) -> Result<f64> {
    ensure(p > 0.0 && p.is_finite(), || format!("norm exponent must be positive, got {p}"))?;
    let sum: f64 = f.samples.iter().map(|c| c.norm().powf(p)).sum();
    Ok((sum * f.grid.cell_volume()).powf(1.0 / p))
}
