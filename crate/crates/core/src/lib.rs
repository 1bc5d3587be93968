//! Spectral numerics on flat tori for oscillating multipliers, fractional
//! Schrödinger propagators, Riesz means and Vandermonde combination schemes.
//!
//! The crate is organised bottom-up:
//!
//! * [`torus`]: frequency lattice, transforms and grid norms on `[0, 2π)^n`.
//! * [`symbols`]: scalar symbols: cutoffs, the oscillating symbol, its dyadic
//!   pieces, the Riesz-mean symbol and the combination remainder.
//! * [`quadrature`]: adaptive Gauss-Kronrod integration and the Fourier cosine
//!   transform of the oscillating symbol via contour deformation.
//! * [`fit`]: log-log least squares decay fits.
//! * [`operators`]: diagonal operators, maximal functions and kernel lattice sums.
//! * [`hardy`]: atoms, heat maximal quasinorms, Riesz potentials, weak-`L^p`.
//! * [`extrapolation`]: combination coefficients and rate experiments.

pub mod error;
pub mod extrapolation;
pub mod fit;
pub mod hardy;
pub mod operators;
pub mod quadrature;
pub mod symbols;
pub mod torus;

pub use error::{Error, Result};
pub use fit::{fit_decay_exponent, DecayFit};
pub use symbols::{CutoffKind, CutoffProfile, SymbolParams};
pub use torus::{GridField, LatticeGrid, SpectralField};

pub use num_complex::Complex64;
