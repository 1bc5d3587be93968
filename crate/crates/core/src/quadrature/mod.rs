//! Quadrature: the adaptive Gauss-Kronrod engine, the Fourier cosine
//! transform of the oscillating symbol, and the decay checks built on it.

pub mod decay;
pub mod gauss_kronrod;
pub mod oscillatory;

pub use decay::{
    dyadic_e2_tail_check, dyadic_e3_check, verify_small_tau_decay, DecayBranch, E2TailReport, E3Report,
    SmallTauReport,
};
pub use gauss_kronrod::{integrate, QuadValue, Tolerance};
pub use oscillatory::{
    fourier_cosine_mu, fourier_cosine_mu_derivative, fourier_cosine_mu_dyadic,
    fourier_cosine_windowed, PhaseSign, QuadratureSpec, SymbolWindow, MAX_DERIVATIVE_ORDER,
};
