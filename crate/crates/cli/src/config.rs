//! Experiment configuration: JSON file, flag overrides, per-experiment
//! defaults and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use oscimax::CutoffKind;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SymbolDecay,
    DyadicDecay,
    KernelDecay,
    RateCombo,
    RateRiesz,
    AtomUniformity,
    MaximalSweep,
    PartitionCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::SymbolDecay,
        ExperimentKind::DyadicDecay,
        ExperimentKind::KernelDecay,
        ExperimentKind::RateCombo,
        ExperimentKind::RateRiesz,
        ExperimentKind::AtomUniformity,
        ExperimentKind::MaximalSweep,
        ExperimentKind::PartitionCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SymbolDecay => "symbol-decay",
            ExperimentKind::DyadicDecay => "dyadic-decay",
            ExperimentKind::KernelDecay => "kernel-decay",
            ExperimentKind::RateCombo => "rate-combo",
            ExperimentKind::RateRiesz => "rate-riesz",
            ExperimentKind::AtomUniformity => "atom-uniformity",
            ExperimentKind::MaximalSweep => "maximal-sweep",
            ExperimentKind::PartitionCheck => "partition-check",
        }
    }

    /// The result each experiment checks.
    pub fn anchor(self) -> &'static str {
        match self {
            ExperimentKind::SymbolDecay => {
                "small-tau decay exponent of the symbol's Fourier transform and its derivatives, plus large-tau decay"
            }
            ExperimentKind::DyadicDecay => {
                "dyadic pieces: rapid tail decay off the stationary band and 2^{k(1-beta-alpha/2)} scaling on it"
            }
            ExperimentKind::KernelDecay => "near-diagonal size of the kernel on the circle by lattice sums",
            ExperimentKind::RateCombo => "convergence rate t^{beta/alpha} of the Vandermonde combination of propagators",
            ExperimentKind::RateRiesz => "convergence of Riesz means as t -> 0 and envelope decay of their symbol",
            ExperimentKind::AtomUniformity => "uniform weak-L^p bound of the maximal operator on regular atoms",
            ExperimentKind::MaximalSweep => "time-grid discretization gap of the maximal operator",
            ExperimentKind::PartitionCheck => "dyadic partition of unity built from the cutoff",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Every parameter any experiment reads. After [`ExperimentConfig::resolve`]
/// the keys an experiment uses are filled in and the rest are absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Riesz orders.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<f64>>,
    /// Riesz orders whose symbol envelope is fitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope_k: Option<Vec<f64>>,
    /// Derivative order of the transform.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    /// Dyadic scales.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_terms: Option<usize>,
    /// Lattice modes per axis.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_modes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<f64>,
    /// Kernel time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Gaussian regularization of lattice sums.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atom_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<CutoffKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_order: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($field:ident),* $(,)?) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )*
    };
}

macro_rules! keys {
    ($cfg:ident; $($field:ident),* $(,)?) => {
        vec![$( (stringify!($field), $cfg.$field.is_some()) ),*]
    };
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Values set in `other` replace those in `self`.
    pub fn overlay(&mut self, other: &ExperimentConfig) {
        overlay!(self, other; experiment, alpha, beta, p, k, envelope_k, order, scales, n_terms, n_modes,
            dimension, sigma, t_min, time_count, seed, samples, tau_lo, tau_hi, c1, c2, span, t, eps, mode,
            band, threshold, z_lo, z_hi, atom_count, radius, levels, u_max, profile, profile_order,
            abs_tolerance, rel_tolerance, out);
    }

    fn present_keys(&self) -> Vec<(&'static str, bool)> {
        keys!(self; alpha, beta, p, k, envelope_k, order, scales, n_terms, n_modes, dimension, sigma, t_min,
            time_count, seed, samples, tau_lo, tau_hi, c1, c2, span, t, eps, mode, band, threshold, z_lo,
            z_hi, atom_count, radius, levels, u_max, profile, profile_order, abs_tolerance, rel_tolerance)
    }

    /// Defaults for every key the experiment reads.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut c = ExperimentConfig {
            experiment: Some(kind),
            out: Some(PathBuf::from(format!("oscimax-out/{}", kind.name()))),
            ..Default::default()
        };
        let profile = |c: &mut ExperimentConfig| {
            c.profile = Some(CutoffKind::SmoothstepPoly);
            c.profile_order = Some(7);
        };
        match kind {
            ExperimentKind::SymbolDecay => {
                c.alpha = Some(0.5);
                c.beta = Some(0.5);
                c.order = Some(0);
                c.tau_lo = Some(1e-3);
                c.tau_hi = Some(0.1);
                c.samples = Some(25);
                c.abs_tolerance = Some(1e-12);
                c.rel_tolerance = Some(1e-10);
                profile(&mut c);
            }
            ExperimentKind::DyadicDecay => {
                c.alpha = Some(0.5);
                c.beta = Some(1.0);
                c.scales = Some(vec![4, 5, 6, 7, 8]);
                c.c1 = Some(0.125);
                c.c2 = Some(8.0);
                c.span = Some(8.0);
                c.samples = Some(49);
                c.abs_tolerance = Some(1e-16);
                c.rel_tolerance = Some(1e-12);
                profile(&mut c);
            }
            ExperimentKind::KernelDecay => {
                c.alpha = Some(0.5);
                c.beta = Some(0.5);
                c.t = Some(0.1);
                c.eps = Some(1e-9);
                c.samples = Some(25);
                profile(&mut c);
            }
            ExperimentKind::RateCombo => {
                c.alpha = Some(0.5);
                c.beta = Some(0.75);
                c.p = Some(0.5);
                c.n_modes = Some(64);
                c.dimension = Some(1);
                c.sigma = Some(1e-2);
                c.t_min = Some(1e-4);
                c.time_count = Some(25);
                c.mode = Some(4);
                c.band = Some(12);
                c.seed = Some(1);
            }
            ExperimentKind::RateRiesz => {
                c.alpha = Some(0.5);
                c.k = Some(vec![1.0, 2.0, 4.0]);
                c.envelope_k = Some(vec![1.0, 2.0]);
                c.n_modes = Some(64);
                c.dimension = Some(1);
                c.sigma = Some(1e-2);
                c.t_min = Some(1e-4);
                c.time_count = Some(25);
                c.mode = Some(4);
                c.threshold = Some(1e-3);
                c.z_lo = Some(100.0);
                c.z_hi = Some(1e4);
            }
            ExperimentKind::AtomUniformity => {
                c.alpha = Some(0.5);
                c.beta = Some(0.75);
                c.p = Some(0.5);
                c.atom_count = Some(50);
                c.n_modes = Some(4096);
                c.dimension = Some(1);
                c.sigma = Some(0.5);
                c.time_count = Some(64);
                c.seed = Some(7);
                profile(&mut c);
            }
            ExperimentKind::MaximalSweep => {
                c.alpha = Some(0.5);
                c.beta = Some(0.75);
                c.p = Some(0.5);
                c.n_modes = Some(1024);
                c.dimension = Some(1);
                c.sigma = Some(0.5);
                c.time_count = Some(64);
                c.radius = Some(0.1);
                c.seed = Some(3);
                profile(&mut c);
            }
            ExperimentKind::PartitionCheck => {
                c.samples = Some(10_000);
                c.levels = Some(24);
                c.u_max = Some(1e6);
                c.seed = Some(0);
                profile(&mut c);
            }
        }
        c
    }

    /// Fills defaults for `kind` and rejects keys the experiment does not read.
    pub fn resolve(&self, kind: ExperimentKind) -> Result<ResolvedConfig, CliError> {
        if let Some(e) = self.experiment {
            if e != kind {
                return Err(CliError::Usage(format!(
                    "config names experiment {e} but {kind} was requested"
                )));
            }
        }
        let defaults = Self::defaults(kind);
        let allowed = defaults.present_keys();
        for ((key, set), (_, known)) in self.present_keys().into_iter().zip(allowed) {
            if set && !known {
                return Err(CliError::Usage(format!("{kind} does not use the key `{key}`")));
            }
        }
        let mut resolved = defaults;
        resolved.overlay(self);
        resolved.experiment = Some(kind);
        Ok(ResolvedConfig { kind, inner: resolved })
    }
}

/// A configuration with all defaults materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub kind: ExperimentKind,
    pub inner: ExperimentConfig,
}

macro_rules! getter {
    ($($name:ident: $ty:ty),* $(,)?) => {
        $(
            pub fn $name(&self) -> $ty {
                self.inner.$name.clone().expect(concat!("resolved key ", stringify!($name)))
            }
        )*
    };
}

impl ResolvedConfig {
    getter!(alpha: f64, beta: f64, p: f64, k: Vec<f64>, envelope_k: Vec<f64>, order: u32, scales: Vec<u32>,
        n_modes: usize, dimension: usize, sigma: f64, t_min: f64, time_count: usize, seed: u64, samples: usize,
        tau_lo: f64, tau_hi: f64, c1: f64, c2: f64, span: f64, t: f64, eps: f64, mode: i64, band: i64,
        threshold: f64, z_lo: f64, z_hi: f64, atom_count: usize, radius: f64, levels: u32, u_max: f64,
        profile: CutoffKind, profile_order: u32, abs_tolerance: f64, rel_tolerance: f64, out: PathBuf);

    pub fn n_terms(&self) -> Option<usize> {
        self.inner.n_terms
    }

    /// The config as embedded in reports: every resolved key except the
    /// output directory.
    pub fn report_view(&self) -> ExperimentConfig {
        ExperimentConfig {
            out: None,
            ..self.inner.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_only_name_keys_they_use() {
        let c = ExperimentConfig::defaults(ExperimentKind::PartitionCheck);
        assert!(c.alpha.is_none() && c.levels == Some(24));
        let k = ExperimentConfig::defaults(ExperimentKind::KernelDecay);
        assert!(k.p.is_none() && k.eps == Some(1e-9));
    }

    #[test]
    fn overlay_keeps_unset_values() {
        let mut base = ExperimentConfig::defaults(ExperimentKind::RateCombo);
        base.overlay(&ExperimentConfig {
            beta: Some(1.0),
            ..Default::default()
        });
        assert_eq!(base.beta, Some(1.0));
        assert_eq!(base.alpha, Some(0.5));
    }

    #[test]
    fn report_view_drops_output_path() {
        let r = ExperimentConfig::default().resolve(ExperimentKind::SymbolDecay).unwrap();
        assert!(r.inner.out.is_some());
        assert!(r.report_view().out.is_none());
        assert_eq!(r.report_view().experiment, Some(ExperimentKind::SymbolDecay));
    }

    #[test]
    fn kinds_serialize_in_kebab_case() {
        for kind in ExperimentKind::ALL {
            assert_eq!(serde_json::to_string(&kind).unwrap(), format!("\"{}\"", kind.name()));
        }
    }
}
