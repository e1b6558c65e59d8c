//! Emission and transmission spectra from two-time correlations.
//!
//! Correlations are propagated with the quantum regression theorem on the
//! linearised moment equations and Fourier transformed in the frequency
//! domain: S(ω) = (1/π) Re x̃(s = −iω), one linear solve per frequency.

mod linewidth;
mod maser;
mod qrt;
mod thermal;

pub use linewidth::{fwhm, fwhm_adaptive, fwhm_of_fn, LineWidth};
pub use maser::{maser_closed_form, maser_linewidth, maser_spectrum, maser_system};
pub use qrt::{
    build_qrt_system, laplace_correlation, max_real_eigenvalue, qrt_initial, qrt_matrix, FixedOp, QrtSystem,
    BASIS,
};
pub use thermal::{
    incoherent_driven_spectra, thermal_output_spectrum, thermal_output_spectrum_from, DrivenSpectra,
    Normalization, ThermalOutputConfig,
};

use crate::cumulant::CumulantError;
use crate::C64;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectraError {
    #[error("linearised dynamics unstable (max Re λ = {max_re:e})")]
    Unstable { max_re: f64 },
    #[error("near-singular Laplace solve at s = {s} (condition {cond:e})")]
    NearSingular { s: C64, cond: f64 },
    #[error("no half-maximum crossing inside the grid; widen the frequency window")]
    NoCrossing,
    #[error("spectrum has more than one peak above half maximum")]
    Multimodal,
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Cumulant(#[from] CumulantError),
}

/// Sampled spectrum; `channels`, when present, sum to `total`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumCurve {
    pub omega: Vec<f64>,
    pub total: Vec<f64>,
    pub channels: Vec<(String, Vec<f64>)>,
}

impl SpectrumCurve {
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// Local minima of `total`, as (ω, S) pairs in grid order.
    pub fn dips(&self) -> Vec<(f64, f64)> {
        extrema(&self.omega, &self.total, |a, b| a < b)
    }

    /// Local maxima of `total`.
    pub fn peaks(&self) -> Vec<(f64, f64)> {
        extrema(&self.omega, &self.total, |a, b| a > b)
    }
}

fn extrema(x: &[f64], y: &[f64], better: impl Fn(f64, f64) -> bool) -> Vec<(f64, f64)> {
    (1..y.len().saturating_sub(1))
        .filter(|&i| better(y[i], y[i - 1]) && !better(y[i + 1], y[i]))
        .map(|i| (x[i], y[i]))
        .collect()
}

pub(crate) fn spectral_value(x: C64) -> f64 {
    x.re / std::f64::consts::PI
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extrema_on_a_double_well() {
        let x: Vec<f64> = (0..201).map(|k| -2.0 + 0.02 * k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| (v * v - 1.0).powi(2)).collect();
        let c = SpectrumCurve {
            omega: x,
            total: y,
            channels: vec![],
        };
        let dips = c.dips();
        assert_eq!(dips.len(), 2);
        assert!((dips[0].0 + 1.0).abs() < 1e-9 && (dips[1].0 - 1.0).abs() < 1e-9);
        assert_eq!(c.peaks().len(), 1);
    }
}
