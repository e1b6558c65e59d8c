use super::qrt::{build_qrt_system, laplace_correlation, FixedOp};
use super::{spectral_value, SpectraError, SpectrumCurve};
use crate::cumulant::{analytic_maser_steady, incoherent_steady, CoherentState, SteadyOptions};
use crate::params::ValidParams;
use crate::C64;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `background` when the reservoir level is positive, else `literal`.
    #[default]
    Auto,
    /// Divide by the reservoir level b0, so an empty cavity gives 1.
    Background,
    /// Divide by b0 + 2κ(⟨a†a⟩ − n̄).
    Literal,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ThermalOutputConfig {
    /// Reservoir spectral density per rad/s; `None` means n̄/2π, the level
    /// of a white thermal input in the same transform convention.
    pub b0: Option<f64>,
    pub normalization: Normalization,
}

/// Output spectrum of an undriven cavity radiating into a thermal reservoir:
/// reservoir background, cavity emission, and the interference term built
/// from the commutator ⟨[a†(0), a(τ)]⟩.
pub fn thermal_output_spectrum(
    p: &ValidParams,
    config: &ThermalOutputConfig,
    omega_grid: &[f64],
) -> Result<SpectrumCurve, SpectraError> {
    if p.params.eta.norm() > 0.0 {
        return Err(SpectraError::Precondition("thermal output spectrum needs eta = 0".into()));
    }
    let steady = match analytic_maser_steady(p) {
        Ok(s) => s.state(),
        Err(_) => incoherent_steady(p, None, &SteadyOptions::default())?.state,
    };
    thermal_output_spectrum_from(p, &steady.to_coherent(), config, omega_grid)
}

pub fn thermal_output_spectrum_from(
    p: &ValidParams,
    steady: &CoherentState,
    config: &ThermalOutputConfig,
    omega_grid: &[f64],
) -> Result<SpectrumCurve, SpectraError> {
    let nbar = p.nbar;
    let kappa = p.params.kappa;
    let b0 = config.b0.unwrap_or(nbar / (2.0 * std::f64::consts::PI));
    if !(b0 >= 0.0) {
        return Err(SpectraError::Precondition("b0 must be non-negative".into()));
    }
    let norm = match config.normalization {
        Normalization::Auto if b0 > 0.0 => b0,
        Normalization::Background => b0,
        Normalization::Auto | Normalization::Literal => b0 + 2.0 * kappa * (steady.photons() - nbar),
        Normalization::None => 1.0,
    };
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(SpectraError::Precondition(format!("normalisation constant {norm:e} is not positive")));
    }
    let cav = build_qrt_system(p, steady, FixedOp::ADagger)?;
    // c(τ) = −⟨[a†(0), O(τ)]⟩ starts at 1 on the a component only
    let mut e_a = DVector::zeros(5);
    e_a[0] = C64::new(1.0, 0.0);
    let comm = cav.with_initial(e_a);
    let rows = omega_grid
        .par_iter()
        .map(|w| {
            let s = C64::new(0.0, -w);
            let xc = laplace_correlation(&cav, s)?[0];
            let xm = laplace_correlation(&comm, s)?[0];
            Ok((
                2.0 * kappa * spectral_value(xc) / norm,
                -2.0 * kappa * nbar * spectral_value(xm) / norm,
            ))
        })
        .collect::<Result<Vec<_>, SpectraError>>()?;
    let background = vec![b0 / norm; omega_grid.len()];
    let cavity: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let interference: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let total = (0..omega_grid.len())
        .map(|k| background[k] + cavity[k] + interference[k])
        .collect();
    Ok(SpectrumCurve {
        omega: omega_grid.to_vec(),
        total,
        channels: vec![
            ("reservoir_background".into(), background),
            ("cavity".into(), cavity),
            ("interference".into(), interference),
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrivenSpectra {
    pub mode: SpectrumCurve,
    pub fluorescence: SpectrumCurve,
}

/// Incoherent (connected) parts of the cavity and atomic spectra of a
/// coherently driven system, from a converged coherent steady state.
pub fn incoherent_driven_spectra(
    p: &ValidParams,
    steady: &CoherentState,
    omega_grid: &[f64],
) -> Result<DrivenSpectra, SpectraError> {
    let cav = build_qrt_system(p, steady, FixedOp::ADagger)?;
    let atom = build_qrt_system(p, steady, FixedOp::SigmaPlus)?;
    let n = p.n();
    let rows = omega_grid
        .par_iter()
        .map(|w| {
            let s = C64::new(0.0, -w);
            Ok((
                spectral_value(laplace_correlation(&cav, s)?[0]),
                n * spectral_value(laplace_correlation(&atom, s)?[2]),
            ))
        })
        .collect::<Result<Vec<_>, SpectraError>>()?;
    let curve = |v: Vec<f64>| SpectrumCurve {
        omega: omega_grid.to_vec(),
        total: v,
        channels: vec![],
    };
    Ok(DrivenSpectra {
        mode: curve(rows.iter().map(|r| r.0).collect()),
        fluorescence: curve(rows.iter().map(|r| r.1).collect()),
    })
}
