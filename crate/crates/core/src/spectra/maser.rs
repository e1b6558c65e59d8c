use super::linewidth::{fwhm_of_fn, LineWidth};
use super::qrt::{check_stable, laplace_correlation, QrtSystem};
use super::{spectral_value, SpectraError, SpectrumCurve};
use crate::cumulant::{analytic_maser_steady, MaserSteady};
use crate::params::ValidParams;
use crate::C64;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Two-component system for [⟨a†(t)a(0)⟩, ⟨σ₁⁺(t)a(0)⟩].
pub fn maser_system(p: &ValidParams, s: &MaserSteady) -> Result<QrtSystem, SpectraError> {
    let d = p.frame_detunings();
    let i = C64::new(0.0, 1.0);
    let ig = i * p.params.g;
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(-p.params.kappa, d.delta_m),
            ig * p.n(),
            -ig * s.sz,
            C64::new(-p.gamma_total() / 2.0, d.delta_a),
        ],
    );
    let max_re = check_stable(&m)?;
    Ok(QrtSystem {
        m,
        x0: DVector::from_vec(vec![C64::new(s.n_ph, 0.0), s.a_sp]),
        labels: vec!["a_dagger_a", "sigma_plus_a"],
        max_re,
    })
}

/// Cramer's rule on the 2×2 system:
/// x̃(s) = [n(s + Γ/2 − iΔa) + igN⟨σ⁺a⟩] / [(s + κ − iΔm)(s + Γ/2 − iΔa) − g²N⟨σᶻ⟩].
pub fn maser_closed_form(p: &ValidParams, s: &MaserSteady, z: C64) -> C64 {
    let d = p.frame_detunings();
    let i = C64::new(0.0, 1.0);
    let g = p.params.g;
    let n = p.n();
    let b = z + C64::new(p.gamma_total() / 2.0, -d.delta_a);
    let det = (z + C64::new(p.params.kappa, -d.delta_m)) * b - g * g * n * s.sz;
    (s.n_ph * b + i * g * n * s.a_sp) / det
}

/// Emission spectrum of the pumped, undriven ensemble, using the closed-form
/// steady state.
pub fn maser_spectrum(p: &ValidParams, omega_grid: &[f64]) -> Result<SpectrumCurve, SpectraError> {
    let steady = analytic_maser_steady(p)?;
    let sys = maser_system(p, &steady)?;
    let total = omega_grid
        .par_iter()
        .map(|w| laplace_correlation(&sys, C64::new(0.0, -w)).map(|x| spectral_value(x[0])))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SpectrumCurve {
        omega: omega_grid.to_vec(),
        total,
        channels: vec![],
    })
}

/// Width of the maser line, located from the slowest pole of the 2×2 system
/// and refined on the closed-form spectrum.
pub fn maser_linewidth(p: &ValidParams) -> Result<(LineWidth, MaserSteady), SpectraError> {
    let steady = analytic_maser_steady(p)?;
    let sys = maser_system(p, &steady)?;
    let slow = sys
        .m
        .clone()
        .schur()
        .eigenvalues()
        .and_then(|ev| ev.iter().copied().max_by(|a, b| a.re.total_cmp(&b.re)))
        .ok_or(SpectraError::Unstable { max_re: f64::NAN })?;
    let f = |w: f64| spectral_value(maser_closed_form(p, &steady, C64::new(0.0, -w)));
    let width = fwhm_of_fn(&f, -slow.im, 2.0 * slow.re.abs(), 0.0)?;
    Ok((width, steady))
}
