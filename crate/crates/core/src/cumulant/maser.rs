use super::incoherent::rhs_incoherent_unchecked;
use super::steady::is_stable;
use super::{CumulantError, IncoherentState};
use crate::params::ValidParams;
use crate::C64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaserSteady {
    pub sz: f64,
    pub n_ph: f64,
    /// ⟨aσ₁⁺⟩
    pub a_sp: C64,
    /// ⟨σ₁⁺σ₂⁻⟩ (real)
    pub spsm: f64,
    /// The root that did not connect to the uncoupled limit, if real.
    pub other_root: Option<f64>,
}

impl MaserSteady {
    pub fn state(&self) -> IncoherentState {
        IncoherentState {
            sz: self.sz,
            a_sp: self.a_sp,
            n_ph: self.n_ph,
            spsm: C64::new(self.spsm, 0.0),
        }
    }
}

/// Steady state of the incoherent system in closed form.
///
/// Setting the four derivatives to zero gives, with X = ⟨aσ⁺⟩,
/// g·Im X = Γ(s − s0)/4, n = n̄ − NΓ(s − s0)/(4κ), C = −s(s − s0)/2, and a
/// quadratic in s = ⟨σᶻ⟩. The root kept is the physical one that is a stable
/// fixed point of the incoherent equations.
pub fn analytic_maser_steady(p: &ValidParams) -> Result<MaserSteady, CumulantError> {
    let sp = &p.params;
    if sp.eta.norm() > 0.0 {
        return Err(CumulantError::Precondition("closed form needs an undriven cavity".into()));
    }
    let gam = p.gamma_total();
    let kappa = sp.kappa;
    if gam <= 0.0 || kappa <= 0.0 {
        return Err(CumulantError::Precondition("needs kappa > 0 and gamma_a + w > 0".into()));
    }
    let s0 = p.sz_target();
    let n = p.n();
    let nbar = p.nbar;
    let g = sp.g;
    let big_k = kappa + gam / 2.0;
    let delta = sp.omega_m - sp.omega_a;
    let denom = big_k * big_k + delta * delta;
    let q = g * g * big_k / denom;
    let big_a = n * gam / (4.0 * kappa) + (n - 1.0) / 2.0;

    let a = -q * big_a;
    let b = gam / 4.0 + q / 2.0 + q * nbar + q * big_a * s0;
    let c = -gam * s0 / 4.0 + q / 2.0;

    // r_conn → −c/b = s0 as q → 0; r_far runs off to infinity
    let (r_conn, r_far) = if a == 0.0 {
        (-c / b, None)
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return Err(CumulantError::Unphysical(format!("complex roots, discriminant {disc:e}")));
        }
        let qq = -0.5 * (b + b.signum() * disc.sqrt());
        let r_conn = if qq != 0.0 { c / qq } else { 0.0 };
        let r_far = if qq != 0.0 { Some(qq / a) } else { None };
        (r_conn, r_far)
    };

    let build = |s: f64| {
        let n_ph = nbar - n * gam * (s - s0) / (4.0 * kappa);
        let spsm = -s * (s - s0) / 2.0;
        let qfac = (s + 1.0) / 2.0 + n_ph * s + (n - 1.0) * spsm;
        let x = C64::new(0.0, -g) * qfac / C64::new(big_k, delta);
        (n_ph, spsm, x)
    };
    let physical = |s: f64| {
        let (n_ph, spsm, _) = build(s);
        s.is_finite() && s.abs() <= 1.0 + 1e-9 && n_ph >= -1e-9 * (1.0 + nbar) && spsm.abs() <= 0.25 + 1e-9
    };
    // Of the physical roots keep the one that is a stable fixed point of the
    // time-dependent equations. Which root that is depends on temperature and
    // pump, so continuity in g alone is not a safe criterion.
    let rate = super::steady::characteristic_rate(p);
    let rhs = |y: &[f64], dy: &mut [f64]| {
        dy.copy_from_slice(&rhs_incoherent_unchecked(&IncoherentState::from_slice(y), p).to_vec());
    };
    let active: Vec<usize> = (0..IncoherentState::LEN).collect();
    let stable = |s: f64| {
        let (n_ph, spsm, x) = build(s);
        let y = IncoherentState { sz: s, a_sp: x, n_ph, spsm: C64::new(spsm, 0.0) }.to_vec();
        is_stable(rhs, &y, &active, rate).0
    };
    let candidates: Vec<f64> = std::iter::once(r_conn).chain(r_far).filter(|r| physical(*r)).collect();
    let chosen = match candidates.iter().copied().find(|r| stable(*r)).or(candidates.first().copied()) {
        Some(r) => r,
        None => {
            return Err(CumulantError::Unphysical(format!(
                "roots {r_conn:e} and {:?} both outside the physical range",
                r_far
            )))
        }
    };
    let other = if chosen == r_conn { r_far } else { Some(r_conn) };
    let (n_ph, spsm, x) = build(chosen);
    Ok(MaserSteady {
        sz: chosen,
        n_ph,
        a_sp: x,
        spsm,
        other_root: other,
    })
}
