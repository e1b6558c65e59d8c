//! Closed moment equations for large ensembles.
//!
//! Two systems are provided. The incoherent one (no coherent drive) tracks
//! ⟨σᶻ⟩, ⟨aσ⁺⟩, ⟨a†a⟩ and the pair correlation ⟨σ₁⁺σ₂⁻⟩. The coherent one
//! adds the field and dipole means and all second-order cumulants, plus
//! ⟨a†aσᶻ⟩ when the third cumulant ⟨a†aσᶻ⟩_c is kept.
//!
//! Moments carry one representative atom (1) or a representative pair (1, 2);
//! exchange symmetry makes every atom equivalent.

mod coherent;
mod incoherent;
mod maser;
pub mod moments;
mod steady;

pub use coherent::{coherent_raw_derivatives, rhs_coherent, RawDerivatives};
pub use incoherent::rhs_incoherent;
pub use maser::{analytic_maser_steady, MaserSteady};
pub use moments::{Closure, Moments, Op};
pub use steady::{
    characteristic_rate, coherent_steady, incoherent_steady, is_stable, newton, steady_state_ode, SteadyOptions,
    SteadyPath, SteadyState,
};

use crate::ode::OdeError;
use crate::params::ValidationErrors;
use crate::C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CumulantError {
    #[error("invalid parameters: {0}")]
    Params(#[from] ValidationErrors),
    #[error("{0}")]
    Precondition(String),
    #[error("non-finite state")]
    NonFinite,
    #[error("state bound violated: {0}")]
    Bound(String),
    #[error("steady state not converged (residual {residual:e})")]
    NotConverged { residual: f64 },
    #[error("steady state is linearly unstable (max Re λ = {max_re:e})")]
    Unstable { max_re: f64 },
    #[error("no physical root for the steady inversion ({0})")]
    Unphysical(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IncoherentState {
    pub sz: f64,
    /// ⟨aσ₁⁺⟩
    pub a_sp: C64,
    pub n_ph: f64,
    /// ⟨σ₁⁺σ₂⁻⟩
    pub spsm: C64,
}

impl IncoherentState {
    pub const LEN: usize = 6;

    /// All atoms inverted, thermal field, no correlations.
    pub fn inverted(nbar: f64) -> Self {
        IncoherentState {
            sz: 1.0,
            n_ph: nbar,
            ..Default::default()
        }
    }

    pub fn ground(nbar: f64) -> Self {
        IncoherentState {
            sz: -1.0,
            n_ph: nbar,
            ..Default::default()
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.sz, self.a_sp.re, self.a_sp.im, self.n_ph, self.spsm.re, self.spsm.im]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        IncoherentState {
            sz: y[0],
            a_sp: C64::new(y[1], y[2]),
            n_ph: y[3],
            spsm: C64::new(y[4], y[5]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|v| v.is_finite())
    }

    /// Bounds of a physical state, widened by `tol`.
    pub fn check_bounds(&self, tol: f64) -> Result<(), CumulantError> {
        if !self.is_finite() {
            return Err(CumulantError::NonFinite);
        }
        if self.sz.abs() > 1.0 + tol {
            return Err(CumulantError::Bound(format!("sz = {}", self.sz)));
        }
        if self.n_ph < -tol {
            return Err(CumulantError::Bound(format!("n_ph = {}", self.n_ph)));
        }
        if self.spsm.norm() > 0.25 + tol {
            return Err(CumulantError::Bound(format!("|spsm| = {}", self.spsm.norm())));
        }
        Ok(())
    }

    /// Same state in the coherent representation (zero means).
    pub fn to_coherent(&self) -> CoherentState {
        CoherentState {
            sz: self.sz,
            a_sp: self.a_sp,
            spsm: self.spsm.re,
            ada: self.n_ph,
            sz_sz: 0.0,
            adasz: self.n_ph * self.sz,
            ..Default::default()
        }
    }
}

/// Means and second-order cumulants (suffix `_c` implied for every pair),
/// plus the raw moment ⟨a†aσ₁ᶻ⟩.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CoherentState {
    pub a: C64,
    pub sz: f64,
    /// ⟨σ₁⁺⟩
    pub sp: C64,
    pub a_sp: C64,
    pub a_sz: C64,
    /// ⟨σ₁⁺σ₂⁻⟩_c, real by exchange symmetry.
    pub spsm: f64,
    /// ⟨a†a⟩_c
    pub ada: f64,
    pub a_sm: C64,
    /// ⟨a†a†⟩_c
    pub adad: C64,
    /// ⟨σ₁⁻σ₂⁻⟩_c
    pub smsm: C64,
    /// ⟨σ₁ᶻσ₂⁺⟩_c
    pub sz_sp: C64,
    pub sz_sz: f64,
    /// ⟨a†aσ₁ᶻ⟩ (raw moment)
    pub adasz: f64,
}

impl CoherentState {
    pub const LEN: usize = 21;

    /// Empty thermal cavity with all atoms in the state they relax to.
    pub fn relaxed(nbar: f64, sz: f64) -> Self {
        CoherentState {
            sz,
            ada: nbar,
            adasz: nbar * sz,
            ..Default::default()
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.a.re, self.a.im, self.sz, self.sp.re, self.sp.im, self.a_sp.re, self.a_sp.im,
            self.a_sz.re, self.a_sz.im, self.spsm, self.ada, self.a_sm.re, self.a_sm.im,
            self.adad.re, self.adad.im, self.smsm.re, self.smsm.im, self.sz_sp.re, self.sz_sp.im,
            self.sz_sz, self.adasz,
        ]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        let c = |i: usize| C64::new(y[i], y[i + 1]);
        CoherentState {
            a: c(0),
            sz: y[2],
            sp: c(3),
            a_sp: c(5),
            a_sz: c(7),
            spsm: y[9],
            ada: y[10],
            a_sm: c(11),
            adad: c(13),
            smsm: c(15),
            sz_sp: c(17),
            sz_sz: y[19],
            adasz: y[20],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|v| v.is_finite())
    }

    /// Total photon number ⟨a†a⟩ = ⟨a†a⟩_c + |⟨a⟩|².
    pub fn photons(&self) -> f64 {
        self.ada + self.a.norm_sqr()
    }

    /// ⟨a†aσᶻ⟩_c, the retained third cumulant.
    pub fn adasz_cumulant(&self) -> f64 {
        let expanded = self.ada * self.sz
            + 2.0 * (self.a_sz * self.a.conj()).re
            + self.a.norm_sqr() * self.sz;
        self.adasz - expanded
    }

    pub fn check_bounds(&self, tol: f64) -> Result<(), CumulantError> {
        if !self.is_finite() {
            return Err(CumulantError::NonFinite);
        }
        if self.sz.abs() > 1.0 + tol {
            return Err(CumulantError::Bound(format!("sz = {}", self.sz)));
        }
        if self.photons() < -tol {
            return Err(CumulantError::Bound(format!("photons = {}", self.photons())));
        }
        Ok(())
    }

    /// Restriction to the incoherent variables.
    pub fn to_incoherent(&self) -> IncoherentState {
        IncoherentState {
            sz: self.sz,
            a_sp: self.a_sp + self.a * self.sp,
            n_ph: self.photons(),
            spsm: C64::new(self.spsm + self.sp.norm_sqr(), 0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packing_round_trips() {
        let s = CoherentState {
            a: C64::new(1.0, 2.0),
            sz: 3.0,
            sp: C64::new(4.0, 5.0),
            a_sp: C64::new(6.0, 7.0),
            a_sz: C64::new(8.0, 9.0),
            spsm: 10.0,
            ada: 11.0,
            a_sm: C64::new(12.0, 13.0),
            adad: C64::new(14.0, 15.0),
            smsm: C64::new(16.0, 17.0),
            sz_sp: C64::new(18.0, 19.0),
            sz_sz: 20.0,
            adasz: 21.0,
        };
        let v = s.to_vec();
        assert_eq!(v.len(), CoherentState::LEN);
        assert_eq!(v, (1..=21).map(|k| k as f64).collect::<Vec<_>>());
        assert_eq!(CoherentState::from_slice(&v), s);
        let i = IncoherentState {
            sz: 0.1,
            a_sp: C64::new(0.2, 0.3),
            n_ph: 0.4,
            spsm: C64::new(0.05, 0.06),
        };
        assert_eq!(IncoherentState::from_slice(&i.to_vec()), i);
    }

    #[test]
    fn bounds() {
        assert!(IncoherentState::inverted(0.0).check_bounds(1e-6).is_ok());
        let mut s = IncoherentState::ground(1.0);
        s.sz = -1.01;
        assert!(s.check_bounds(1e-3).is_err());
        s.sz = -1.0;
        s.spsm = C64::new(0.3, 0.0);
        assert!(s.check_bounds(1e-3).is_err());
    }
}
