use super::{CumulantError, IncoherentState};
use crate::params::ValidParams;
use crate::C64;

/// Four equations for an undriven ensemble, with the incoherent pump entering
/// through Γ = γ + w and the relaxation target (w − γ)/(w + γ). The product
/// ⟨a†a⟩⟨σᶻ⟩ in the ⟨aσ⁺⟩ equation is the only trace of third order.
pub fn rhs_incoherent(s: &IncoherentState, p: &ValidParams) -> Result<IncoherentState, CumulantError> {
    if p.params.eta.norm() > 0.0 {
        return Err(CumulantError::Precondition(
            "the incoherent system has no coherent drive".into(),
        ));
    }
    if !s.is_finite() {
        return Err(CumulantError::NonFinite);
    }
    Ok(rhs_incoherent_unchecked(s, p))
}

pub(crate) fn rhs_incoherent_unchecked(s: &IncoherentState, p: &ValidParams) -> IncoherentState {
    let sp = &p.params;
    let i = C64::new(0.0, 1.0);
    let ig = i * sp.g;
    let n = p.n();
    let gam = p.gamma_total();
    let s0 = p.sz_target();
    let x = s.a_sp;
    let detune = sp.omega_m - sp.omega_a;
    IncoherentState {
        sz: (-2.0 * ig * (x - x.conj())).re - gam * (s.sz - s0),
        a_sp: -C64::new(sp.kappa + gam / 2.0, detune) * x
            - ig * ((s.sz + 1.0) / 2.0 + s.n_ph * s.sz + (n - 1.0) * s.spsm),
        n_ph: (-ig * n * (x.conj() - x)).re - 2.0 * sp.kappa * s.n_ph + 2.0 * sp.kappa * p.nbar,
        spsm: -gam * s.spsm - ig * s.sz * (x.conj() - x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SystemParams;

    fn ensemble() -> SystemParams {
        let mut p = SystemParams::microwave_ensemble();
        p.temperature = 0.1;
        p
    }

    #[test]
    fn uncoupled_thermal_fixed_point() {
        let mut p = ensemble();
        p.g = 0.0;
        let v = p.validate().unwrap();
        let d = rhs_incoherent(&IncoherentState::ground(v.nbar), &v).unwrap();
        assert_eq!(d.to_vec(), vec![0.0; 6]);
    }

    #[test]
    fn pump_relaxation_target() {
        let mut p = ensemble();
        p.g = 0.0;
        p.w = 0.3;
        let v = p.validate().unwrap();
        let mut s = IncoherentState::ground(v.nbar);
        s.sz = 0.0;
        assert_eq!(rhs_incoherent(&s, &v).unwrap().sz, 0.0);
        p.w = 0.9;
        let v = p.validate().unwrap();
        s.sz = 0.5;
        assert!(rhs_incoherent(&s, &v).unwrap().sz.abs() < 1e-15);
    }

    #[test]
    fn inverted_start_seeds_dipole() {
        let v = ensemble().validate().unwrap();
        let d = rhs_incoherent(&IncoherentState::inverted(v.nbar), &v).unwrap();
        let expected = C64::new(0.0, -v.params.g * (1.0 + v.nbar));
        assert!((d.a_sp - expected).norm() < 1e-12);
    }

    #[test]
    fn rejects_drive_and_nan() {
        let mut p = ensemble();
        p.omega_l = Some(p.omega_m);
        p.eta = C64::new(1.0, 0.0);
        let v = p.validate().unwrap();
        assert!(rhs_incoherent(&IncoherentState::ground(0.0), &v).is_err());
        let v = ensemble().validate().unwrap();
        let mut s = IncoherentState::ground(0.0);
        s.n_ph = f64::NAN;
        assert_eq!(rhs_incoherent(&s, &v), Err(CumulantError::NonFinite));
    }
}
