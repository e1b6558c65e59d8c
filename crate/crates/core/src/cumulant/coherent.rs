use super::moments::{ClosureMoments, Closure, Moments, Op};
use super::{CoherentState, CumulantError};
use crate::params::ValidParams;
use crate::C64;

/// Time derivatives of the raw moments tracked by the coherent system.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RawDerivatives {
    pub a: C64,
    pub sz: C64,
    pub sp: C64,
    pub a_sp: C64,
    pub a_sz: C64,
    pub spsm: C64,
    pub ada: C64,
    pub a_sm: C64,
    pub adad: C64,
    pub smsm: C64,
    pub sz_sp: C64,
    pub sz_sz: C64,
    pub adasz: C64,
}

/// Heisenberg-Lindblad equations for the raw moments, with every product of
/// operators delegated to `m`. Same-atom products are already reduced.
pub fn coherent_raw_derivatives<M: Moments>(m: &M, p: &ValidParams) -> RawDerivatives {
    use Op::*;
    let sp = &p.params;
    let d = p.frame_detunings();
    let (dm, da) = (d.delta_m, d.delta_a);
    let n = p.n();
    let g = sp.g;
    let kappa = sp.kappa;
    let nbar = p.nbar;
    let eta = sp.eta;
    let gam = p.gamma_total();
    let s0 = p.sz_target();
    let i = C64::new(0.0, 1.0);
    let ig = i * g;
    let re = |x: f64| C64::new(x, 0.0);

    let alpha = m.m(&[A]);
    let z = m.m(&[Sz(1)]);
    let pp = m.m(&[Sp(1)]);
    let a_sp = m.m(&[A, Sp(1)]);
    let ad_sm = m.m(&[Ad, Sm(1)]);
    let a_sz = m.m(&[A, Sz(1)]);
    let ad_sz = m.m(&[Ad, Sz(1)]);
    let a_sm = m.m(&[A, Sm(1)]);
    let ad_sp = m.m(&[Ad, Sp(1)]);
    let adad = m.m(&[Ad, Ad]);
    let ada = m.m(&[Ad, A]);
    let spsm = m.m(&[Sp(1), Sm(2)]);
    let smsm = m.m(&[Sm(1), Sm(2)]);
    let sz_sp = m.m(&[Sz(1), Sp(2)]);
    let sz_sm = m.m(&[Sz(1), Sm(2)]);
    let sz_sz = m.m(&[Sz(1), Sz(2)]);
    let adasz = m.m(&[Ad, A, Sz(1)]);
    let n1 = n - 1.0;

    let d_a = -(re(kappa) + i * dm) * alpha - ig * n * pp.conj() + eta;
    let d_sz = -2.0 * ig * (a_sp - ad_sm) - gam * (z - s0);
    let d_sp = -(re(gam / 2.0) - i * da) * pp - ig * ad_sz;

    let d_a_sp = -(re(kappa + gam / 2.0) + i * (dm - da)) * a_sp
        - ig * ((1.0 + z) / 2.0 + n1 * spsm + adasz)
        + eta * pp;
    let d_a_sz = -(re(kappa + gam) + i * dm) * a_sz + gam * s0 * alpha + eta * z + ig * pp.conj()
        - ig * n1 * sz_sm
        - 2.0 * ig * m.m(&[A, A, Sp(1)])
        + 2.0 * ig * m.m(&[Ad, A, Sm(1)]);
    let d_spsm = -gam * spsm - ig * m.m(&[Ad, Sz(1), Sm(2)]) + ig * m.m(&[A, Sp(1), Sz(2)]);
    let d_ada = -ig * n * (ad_sm - a_sp) - 2.0 * kappa * ada + 2.0 * kappa * nbar
        + eta.conj() * alpha
        + eta * alpha.conj();
    let d_a_sm = -(re(kappa + gam / 2.0) + i * (dm + da)) * a_sm - ig * n1 * smsm
        + eta * pp.conj()
        + ig * m.m(&[A, A, Sz(1)]);
    let d_adad = -(re(2.0 * kappa) - 2.0 * i * dm) * adad + 2.0 * ig * n * ad_sp
        + 2.0 * eta.conj() * alpha.conj();
    let d_smsm = -(re(gam) + 2.0 * i * da) * smsm + 2.0 * ig * m.m(&[A, Sz(1), Sm(2)]);
    let d_sz_sp = -(re(1.5 * gam) - i * da) * sz_sp + gam * s0 * pp
        - 2.0 * ig * (m.m(&[A, Sp(1), Sp(2)]) - m.m(&[Ad, Sm(1), Sp(2)]))
        - ig * m.m(&[Ad, Sz(1), Sz(2)]);
    let d_sz_sz = -4.0 * ig * (m.m(&[A, Sp(1), Sz(2)]) - m.m(&[Ad, Sm(1), Sz(2)]))
        - 2.0 * gam * sz_sz
        + 2.0 * gam * s0 * z;
    let d_adasz = -re(2.0 * kappa + gam) * adasz + gam * s0 * ada + 2.0 * kappa * nbar * z
        - ig * (a_sp - ad_sm + 2.0 * (m.m(&[Ad, A, A, Sp(1)]) - m.m(&[Ad, Ad, A, Sm(1)])))
        - ig * n1 * (m.m(&[Ad, Sz(1), Sm(2)]) - m.m(&[A, Sz(1), Sp(2)]))
        + eta * ad_sz
        + eta.conj() * a_sz;

    RawDerivatives {
        a: d_a,
        sz: d_sz,
        sp: d_sp,
        a_sp: d_a_sp,
        a_sz: d_a_sz,
        spsm: d_spsm,
        ada: d_ada,
        a_sm: d_a_sm,
        adad: d_adad,
        smsm: d_smsm,
        sz_sp: d_sz_sp,
        sz_sz: d_sz_sz,
        adasz: d_adasz,
    }
}

/// Right-hand side of the coherent system in cumulant variables.
pub fn rhs_coherent(
    s: &CoherentState,
    p: &ValidParams,
    closure: Closure,
) -> Result<CoherentState, CumulantError> {
    if !s.is_finite() {
        return Err(CumulantError::NonFinite);
    }
    Ok(rhs_coherent_unchecked(s, p, closure))
}

pub(crate) fn rhs_coherent_unchecked(s: &CoherentState, p: &ValidParams, closure: Closure) -> CoherentState {
    let r = coherent_raw_derivatives(&ClosureMoments { s, closure }, p);
    let (al, z, pp) = (s.a, C64::new(s.sz, 0.0), s.sp);
    CoherentState {
        a: r.a,
        sz: r.sz.re,
        sp: r.sp,
        a_sp: r.a_sp - r.a * pp - al * r.sp,
        a_sz: r.a_sz - r.a * z - al * r.sz,
        spsm: (r.spsm - r.sp * pp.conj() - pp * r.sp.conj()).re,
        ada: (r.ada - r.a.conj() * al - al.conj() * r.a).re,
        a_sm: r.a_sm - r.a * pp.conj() - al * r.sp.conj(),
        adad: r.adad - 2.0 * al.conj() * r.a.conj(),
        smsm: r.smsm - 2.0 * pp.conj() * r.sp.conj(),
        sz_sp: r.sz_sp - r.sz * pp - z * r.sp,
        sz_sz: (r.sz_sz - 2.0 * z * r.sz).re,
        adasz: match closure {
            Closure::Full => r.adasz.re,
            Closure::Reduced => 0.0,
        },
    }
}
