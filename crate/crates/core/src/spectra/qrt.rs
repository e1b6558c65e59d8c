use super::SpectraError;
use crate::cumulant::CoherentState;
use crate::params::ValidParams;
use crate::C64;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Operator held at the earlier time in a two-time correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedOp {
    ADagger,
    SigmaPlus,
}

/// Linear system dx/dτ = M x for correlations ⟨F(0) O(τ)⟩ and its initial
/// vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QrtSystem {
    pub m: DMatrix<C64>,
    pub x0: DVector<C64>,
    pub labels: Vec<&'static str>,
    /// Largest real part of the spectrum of M.
    pub max_re: f64,
}

pub const BASIS: [&str; 5] = ["a", "a_dagger", "sigma_minus", "sigma_plus", "sigma_z"];

/// Fluctuation equations for [δa, δa†, δσ⁻, δσ⁺, δσᶻ] linearised about the
/// steady state; σ operators are per-atom averages, so the field sees N δσ.
pub fn qrt_matrix(p: &ValidParams, s: &CoherentState) -> DMatrix<C64> {
    let d = p.frame_detunings();
    let (dm, da) = (d.delta_m, d.delta_a);
    let n = p.n();
    let kappa = p.params.kappa;
    let gam = p.gamma_total();
    let i = C64::new(0.0, 1.0);
    let ig = i * p.params.g;
    let alpha = s.a;
    let z = C64::new(s.sz, 0.0);
    let pp = s.sp;
    let mut m = DMatrix::zeros(5, 5);
    m[(0, 0)] = -C64::new(kappa, dm);
    m[(0, 2)] = -ig * n;
    m[(1, 1)] = -C64::new(kappa, -dm);
    m[(1, 3)] = ig * n;
    m[(2, 2)] = -C64::new(gam / 2.0, da);
    m[(2, 0)] = ig * z;
    m[(2, 4)] = ig * alpha;
    m[(3, 3)] = -C64::new(gam / 2.0, -da);
    m[(3, 1)] = -ig * z;
    m[(3, 4)] = -ig * alpha.conj();
    m[(4, 4)] = C64::new(-gam, 0.0);
    m[(4, 3)] = -2.0 * ig * alpha;
    m[(4, 0)] = -2.0 * ig * pp;
    m[(4, 2)] = 2.0 * ig * alpha.conj();
    m[(4, 1)] = 2.0 * ig * pp.conj();
    m
}

/// Equal-time connected correlations ⟨δF δO⟩ for the chosen fixed operator.
pub fn qrt_initial(p: &ValidParams, s: &CoherentState, fixed: FixedOp) -> DVector<C64> {
    match fixed {
        FixedOp::ADagger => DVector::from_vec(vec![
            C64::new(s.ada, 0.0),
            s.adad,
            s.a_sp.conj(),
            s.a_sm.conj(),
            s.a_sz.conj(),
        ]),
        FixedOp::SigmaPlus => {
            // atom i fixed, O averaged over all atoms j: the j = i term enters
            // with weight 1/N
            let n = p.n();
            let z = s.sz;
            let pp = s.sp;
            let mix = |same: C64, pair: C64| (same + (n - 1.0) * pair) / n;
            DVector::from_vec(vec![
                s.a_sp,
                s.a_sm.conj(),
                mix(C64::new((1.0 + z) / 2.0, 0.0) - pp.norm_sqr(), C64::new(s.spsm, 0.0)),
                mix(-pp * pp, s.smsm.conj()),
                mix(-pp - pp * z, s.sz_sp),
            ])
        }
    }
}

pub fn max_real_eigenvalue(m: &DMatrix<C64>) -> f64 {
    m.clone()
        .schur()
        .eigenvalues()
        .map(|ev| ev.iter().fold(f64::NEG_INFINITY, |a, l| a.max(l.re)))
        .unwrap_or(f64::NAN)
}

/// Stability margin: eigenvalues with Re λ above `1e-12 · ‖M‖` are rejected.
/// The maser line can be nine orders narrower than the cavity, so the test
/// has to be this tight.
pub(crate) fn check_stable(m: &DMatrix<C64>) -> Result<f64, SpectraError> {
    let max_re = max_real_eigenvalue(m);
    let scale = m.iter().fold(0.0f64, |a, x| a.max(x.norm()));
    if !(max_re <= 1e-12 * scale) {
        return Err(SpectraError::Unstable { max_re });
    }
    Ok(max_re)
}

pub fn build_qrt_system(p: &ValidParams, s: &CoherentState, fixed: FixedOp) -> Result<QrtSystem, SpectraError> {
    let m = qrt_matrix(p, s);
    let max_re = check_stable(&m)?;
    Ok(QrtSystem {
        m,
        x0: qrt_initial(p, s, fixed),
        labels: BASIS.to_vec(),
        max_re,
    })
}

impl QrtSystem {
    /// Same dynamics with a different initial vector.
    pub fn with_initial(&self, x0: DVector<C64>) -> QrtSystem {
        QrtSystem { x0, ..self.clone() }
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| *l == label)
    }
}

/// Solve (s·I − M) x̃ = x0.
pub fn laplace_correlation(system: &QrtSystem, s: C64) -> Result<DVector<C64>, SpectraError> {
    let k = system.m.nrows();
    let a = DMatrix::<C64>::identity(k, k) * s - &system.m;
    let sv = a.clone().singular_values();
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let cond = hi / lo;
    if !(cond <= 1e12) {
        return Err(SpectraError::NearSingular { s, cond });
    }
    a.lu().solve(&system.x0).ok_or(SpectraError::NearSingular { s, cond })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SystemParams;
    use crate::cumulant::IncoherentState;

    fn empty_cavity(detune: f64) -> ValidParams {
        let mut p = SystemParams::microwave_ensemble();
        p.g = 0.0;
        p.temperature = 0.2;
        p.omega_a = p.omega_m + detune;
        p.validate().unwrap()
    }

    #[test]
    fn uncoupled_cavity_is_scalar() {
        let v = empty_cavity(0.0);
        let s = IncoherentState::ground(v.nbar).to_coherent();
        let sys = build_qrt_system(&v, &s, FixedOp::ADagger).unwrap();
        // nothing feeds the a row but a itself
        for j in 1..5 {
            assert_eq!(sys.m[(0, j)], C64::new(0.0, 0.0));
        }
        assert_eq!(sys.m[(0, 0)], C64::new(-v.params.kappa, 0.0));
        let z = C64::new(0.3, -1.7);
        let x = laplace_correlation(&sys, z).unwrap();
        let closed = v.nbar / (z + v.params.kappa);
        assert!((x[0] - closed).norm() < 1e-15 * closed.norm().max(1.0));
    }

    #[test]
    fn atom_number_enters_only_the_field_rows() {
        let mut p = SystemParams::microwave_ensemble();
        p.temperature = 0.1;
        let v1 = p.validate().unwrap();
        p.n_atoms *= 4;
        let v4 = p.validate().unwrap();
        let s = IncoherentState::ground(v1.nbar).to_coherent();
        let m1 = qrt_matrix(&v1, &s);
        let m4 = qrt_matrix(&v4, &s);
        for r in 0..5 {
            for c in 0..5 {
                let field = (r, c) == (0, 2) || (r, c) == (1, 3);
                if field {
                    assert!((m4[(r, c)] - 4.0 * m1[(r, c)]).norm() < 1e-9);
                } else {
                    assert_eq!(m4[(r, c)], m1[(r, c)]);
                }
            }
        }
    }

    #[test]
    fn initial_cumulant_read_off_state() {
        let v = empty_cavity(0.0);
        let mut s = CoherentState::relaxed(0.73, -0.5);
        s.a_sp = C64::new(0.1, 0.2);
        let x0 = qrt_initial(&v, &s, FixedOp::ADagger);
        assert_eq!(x0[0], C64::new(0.73, 0.0));
        assert_eq!(x0[2], C64::new(0.1, -0.2));
    }

    #[test]
    fn decays_far_from_resonance() {
        let v = empty_cavity(0.0);
        let s = IncoherentState::ground(v.nbar).to_coherent();
        let sys = build_qrt_system(&v, &s, FixedOp::ADagger).unwrap();
        let x1 = laplace_correlation(&sys, C64::new(0.0, -1e8)).unwrap()[0].norm();
        let x2 = laplace_correlation(&sys, C64::new(0.0, -1e9)).unwrap()[0].norm();
        assert!((x1 / x2 - 10.0).abs() < 1e-2);
    }

    #[test]
    fn unstable_matrix_rejected() {
        let mut p = SystemParams::microwave_ensemble();
        p.temperature = 0.1;
        let v = p.validate().unwrap();
        // fully inverted without pump: the linearisation is not stable
        let s = CoherentState::relaxed(v.nbar, 1.0);
        assert!(matches!(
            build_qrt_system(&v, &s, FixedOp::ADagger),
            Err(SpectraError::Unstable { .. })
        ));
    }

    #[test]
    fn pole_is_reported() {
        let v = empty_cavity(0.0);
        let s = IncoherentState::ground(v.nbar).to_coherent();
        let sys = build_qrt_system(&v, &s, FixedOp::ADagger).unwrap();
        let err = laplace_correlation(&sys, C64::new(-v.params.kappa, 0.0)).unwrap_err();
        assert!(matches!(err, SpectraError::NearSingular { .. }));
    }
}
