use super::operators::{hamiltonian_from, SystemOps};
use super::{hermiticity_error, BasisMode, DensityMatrix, ExactError, Frame, HilbertConfig};
use crate::ode::{integrate, IntegrateOptions};
use crate::params::ValidParams;
use crate::C64;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Channel {
    pub label: String,
    /// Prefactor of D[L]ρ = LρL† − ½{L†L, ρ}.
    pub rate: f64,
}

#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub matrix: DMatrix<C64>,
    pub dim: usize,
    pub basis: BasisMode,
    pub channels: Vec<Channel>,
}

fn kron_id_left(m: &DMatrix<C64>) -> DMatrix<C64> {
    DMatrix::<C64>::identity(m.nrows(), m.nrows()).kronecker(m)
}

fn kron_id_right(m: &DMatrix<C64>) -> DMatrix<C64> {
    m.kronecker(&DMatrix::<C64>::identity(m.nrows(), m.nrows()))
}

fn add_dissipator(l: &mut DMatrix<C64>, op: &DMatrix<C64>, rate: f64) {
    let r = C64::new(rate, 0.0);
    let ldl = op.adjoint() * op;
    *l += op.conjugate().kronecker(op) * r;
    *l -= kron_id_left(&ldl) * (r * 0.5);
    *l -= kron_id_right(&ldl.transpose()) * (r * 0.5);
}

/// Superoperator in the drive frame when a drive frequency is set, otherwise
/// in the frame rotating at the cavity frequency.
pub fn build_liouvillian(p: &ValidParams, config: &HilbertConfig) -> Result<Liouvillian, ExactError> {
    config.check_params(p)?;
    let ops = SystemOps::new(config);
    Ok(liouvillian_from(&ops, p)?)
}

pub(crate) fn liouvillian_from(ops: &SystemOps, p: &ValidParams) -> Result<Liouvillian, ExactError> {
    let config = &ops.config;
    let h = if p.detunings.is_some() {
        hamiltonian_from(ops, p, Frame::Rotating)?
    } else {
        // without a drive the cavity frame is free of large frequencies
        let mut shifted = *p;
        shifted.detunings = Some(p.frame_detunings());
        hamiltonian_from(ops, &shifted, Frame::Rotating)?
    };
    let d = config.dim();
    let i = C64::new(0.0, 1.0);
    let mut l = kron_id_left(&h) * (-i) + kron_id_right(&h.transpose()) * i;
    let sp = &p.params;
    let mut channels = Vec::new();
    let mut push = |l: &mut DMatrix<C64>, label: String, op: &DMatrix<C64>, rate: f64| {
        if rate > 0.0 {
            add_dissipator(l, op, rate);
            channels.push(Channel { label, rate });
        }
    };
    push(&mut l, "cavity_loss".into(), &ops.a, 2.0 * sp.kappa * (p.nbar + 1.0));
    push(&mut l, "cavity_gain".into(), &ops.ad, 2.0 * sp.kappa * p.nbar);
    match config.basis_mode {
        BasisMode::TensorProduct => {
            for (k, at) in ops.atoms.iter().enumerate() {
                push(&mut l, format!("atom{k}_decay"), &at.sm, sp.gamma_a);
            }
            for (k, at) in ops.atoms.iter().enumerate() {
                push(&mut l, format!("atom{k}_pump"), &at.sp, sp.w);
            }
        }
        BasisMode::DickeSymmetric => {
            let n = config.n_atoms as f64;
            push(&mut l, "collective_decay".into(), &ops.jm, sp.gamma_a / n);
            push(&mut l, "collective_pump".into(), &ops.jp, sp.w / n);
        }
    }
    Ok(Liouvillian {
        matrix: l,
        dim: d,
        basis: config.basis_mode,
        channels,
    })
}

fn vec_of(rho: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(rho.as_slice())
}

fn unvec(v: &[C64], d: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(d, d, v)
}

impl Liouvillian {
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let v = &self.matrix * vec_of(rho);
        unvec(v.as_slice(), self.dim)
    }

    pub fn norm_inf(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Ratio of second-smallest to largest singular value. Only practical
    /// for small systems.
    pub fn singular_value_gap(&self) -> f64 {
        let mut s: Vec<f64> = self.matrix.clone().singular_values().iter().cloned().collect();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s[1] / s[s.len() - 1]
    }
}

/// Unique steady state from L vec ρ = 0 with the first row replaced by the
/// trace constraint.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix, ExactError> {
    let d = l.dim;
    let mut m = l.matrix.clone();
    for c in 0..d * d {
        m[(0, c)] = C64::new(0.0, 0.0);
    }
    for k in 0..d {
        m[(0, k + k * d)] = C64::new(1.0, 0.0);
    }
    let mut b = DVector::zeros(d * d);
    b[0] = C64::new(1.0, 0.0);
    let lu = m.lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..d * d).map(|k| u[(k, k)].norm()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    if ratio < 1e-8 {
        return Err(ExactError::Degenerate { ratio });
    }
    let x = lu.solve(&b).ok_or(ExactError::Singular)?;
    let residual = (&l.matrix * &x).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if residual > 1e-10 * l.norm_inf() {
        return Err(ExactError::Residual { residual });
    }
    let rho = DensityMatrix {
        matrix: unvec(x.as_slice(), d),
        basis: l.basis,
    };
    rho.check(1e-9, 1e-8)?;
    Ok(rho)
}

/// Integrate dρ/dt = Lρ and sample on `t_grid` (first point is the start).
pub fn propagate(
    rho0: &DensityMatrix,
    l: &Liouvillian,
    t_grid: &[f64],
    opts: &IntegrateOptions,
) -> Result<Vec<DensityMatrix>, ExactError> {
    rho0.check(1e-9, 1e-8)?;
    let n = l.dim * l.dim;
    let y0: Vec<f64> = rho0.matrix.as_slice().iter().flat_map(|c| [c.re, c.im]).collect();
    let mut vin = DVector::<C64>::zeros(n);
    let tr = integrate(
        |_, y: &[f64], dy: &mut [f64]| {
            for k in 0..n {
                vin[k] = C64::new(y[2 * k], y[2 * k + 1]);
            }
            let out = &l.matrix * &vin;
            for k in 0..n {
                dy[2 * k] = out[k].re;
                dy[2 * k + 1] = out[k].im;
            }
        },
        &y0,
        t_grid,
        opts,
    )?;
    tr.states
        .iter()
        .map(|y| {
            let c: Vec<C64> = y.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
            let m = unvec(&c, l.dim);
            let tr = m.trace();
            if (tr - C64::new(1.0, 0.0)).norm() > 1e-8 || hermiticity_error(&m) > 1e-8 {
                return Err(ExactError::Invariant(format!("trajectory trace {tr}")));
            }
            Ok(DensityMatrix { matrix: m, basis: l.basis })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransmissionPoint {
    pub delta_m: f64,
    pub photons: f64,
    pub field_re: f64,
    pub field_im: f64,
    /// ⟨Σσᶻ⟩/N.
    pub sz: f64,
}

/// Steady state for each Δ_m, sweeping the drive frequency with ω_m and ω_a
/// fixed so that Δ_a = Δ_m + (ω_a − ω_m).
pub fn transmission_scan(
    p: &ValidParams,
    config: &HilbertConfig,
    delta_m_grid: &[f64],
) -> Result<Vec<TransmissionPoint>, ExactError> {
    config.check_params(p)?;
    if p.params.eta.norm() == 0.0 {
        return Err(ExactError::NoDrive);
    }
    let ops = SystemOps::new(config);
    let number = ops.number();
    let n_atoms = config.n_atoms as f64;
    let jz2 = &ops.jz * C64::new(2.0 / n_atoms, 0.0);
    delta_m_grid
        .par_iter()
        .map(|&dm| {
            let mut sp = p.params;
            sp.omega_l = Some(sp.omega_m - dm);
            let v = sp.validate()?;
            let l = liouvillian_from(&ops, &v)?;
            let rho = steady_state(&l)?;
            let field = rho.expect(&ops.a);
            Ok(TransmissionPoint {
                delta_m: dm,
                photons: rho.expect(&number).re,
                field_re: field.re,
                field_im: field.im,
                sz: rho.expect(&jz2).re,
            })
        })
        .collect()
}
