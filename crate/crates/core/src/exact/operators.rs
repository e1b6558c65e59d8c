use super::{BasisMode, ExactError, HilbertConfig, OperatorMatrix};
use crate::params::ValidParams;
use crate::C64;
use nalgebra::DMatrix;

/// Collective spin operators on the symmetric J = N/2 manifold, in the
/// basis |J, −J + s⟩, s = 0..N.
#[derive(Debug, Clone)]
pub struct CollectiveOps {
    pub s_plus: OperatorMatrix,
    pub s_minus: OperatorMatrix,
    pub s_z: OperatorMatrix,
}

pub fn build_collective_ops(config: &HilbertConfig) -> Result<CollectiveOps, ExactError> {
    if config.basis_mode != BasisMode::DickeSymmetric {
        return Err(ExactError::WrongBasis(BasisMode::DickeSymmetric));
    }
    let (sp, sm, sz) = dicke_spin(config.n_atoms);
    let b = BasisMode::DickeSymmetric;
    Ok(CollectiveOps {
        s_plus: OperatorMatrix::new(sp, b),
        s_minus: OperatorMatrix::new(sm, b),
        s_z: OperatorMatrix::new(sz, b),
    })
}

fn dicke_spin(n: usize) -> (DMatrix<C64>, DMatrix<C64>, DMatrix<C64>) {
    let d = n + 1;
    let j = n as f64 / 2.0;
    let mut sp = DMatrix::zeros(d, d);
    let mut sz = DMatrix::zeros(d, d);
    for s in 0..d {
        let m = -j + s as f64;
        sz[(s, s)] = C64::new(m, 0.0);
        if s + 1 < d {
            sp[(s + 1, s)] = C64::new(((j + m + 1.0) * (j - m)).sqrt(), 0.0);
        }
    }
    let sm = sp.adjoint();
    (sp, sm, sz)
}

fn pauli_on(n: usize, atom: usize) -> (DMatrix<C64>, DMatrix<C64>, DMatrix<C64>) {
    // bit `atom` set means that atom is excited
    let d = 1usize << n;
    let bit = 1usize << atom;
    let mut sp = DMatrix::zeros(d, d);
    let mut sz = DMatrix::zeros(d, d);
    for k in 0..d {
        if k & bit == 0 {
            sp[(k | bit, k)] = C64::new(1.0, 0.0);
            sz[(k, k)] = C64::new(-1.0, 0.0);
        } else {
            sz[(k, k)] = C64::new(1.0, 0.0);
        }
    }
    let sm = sp.adjoint();
    (sp, sm, sz)
}

fn annihilation(nmax: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(nmax + 1, nmax + 1);
    for n in 1..=nmax {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

fn eye(d: usize) -> DMatrix<C64> {
    DMatrix::identity(d, d)
}

/// Single-atom operators embedded in the full space (tensor basis only).
#[derive(Debug, Clone)]
pub struct AtomOps {
    pub sp: DMatrix<C64>,
    pub sm: DMatrix<C64>,
    pub sz: DMatrix<C64>,
}

/// Field and atomic operators on the full photon ⊗ atom space. The photon
/// index is the slow one.
#[derive(Debug, Clone)]
pub struct SystemOps {
    pub config: HilbertConfig,
    pub a: DMatrix<C64>,
    pub ad: DMatrix<C64>,
    /// Σσᶻ/2, Σσ⁺, Σσ⁻ (S_z, S⁺, S⁻ in the Dicke basis).
    pub jz: DMatrix<C64>,
    pub jp: DMatrix<C64>,
    pub jm: DMatrix<C64>,
    pub atoms: Vec<AtomOps>,
}

impl SystemOps {
    pub fn new(config: &HilbertConfig) -> Self {
        let fock = annihilation(config.fock_cutoff);
        let ad_dim = config.atom_dim();
        let a = fock.kronecker(&eye(ad_dim));
        let ad = a.adjoint();
        let id_f = eye(config.fock_cutoff + 1);
        let (jp_at, jz_at, atoms) = match config.basis_mode {
            BasisMode::DickeSymmetric => {
                let (sp, _, sz) = dicke_spin(config.n_atoms);
                (sp, sz, vec![])
            }
            BasisMode::TensorProduct => {
                let mut jp = DMatrix::zeros(ad_dim, ad_dim);
                let mut jz = DMatrix::zeros(ad_dim, ad_dim);
                let mut atoms = Vec::with_capacity(config.n_atoms);
                for k in 0..config.n_atoms {
                    let (sp, sm, sz) = pauli_on(config.n_atoms, k);
                    jp += &sp;
                    jz += &sz * C64::new(0.5, 0.0);
                    atoms.push(AtomOps {
                        sp: id_f.kronecker(&sp),
                        sm: id_f.kronecker(&sm),
                        sz: id_f.kronecker(&sz),
                    });
                }
                (jp, jz, atoms)
            }
        };
        let jp = id_f.kronecker(&jp_at);
        let jm = jp.adjoint();
        let jz = id_f.kronecker(&jz_at);
        SystemOps {
            config: *config,
            a,
            ad,
            jz,
            jp,
            jm,
            atoms,
        }
    }

    pub fn number(&self) -> DMatrix<C64> {
        &self.ad * &self.a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    /// Rotating at the drive frequency.
    Rotating,
}

pub fn build_hamiltonian(
    p: &ValidParams,
    config: &HilbertConfig,
    frame: Frame,
) -> Result<OperatorMatrix, ExactError> {
    config.check_params(p)?;
    let ops = SystemOps::new(config);
    Ok(OperatorMatrix::new(hamiltonian_from(&ops, p, frame)?, config.basis_mode))
}

pub(crate) fn hamiltonian_from(
    ops: &SystemOps,
    p: &ValidParams,
    frame: Frame,
) -> Result<DMatrix<C64>, ExactError> {
    let sp = &p.params;
    let (wm, wa) = match frame {
        Frame::Lab => {
            if sp.eta.norm() > 0.0 {
                return Err(ExactError::FrameMismatch(
                    "a coherent drive is only time independent in the rotating frame".into(),
                ));
            }
            (sp.omega_m, sp.omega_a)
        }
        Frame::Rotating => {
            let d = p
                .detunings
                .ok_or_else(|| ExactError::FrameMismatch("rotating frame requires omega_l".into()))?;
            (d.delta_m, d.delta_a)
        }
    };
    let re = |x: f64| C64::new(x, 0.0);
    let mut h = &ops.ad * &ops.a * re(wm) + &ops.jz * re(wa);
    h += (&ops.jp * &ops.a + &ops.ad * &ops.jm) * re(sp.g);
    if frame == Frame::Rotating && sp.eta.norm() > 0.0 {
        let i = C64::new(0.0, 1.0);
        h += (&ops.ad * sp.eta - &ops.a * sp.eta.conj()) * i;
    }
    Ok(h)
}
