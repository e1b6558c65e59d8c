//! Exact Lindblad dynamics for a few atoms and a truncated cavity mode.
//!
//! Two bases are supported. The tensor-product basis keeps every atom and
//! represents per-atom decay exactly. The Dicke basis keeps only the fully
//! symmetric J = N/2 manifold; per-atom decay has no exact collective form
//! there and is replaced by a collective channel (γ/N)·D[S⁻], which gives the
//! right decay rate for a single symmetric excitation.
//!
//! Vectorization is column stacking, vec(AρB) = (Bᵀ ⊗ A) vec ρ.

mod liouvillian;
mod operators;

pub use liouvillian::{
    build_liouvillian, propagate, steady_state, transmission_scan, Channel, Liouvillian,
    TransmissionPoint,
};
pub use operators::{build_collective_ops, build_hamiltonian, CollectiveOps, Frame, SystemOps};

use crate::ode::OdeError;
use crate::params::{ValidParams, ValidationErrors};
use crate::C64;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Default cap on the superoperator dimension (Hilbert dimension squared).
pub const DEFAULT_DIM_CAP: usize = 4096;
pub const MAX_TENSOR_ATOMS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisMode {
    DickeSymmetric,
    TensorProduct,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExactError {
    #[error("superoperator dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("tensor-product basis supports at most {MAX_TENSOR_ATOMS} atoms, got {0}")]
    TooManyAtoms(usize),
    #[error("operation requires the {0:?} basis")]
    WrongBasis(BasisMode),
    #[error("frame/params mismatch: {0}")]
    FrameMismatch(String),
    #[error("config has {config} atoms but params have {params}")]
    AtomCountMismatch { config: usize, params: u64 },
    #[error("invalid parameters: {0}")]
    Params(#[from] ValidationErrors),
    #[error("degenerate steady state (pivot ratio {ratio:e})")]
    Degenerate { ratio: f64 },
    #[error("steady-state solve failed: singular system")]
    Singular,
    #[error("steady-state residual {residual:e} exceeds tolerance")]
    Residual { residual: f64 },
    #[error("density matrix invariant violated: {0}")]
    Invariant(String),
    #[error("transmission scan needs a coherent drive (eta != 0)")]
    NoDrive,
    #[error(transparent)]
    Ode(#[from] OdeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertConfig {
    pub basis_mode: BasisMode,
    /// Largest photon number kept, n_max.
    pub fock_cutoff: usize,
    pub n_atoms: usize,
    pub dim_cap: usize,
}

impl HilbertConfig {
    pub fn new(basis_mode: BasisMode, fock_cutoff: usize, n_atoms: usize) -> Result<Self, ExactError> {
        Self::with_cap(basis_mode, fock_cutoff, n_atoms, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(
        basis_mode: BasisMode,
        fock_cutoff: usize,
        n_atoms: usize,
        dim_cap: usize,
    ) -> Result<Self, ExactError> {
        let c = HilbertConfig {
            basis_mode,
            fock_cutoff,
            n_atoms,
            dim_cap,
        };
        if basis_mode == BasisMode::TensorProduct && n_atoms > MAX_TENSOR_ATOMS {
            return Err(ExactError::TooManyAtoms(n_atoms));
        }
        let dim = c.dim();
        let sdim = dim.checked_mul(dim).unwrap_or(usize::MAX);
        if sdim > dim_cap {
            return Err(ExactError::DimensionCap { dim: sdim, cap: dim_cap });
        }
        Ok(c)
    }

    /// Cutoff large enough for the thermal tail and the drive-induced
    /// occupation: n̄^n/(1+n̄)^(n+1) < 1e-8 and n_est + 5√n_est < n_max with
    /// n_est = n̄ + |η|²/κ².
    pub fn adaptive(p: &ValidParams, basis_mode: BasisMode) -> Result<Self, ExactError> {
        let n_atoms = usize::try_from(p.params.n_atoms).map_err(|_| ExactError::TooManyAtoms(usize::MAX))?;
        Self::new(basis_mode, adaptive_cutoff(p), n_atoms)
    }

    pub fn atom_dim(&self) -> usize {
        match self.basis_mode {
            BasisMode::DickeSymmetric => self.n_atoms + 1,
            BasisMode::TensorProduct => 1usize << self.n_atoms,
        }
    }

    pub fn dim(&self) -> usize {
        (self.fock_cutoff + 1) * self.atom_dim()
    }

    pub fn check_params(&self, p: &ValidParams) -> Result<(), ExactError> {
        if p.params.n_atoms != self.n_atoms as u64 {
            return Err(ExactError::AtomCountMismatch {
                config: self.n_atoms,
                params: p.params.n_atoms,
            });
        }
        Ok(())
    }
}

pub fn adaptive_cutoff(p: &ValidParams) -> usize {
    let nbar = p.nbar;
    let mut n_thermal = 0usize;
    if nbar > 0.0 {
        let r = nbar / (1.0 + nbar);
        // tail n̄^n/(1+n̄)^(n+1) = r^n/(1+n̄)
        while r.powi(n_thermal as i32) / (1.0 + nbar) >= 1e-8 {
            n_thermal += 1;
        }
    }
    let kappa = p.params.kappa;
    let drive = if kappa > 0.0 { p.params.eta.norm_sqr() / (kappa * kappa) } else { 0.0 };
    let n_est = nbar + drive;
    let n_drive = (n_est + 5.0 * n_est.sqrt()).floor() as usize + 1;
    n_thermal.max(n_drive).max(2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorMatrix {
    #[serde(skip)]
    pub matrix: DMatrix<C64>,
    pub basis: BasisMode,
}

impl OperatorMatrix {
    pub fn new(matrix: DMatrix<C64>, basis: BasisMode) -> Self {
        OperatorMatrix { matrix, basis }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix::new(self.matrix.adjoint(), self.basis)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermiticity_error(&self.matrix) <= tol
    }
}

pub(crate) fn hermiticity_error(m: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub matrix: DMatrix<C64>,
    pub basis: BasisMode,
}

impl DensityMatrix {
    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn expect(&self, op: &DMatrix<C64>) -> C64 {
        // Tr(ρ O) without forming the product
        let d = self.matrix.nrows();
        let mut s = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                s += self.matrix[(i, j)] * op[(j, i)];
            }
        }
        s
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Checks trace, Hermiticity and positivity at the given tolerances.
    pub fn check(&self, tol: f64, pos_tol: f64) -> Result<(), ExactError> {
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol {
            return Err(ExactError::Invariant(format!("trace {tr}")));
        }
        let herm = hermiticity_error(&self.matrix);
        if herm > tol {
            return Err(ExactError::Invariant(format!("hermiticity error {herm:e}")));
        }
        let min = self.min_eigenvalue();
        if min < -pos_tol {
            return Err(ExactError::Invariant(format!("eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Thermal cavity state times the all-ground atomic state.
    pub fn thermal_ground(config: &HilbertConfig, nbar: f64) -> Self {
        let ad = config.atom_dim();
        let mut m = DMatrix::zeros(config.dim(), config.dim());
        let weights: Vec<f64> = (0..=config.fock_cutoff)
            .map(|n| if nbar == 0.0 { if n == 0 { 1.0 } else { 0.0 } } else { (nbar / (1.0 + nbar)).powi(n as i32) })
            .collect();
        let z: f64 = weights.iter().sum();
        for (n, w) in weights.iter().enumerate() {
            let i = n * ad;
            m[(i, i)] = C64::new(w / z, 0.0);
        }
        DensityMatrix {
            matrix: m,
            basis: config.basis_mode,
        }
    }

    /// Pure product state |n⟩ ⊗ |atoms⟩ with `atom_index` in the atomic basis.
    pub fn pure(config: &HilbertConfig, photons: usize, atom_index: usize) -> Self {
        let mut m = DMatrix::zeros(config.dim(), config.dim());
        let i = photons * config.atom_dim() + atom_index;
        m[(i, i)] = C64::new(1.0, 0.0);
        DensityMatrix {
            matrix: m,
            basis: config.basis_mode,
        }
    }
}
