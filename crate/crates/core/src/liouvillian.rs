//! The master-equation generator
//!
//! ```text
//! L_t(ρ)   = L_diss(ρ) − i[H_eff(t), ρ]
//! L_diss(ρ) = Σ_ω Re γ_ω (2 D_ω ρ D_ω† − ρ D_ω†D_ω − D_ω†D_ω ρ)
//! H_eff(t) = Σ_ω (Im γ_ω D_ω†D_ω + χ_ω(t)(c_ω* D_ω + c_ω D_ω†))
//! ```
//!
//! and its Heisenberg-picture dual, defined by
//! `Tr(Θ(X) ρ) = Tr(X L_t(ρ))` for every `X`, `ρ`.

use std::ops::Deref;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::atom::TransitionSet;
use crate::bath::BathCoefficients;
use crate::linalg::{self, c, CMatrix, I};

/// Entrywise tolerance on `ρ − ρ†`.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Tolerance on `|Tr ρ − 1|`.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue.
pub const POSITIVITY_TOL: f64 = -1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiouvillianError {
    #[error("dimension mismatch: expected {expected}×{expected}, got {rows}×{cols}")]
    DimensionMismatch {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("transition set and bath coefficients disagree: {0}")]
    CoefficientMismatch(String),
    #[error("not a density matrix: {0}")]
    InvalidState(String),
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self, LiouvillianError> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(LiouvillianError::InvalidState(format!(
                "matrix is {}×{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LiouvillianError::InvalidState("non-finite entry".into()));
        }
        let herm = linalg::hermiticity_defect(&m);
        if herm > HERMITICITY_TOL {
            return Err(LiouvillianError::InvalidState(format!(
                "not Hermitian (defect {herm:e})"
            )));
        }
        let tr = linalg::trace(&m);
        if (tr - c(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(LiouvillianError::InvalidState(format!(
                "trace is {tr}, expected 1"
            )));
        }
        let min = linalg::hermitian_eigenvalues(&m)[0];
        if min < POSITIVITY_TOL {
            return Err(LiouvillianError::InvalidState(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(Self(m))
    }

    /// Hermitizes and rescales to unit trace before validating.
    pub fn normalized(m: CMatrix) -> Result<Self, LiouvillianError> {
        let h = linalg::hermitian_part(&m);
        let tr = linalg::trace(&h).re;
        if !(tr.abs() > 0.0) {
            return Err(LiouvillianError::InvalidState("zero trace".into()));
        }
        Self::new(h / c(tr, 0.0))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self, LiouvillianError> {
        Self::normalized(linalg::projector(psi))
    }

    /// `|n⟩⟨n|`.
    pub fn basis_state(dim: usize, n: usize) -> Self {
        Self(linalg::ket_bra(dim, n, n))
    }

    /// Wraps a matrix produced by a trusted numerical path; invariants are
    /// tracked by the caller's diagnostics instead.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        linalg::trace(&(&self.0 * &self.0)).re
    }

    pub fn entry(&self, m: usize, n: usize) -> Complex64 {
        self.0[(m, n)]
    }
}

impl Deref for DensityMatrix {
    type Target = CMatrix;

    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

/// Generator `L_t` assembled from a transition set and its bath coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    transitions: TransitionSet,
    coeffs: BathCoefficients,
}

/// Which laser fields are switched on, one flag per Bohr frequency.
pub type DriveMask = Vec<bool>;

impl Superoperator {
    pub fn new(
        transitions: TransitionSet,
        coeffs: BathCoefficients,
    ) -> Result<Self, LiouvillianError> {
        if transitions.len() != coeffs.len() {
            return Err(LiouvillianError::CoefficientMismatch(format!(
                "{} transitions but {} coefficient entries",
                transitions.len(),
                coeffs.len()
            )));
        }
        let tol = transitions.merge_tolerance().max(1e-12);
        for (t, f) in transitions.iter().zip(coeffs.frequencies()) {
            if (t.omega - f.omega).abs() > tol {
                return Err(LiouvillianError::CoefficientMismatch(format!(
                    "frequency {} paired with coefficients for {}",
                    t.omega, f.omega
                )));
            }
        }
        Ok(Self {
            transitions,
            coeffs,
        })
    }

    pub fn dim(&self) -> usize {
        self.transitions.dim()
    }

    pub fn transitions(&self) -> &TransitionSet {
        &self.transitions
    }

    pub fn coefficients(&self) -> &BathCoefficients {
        &self.coeffs
    }

    /// Lasers active at time `t`.
    pub fn drive_mask(&self, t: f64) -> DriveMask {
        self.coeffs
            .frequencies()
            .iter()
            .map(|f| f.driven && f.window.contains(t))
            .collect()
    }

    /// Every laser on: the long-pulse generator whose kernel holds the
    /// stationary states.
    pub fn stationary_mask(&self) -> DriveMask {
        self.coeffs.frequencies().iter().map(|f| f.driven).collect()
    }

    /// Whether no laser is windowed, i.e. `L_t` does not depend on `t`.
    pub fn is_time_independent(&self) -> bool {
        self.coeffs.window_edges().is_empty()
    }

    fn check_dim(&self, m: &CMatrix) -> Result<(), LiouvillianError> {
        let d = self.dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(LiouvillianError::DimensionMismatch {
                expected: d,
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        Ok(())
    }

    pub fn dissipator(&self, rho: &CMatrix) -> Result<CMatrix, LiouvillianError> {
        self.check_dim(rho)?;
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        for (t, f) in self.transitions.iter().zip(self.coeffs.frequencies()) {
            let a = f.gamma.re;
            if a == 0.0 {
                continue;
            }
            let d = &t.operator;
            let dd = d.adjoint() * d;
            out += (d * rho * d.adjoint() * c(2.0, 0.0) - rho * &dd - &dd * rho) * c(a, 0.0);
        }
        Ok(out)
    }

    pub fn hamiltonian_with(&self, mask: &[bool]) -> CMatrix {
        let mut h = CMatrix::zeros(self.dim(), self.dim());
        for ((t, f), on) in self
            .transitions
            .iter()
            .zip(self.coeffs.frequencies())
            .zip(mask)
        {
            let d = &t.operator;
            h += d.adjoint() * d * c(f.gamma.im, 0.0);
            if *on {
                h += d * f.field.conj() + d.adjoint() * f.field;
            }
        }
        h
    }

    pub fn effective_hamiltonian(&self, t: f64) -> CMatrix {
        self.hamiltonian_with(&self.drive_mask(t))
    }

    pub fn apply_with(&self, rho: &CMatrix, mask: &[bool]) -> Result<CMatrix, LiouvillianError> {
        let h = self.hamiltonian_with(mask);
        Ok(self.dissipator(rho)? - linalg::commutator(&h, rho) * I)
    }

    /// `L_t(ρ)` for any complex matrix `ρ`.
    pub fn apply(&self, rho: &CMatrix, t: f64) -> Result<CMatrix, LiouvillianError> {
        self.apply_with(rho, &self.drive_mask(t))
    }

    pub fn heisenberg_with(&self, x: &CMatrix, mask: &[bool]) -> Result<CMatrix, LiouvillianError> {
        self.check_dim(x)?;
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        for ((t, f), on) in self
            .transitions
            .iter()
            .zip(self.coeffs.frequencies())
            .zip(mask)
        {
            let d = &t.operator;
            let dh = d.adjoint();
            let dd = &dh * d;
            // Θ(X) = 2 Re γ D†XD − γ X D†D − γ̄ D†D X
            out += &dh * x * d * c(2.0 * f.gamma.re, 0.0)
                - x * &dd * f.gamma
                - &dd * x * f.gamma.conj();
            if *on {
                // i(c [D†, X] − c* [X, D])
                out += (linalg::commutator(&dh, x) * f.field
                    - linalg::commutator(x, d) * f.field.conj())
                    * I;
            }
        }
        Ok(out)
    }

    /// Heisenberg-picture generator applied to an observable.
    pub fn heisenberg(&self, x: &CMatrix, t: f64) -> Result<CMatrix, LiouvillianError> {
        self.heisenberg_with(x, &self.drive_mask(t))
    }

    /// `d² × d²` matrix `M` with `M vec(ρ) = vec(L(ρ))`, column stacking.
    pub fn vectorize_with(&self, mask: &[bool]) -> CMatrix {
        let d = self.dim();
        let id = CMatrix::identity(d, d);
        let h = self.hamiltonian_with(mask);
        // −i(I⊗H − Hᵀ⊗I)
        let mut m = (id.kronecker(&h) - h.transpose().kronecker(&id)) * (-I);
        for (t, f) in self.transitions.iter().zip(self.coeffs.frequencies()) {
            let a = f.gamma.re;
            if a == 0.0 {
                continue;
            }
            let op = &t.operator;
            let dd = op.adjoint() * op;
            let term = op.conjugate().kronecker(op) * c(2.0, 0.0)
                - dd.transpose().kronecker(&id)
                - id.kronecker(&dd);
            m += term * c(a, 0.0);
        }
        m
    }

    pub fn vectorize(&self, t: f64) -> CMatrix {
        self.vectorize_with(&self.drive_mask(t))
    }

    /// Vectorized generator with every laser on.
    pub fn vectorize_stationary(&self) -> CMatrix {
        self.vectorize_with(&self.stationary_mask())
    }
}

pub fn dissipator(
    transitions: &TransitionSet,
    coeffs: &BathCoefficients,
    rho: &CMatrix,
) -> Result<CMatrix, LiouvillianError> {
    Superoperator::new(transitions.clone(), coeffs.clone())?.dissipator(rho)
}

pub fn effective_hamiltonian(
    transitions: &TransitionSet,
    coeffs: &BathCoefficients,
    t: f64,
) -> Result<CMatrix, LiouvillianError> {
    Ok(Superoperator::new(transitions.clone(), coeffs.clone())?.effective_hamiltonian(t))
}

pub fn generator_apply(
    l: &Superoperator,
    rho: &CMatrix,
    t: f64,
) -> Result<CMatrix, LiouvillianError> {
    l.apply(rho, t)
}

pub fn heisenberg_generator(
    l: &Superoperator,
    x: &CMatrix,
    t: f64,
) -> Result<CMatrix, LiouvillianError> {
    l.heisenberg(x, t)
}

pub fn vectorize(l: &Superoperator, t: f64) -> DMatrix<Complex64> {
    l.vectorize(t)
}
