//! Stochastic-limit master equation for laser-driven few-level atoms.
//!
//! The crate builds the Markovian generator `L_t(ρ) = L_diss(ρ) − i[H_eff(t), ρ]`
//! for an atom coupled to a radiation field prepared in a coherent (laser)
//! state, computes its bath coefficients from radial form factors, integrates
//! the dynamics, finds stationary states, and inverts the Λ-atom dark-state
//! relation to design laser fields that prepare a chosen qubit superposition.
//!
//! Conventions used throughout:
//!
//! * basis index 0 is the ground state, indices ascend with energy;
//! * `ħ = 1`, energies and frequencies share units;
//! * vectorization is column stacking, `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atom;
pub mod bath;
pub mod cli;
pub mod config;
pub mod control;
pub mod dynamics;
pub mod format;
pub mod linalg;
pub mod liouvillian;
pub mod quadrature;
pub mod steady;

mod error;

pub use atom::{AtomSpec, Transition, TransitionPair, TransitionSet};
pub use bath::{
    BathCoefficients, FormFactor, FrequencyCoefficients, LaserDrive, LaserSpec, QuadratureSettings,
    Susceptibility, TransitionCoefficients, Window,
};
pub use control::{ControlTarget, DarkStateConvention, DesignVerification};
pub use dynamics::{StepControl, Trajectory};
pub use error::{Category, Error};
pub use linalg::CMatrix;
pub use liouvillian::{DensityMatrix, Superoperator};
pub use steady::{StateVector, SteadyStateResult};

pub use num_complex::Complex64;
