//! Laser design for the Λ-atom: choose `(Ω₂, Ω₃)` so that a prescribed
//! superposition `c₁|1⟩ + c₀|0⟩` is the unique stationary state.
//!
//! The dark state of the couplings `Ω₂|2⟩⟨1| + Ω₃|2⟩⟨0|` satisfies
//! `Ω₂c₁ + Ω₃c₀ = 0`, which inverts to `(Ω₂, Ω₃) = κ(−c₀, c₁)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::atom::{TransitionPair, TransitionSet};
use crate::bath::{BathCoefficients, BathError, FormFactor, Window};
use crate::linalg::ZERO;
use crate::liouvillian::{LiouvillianError, Superoperator};
use crate::steady::{self, StateVector, SteadyStateError};

/// `|2⟩ → |1⟩`, driven by `Ω₂`.
pub const PAIR_2_1: TransitionPair = TransitionPair::new(2, 1);
/// `|2⟩ → |0⟩`, driven by `Ω₃`.
pub const PAIR_2_0: TransitionPair = TransitionPair::new(2, 0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("target amplitudes must have unit norm (got {0})")]
    NotNormalized(f64),
    #[error("target amplitudes vanish")]
    ZeroTarget,
    #[error("scale κ must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("transition is not drivable: {0}")]
    Undrivable(&'static str),
    #[error("not a Λ-atom: {0}")]
    NotLambda(String),
    #[error("designed generator has a {dimension}-dimensional kernel; the design does not select a unique state")]
    DegenerateKernel { dimension: usize },
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    Liouvillian(#[from] LiouvillianError),
    #[error(transparent)]
    SteadyState(#[from] SteadyStateError),
}

impl ControlError {
    pub fn is_input_error(&self) -> bool {
        match self {
            ControlError::NotNormalized(_)
            | ControlError::ZeroTarget
            | ControlError::BadScale(_)
            | ControlError::Undrivable(_)
            | ControlError::NotLambda(_) => true,
            ControlError::Bath(e) => e.is_input_error(),
            _ => false,
        }
    }
}

/// Target qubit state `c₁|1⟩ + c₀|0⟩` and overall Rabi scale `κ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlTarget {
    c0: Complex64,
    c1: Complex64,
    scale: f64,
}

impl ControlTarget {
    /// Amplitudes must already be normalized to within `10⁻¹⁰`.
    pub fn new(c0: Complex64, c1: Complex64, scale: f64) -> Result<Self, ControlError> {
        let n = (c0.norm_sqr() + c1.norm_sqr()).sqrt();
        if n == 0.0 {
            return Err(ControlError::ZeroTarget);
        }
        if (n - 1.0).abs() > 1e-10 {
            return Err(ControlError::NotNormalized(n));
        }
        Self::checked(c0, c1, scale)
    }

    /// Rescales the amplitudes to unit norm.
    pub fn normalized(c0: Complex64, c1: Complex64, scale: f64) -> Result<Self, ControlError> {
        let n = (c0.norm_sqr() + c1.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(ControlError::ZeroTarget);
        }
        Self::checked(c0 / n, c1 / n, scale)
    }

    fn checked(c0: Complex64, c1: Complex64, scale: f64) -> Result<Self, ControlError> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(ControlError::BadScale(scale));
        }
        Ok(Self { c0, c1, scale })
    }

    pub fn amplitudes(&self) -> (Complex64, Complex64) {
        (self.c0, self.c1)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_scale(self, scale: f64) -> Result<Self, ControlError> {
        Self::checked(self.c0, self.c1, scale)
    }

    /// `c₀|0⟩ + c₁|1⟩` embedded in the three-level space.
    pub fn state(&self) -> StateVector {
        StateVector::new(vec![self.c0, self.c1, ZERO]).expect("target is normalized")
    }
}

/// Which dark-state formula the inversion uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DarkStateConvention {
    /// `ψ ∝ Ω₃|1⟩ − Ω₂|0⟩`, the kernel of the Λ-atom generator.
    #[default]
    Consistent,
    /// `ψ ∝ Ω₂*|1⟩ − Ω₃*|0⟩`. Only coincides with the generator's kernel when
    /// `|Ω₂| = |Ω₃|`; kept for comparison.
    Literal,
}

/// Rabi pair `(Ω₂, Ω₃)` making the target the dark state.
pub fn design_rabi(target: &ControlTarget) -> (Complex64, Complex64) {
    design_rabi_with(target, DarkStateConvention::Consistent)
}

pub fn design_rabi_with(
    target: &ControlTarget,
    convention: DarkStateConvention,
) -> (Complex64, Complex64) {
    let k = target.scale;
    match convention {
        DarkStateConvention::Consistent => (-target.c0 * k, target.c1 * k),
        DarkStateConvention::Literal => (target.c1.conj() * k, -target.c0.conj() * k),
    }
}

/// On-shell laser amplitude `f(ω_l) = Ω / (8π²ω_l² g*(ω_l) d)` reproducing the
/// Rabi frequency `Ω` on a transition with dipole `d`. Only the resonant
/// shell enters `c_ω`, so the off-shell profile is free.
pub fn design_intensities(
    rabi: Complex64,
    g: &FormFactor,
    dipole: Complex64,
    omega_l: f64,
) -> Result<Complex64, ControlError> {
    if !omega_l.is_finite() || omega_l <= 0.0 {
        return Err(ControlError::Bath(BathError::NonPositiveFrequency(omega_l)));
    }
    let g_shell = g.eval(omega_l);
    if g_shell == ZERO {
        return Err(ControlError::Undrivable(
            "form factor vanishes on the resonant shell",
        ));
    }
    if dipole == ZERO {
        return Err(ControlError::Undrivable("dipole amplitude is zero"));
    }
    Ok(rabi / (8.0 * PI * PI * omega_l * omega_l * g_shell.conj() * dipole))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignVerification {
    /// `⟨ψ_target|ρ_st|ψ_target⟩`
    pub fidelity: f64,
    /// Spectral gap of the designed generator, the preparation rate.
    pub gap: f64,
    pub residual: f64,
}

/// Builds the Λ-atom generator with `(Ω₂, Ω₃)` on top of `coeffs`, solves for
/// its stationary state and scores it against `target`.
pub fn verify_design(
    rabi2: Complex64,
    rabi3: Complex64,
    transitions: &TransitionSet,
    coeffs: &BathCoefficients,
    target: &StateVector,
) -> Result<DesignVerification, ControlError> {
    let generator = designed_generator(rabi2, rabi3, transitions, coeffs)?;
    let res = steady::steady_state(&generator)?;
    if res.degenerate {
        return Err(ControlError::DegenerateKernel {
            dimension: res.kernel_dimension,
        });
    }
    let rho = &res.states[0];
    let mut amps = target.amplitudes().to_vec();
    amps.resize(transitions.dim(), ZERO);
    let target = StateVector::new(amps).expect("target is normalized");
    Ok(DesignVerification {
        fidelity: target.expectation(rho).clamp(0.0, 1.0),
        gap: res.gap,
        residual: res.residual,
    })
}

/// Λ-atom generator with always-on lasers of Rabi frequencies `Ω₂`, `Ω₃`.
pub fn designed_generator(
    rabi2: Complex64,
    rabi3: Complex64,
    transitions: &TransitionSet,
    coeffs: &BathCoefficients,
) -> Result<Superoperator, ControlError> {
    check_lambda(transitions)?;
    let coeffs = coeffs
        .undriven()
        .with_rabi(PAIR_2_1, rabi2, Window::AlwaysOn)?
        .with_rabi(PAIR_2_0, rabi3, Window::AlwaysOn)?;
    Ok(Superoperator::new(transitions.clone(), coeffs)?)
}

fn check_lambda(transitions: &TransitionSet) -> Result<(), ControlError> {
    if transitions.dim() != 3 {
        return Err(ControlError::NotLambda(format!(
            "{} levels instead of 3",
            transitions.dim()
        )));
    }
    if transitions
        .index_of_pair(TransitionPair::new(1, 0))
        .is_some()
    {
        return Err(ControlError::NotLambda(
            "the |1⟩ → |0⟩ dipole is nonzero".into(),
        ));
    }
    let i21 = transitions
        .index_of_pair(PAIR_2_1)
        .ok_or_else(|| ControlError::NotLambda("no |2⟩ → |1⟩ dipole".into()))?;
    let i20 = transitions
        .index_of_pair(PAIR_2_0)
        .ok_or_else(|| ControlError::NotLambda("no |2⟩ → |0⟩ dipole".into()))?;
    if i21 == i20 {
        return Err(ControlError::NotLambda(
            "both legs share one Bohr frequency, so Ω₂ and Ω₃ cannot be set independently".into(),
        ));
    }
    Ok(())
}
