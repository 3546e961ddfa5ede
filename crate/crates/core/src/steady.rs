//! Stationary states of the long-pulse generator.
//!
//! The numerical kernel of the vectorized Liouvillian is the reference answer.
//! The closed forms for the driven two-level atom, the three-level atom with a
//! single laser on the ground-to-top transition, and the Λ-atom dark state are
//! kept as independent validators.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{self, c, CMatrix, ZERO};
use crate::liouvillian::{DensityMatrix, Superoperator};

/// Relative singular-value threshold defining the kernel.
pub const KERNEL_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SteadyStateError {
    #[error("generator kernel is numerically empty (smallest singular value {smallest:e}, threshold {threshold:e})")]
    EmptyKernel { smallest: f64, threshold: f64 },
    #[error("Schur decomposition of the generator failed")]
    Eigen,
    #[error("closed form requires {0}")]
    Precondition(&'static str),
    #[error("kernel is {0}-dimensional; no unique stationary state")]
    Degenerate(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateResult {
    /// Hermitian basis of the stationary subspace. Elements with nonzero trace
    /// are normalized to unit trace; for a unique kernel this is the
    /// stationary density matrix.
    pub states: Vec<CMatrix>,
    pub kernel_dimension: usize,
    pub degenerate: bool,
    /// Largest `‖M vec(ρ)‖` over the returned states.
    pub residual: f64,
    /// Spectral norm of the vectorized generator.
    pub generator_norm: f64,
    /// Singular values of the vectorized generator, descending.
    pub singular_values: Vec<f64>,
    pub gap: f64,
}

impl SteadyStateResult {
    /// The stationary density matrix when the kernel is one-dimensional.
    pub fn unique_state(&self) -> Result<DensityMatrix, SteadyStateError> {
        if self.degenerate {
            return Err(SteadyStateError::Degenerate(self.kernel_dimension));
        }
        Ok(DensityMatrix::from_trusted(self.states[0].clone()))
    }
}

/// Solves `L(ρ) = 0` for the generator with every laser on.
pub fn steady_state(l: &Superoperator) -> Result<SteadyStateResult, SteadyStateError> {
    steady_state_with(l, KERNEL_RTOL)
}

pub fn steady_state_with(
    l: &Superoperator,
    kernel_rtol: f64,
) -> Result<SteadyStateResult, SteadyStateError> {
    let d = l.dim();
    let m = l.vectorize_stationary();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|a, b| svd.singular_values[*b].total_cmp(&svd.singular_values[*a]));
    let singular_values: Vec<f64> = order.iter().map(|i| svd.singular_values[*i]).collect();
    let largest = singular_values[0];
    let threshold = kernel_rtol * largest;
    let kernel: Vec<CMatrix> = order
        .iter()
        .filter(|i| svd.singular_values[**i] <= threshold)
        .map(|i| {
            let v: Vec<Complex64> = v_t.row(*i).iter().map(|z| z.conj()).collect();
            linalg::devectorize(&v, d)
        })
        .collect();
    if kernel.is_empty() {
        return Err(SteadyStateError::EmptyKernel {
            smallest: *singular_values.last().unwrap(),
            threshold,
        });
    }
    let dim = kernel.len();
    let states = hermitian_basis(&kernel);
    let residual = states
        .iter()
        .map(|s| (&m * linalg::vectorize(s)).norm())
        .fold(0.0, f64::max);
    let gap = relaxation_rate(l)?;
    Ok(SteadyStateResult {
        kernel_dimension: dim,
        degenerate: dim > 1,
        states,
        residual,
        generator_norm: largest,
        singular_values,
        gap,
    })
}

/// Real span of the Hermitian and anti-Hermitian parts of the complex kernel
/// vectors, orthonormalized under `Re Tr(A†B)`. The kernel of a
/// Hermiticity-preserving map is closed under `†`, so this has the same
/// dimension as the complex kernel.
fn hermitian_basis(kernel: &[CMatrix]) -> Vec<CMatrix> {
    let target = kernel.len();
    let mut candidates: Vec<CMatrix> = Vec::with_capacity(2 * target);
    for k in kernel {
        // remove the global phase that maximizes the trace first so the
        // physical part usually comes out of the first candidate
        let tr = linalg::trace(k);
        let k = if tr.norm() > 1e-8 {
            k * (tr.conj() / c(tr.norm(), 0.0))
        } else {
            k.clone()
        };
        candidates.push(linalg::hermitian_part(&k));
        candidates.push((&k - k.adjoint()) * c(0.0, -0.5));
    }
    // trace-carrying candidates first
    candidates.sort_by(|a, b| linalg::trace(b).norm().total_cmp(&linalg::trace(a).norm()));
    let mut basis: Vec<CMatrix> = Vec::new();
    for cand in candidates {
        let mut v = cand;
        for b in &basis {
            let overlap = inner(b, &v);
            v -= b * c(overlap, 0.0);
        }
        let n = inner(&v, &v).sqrt();
        if n > 1e-6 {
            basis.push(v / c(n, 0.0));
        }
        if basis.len() == target {
            break;
        }
    }
    basis
        .into_iter()
        .map(|b| {
            let tr = linalg::trace(&b).re;
            let b = if tr.abs() > 1e-8 { b / c(tr, 0.0) } else { b };
            linalg::hermitian_part(&b)
        })
        .collect()
}

fn inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Eigenvalues of the vectorized long-pulse generator.
pub fn spectrum(l: &Superoperator) -> Result<Vec<Complex64>, SteadyStateError> {
    let m = l.vectorize_stationary();
    let schur = m
        .try_schur(f64::EPSILON, 10_000)
        .ok_or(SteadyStateError::Eigen)?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

/// Smallest nonzero decay rate `min |Re λ|` over the spectrum.
///
/// Eigenvalues with `|Re λ|` below `10⁻⁸ ‖M‖` count as non-decaying. If such
/// an eigenvalue has a nonzero imaginary part the dynamics keeps oscillating
/// forever and the rate is reported as 0.
pub fn relaxation_rate(l: &Superoperator) -> Result<f64, SteadyStateError> {
    let eig = spectrum(l)?;
    let scale = eig.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let thr = 1e-8 * scale;
    if eig.iter().any(|z| z.re.abs() <= thr && z.im.abs() > thr) {
        return Ok(0.0);
    }
    Ok(eig
        .iter()
        .filter(|z| z.re < -thr)
        .map(|z| -z.re)
        .fold(f64::INFINITY, f64::min))
    .map(|g| if g.is_finite() { g } else { 0.0 })
}

/// Unit vector in the atom's state space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<Complex64>);

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Option<Self> {
        let n = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        Some(Self(amplitudes.into_iter().map(|z| z / n).collect()))
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }

    pub fn projector(&self) -> CMatrix {
        linalg::projector(&self.0)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, rho: &CMatrix) -> f64 {
        let psi = nalgebra::DVector::from_column_slice(&self.0);
        (psi.adjoint() * rho * &psi)[(0, 0)].re
    }
}

/// Stationary state of the driven two-level atom, `α = −iΩ/γ_ω`:
///
/// ```text
/// ρ₁₁ = |α|²/N,  ρ₁₀ = α/N,  ρ₀₀ = (1 + |α|²)/N,  N = 1 + 2|α|²
/// ```
pub fn two_level_closed_form(
    gamma: Complex64,
    rabi: Complex64,
) -> Result<DensityMatrix, SteadyStateError> {
    if !(gamma.re > 0.0) {
        return Err(SteadyStateError::Precondition("Re γ_ω > 0"));
    }
    let alpha = c(0.0, -1.0) * rabi / gamma;
    let a2 = alpha.norm_sqr();
    let n = 1.0 + 2.0 * a2;
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 0)] = c((1.0 + a2) / n, 0.0);
    m[(1, 1)] = c(a2 / n, 0.0);
    m[(1, 0)] = alpha / n;
    m[(0, 1)] = alpha.conj() / n;
    Ok(DensityMatrix::from_trusted(m))
}

/// Stationary state of the three-level atom driven only on `|0⟩ ↔ |2⟩`,
/// with weighted susceptibilities `γ_j = a_j + i b_j`, `α = −iΩ/(γ₂+γ₃)` and
/// `r = a₂/a₁`:
///
/// ```text
/// ρ₂₂ = |α|²/N,  ρ₁₁ = r|α|²/N,  ρ₀₀ = (1 + |α|²)/N,  ρ₂₀ = α/N,
/// N = 1 + (2 + r)|α|²
/// ```
pub fn three_level_single_laser_closed_form(
    gamma1: Complex64,
    gamma2: Complex64,
    gamma3: Complex64,
    rabi: Complex64,
) -> Result<DensityMatrix, SteadyStateError> {
    if !(gamma1.re > 0.0) {
        return Err(SteadyStateError::Precondition(
            "a₁ > 0 (the Λ-atom has no finite r)",
        ));
    }
    let g23 = gamma2 + gamma3;
    if !(g23.re > 0.0) {
        return Err(SteadyStateError::Precondition("Re(γ₂ + γ₃) > 0"));
    }
    let alpha = c(0.0, -1.0) * rabi / g23;
    let r = gamma2.re / gamma1.re;
    let a2 = alpha.norm_sqr();
    let n = 1.0 + (2.0 + r) * a2;
    let mut m = CMatrix::zeros(3, 3);
    m[(2, 2)] = c(a2 / n, 0.0);
    m[(1, 1)] = c(r * a2 / n, 0.0);
    m[(0, 0)] = c((1.0 + a2) / n, 0.0);
    m[(2, 0)] = alpha / n;
    m[(0, 2)] = alpha.conj() / n;
    Ok(DensityMatrix::from_trusted(m))
}

/// The Λ-atom state decoupled from the lasers `Ω₂|2⟩⟨1| + Ω₃|2⟩⟨0| + h.c.`:
/// `ψ ∝ Ω₃|1⟩ − Ω₂|0⟩`.
pub fn lambda_dark_state(
    rabi2: Complex64,
    rabi3: Complex64,
) -> Result<StateVector, SteadyStateError> {
    StateVector::new(vec![-rabi2, rabi3, ZERO])
        .ok_or(SteadyStateError::Precondition("(Ω₂, Ω₃) ≠ (0, 0)"))
}

/// Right-hand sides of the Λ-atom matrix-element equations
/// `(ρ̇₀₀, ρ̇₂₂, ρ̇₀₂, ρ̇₀₁, ρ̇₁₂)` with `a₁ = b₁ = 0`. A stationary state makes
/// every entry vanish.
pub fn lambda_rates(
    rho: &CMatrix,
    gamma2: Complex64,
    gamma3: Complex64,
    rabi2: Complex64,
    rabi3: Complex64,
) -> [Complex64; 5] {
    let i = c(0.0, 1.0);
    let (a2, a3) = (gamma2.re, gamma3.re);
    let g = (gamma2 + gamma3).conj();
    let r = |m: usize, n: usize| rho[(m, n)];
    [
        c(2.0 * a3, 0.0) * r(2, 2) - c(2.0 * (rabi3 * r(0, 2)).im, 0.0),
        c(-2.0 * (a2 + a3), 0.0) * r(2, 2) + c(2.0 * (rabi2 * r(1, 2) + rabi3 * r(0, 2)).im, 0.0),
        -g * r(0, 2) - i * rabi3.conj() * (r(2, 2) - r(0, 0)) + i * rabi2.conj() * r(0, 1),
        i * rabi2 * r(0, 2) - i * rabi3.conj() * r(2, 1),
        -g * r(1, 2) - i * rabi2.conj() * (r(2, 2) - r(1, 1)) + i * rabi3.conj() * r(1, 0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::AtomSpec;
    use crate::bath::{BathCoefficients, LaserSpec};
    use crate::linalg::{ket_bra, max_abs_diff, ONE};

    fn two_level(gamma: Complex64, rabi: Complex64) -> Superoperator {
        let atom = AtomSpec::new(&[0.0, 1.0], &[((1, 0), ONE)]).unwrap();
        let set = atom.transition_operators();
        let lasers = [LaserSpec::rabi(1.0, rabi)];
        Superoperator::new(
            set.clone(),
            BathCoefficients::from_gammas(&set, &[gamma], &lasers).unwrap(),
        )
        .unwrap()
    }

    fn lambda(rabi2: Complex64, rabi3: Complex64) -> Superoperator {
        let atom = AtomSpec::new(&[0.0, 1.0, 3.0], &[((2, 1), ONE), ((2, 0), ONE)]).unwrap();
        let set = atom.transition_operators();
        let lasers = [LaserSpec::rabi(2.0, rabi2), LaserSpec::rabi(3.0, rabi3)];
        let b = BathCoefficients::from_gammas(&set, &[c(1.0, 0.2), c(0.7, -0.1)], &lasers).unwrap();
        Superoperator::new(set, b).unwrap()
    }

    #[test]
    fn two_level_example_values() {
        let rho = two_level_closed_form(ONE, c(0.0, 1.0)).unwrap();
        let third = 1.0 / 3.0;
        assert!((rho.entry(0, 0).re - 2.0 * third).abs() < 1e-15);
        assert!((rho.entry(1, 1).re - third).abs() < 1e-15);
        assert!((rho.entry(1, 0) - c(third, 0.0)).norm() < 1e-15);
        assert!((rho.entry(0, 1) - c(third, 0.0)).norm() < 1e-15);

        let num = steady_state(&two_level(ONE, c(0.0, 1.0))).unwrap();
        assert_eq!(num.kernel_dimension, 1);
        assert!(max_abs_diff(&num.states[0], &rho) < 1e-10);
    }

    #[test]
    fn two_level_limits() {
        let ground = two_level_closed_form(c(0.4, 0.1), ZERO).unwrap();
        assert_eq!(*ground.matrix(), ket_bra(2, 0, 0));
        let sat = two_level_closed_form(ONE, c(1e6, 0.0)).unwrap();
        assert!((sat.entry(0, 0).re - 0.5).abs() < 1e-6);
        assert!((sat.entry(1, 1).re - 0.5).abs() < 1e-6);
        assert!(sat.entry(0, 1).norm() < 1e-6);
        assert!(two_level_closed_form(c(0.0, 1.0), ONE).is_err());
    }

    #[test]
    fn three_level_example_values() {
        // a₁ = a₂, γ₂ + γ₃ = 1, Ω = i
        let rho = three_level_single_laser_closed_form(
            c(0.5, 0.0),
            c(0.5, 0.0),
            c(0.5, 0.0),
            c(0.0, 1.0),
        )
        .unwrap();
        assert!((rho.entry(2, 2).re - 0.25).abs() < 1e-15);
        assert!((rho.entry(1, 1).re - 0.25).abs() < 1e-15);
        assert!((rho.entry(0, 0).re - 0.5).abs() < 1e-15);
        assert!((rho.entry(2, 0) - c(0.25, 0.0)).norm() < 1e-15);
        assert!(three_level_single_laser_closed_form(ZERO, ONE, ONE, ONE).is_err());
    }

    #[test]
    fn lambda_atom_with_single_laser_parks_in_level_one() {
        let l = lambda(ZERO, c(0.8, 0.0));
        let res = steady_state(&l).unwrap();
        assert_eq!(res.kernel_dimension, 1);
        assert!(max_abs_diff(&res.states[0], &ket_bra(3, 1, 1)) < 1e-10);
    }

    #[test]
    fn dark_state_examples() {
        let s = lambda_dark_state(ONE, ONE).unwrap();
        let expect = StateVector::new(vec![-ONE, ONE, ZERO]).unwrap();
        assert!((s.fidelity(&expect) - 1.0).abs() < 1e-15);

        let s = lambda_dark_state(ZERO, c(0.0, 3.0)).unwrap();
        assert!((s.expectation(&ket_bra(3, 1, 1)) - 1.0).abs() < 1e-15);

        let s = lambda_dark_state(ONE, c(0.0, 2.0)).unwrap();
        let expect = StateVector::new(vec![-ONE, c(0.0, 2.0), ZERO]).unwrap();
        assert!((s.fidelity(&expect) - 1.0).abs() < 1e-15);
        for r in lambda_rates(&s.projector(), c(1.0, 0.2), c(0.7, -0.1), ONE, c(0.0, 2.0)) {
            assert!(r.norm() < 1e-15);
        }
        let res = steady_state(&lambda(ONE, c(0.0, 2.0))).unwrap();
        assert_eq!(res.kernel_dimension, 1);
        assert!(max_abs_diff(&res.states[0], &s.projector()) < 1e-10);

        assert!(lambda_dark_state(ZERO, ZERO).is_err());
    }

    #[test]
    fn literal_state_fails_the_equations_for_unequal_moduli() {
        // Ω₂*|1⟩ − Ω₃*|0⟩ only satisfies the equations when |Ω₂| = |Ω₃|
        let (r2, r3) = (ONE, c(0.0, 2.0));
        let literal = StateVector::new(vec![-r3.conj(), r2.conj(), ZERO]).unwrap();
        let res = lambda_rates(&literal.projector(), ONE, ONE, r2, r3);
        assert!(res.iter().map(|z| z.norm()).fold(0.0, f64::max) > 1e-3);
    }

    #[test]
    fn lambda_equations_match_generator() {
        // the five matrix-element equations agree with the assembled generator
        let (r2, r3) = (c(0.3, -0.4), c(1.1, 0.5));
        let l = lambda(r2, r3);
        let f = l.coefficients().frequencies();
        let rho = CMatrix::from_fn(3, 3, |m, n| {
            c((m + 2 * n) as f64 * 0.1, (m as f64 - n as f64) * 0.07)
        });
        let rho = linalg::hermitian_part(&rho);
        let lr = l.apply(&rho, 0.0).unwrap();
        let eq = lambda_rates(&rho, f[0].gamma, f[1].gamma, r2, r3);
        let direct = [lr[(0, 0)], lr[(2, 2)], lr[(0, 2)], lr[(0, 1)], lr[(1, 2)]];
        for (a, b) in eq.iter().zip(direct.iter()) {
            assert!((a - b).norm() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn undriven_lambda_is_degenerate() {
        let l = lambda(ZERO, ZERO);
        let res = steady_state(&l).unwrap();
        assert!(res.kernel_dimension >= 2);
        assert!(res.degenerate);
        assert!(res.unique_state().is_err());
        assert!(res.gap > 0.0);
        for s in &res.states {
            assert!(linalg::hermiticity_defect(s) < 1e-12);
            let out = l.apply(s, 0.0).unwrap();
            assert!(linalg::norm(&out) < 1e-9);
        }
    }

    #[test]
    fn two_level_gap_is_coherence_decay() {
        let g = 0.6;
        let l = two_level(c(g, 0.35), ZERO);
        let gap = relaxation_rate(&l).unwrap();
        assert!((gap - g).abs() < 1e-10, "{gap}");
        let mut eig = spectrum(&l).unwrap();
        eig.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        assert!((eig[0] - c(-2.0 * g, 0.0)).norm() < 1e-10);
        assert!((eig[1] - c(-g, -0.35)).norm() < 1e-10);
        assert!((eig[2] - c(-g, 0.35)).norm() < 1e-10);
        assert!(eig[3].norm() < 1e-10);
    }
}
