//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense complex matrix, column-major.
pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `|m⟩⟨n|` in a `dim`-dimensional space.
pub fn ket_bra(dim: usize, m: usize, n: usize) -> CMatrix {
    let mut out = CMatrix::zeros(dim, dim);
    out[(m, n)] = ONE;
    out
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Frobenius norm.
pub fn norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entrywise deviation `max |a_ij − b_ij|`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `max |a − a†|` entrywise.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * c(0.5, 0.0)
}

/// Eigenvalues of the Hermitian part of `a`, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let mut vals: Vec<f64> = hermitian_part(a)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Trace distance `½‖a − b‖₁` between two Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b))
        .iter()
        .map(|v| v.abs())
        .sum::<f64>()
}

/// Column-stacking vectorization.
pub fn vectorize(a: &CMatrix) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vectorize`] for a `dim × dim` matrix.
pub fn devectorize(v: &[Complex64], dim: usize) -> CMatrix {
    assert_eq!(v.len(), dim * dim, "vector length must be dim²");
    CMatrix::from_column_slice(dim, dim, v)
}

/// Projector `|ψ⟩⟨ψ|`.
pub fn projector(psi: &[Complex64]) -> CMatrix {
    let d = psi.len();
    CMatrix::from_fn(d, d, |m, n| psi[m] * psi[n].conj())
}
