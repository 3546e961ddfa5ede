//! Time integration of `dρ/dt = L_t(ρ)` over piecewise-constant pulse
//! schedules.

use std::collections::HashMap;

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{self, c, CMatrix};
use crate::liouvillian::{DensityMatrix, Superoperator};

/// Trace drift beyond which integration is aborted.
pub const MAX_TRACE_DRIFT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("invalid time span [{0}, {1}]")]
    BadSpan(f64, f64),
    #[error("invalid step control: {0}")]
    BadStep(String),
    #[error("initial state is {got}-dimensional, generator acts on dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("adaptive step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("trace drifted by {drift:e} at t = {t}")]
    TraceDrift { t: f64, drift: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepControl {
    /// Classical RK4. `dt = None` picks `10⁻² / max(|γ_j|, |Ω_j|, 1)`.
    Fixed { dt: Option<f64> },
    /// Dormand–Prince 5(4) with error control.
    Adaptive {
        rtol: f64,
        atol: f64,
        initial_dt: Option<f64>,
        min_dt: f64,
    },
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Fixed { dt: None }
    }
}

impl StepControl {
    pub fn adaptive(rtol: f64, atol: f64) -> Self {
        StepControl::Adaptive {
            rtol,
            atol,
            initial_dt: None,
            min_dt: 1e-12,
        }
    }
}

/// Default RK4 step for a generator.
pub fn default_step(l: &Superoperator) -> f64 {
    1e-2 / l.coefficients().rate_scale().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// `|Tr ρ − 1|`
    pub trace_error: f64,
    /// Smallest eigenvalue of the Hermitian part of `ρ`.
    pub min_eigenvalue: f64,
}

impl Diagnostics {
    fn of(m: &CMatrix) -> Self {
        Self {
            trace_error: (linalg::trace(m) - c(1.0, 0.0)).norm(),
            min_eigenvalue: linalg::hermitian_eigenvalues(m)[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub diagnostics: Vec<Diagnostics>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &DensityMatrix {
        self.states
            .last()
            .expect("trajectory holds at least the initial state")
    }

    /// Time series of one matrix element.
    pub fn element(&self, m: usize, n: usize) -> Vec<Complex64> {
        self.states.iter().map(|s| s.entry(m, n)).collect()
    }

    pub fn max_trace_error(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.trace_error)
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }
}

struct Recorder {
    dim: usize,
    traj: Trajectory,
}

impl Recorder {
    fn push(&mut self, t: f64, v: &DVector<Complex64>) -> Result<(), DynamicsError> {
        let m = linalg::devectorize(v.as_slice(), self.dim);
        let diag = Diagnostics::of(&m);
        if diag.trace_error > MAX_TRACE_DRIFT {
            return Err(DynamicsError::TraceDrift {
                t,
                drift: diag.trace_error,
            });
        }
        self.traj.times.push(t);
        self.traj.states.push(DensityMatrix::from_trusted(m));
        self.traj.diagnostics.push(diag);
        Ok(())
    }
}

/// Integrates from `rho0` over `[t0, t1]`. Window edges are mandatory grid
/// points, so no step crosses a discontinuity of `L_t`. Every accepted step is
/// recorded.
pub fn evolve(
    rho0: &DensityMatrix,
    l: &Superoperator,
    t_span: (f64, f64),
    control: &StepControl,
) -> Result<Trajectory, DynamicsError> {
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
        return Err(DynamicsError::BadSpan(t0, t1));
    }
    if rho0.dim() != l.dim() {
        return Err(DynamicsError::DimensionMismatch {
            expected: l.dim(),
            got: rho0.dim(),
        });
    }
    let mut breaks = vec![t0];
    breaks.extend(
        l.coefficients()
            .window_edges()
            .into_iter()
            .filter(|e| *e > t0 && *e < t1),
    );
    breaks.push(t1);

    let mut cache: HashMap<Vec<bool>, CMatrix> = HashMap::new();
    let mut rec = Recorder {
        dim: l.dim(),
        traj: Trajectory {
            times: Vec::new(),
            states: Vec::new(),
            diagnostics: Vec::new(),
        },
    };
    let mut v = linalg::vectorize(rho0.matrix());
    rec.push(t0, &v)?;

    let mut adaptive_h = None;
    for seg in breaks.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let mask = l.drive_mask(0.5 * (a + b));
        let m = cache
            .entry(mask.clone())
            .or_insert_with(|| l.vectorize_with(&mask));
        match *control {
            StepControl::Fixed { dt } => {
                let dt = dt.unwrap_or_else(|| default_step(l));
                if !(dt.is_finite() && dt > 0.0) {
                    return Err(DynamicsError::BadStep(format!("dt = {dt}")));
                }
                let steps = ((b - a) / dt - 1e-9).ceil().max(1.0) as usize;
                let h = (b - a) / steps as f64;
                for k in 1..=steps {
                    v = rk4_step(m, &v, h);
                    let t = if k == steps { b } else { a + h * k as f64 };
                    rec.push(t, &v)?;
                }
            }
            StepControl::Adaptive {
                rtol,
                atol,
                initial_dt,
                min_dt,
            } => {
                if !(rtol > 0.0 && atol > 0.0 && min_dt > 0.0) {
                    return Err(DynamicsError::BadStep(
                        "adaptive tolerances must be positive".into(),
                    ));
                }
                let h0 = adaptive_h.or(initial_dt).unwrap_or_else(|| default_step(l));
                let (nv, last_h) = dopri_segment(m, v, (a, b), h0, (rtol, atol, min_dt), &mut rec)?;
                v = nv;
                adaptive_h = Some(last_h);
            }
        }
    }
    Ok(rec.traj)
}

fn rk4_step(m: &CMatrix, v: &DVector<Complex64>, h: f64) -> DVector<Complex64> {
    let h = c(h, 0.0);
    let half = c(0.5, 0.0);
    let k1 = m * v;
    let k2 = m * (v + &k1 * h * half);
    let k3 = m * (v + &k2 * h * half);
    let k4 = m * (v + &k3 * h);
    v + (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * (h / c(6.0, 0.0))
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dopri_segment(
    m: &CMatrix,
    mut v: DVector<Complex64>,
    (a, b): (f64, f64),
    h0: f64,
    (rtol, atol, min_dt): (f64, f64, f64),
    rec: &mut Recorder,
) -> Result<(DVector<Complex64>, f64), DynamicsError> {
    let mut t = a;
    let mut h = h0.min(b - a);
    let mut last_h = h;
    while t < b {
        let end = t + h >= b;
        let step = if end { b - t } else { h };
        let mut k: Vec<DVector<Complex64>> = Vec::with_capacity(7);
        k.push(m * &v);
        for row in A.iter() {
            let mut y = v.clone();
            for (j, aj) in row.iter().enumerate().take(k.len()) {
                if *aj != 0.0 {
                    y += &k[j] * c(step * aj, 0.0);
                }
            }
            k.push(m * y);
        }
        let mut high = v.clone();
        let mut err = DVector::zeros(v.len());
        for j in 0..7 {
            high += &k[j] * c(step * B5[j], 0.0);
            err += &k[j] * c(step * (B5[j] - B4[j]), 0.0);
        }
        let ratio = err
            .iter()
            .zip(v.iter().zip(high.iter()))
            .map(|(e, (y0, y1))| e.norm() / (atol + rtol * y0.norm().max(y1.norm())))
            .fold(0.0, f64::max);
        if ratio <= 1.0 {
            t = if end { b } else { t + step };
            v = high;
            rec.push(t, &v)?;
            last_h = step;
        }
        let factor = if ratio == 0.0 {
            5.0
        } else {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = step * factor;
        if h < min_dt && t < b {
            return Err(DynamicsError::StepUnderflow { t, h });
        }
    }
    Ok((v, last_h))
}

/// `Tr(ρX)`; `non_hermitian` flags an observable with `X ≠ X†`, in which case
/// the complex value is kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableAverage {
    pub value: Complex64,
    pub non_hermitian: bool,
}

impl ObservableAverage {
    pub fn real(&self) -> f64 {
        self.value.re
    }
}

pub fn observable_average(rho: &DensityMatrix, x: &CMatrix) -> ObservableAverage {
    let value = linalg::trace(&(rho.matrix() * x));
    ObservableAverage {
        value,
        non_hermitian: linalg::hermiticity_defect(x) > 1e-12,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::AtomSpec;
    use crate::bath::{BathCoefficients, LaserSpec, Window};
    use crate::linalg::{ket_bra, ONE};

    fn decay(gamma: f64, laser: Option<LaserSpec>) -> Superoperator {
        let atom = AtomSpec::new(&[0.0, 1.0], &[((1, 0), ONE)]).unwrap();
        let set = atom.transition_operators();
        let lasers: Vec<_> = laser.into_iter().collect();
        let b = BathCoefficients::from_gammas(&set, &[c(gamma, 0.2)], &lasers).unwrap();
        Superoperator::new(set, b).unwrap()
    }

    #[test]
    fn excited_population_decays_exponentially() {
        let l = decay(0.5, None);
        let tr = evolve(
            &DensityMatrix::basis_state(2, 1),
            &l,
            (0.0, 4.0),
            &StepControl::default(),
        )
        .unwrap();
        for (t, s) in tr.times.iter().zip(&tr.states) {
            assert!((s.entry(1, 1).re - (-2.0 * 0.5 * t).exp()).abs() < 1e-10);
        }
        assert!(tr.max_trace_error() < 1e-12);
        assert_eq!(*tr.times.last().unwrap(), 4.0);
    }

    #[test]
    fn adaptive_matches_analytic_decay() {
        let l = decay(1.0, None);
        let tr = evolve(
            &DensityMatrix::basis_state(2, 1),
            &l,
            (0.0, 3.0),
            &StepControl::adaptive(1e-10, 1e-12),
        )
        .unwrap();
        let rho = tr.final_state();
        assert!((rho.entry(1, 1).re - (-6.0f64).exp()).abs() < 1e-8);
        assert!(tr.len() < 2000);
    }

    #[test]
    fn adaptive_underflow_is_reported() {
        let l = decay(1.0, None);
        let ctl = StepControl::Adaptive {
            rtol: 1e-300,
            atol: 1e-300,
            initial_dt: Some(0.1),
            min_dt: 1e-3,
        };
        assert!(matches!(
            evolve(&DensityMatrix::basis_state(2, 1), &l, (0.0, 1.0), &ctl),
            Err(DynamicsError::StepUnderflow { .. })
        ));
    }

    #[test]
    fn window_edges_are_grid_points() {
        let laser =
            LaserSpec::rabi(1.0, c(0.0, 2.0)).with_window(Window::interval(0.33, 1.01).unwrap());
        let l = decay(0.3, Some(laser));
        let tr = evolve(
            &DensityMatrix::basis_state(2, 0),
            &l,
            (0.0, 2.0),
            &StepControl::Fixed { dt: Some(0.1) },
        )
        .unwrap();
        assert!(tr.times.contains(&0.33));
        assert!(tr.times.contains(&1.01));
        // nothing happens before the pulse
        let before = tr.times.iter().position(|t| *t == 0.33).unwrap();
        assert_eq!(tr.states[before].entry(1, 1), c(0.0, 0.0));
        assert!(tr.states[before + 1].entry(1, 1).re > 0.0);
    }

    #[test]
    fn bad_inputs() {
        let l = decay(1.0, None);
        let rho = DensityMatrix::basis_state(2, 1);
        assert!(matches!(
            evolve(&rho, &l, (1.0, 1.0), &StepControl::default()),
            Err(DynamicsError::BadSpan(..))
        ));
        assert!(matches!(
            evolve(
                &DensityMatrix::basis_state(3, 1),
                &l,
                (0.0, 1.0),
                &StepControl::default()
            ),
            Err(DynamicsError::DimensionMismatch { .. })
        ));
        assert!(evolve(&rho, &l, (0.0, 1.0), &StepControl::Fixed { dt: Some(-1.0) }).is_err());
    }

    #[test]
    fn observable_averages() {
        let rho = DensityMatrix::pure(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let id = observable_average(&rho, &CMatrix::identity(2, 2));
        assert!((id.real() - 1.0).abs() < 1e-15);
        assert!(!id.non_hermitian);
        let up = observable_average(&rho, &ket_bra(2, 1, 1));
        assert!((up.real() - 0.64).abs() < 1e-15);
        let odd = observable_average(&rho, &ket_bra(2, 0, 1));
        assert!(odd.non_hermitian);
        assert!(odd.value.im.abs() > 0.0);
    }
}
