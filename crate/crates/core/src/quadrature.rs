//! Composite Gauss–Legendre quadrature and Cauchy principal values by
//! singularity subtraction.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the Chebyshev initial guess.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `∫_a^b f` with a single panel.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// `∫_a^b f` split into `panels` equal panels.
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + h * p as f64;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }

    /// Composite rule over consecutive `breakpoints`, each gap split into `panels`.
    pub fn composite_over<F: FnMut(f64) -> f64>(
        &self,
        breakpoints: &[f64],
        panels: usize,
        mut f: F,
    ) -> f64 {
        breakpoints
            .windows(2)
            .map(|w| self.composite(w[0], w[1], panels, &mut f))
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Principal value `P.V. ∫_0^{upper} h(k)/(k − pole) dk` on a fixed grid.
///
/// For `0 < pole < upper` the integrand is regularised as
/// `(h(k) − h(pole))/(k − pole)` and the subtracted term is added back
/// analytically as `h(pole)·ln((upper − pole)/pole)`. Outside the interval the
/// integral is ordinary. `extra_breaks` lists interior points where `h` has
/// kinks (table knots); every gap between breakpoints gets `panels` panels.
pub fn principal_value_on_grid<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    h: F,
    pole: f64,
    upper: f64,
    extra_breaks: &[f64],
    panels: usize,
) -> f64 {
    let interior = pole > 0.0 && pole < upper;
    let mut breaks = vec![0.0, upper];
    if interior {
        breaks.push(pole);
    }
    breaks.extend(
        extra_breaks
            .iter()
            .copied()
            .filter(|k| *k > 0.0 && *k < upper),
    );
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * upper.max(1.0));

    if interior {
        let h_pole = h(pole);
        let smooth = rule.composite_over(&breaks, panels, |k| (h(k) - h_pole) / (k - pole));
        smooth + h_pole * ((upper - pole) / pole).ln()
    } else {
        rule.composite_over(&breaks, panels, |k| h(k) / (k - pole))
    }
}

/// Scale of the regularised integrand, used as an absolute floor when the
/// principal value itself cancels to zero.
fn principal_value_scale<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    h: F,
    pole: f64,
    upper: f64,
    panels: usize,
) -> f64 {
    let interior = pole > 0.0 && pole < upper;
    let h_pole = if interior { h(pole) } else { 0.0 };
    let mut breaks = vec![0.0, upper];
    if interior {
        breaks.insert(1, pole);
    }
    let body = rule.composite_over(&breaks, panels, |k| ((h(k) - h_pole) / (k - pole)).abs());
    let tail = if interior {
        (h_pole * ((upper - pole) / pole).ln()).abs()
    } else {
        0.0
    };
    body + tail
}

/// Result of a refined principal-value computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvEstimate {
    pub value: f64,
    /// Panels per breakpoint gap in the accepted grid.
    pub panels: usize,
    /// `|I(2n) − I(n)|` at acceptance.
    pub change: f64,
}

/// Doubles the grid from `initial_panels` until two successive estimates
/// agree to `rel_tol` (relative to the larger of the value and the integrand
/// scale). Returns `Err(last estimate)` if `max_refinements` is exhausted.
#[allow(clippy::too_many_arguments)]
pub fn principal_value<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    h: F,
    pole: f64,
    upper: f64,
    extra_breaks: &[f64],
    rel_tol: f64,
    initial_panels: usize,
    max_refinements: usize,
) -> Result<PvEstimate, PvEstimate> {
    let mut panels = initial_panels.max(1);
    let mut previous = principal_value_on_grid(rule, &h, pole, upper, extra_breaks, panels);
    let mut last = PvEstimate {
        value: previous,
        panels,
        change: f64::INFINITY,
    };
    for _ in 0..max_refinements {
        panels *= 2;
        let current = principal_value_on_grid(rule, &h, pole, upper, extra_breaks, panels);
        let change = (current - previous).abs();
        last = PvEstimate {
            value: current,
            panels,
            change,
        };
        let scale = current
            .abs()
            .max(principal_value_scale(rule, &h, pole, upper, panels) * 1e-3);
        if !change.is_finite() {
            return Err(last);
        }
        if change <= rel_tol * scale {
            return Ok(last);
        }
        previous = current;
    }
    Err(last)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        // degree 15 is exact for 8 nodes
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let w: f64 = gl.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn principal_value_of_one_over_x_minus_pole() {
        // P.V. ∫_0^3 1/(k-1) dk = ln 2
        let gl = GaussLegendre::new(16);
        let v = principal_value_on_grid(&gl, |_| 1.0, 1.0, 3.0, &[], 4);
        assert!((v - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn principal_value_of_linear_numerator() {
        // P.V. ∫_0^2 k/(k-0.5) dk = 2 + 0.5 ln(1.5/0.5)
        let gl = GaussLegendre::new(16);
        let v = principal_value_on_grid(&gl, |k| k, 0.5, 2.0, &[], 2);
        assert!((v - (2.0 + 0.5 * 3f64.ln())).abs() < 1e-13);
    }

    #[test]
    fn symmetric_numerator_cancels() {
        // h even about the pole on [0, 2ω] gives zero
        let omega = 1.3;
        let gl = GaussLegendre::new(16);
        let h = |k: f64| (-(k - omega).powi(2)).exp() * (1.0 + (k - omega).powi(2));
        let est = principal_value(&gl, h, omega, 2.0 * omega, &[], 1e-10, 4, 12).unwrap();
        assert!(est.value.abs() < 1e-12, "{}", est.value);
    }

    #[test]
    fn pole_outside_range_is_ordinary_integral() {
        // ∫_0^1 1/(k-2) dk = ln(1/2)
        let gl = GaussLegendre::new(16);
        let v = principal_value_on_grid(&gl, |_| 1.0, 2.0, 1.0, &[], 4);
        assert!((v - 0.5f64.ln()).abs() < 1e-13);
    }
}
