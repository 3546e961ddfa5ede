//! Bath coefficients: the generalized susceptibility `γ_ω` of the radiation
//! field and the laser field coefficients `c_ω`, together with the per-dipole
//! Rabi frequencies `Ω_j = c_{ω_j} d_j`.
//!
//! Form factors are isotropic with dispersion `ω(k) = |k|`, so every
//! three-dimensional momentum integral reduces to a radial one with measure
//! `4πk² dk`:
//!
//! ```text
//! Re γ_ω = π · 4πω² |g(ω)|²
//! Im γ_ω = −P.V. ∫_0^{K} 4πk² |g(k)|² / (k − ω) dk
//! c_ω    = 2π · 4πω² g*(ω) f(ω)
//! ```
//!
//! The sign of `Im γ_ω` follows from `1/(i(x − i0)) = πδ(x) − i P.V.(1/x)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::atom::{AtomSpec, TransitionPair, TransitionSet};
use crate::linalg::ZERO;
use crate::quadrature::{self, GaussLegendre};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BathError {
    #[error("frequency must be positive and finite, got {0}")]
    NonPositiveFrequency(f64),
    #[error("invalid form factor: {0}")]
    BadProfile(String),
    #[error("profile table line {line}: {message}")]
    TableParse { line: usize, message: String },
    #[error(
        "principal value at ω = {omega} did not converge: change {change:e} with {panels} panels per segment"
    )]
    NonConvergent {
        omega: f64,
        panels: usize,
        change: f64,
    },
    #[error("laser at ω = {0} is not resonant with any Bohr frequency")]
    NoResonance(f64),
    #[error("two lasers drive the same Bohr frequency ω = {0}")]
    DuplicateLaser(f64),
    #[error("Rabi override at ω = {0} is ambiguous: several dipole pairs share this frequency, name one")]
    AmbiguousRabiOverride(f64),
    #[error("dipole pair {pair} does not belong to the Bohr frequency ω = {omega}")]
    PairNotAtFrequency { pair: TransitionPair, omega: f64 },
    #[error("dipole pair {0} is not a coupled transition of this atom")]
    UnknownPair(TransitionPair),
    #[error(
        "laser at ω = {0} specifies an intensity profile but no bath form factor is available"
    )]
    MissingFormFactor(f64),
    #[error("invalid pulse window [{start}, {end}]")]
    BadWindow { start: f64, end: f64 },
    #[error("decay rate Re γ_ω must be non-negative, got {rate} at ω = {omega}")]
    NegativeDecay { omega: f64, rate: f64 },
    #[error("expected {expected} susceptibilities, got {got}")]
    GammaCountMismatch { expected: usize, got: usize },
}

impl BathError {
    /// Whether the error stems from user-supplied data rather than numerics.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, BathError::NonConvergent { .. })
    }
}

/// Radial profile shape.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileModel {
    /// `g(k) = A exp(−k²/(2w²))`
    Gaussian { amplitude: Complex64, width: f64 },
    /// `g(k) = A / (1 + (k/w)²)`
    Lorentzian { amplitude: Complex64, width: f64 },
    /// Linear interpolation between `(k, g)` samples, zero outside.
    Table(Vec<(f64, Complex64)>),
}

/// Isotropic radial form factor `k ↦ g(k)`, treated as zero beyond `cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormFactor {
    model: ProfileModel,
    cutoff: Option<f64>,
}

impl FormFactor {
    pub fn gaussian(amplitude: Complex64, width: f64) -> Result<Self, BathError> {
        check_width(width)?;
        Ok(Self {
            model: ProfileModel::Gaussian { amplitude, width },
            cutoff: None,
        })
    }

    pub fn lorentzian(amplitude: Complex64, width: f64) -> Result<Self, BathError> {
        check_width(width)?;
        Ok(Self {
            model: ProfileModel::Lorentzian { amplitude, width },
            cutoff: None,
        })
    }

    /// Samples must have strictly increasing, non-negative `k`. The cutoff
    /// defaults to the last sample.
    pub fn table(points: Vec<(f64, Complex64)>) -> Result<Self, BathError> {
        if points.len() < 2 {
            return Err(BathError::BadProfile(
                "a table needs at least two samples".into(),
            ));
        }
        for (i, (k, g)) in points.iter().enumerate() {
            if !k.is_finite() || *k < 0.0 || !g.re.is_finite() || !g.im.is_finite() {
                return Err(BathError::BadProfile(format!("sample {i} is not finite")));
            }
            if i > 0 && *k <= points[i - 1].0 {
                return Err(BathError::BadProfile(format!(
                    "sample {i}: k must increase strictly"
                )));
            }
        }
        let last = points[points.len() - 1].0;
        Ok(Self {
            model: ProfileModel::Table(points),
            cutoff: Some(last),
        })
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Result<Self, BathError> {
        if !cutoff.is_finite() || cutoff <= 0.0 {
            return Err(BathError::BadProfile(format!(
                "cutoff must be positive, got {cutoff}"
            )));
        }
        self.cutoff = Some(cutoff);
        Ok(self)
    }

    pub fn model(&self) -> &ProfileModel {
        &self.model
    }

    pub fn cutoff(&self) -> Option<f64> {
        self.cutoff
    }

    /// Multiplies the profile by a complex constant.
    pub fn scaled(&self, s: Complex64) -> Self {
        let model = match &self.model {
            ProfileModel::Gaussian { amplitude, width } => ProfileModel::Gaussian {
                amplitude: amplitude * s,
                width: *width,
            },
            ProfileModel::Lorentzian { amplitude, width } => ProfileModel::Lorentzian {
                amplitude: amplitude * s,
                width: *width,
            },
            ProfileModel::Table(points) => {
                ProfileModel::Table(points.iter().map(|(k, g)| (*k, g * s)).collect())
            }
        };
        Self {
            model,
            cutoff: self.cutoff,
        }
    }

    /// Profile value, zero for `k` beyond the cutoff.
    pub fn eval(&self, k: f64) -> Complex64 {
        if let Some(cut) = self.cutoff {
            if k > cut {
                return ZERO;
            }
        }
        match &self.model {
            ProfileModel::Gaussian { amplitude, width } => {
                amplitude * (-k * k / (2.0 * width * width)).exp()
            }
            ProfileModel::Lorentzian { amplitude, width } => {
                amplitude / (1.0 + (k / width).powi(2))
            }
            ProfileModel::Table(points) => interpolate(points, k),
        }
    }

    /// Points where the profile is not smooth.
    fn knots(&self) -> Vec<f64> {
        match &self.model {
            ProfileModel::Table(points) => points.iter().map(|(k, _)| *k).collect(),
            _ => Vec::new(),
        }
    }

    /// Radial shell density `4πk²|g(k)|²`.
    pub fn shell_density(&self, k: f64) -> f64 {
        4.0 * PI * k * k * self.eval(k).norm_sqr()
    }
}

fn check_width(width: f64) -> Result<(), BathError> {
    if width.is_finite() && width > 0.0 {
        Ok(())
    } else {
        Err(BathError::BadProfile(format!(
            "width must be positive, got {width}"
        )))
    }
}

fn interpolate(points: &[(f64, Complex64)], k: f64) -> Complex64 {
    let (first, last) = (points[0].0, points[points.len() - 1].0);
    if k < first || k > last {
        return ZERO;
    }
    let idx = points.partition_point(|(x, _)| *x <= k);
    if idx >= points.len() {
        return points[points.len() - 1].1;
    }
    let (x0, y0) = points[idx - 1];
    let (x1, y1) = points[idx];
    let t = (k - x0) / (x1 - x0);
    y0 + (y1 - y0) * t
}

/// Parses a profile table: one sample per line as `k value` or
/// `k re im`, whitespace or comma separated. Blank lines and `#` comments
/// are skipped.
pub fn parse_profile_table(text: &str) -> Result<Vec<(f64, Complex64)>, BathError> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| BathError::TableParse {
                line: i + 1,
                message: format!("{s:?}: {e}"),
            })
        };
        let point = match fields.as_slice() {
            [k, v] => (parse(k)?, Complex64::new(parse(v)?, 0.0)),
            [k, re, im] => (parse(k)?, Complex64::new(parse(re)?, parse(im)?)),
            _ => {
                return Err(BathError::TableParse {
                    line: i + 1,
                    message: format!("expected 2 or 3 columns, found {}", fields.len()),
                })
            }
        };
        points.push(point);
    }
    Ok(points)
}

/// Quadrature controls for the principal-value part of `γ_ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    pub rel_tol: f64,
    /// Momentum cutoff used when the form factor has none.
    pub k_max: Option<f64>,
    pub order: usize,
    pub initial_panels: usize,
    pub max_refinements: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            k_max: None,
            order: 16,
            initial_panels: 8,
            max_refinements: 12,
        }
    }
}

impl QuadratureSettings {
    fn cutoff_for(&self, g: &FormFactor, omega: f64) -> f64 {
        g.cutoff().or(self.k_max).unwrap_or(10.0 * omega)
    }
}

/// Generalized susceptibility at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Susceptibility {
    pub value: Complex64,
    /// Set when `ω ≥ K_max`: the resonant shell lies outside the profile support.
    pub shell_outside_cutoff: bool,
}

/// `γ_ω` for an isotropic form factor.
pub fn susceptibility(
    g: &FormFactor,
    omega: f64,
    quad: &QuadratureSettings,
) -> Result<Susceptibility, BathError> {
    if !omega.is_finite() || omega <= 0.0 {
        return Err(BathError::NonPositiveFrequency(omega));
    }
    let k_max = quad.cutoff_for(g, omega);
    let outside = omega >= k_max;
    let decay = if outside {
        0.0
    } else {
        PI * g.shell_density(omega)
    };
    let rule = GaussLegendre::new(quad.order);
    let pv = quadrature::principal_value(
        &rule,
        |k| g.shell_density(k),
        omega,
        k_max,
        &g.knots(),
        quad.rel_tol,
        quad.initial_panels,
        quad.max_refinements,
    )
    .map_err(|last| BathError::NonConvergent {
        omega,
        panels: last.panels,
        change: last.change,
    })?;
    Ok(Susceptibility {
        value: Complex64::new(decay, -pv.value),
        shell_outside_cutoff: outside,
    })
}

/// Laser field coefficient `c_ω = 8π²ω² g*(ω) f(ω)`.
pub fn rabi_coefficient(g: &FormFactor, f: &FormFactor, omega: f64) -> Complex64 {
    8.0 * PI * PI * omega * omega * g.eval(omega).conj() * f.eval(omega)
}

/// Rectangular pulse window on the rescaled time axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    AlwaysOn,
    Interval { start: f64, end: f64 },
}

impl Window {
    pub fn interval(start: f64, end: f64) -> Result<Self, BathError> {
        if start.is_finite() && end.is_finite() && start < end {
            Ok(Window::Interval { start, end })
        } else {
            Err(BathError::BadWindow { start, end })
        }
    }

    /// Characteristic function of the closed window.
    pub fn contains(&self, t: f64) -> bool {
        match *self {
            Window::AlwaysOn => true,
            Window::Interval { start, end } => start <= t && t <= end,
        }
    }

    pub fn edges(&self) -> Option<(f64, f64)> {
        match *self {
            Window::AlwaysOn => None,
            Window::Interval { start, end } => Some((start, end)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LaserDrive {
    /// Field amplitude profile `f`; `c_ω` follows from the shell overlap with `g`.
    Profile(FormFactor),
    /// Direct Rabi frequency for a dipole pair. `pair` may be omitted when only
    /// one pair is resonant with the laser.
    Rabi {
        omega: Complex64,
        pair: Option<TransitionPair>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaserSpec {
    pub frequency: f64,
    pub drive: LaserDrive,
    pub window: Window,
}

impl LaserSpec {
    pub fn rabi(frequency: f64, omega: Complex64) -> Self {
        Self {
            frequency,
            drive: LaserDrive::Rabi { omega, pair: None },
            window: Window::AlwaysOn,
        }
    }

    pub fn with_window(mut self, window: Window) -> Self {
        self.window = window;
        self
    }
}

/// Coefficients attached to one Bohr frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyCoefficients {
    pub omega: f64,
    /// `γ_ω = a + ib`.
    pub gamma: Complex64,
    /// Laser field coefficient `c_ω` (zero when undriven).
    pub field: Complex64,
    pub window: Window,
    pub driven: bool,
    pub shell_outside_cutoff: bool,
    pub pairs: Vec<(TransitionPair, Complex64)>,
}

/// Per-dipole view: `γ_j = γ_{ω_j}|d_j|²` and `Ω_j = c_{ω_j} d_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionCoefficients {
    pub pair: TransitionPair,
    pub dipole: Complex64,
    pub omega: f64,
    pub weighted_gamma: Complex64,
    pub rabi: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathCoefficients {
    frequencies: Vec<FrequencyCoefficients>,
}

impl BathCoefficients {
    /// Combines per-frequency susceptibilities (aligned with `transitions`)
    /// with the laser list. Profile-driven lasers need the bath form factor.
    pub fn assemble(
        transitions: &TransitionSet,
        gammas: &[Susceptibility],
        lasers: &[LaserSpec],
        g: Option<&FormFactor>,
    ) -> Result<Self, BathError> {
        if gammas.len() != transitions.len() {
            return Err(BathError::GammaCountMismatch {
                expected: transitions.len(),
                got: gammas.len(),
            });
        }
        let mut frequencies: Vec<FrequencyCoefficients> = transitions
            .iter()
            .zip(gammas)
            .map(|(t, s)| FrequencyCoefficients {
                omega: t.omega,
                gamma: s.value,
                field: ZERO,
                window: Window::AlwaysOn,
                driven: false,
                shell_outside_cutoff: s.shell_outside_cutoff,
                pairs: t.pairs.clone(),
            })
            .collect();
        for f in &frequencies {
            if !(f.gamma.re >= 0.0) {
                return Err(BathError::NegativeDecay {
                    omega: f.omega,
                    rate: f.gamma.re,
                });
            }
        }
        for laser in lasers {
            if !laser.frequency.is_finite() || laser.frequency <= 0.0 {
                return Err(BathError::NonPositiveFrequency(laser.frequency));
            }
            let idx = transitions
                .index_of_frequency(laser.frequency)
                .ok_or(BathError::NoResonance(laser.frequency))?;
            let entry = &mut frequencies[idx];
            if entry.driven {
                return Err(BathError::DuplicateLaser(entry.omega));
            }
            entry.field = match &laser.drive {
                LaserDrive::Profile(f) => {
                    let g = g.ok_or(BathError::MissingFormFactor(laser.frequency))?;
                    rabi_coefficient(g, f, entry.omega)
                }
                LaserDrive::Rabi { omega, pair } => {
                    let d = reference_dipole(entry, *pair)?;
                    omega / d
                }
            };
            entry.window = laser.window;
            entry.driven = true;
        }
        Ok(Self { frequencies })
    }

    /// Vacuum bath with susceptibilities given directly, one per frequency.
    pub fn from_gammas(
        transitions: &TransitionSet,
        gammas: &[Complex64],
        lasers: &[LaserSpec],
    ) -> Result<Self, BathError> {
        let s: Vec<Susceptibility> = gammas
            .iter()
            .map(|g| Susceptibility {
                value: *g,
                shell_outside_cutoff: false,
            })
            .collect();
        Self::assemble(transitions, &s, lasers, None)
    }

    pub fn frequencies(&self) -> &[FrequencyCoefficients] {
        &self.frequencies
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn transitions(&self) -> Vec<TransitionCoefficients> {
        self.frequencies
            .iter()
            .flat_map(|f| {
                f.pairs.iter().map(move |(pair, d)| TransitionCoefficients {
                    pair: *pair,
                    dipole: *d,
                    omega: f.omega,
                    weighted_gamma: f.gamma * d.norm_sqr(),
                    rabi: f.field * d,
                })
            })
            .collect()
    }

    fn find_pair(&self, pair: TransitionPair) -> Option<(usize, Complex64)> {
        self.frequencies.iter().enumerate().find_map(|(i, f)| {
            f.pairs
                .iter()
                .find(|(p, _)| *p == pair)
                .map(|(_, d)| (i, *d))
        })
    }

    /// `Ω_j` for a dipole pair; zero when undriven or absent.
    pub fn rabi(&self, pair: TransitionPair) -> Complex64 {
        self.find_pair(pair)
            .map(|(i, d)| self.frequencies[i].field * d)
            .unwrap_or(ZERO)
    }

    /// `γ_j = γ_{ω_j}|d_j|²`; zero when the pair is not coupled.
    pub fn weighted_gamma(&self, pair: TransitionPair) -> Complex64 {
        self.find_pair(pair)
            .map(|(i, d)| self.frequencies[i].gamma * d.norm_sqr())
            .unwrap_or(ZERO)
    }

    /// Copy with the laser on `pair`'s frequency replaced so that `Ω_pair = rabi`.
    pub fn with_rabi(
        &self,
        pair: TransitionPair,
        rabi: Complex64,
        window: Window,
    ) -> Result<Self, BathError> {
        let (i, d) = self.find_pair(pair).ok_or(BathError::UnknownPair(pair))?;
        let mut out = self.clone();
        let entry = &mut out.frequencies[i];
        entry.field = rabi / d;
        entry.window = window;
        entry.driven = rabi != ZERO;
        Ok(out)
    }

    /// Copy with every laser switched off.
    pub fn undriven(&self) -> Self {
        let mut out = self.clone();
        for f in &mut out.frequencies {
            f.field = ZERO;
            f.window = Window::AlwaysOn;
            f.driven = false;
        }
        out
    }

    /// Largest `|γ_j|` or `|Ω_j|`, the stiffness scale of the generator.
    pub fn rate_scale(&self) -> f64 {
        self.transitions()
            .iter()
            .map(|t| t.weighted_gamma.norm().max(t.rabi.norm()))
            .fold(0.0, f64::max)
    }

    /// Sorted distinct window edges.
    pub fn window_edges(&self) -> Vec<f64> {
        let mut edges: Vec<f64> = self
            .frequencies
            .iter()
            .filter(|f| f.driven)
            .filter_map(|f| f.window.edges())
            .flat_map(|(a, b)| [a, b])
            .collect();
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        edges
    }
}

fn reference_dipole(
    entry: &FrequencyCoefficients,
    pair: Option<TransitionPair>,
) -> Result<Complex64, BathError> {
    match pair {
        Some(p) => entry
            .pairs
            .iter()
            .find(|(q, _)| *q == p)
            .map(|(_, d)| *d)
            .ok_or(BathError::PairNotAtFrequency {
                pair: p,
                omega: entry.omega,
            }),
        None => match entry.pairs.as_slice() {
            [(_, d)] => Ok(*d),
            _ => Err(BathError::AmbiguousRabiOverride(entry.omega)),
        },
    }
}

/// Full coefficient set for an atom in a bath with form factor `g`.
///
/// Unless `g` or `quad` fixes a cutoff, `K_max` defaults to ten times the
/// largest Bohr frequency.
pub fn rabi_frequencies(
    atom: &AtomSpec,
    lasers: &[LaserSpec],
    g: &FormFactor,
    quad: &QuadratureSettings,
) -> Result<BathCoefficients, BathError> {
    let transitions = atom.transition_operators();
    let freqs = transitions.frequencies();
    let mut quad = *quad;
    if quad.k_max.is_none() {
        let top = freqs.iter().copied().fold(0.0, f64::max);
        if top > 0.0 {
            quad.k_max = Some(10.0 * top);
        }
    }
    let gammas = freqs
        .iter()
        .map(|w| susceptibility(g, *w, &quad))
        .collect::<Result<Vec<_>, _>>()?;
    BathCoefficients::assemble(&transitions, &gammas, lasers, Some(g))
}
