//! Experiment configuration (TOML).
//!
//! ```toml
//! [atom]
//! energies = [0.0, 1.0, 3.0]
//! [[atom.dipoles]]
//! transition = "(2,1)"
//! amplitude = 1.0            # number or "re+imj"
//!
//! [bath]
//! model = "direct"           # gaussian | lorentzian | table | direct
//! gammas = [{ transition = "(2,1)", value = "1+0j" }]
//!
//! [[lasers]]
//! target = "(2,1)"
//! rabi = "1+0j"              # or an [lasers.intensity] profile
//! window = [0.0, 5.0]        # omitted = always on
//!
//! [solver]
//! t_span = [0.0, 10.0]
//! initial_state = 2          # level index or list of amplitudes
//!
//! [design]
//! target = "0.7071|1> - 0.7071|0>"
//! ```
//!
//! Unknown keys are rejected and every error names the offending key path.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;
use thiserror::Error;

use crate::atom::{AtomSpec, TransitionPair, TransitionSet};
use crate::bath::{
    self, BathCoefficients, FormFactor, LaserDrive, LaserSpec, QuadratureSettings, Window,
};
use crate::control::{ControlTarget, DarkStateConvention};
use crate::dynamics::StepControl;
use crate::format::parse_complex;
use crate::linalg::ZERO;
use crate::liouvillian::{DensityMatrix, Superoperator};
use crate::steady::KERNEL_RTOL;

/// Environment variables overriding default tolerances.
pub const ENV_QUAD_RTOL: &str = "COHERENT_CONTROL_QUAD_RTOL";
pub const ENV_MERGE_TOL: &str = "COHERENT_CONTROL_MERGE_TOL";
pub const ENV_KERNEL_RTOL: &str = "COHERENT_CONTROL_KERNEL_RTOL";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

/// Tolerances used when the document does not set them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defaults {
    pub quad_rtol: f64,
    pub merge_tolerance: f64,
    pub kernel_rtol: f64,
}

impl Default for Defaults {
    fn default() -> Self {
        Self {
            quad_rtol: QuadratureSettings::default().rel_tol,
            merge_tolerance: crate::atom::DEFAULT_MERGE_TOLERANCE,
            kernel_rtol: KERNEL_RTOL,
        }
    }
}

impl Defaults {
    /// Defaults overridden by the `COHERENT_CONTROL_*` environment variables.
    pub fn from_env() -> Result<Self, ConfigError> {
        let mut d = Self::default();
        let read = |name: &str, slot: &mut f64| -> Result<(), ConfigError> {
            if let Ok(v) = std::env::var(name) {
                let x: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| invalid(format!("${name}"), format!("not a number: {v:?}")))?;
                if !(x.is_finite() && x >= 0.0) {
                    return Err(invalid(
                        format!("${name}"),
                        "must be finite and non-negative",
                    ));
                }
                *slot = x;
            }
            Ok(())
        };
        read(ENV_QUAD_RTOL, &mut d.quad_rtol)?;
        read(ENV_MERGE_TOL, &mut d.merge_tolerance)?;
        read(ENV_KERNEL_RTOL, &mut d.kernel_rtol)?;
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BathConfig {
    FormFactor {
        profile: FormFactor,
        quadrature: QuadratureSettings,
    },
    /// `γ_ω` per Bohr frequency, aligned with the atom's transition set.
    Direct(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaserConfig {
    pub target: TransitionPair,
    pub spec: LaserSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub t_span: (f64, f64),
    pub control: StepControl,
    pub initial_state: DensityMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignConfig {
    pub target: ControlTarget,
    pub convention: DarkStateConvention,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub strict_degeneracy: bool,
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub atom: AtomSpec,
    pub bath: BathConfig,
    pub lasers: Vec<LaserConfig>,
    pub solver: Option<SolverConfig>,
    pub design: Option<DesignConfig>,
    pub output: OutputConfig,
    pub kernel_rtol: f64,
}

impl ExperimentConfig {
    pub fn transitions(&self) -> TransitionSet {
        self.atom.transition_operators()
    }

    pub fn laser_specs(&self) -> Vec<LaserSpec> {
        self.lasers.iter().map(|l| l.spec.clone()).collect()
    }

    pub fn form_factor(&self) -> Option<&FormFactor> {
        match &self.bath {
            BathConfig::FormFactor { profile, .. } => Some(profile),
            BathConfig::Direct(_) => None,
        }
    }

    /// Bath coefficients including the configured lasers.
    pub fn coefficients(&self) -> Result<BathCoefficients, bath::BathError> {
        self.coefficients_with(&self.laser_specs())
    }

    pub fn coefficients_with(
        &self,
        lasers: &[LaserSpec],
    ) -> Result<BathCoefficients, bath::BathError> {
        match &self.bath {
            BathConfig::FormFactor {
                profile,
                quadrature,
            } => bath::rabi_frequencies(&self.atom, lasers, profile, quadrature),
            BathConfig::Direct(gammas) => {
                BathCoefficients::from_gammas(&self.transitions(), gammas, lasers)
            }
        }
    }

    pub fn superoperator(&self) -> Result<Superoperator, crate::Error> {
        Ok(Superoperator::new(
            self.transitions(),
            self.coefficients()?,
        )?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ComplexValue {
    Real(f64),
    Text(String),
}

impl ComplexValue {
    fn resolve(&self, path: &str) -> Result<Complex64, ConfigError> {
        match self {
            ComplexValue::Real(x) => Ok(Complex64::new(*x, 0.0)),
            ComplexValue::Text(s) => parse_complex(s)
                .ok_or_else(|| invalid(path, format!("cannot read {s:?} as a complex number"))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    atom: RawAtom,
    bath: RawBath,
    #[serde(default)]
    lasers: Vec<RawLaser>,
    solver: Option<RawSolver>,
    design: Option<RawDesign>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtom {
    energies: Vec<f64>,
    #[serde(default)]
    dipoles: Vec<RawDipole>,
    merge_tolerance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDipole {
    transition: String,
    amplitude: ComplexValue,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    model: String,
    amplitude: Option<ComplexValue>,
    width: Option<f64>,
    points: Option<Vec<Vec<f64>>>,
    file: Option<String>,
    cutoff: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBath {
    model: String,
    amplitude: Option<ComplexValue>,
    width: Option<f64>,
    points: Option<Vec<Vec<f64>>>,
    file: Option<String>,
    cutoff: Option<f64>,
    rel_tol: Option<f64>,
    gammas: Option<Vec<RawGamma>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGamma {
    transition: String,
    value: ComplexValue,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLaser {
    target: String,
    rabi: Option<ComplexValue>,
    intensity: Option<RawProfile>,
    window: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawInitial {
    Level(usize),
    Amplitudes(Vec<ComplexValue>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    t_span: Vec<f64>,
    dt: Option<f64>,
    adaptive: Option<bool>,
    rtol: Option<f64>,
    atol: Option<f64>,
    min_dt: Option<f64>,
    initial_state: Option<RawInitial>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDesign {
    target: String,
    scale: Option<f64>,
    convention: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    strict_degeneracy: Option<bool>,
}

/// Parses and validates a configuration document with built-in defaults.
/// Relative table paths resolve against the working directory.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_with(text, None, &Defaults::default())
}

pub fn parse_config_with(
    text: &str,
    base_dir: Option<&Path>,
    defaults: &Defaults,
) -> Result<ExperimentConfig, ConfigError> {
    let value: toml::Value =
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let raw: RawConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        invalid(
            if path == "." { "<root>".into() } else { path },
            e.into_inner().to_string(),
        )
    })?;
    Validator { base_dir, defaults }.config(raw)
}

/// Parses `"(n,m)"`.
pub fn parse_pair(text: &str) -> Option<TransitionPair> {
    let inner = text.trim().strip_prefix('(')?.strip_suffix(')')?;
    let (a, b) = inner.split_once(',')?;
    Some(TransitionPair::new(
        a.trim().parse().ok()?,
        b.trim().parse().ok()?,
    ))
}

/// Parses a qubit ket expression such as `0.7071|1> - 0.7071|0>` or
/// `(0.5+0.5j)|0> + i|1>` into `(c₀, c₁)`.
pub fn parse_ket(text: &str) -> Option<(Complex64, Complex64)> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut amps = [ZERO; 2];
    let mut rest = s.as_str();
    let mut seen = false;
    while !rest.is_empty() {
        let bar = rest.find('|')?;
        let close = rest[bar..].find('>')? + bar;
        let mut coef = &rest[..bar];
        let level: usize = rest[bar + 1..close].parse().ok()?;
        rest = &rest[close + 1..];

        let mut sign = 1.0;
        if let Some(c) = coef.strip_prefix('+') {
            coef = c;
        } else if let Some(c) = coef.strip_prefix('-') {
            coef = c;
            sign = -1.0;
        } else if seen {
            // terms after the first need an explicit sign
            return None;
        }
        let coef = coef.strip_suffix('*').unwrap_or(coef);
        let coef = coef
            .strip_prefix('(')
            .and_then(|c| c.strip_suffix(')'))
            .unwrap_or(coef);
        let value = if coef.is_empty() {
            Complex64::new(1.0, 0.0)
        } else {
            parse_complex(coef)?
        };
        *amps.get_mut(level)? += value * sign;
        seen = true;
    }
    seen.then_some((amps[0], amps[1]))
}

struct Validator<'a> {
    base_dir: Option<&'a Path>,
    defaults: &'a Defaults,
}

impl Validator<'_> {
    fn config(&self, raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
        let atom = self.atom(&raw.atom)?;
        let transitions = atom.transition_operators();
        let bath = self.bath(&raw.bath, &atom, &transitions)?;
        let lasers = raw
            .lasers
            .iter()
            .enumerate()
            .map(|(i, l)| self.laser(i, l, &atom))
            .collect::<Result<Vec<_>, _>>()?;
        // one laser per Bohr frequency
        let mut by_freq: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, l) in lasers.iter().enumerate() {
            let idx = transitions.index_of_pair(l.target).ok_or_else(|| {
                invalid(format!("lasers[{i}].target"), "transition is not coupled")
            })?;
            if let Some(prev) = by_freq.insert(idx, i) {
                return Err(invalid(
                    format!("lasers[{i}].target"),
                    format!("drives the same Bohr frequency as lasers[{prev}]"),
                ));
            }
            if matches!(l.spec.drive, LaserDrive::Profile(_))
                && matches!(bath, BathConfig::Direct(_))
            {
                return Err(invalid(
                    format!("lasers[{i}].intensity"),
                    "an intensity profile needs a form-factor bath model; use `rabi` with a direct bath",
                ));
            }
        }
        let solver = raw
            .solver
            .as_ref()
            .map(|s| self.solver(s, atom.dim()))
            .transpose()?;
        let design = raw.design.as_ref().map(|d| self.design(d)).transpose()?;
        let output = raw
            .output
            .map(|o| OutputConfig {
                dir: o.dir.map(PathBuf::from),
                strict_degeneracy: o.strict_degeneracy.unwrap_or(false),
            })
            .unwrap_or_default();
        Ok(ExperimentConfig {
            atom,
            bath,
            lasers,
            solver,
            design,
            output,
            kernel_rtol: self.defaults.kernel_rtol,
        })
    }

    fn atom(&self, raw: &RawAtom) -> Result<AtomSpec, ConfigError> {
        let mut dipoles = Vec::with_capacity(raw.dipoles.len());
        for (i, d) in raw.dipoles.iter().enumerate() {
            let path = format!("atom.dipoles[{i}]");
            let pair = parse_pair(&d.transition).ok_or_else(|| {
                invalid(
                    format!("{path}.transition"),
                    format!("expected \"(n,m)\", got {:?}", d.transition),
                )
            })?;
            dipoles.push((pair, d.amplitude.resolve(&format!("{path}.amplitude"))?));
        }
        let atom = AtomSpec::new(&raw.energies, &dipoles).map_err(|e| {
            let path = match e {
                crate::atom::AtomError::TooFewLevels(_)
                | crate::atom::AtomError::NonFiniteEnergy { .. }
                | crate::atom::AtomError::UnsortedEnergies { .. } => "atom.energies",
                _ => "atom.dipoles",
            };
            invalid(path, e.to_string())
        })?;
        let tol = raw.merge_tolerance.unwrap_or(self.defaults.merge_tolerance);
        atom.with_merge_tolerance(tol)
            .map_err(|e| invalid("atom.merge_tolerance", e.to_string()))
    }

    #[allow(clippy::too_many_arguments)]
    fn profile(
        &self,
        path: &str,
        model: &str,
        amplitude: Option<&ComplexValue>,
        width: Option<f64>,
        points: Option<&Vec<Vec<f64>>>,
        file: Option<&String>,
        cutoff: Option<f64>,
    ) -> Result<FormFactor, ConfigError> {
        let unused = |key: &str, present: bool| -> Result<(), ConfigError> {
            if present {
                Err(invalid(
                    format!("{path}.{key}"),
                    format!("not used by model {model:?}"),
                ))
            } else {
                Ok(())
            }
        };
        let profile = match model {
            "gaussian" | "lorentzian" => {
                unused("points", points.is_some())?;
                unused("file", file.is_some())?;
                let amp = amplitude
                    .map(|a| a.resolve(&format!("{path}.amplitude")))
                    .transpose()?
                    .unwrap_or(Complex64::new(1.0, 0.0));
                let width = width.ok_or_else(|| invalid(format!("{path}.width"), "missing"))?;
                let built = if model == "gaussian" {
                    FormFactor::gaussian(amp, width)
                } else {
                    FormFactor::lorentzian(amp, width)
                };
                built.map_err(|e| invalid(format!("{path}.width"), e.to_string()))?
            }
            "table" => {
                unused("amplitude", amplitude.is_some())?;
                unused("width", width.is_some())?;
                let samples = match (points, file) {
                    (Some(_), Some(_)) => {
                        return Err(invalid(path, "give either `points` or `file`, not both"))
                    }
                    (Some(pts), None) => pts
                        .iter()
                        .enumerate()
                        .map(|(i, row)| match row.as_slice() {
                            [k, v] => Ok((*k, Complex64::new(*v, 0.0))),
                            [k, re, im] => Ok((*k, Complex64::new(*re, *im))),
                            _ => Err(invalid(
                                format!("{path}.points[{i}]"),
                                "expected [k, value] or [k, re, im]",
                            )),
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                    (None, Some(f)) => {
                        let full = match self.base_dir {
                            Some(base) => base.join(f),
                            None => PathBuf::from(f),
                        };
                        let text = std::fs::read_to_string(&full).map_err(|e| {
                            invalid(format!("{path}.file"), format!("{}: {e}", full.display()))
                        })?;
                        bath::parse_profile_table(&text)
                            .map_err(|e| invalid(format!("{path}.file"), e.to_string()))?
                    }
                    (None, None) => {
                        return Err(invalid(path, "table model needs `points` or `file`"))
                    }
                };
                FormFactor::table(samples).map_err(|e| invalid(path, e.to_string()))?
            }
            other => {
                return Err(invalid(
                    format!("{path}.model"),
                    format!("unknown profile model {other:?}"),
                ))
            }
        };
        match cutoff {
            Some(k) => profile
                .with_cutoff(k)
                .map_err(|e| invalid(format!("{path}.cutoff"), e.to_string())),
            None => Ok(profile),
        }
    }

    fn bath(
        &self,
        raw: &RawBath,
        atom: &AtomSpec,
        transitions: &TransitionSet,
    ) -> Result<BathConfig, ConfigError> {
        if raw.model == "direct" {
            for (key, present) in [
                ("amplitude", raw.amplitude.is_some()),
                ("width", raw.width.is_some()),
                ("points", raw.points.is_some()),
                ("file", raw.file.is_some()),
                ("cutoff", raw.cutoff.is_some()),
                ("rel_tol", raw.rel_tol.is_some()),
            ] {
                if present {
                    return Err(invalid(
                        format!("bath.{key}"),
                        "not used by model \"direct\"",
                    ));
                }
            }
            let gammas = raw
                .gammas
                .as_ref()
                .ok_or_else(|| invalid("bath.gammas", "missing (required by model \"direct\")"))?;
            let mut values: Vec<Option<Complex64>> = vec![None; transitions.len()];
            for (i, g) in gammas.iter().enumerate() {
                let path = format!("bath.gammas[{i}]");
                let pair = parse_pair(&g.transition).ok_or_else(|| {
                    invalid(
                        format!("{path}.transition"),
                        format!("expected \"(n,m)\", got {:?}", g.transition),
                    )
                })?;
                let idx = transitions.index_of_pair(pair).ok_or_else(|| {
                    invalid(
                        format!("{path}.transition"),
                        format!("{pair} is not a coupled transition"),
                    )
                })?;
                let v = g.value.resolve(&format!("{path}.value"))?;
                if v.re < 0.0 || !v.re.is_finite() || !v.im.is_finite() {
                    return Err(invalid(
                        format!("{path}.value"),
                        "decay rate Re γ must be finite and non-negative",
                    ));
                }
                match values[idx] {
                    Some(prev) if prev != v => {
                        return Err(invalid(
                            format!("{path}.value"),
                            "conflicts with another entry for the same Bohr frequency",
                        ))
                    }
                    _ => values[idx] = Some(v),
                }
            }
            let resolved = values
                .into_iter()
                .zip(transitions.iter())
                .map(|(v, t)| {
                    v.ok_or_else(|| {
                        invalid(
                            "bath.gammas",
                            format!("no value for transition {} (ω = {})", t.pairs[0].0, t.omega),
                        )
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let _ = atom;
            return Ok(BathConfig::Direct(resolved));
        }
        if raw.gammas.is_some() {
            return Err(invalid("bath.gammas", "only used by model \"direct\""));
        }
        let profile = self.profile(
            "bath",
            &raw.model,
            raw.amplitude.as_ref(),
            raw.width,
            raw.points.as_ref(),
            raw.file.as_ref(),
            raw.cutoff,
        )?;
        let rel_tol = raw.rel_tol.unwrap_or(self.defaults.quad_rtol);
        if !(rel_tol > 0.0 && rel_tol.is_finite()) {
            return Err(invalid("bath.rel_tol", "must be positive"));
        }
        Ok(BathConfig::FormFactor {
            profile,
            quadrature: QuadratureSettings {
                rel_tol,
                ..Default::default()
            },
        })
    }

    fn laser(&self, i: usize, raw: &RawLaser, atom: &AtomSpec) -> Result<LaserConfig, ConfigError> {
        let path = format!("lasers[{i}]");
        let target = parse_pair(&raw.target).ok_or_else(|| {
            invalid(
                format!("{path}.target"),
                format!("expected \"(n,m)\", got {:?}", raw.target),
            )
        })?;
        match atom.dipole(target) {
            Some(d) if d != ZERO => {}
            Some(_) => {
                return Err(invalid(
                    format!("{path}.target"),
                    format!("transition {target} has zero dipole amplitude"),
                ))
            }
            None => {
                return Err(invalid(
                    format!("{path}.target"),
                    format!("transition {target} is not a dipole-coupled pair of the atom"),
                ))
            }
        }
        let drive = match (&raw.rabi, &raw.intensity) {
            (Some(r), None) => LaserDrive::Rabi {
                omega: r.resolve(&format!("{path}.rabi"))?,
                pair: Some(target),
            },
            (None, Some(p)) => {
                let ipath = format!("{path}.intensity");
                LaserDrive::Profile(self.profile(
                    &ipath,
                    &p.model,
                    p.amplitude.as_ref(),
                    p.width,
                    p.points.as_ref(),
                    p.file.as_ref(),
                    p.cutoff,
                )?)
            }
            (Some(_), Some(_)) => {
                return Err(invalid(path, "give either `rabi` or `intensity`, not both"))
            }
            (None, None) => return Err(invalid(path, "needs `rabi` or `intensity`")),
        };
        let window = match raw.window.as_deref() {
            None => Window::AlwaysOn,
            Some([s, t]) => Window::interval(*s, *t)
                .map_err(|e| invalid(format!("{path}.window"), e.to_string()))?,
            Some(_) => return Err(invalid(format!("{path}.window"), "expected [start, end]")),
        };
        Ok(LaserConfig {
            target,
            spec: LaserSpec {
                frequency: atom.transition_frequency(target),
                drive,
                window,
            },
        })
    }

    fn solver(&self, raw: &RawSolver, dim: usize) -> Result<SolverConfig, ConfigError> {
        let t_span = match raw.t_span.as_slice() {
            [a, b] if a.is_finite() && b.is_finite() && a < b => (*a, *b),
            _ => return Err(invalid("solver.t_span", "expected [t0, t1] with t0 < t1")),
        };
        let adaptive = raw.adaptive.unwrap_or(false);
        let control = if adaptive {
            if raw.dt.is_some() {
                return Err(invalid("solver.dt", "not used in adaptive mode"));
            }
            StepControl::Adaptive {
                rtol: raw.rtol.unwrap_or(1e-8),
                atol: raw.atol.unwrap_or(1e-10),
                initial_dt: None,
                min_dt: raw.min_dt.unwrap_or(1e-12),
            }
        } else {
            for (key, present) in [
                ("rtol", raw.rtol.is_some()),
                ("atol", raw.atol.is_some()),
                ("min_dt", raw.min_dt.is_some()),
            ] {
                if present {
                    return Err(invalid(
                        format!("solver.{key}"),
                        "only used when adaptive = true",
                    ));
                }
            }
            if let Some(dt) = raw.dt {
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(invalid("solver.dt", "must be positive"));
                }
            }
            StepControl::Fixed { dt: raw.dt }
        };
        let initial_state = match &raw.initial_state {
            None => DensityMatrix::basis_state(dim, 0),
            Some(RawInitial::Level(n)) if *n < dim => DensityMatrix::basis_state(dim, *n),
            Some(RawInitial::Level(n)) => {
                return Err(invalid(
                    "solver.initial_state",
                    format!("level {n} out of range for a {dim}-level atom"),
                ))
            }
            Some(RawInitial::Amplitudes(amps)) => {
                if amps.len() != dim {
                    return Err(invalid(
                        "solver.initial_state",
                        format!("expected {dim} amplitudes, got {}", amps.len()),
                    ));
                }
                let psi = amps
                    .iter()
                    .enumerate()
                    .map(|(i, a)| a.resolve(&format!("solver.initial_state[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                DensityMatrix::pure(&psi)
                    .map_err(|e| invalid("solver.initial_state", e.to_string()))?
            }
        };
        Ok(SolverConfig {
            t_span,
            control,
            initial_state,
        })
    }

    fn design(&self, raw: &RawDesign) -> Result<DesignConfig, ConfigError> {
        let (c0, c1) = parse_ket(&raw.target).ok_or_else(|| {
            invalid(
                "design.target",
                format!(
                    "cannot read {:?} as a superposition of |0> and |1>",
                    raw.target
                ),
            )
        })?;
        let target = ControlTarget::normalized(c0, c1, raw.scale.unwrap_or(1.0)).map_err(|e| {
            let key = if matches!(e, crate::control::ControlError::BadScale(_)) {
                "design.scale"
            } else {
                "design.target"
            };
            invalid(key, e.to_string())
        })?;
        let convention = match raw.convention.as_deref() {
            None | Some("consistent") => DarkStateConvention::Consistent,
            Some("literal") => DarkStateConvention::Literal,
            Some(other) => {
                return Err(invalid(
                    "design.convention",
                    format!("expected \"consistent\" or \"literal\", got {other:?}"),
                ))
            }
        };
        Ok(DesignConfig { target, convention })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_LEVEL: &str = r#"
[atom]
energies = [0.0, 1.0]
dipoles = [{ transition = "(1,0)", amplitude = 1.0 }]

[bath]
model = "direct"
gammas = [{ transition = "(1,0)", value = "1+0j" }]

[[lasers]]
target = "(1,0)"
rabi = "0+1j"
"#;

    fn path_of(err: ConfigError) -> String {
        match err {
            ConfigError::Invalid { path, .. } => path,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_two_level() {
        let cfg = parse_config(TWO_LEVEL).unwrap();
        assert_eq!(cfg.atom.dim(), 2);
        assert_eq!(cfg.lasers.len(), 1);
        let b = cfg.coefficients().unwrap();
        assert_eq!(b.rabi(TransitionPair::new(1, 0)), Complex64::new(0.0, 1.0));
        assert!(cfg.solver.is_none());
    }

    #[test]
    fn unknown_target_is_named() {
        let text = r#"
[atom]
energies = [0.0, 1.0, 3.0]
dipoles = [
  { transition = "(1,0)", amplitude = 1.0 },
  { transition = "(2,1)", amplitude = 1.0 },
  { transition = "(2,0)", amplitude = 1.0 },
]
[bath]
model = "gaussian"
width = 1.0
[[lasers]]
target = "(3,0)"
rabi = 1.0
"#;
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().starts_with("lasers[0].target"), "{err}");
        assert_eq!(path_of(err), "lasers[0].target");
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let text = TWO_LEVEL.replace("rabi = \"0+1j\"", "rabi = \"0+1j\"\ncolour = 3");
        assert_eq!(
            path_of(parse_config(&text).unwrap_err()),
            "lasers[0].colour"
        );
        let text = TWO_LEVEL.replace("[bath]", "[bath]\nwidth = 2.0");
        assert_eq!(path_of(parse_config(&text).unwrap_err()), "bath.width");
        let text = format!("{TWO_LEVEL}\n[solver]\nt_span = [0.0, 1.0]\nspeed = 1\n");
        assert_eq!(path_of(parse_config(&text).unwrap_err()), "solver.speed");
    }

    #[test]
    fn invariant_violations() {
        let text = TWO_LEVEL.replace("[0.0, 1.0]", "[1.0, 0.0]");
        assert_eq!(path_of(parse_config(&text).unwrap_err()), "atom.energies");
        let text = TWO_LEVEL.replace("value = \"1+0j\"", "value = -1.0");
        assert_eq!(
            path_of(parse_config(&text).unwrap_err()),
            "bath.gammas[0].value"
        );
        assert!(matches!(
            parse_config("[atom\n"),
            Err(ConfigError::Syntax(_))
        ));
        let text = TWO_LEVEL.replace("energies = [0.0, 1.0]", "energies = \"x\"");
        assert_eq!(path_of(parse_config(&text).unwrap_err()), "atom.energies");
    }

    #[test]
    fn missing_gamma_is_reported() {
        let text = TWO_LEVEL.replace(
            "gammas = [{ transition = \"(1,0)\", value = \"1+0j\" }]",
            "gammas = []",
        );
        assert_eq!(path_of(parse_config(&text).unwrap_err()), "bath.gammas");
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn pair_and_ket_parsing() {
        assert_eq!(parse_pair("(2,0)"), Some(TransitionPair::new(2, 0)));
        assert_eq!(parse_pair(" ( 1 , 0 ) "), Some(TransitionPair::new(1, 0)));
        assert_eq!(parse_pair("2,0"), None);

        let (c0, c1) = parse_ket("0.7071|1> - 0.7071|0>").unwrap();
        assert_eq!(c0, Complex64::new(-0.7071, 0.0));
        assert_eq!(c1, Complex64::new(0.7071, 0.0));
        let (c0, c1) = parse_ket("(0.5+0.5j)|0> + i|1>").unwrap();
        assert_eq!(c0, Complex64::new(0.5, 0.5));
        assert_eq!(c1, Complex64::new(0.0, 1.0));
        assert_eq!(parse_ket("|1>"), Some((ZERO, Complex64::new(1.0, 0.0))));
        assert_eq!(parse_ket("|2>"), None);
        assert_eq!(parse_ket("|0>|1>"), None);
        assert_eq!(parse_ket(""), None);
    }

    #[test]
    fn solver_and_design_sections() {
        let text = format!(
            "{TWO_LEVEL}\n[solver]\nt_span = [0.0, 2.0]\ndt = 0.01\ninitial_state = [\"0\", \"1\"]\n[design]\ntarget = \"|1>\"\nscale = 2.0\n"
        );
        let cfg = parse_config(&text).unwrap();
        let s = cfg.solver.unwrap();
        assert_eq!(s.t_span, (0.0, 2.0));
        assert_eq!(s.initial_state.entry(1, 1), Complex64::new(1.0, 0.0));
        assert_eq!(cfg.design.unwrap().target.scale(), 2.0);

        let bad = format!("{TWO_LEVEL}\n[solver]\nt_span = [0.0, 2.0]\ninitial_state = 5\n");
        assert_eq!(
            path_of(parse_config(&bad).unwrap_err()),
            "solver.initial_state"
        );
    }

    #[test]
    fn table_profile_inline() {
        let text = r#"
[atom]
energies = [0.0, 1.0]
dipoles = [{ transition = "(1,0)", amplitude = 1.0 }]
[bath]
model = "table"
points = [[0.0, 0.1], [1.0, 0.1], [5.0, 0.0]]
[[lasers]]
target = "(1,0)"
intensity = { model = "gaussian", amplitude = "0+0.2j", width = 1.0 }
"#;
        let cfg = parse_config(text).unwrap();
        let b = cfg.coefficients().unwrap();
        assert!(b.frequencies()[0].gamma.re > 0.0);
        assert!(b.frequencies()[0].driven);
    }
}
