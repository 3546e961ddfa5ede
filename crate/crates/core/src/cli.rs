//! Command implementations behind the `coherent-control` binary.
//!
//! Every command produces text artifacts in memory; writing them to disk is a
//! separate step so the commands can be tested without touching the
//! filesystem.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::config::{BathConfig, ExperimentConfig};
use crate::control::{self, PAIR_2_0, PAIR_2_1};
use crate::dynamics;
use crate::format::{self, parse_complex, parse_kv, KvWriter};
use crate::linalg::{CMatrix, ZERO};
use crate::steady;
use crate::Error;

pub const BASIS_LABEL: &str = "ascending-energy";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Coeffs,
    Evolve,
    Steady,
    Design,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Coeffs => "coeffs",
            Command::Evolve => "evolve",
            Command::Steady => "steady",
            Command::Design => "design",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub warnings: Vec<String>,
    /// The stationary kernel had dimension > 1.
    pub degenerate: bool,
}

impl RunOutput {
    pub fn artifact(&self, name: &str) -> Option<&str> {
        self.artifacts
            .iter()
            .find(|a| a.name == name)
            .map(|a| a.contents.as_str())
    }

    fn push(&mut self, name: &str, contents: String) {
        self.artifacts.push(Artifact {
            name: name.to_string(),
            contents,
        });
    }
}

pub fn run(command: Command, config: &ExperimentConfig) -> Result<RunOutput, Error> {
    let mut out = match command {
        Command::Coeffs => coeffs(config)?,
        Command::Evolve => evolve(config)?,
        Command::Steady => steady(config)?,
        Command::Design => design(config)?,
    };
    let names: Vec<String> = out.artifacts.iter().map(|a| a.name.clone()).collect();
    for name in names {
        let meta = meta_sidecar(command, &name);
        out.push(&format!("{name}.meta"), meta);
    }
    Ok(out)
}

/// Writes every artifact into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, out: &RunOutput) -> Result<Vec<PathBuf>, Error> {
    let io = |path: &Path, source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::with_capacity(out.artifacts.len());
    for a in &out.artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.contents).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn meta_sidecar(command: Command, artifact: &str) -> String {
    let mut w = KvWriter::new();
    w.kv(
        "producer",
        concat!("coherent-control ", env!("CARGO_PKG_VERSION")),
    )
    .kv("command", command.name())
    .kv("artifact", artifact)
    .kv("basis", BASIS_LABEL)
    .kv("number_format", "{:.16e}");
    w.finish()
}

fn shell_warnings(out: &mut RunOutput, coeffs: &crate::BathCoefficients) {
    for f in coeffs.frequencies() {
        if f.shell_outside_cutoff {
            out.warnings.push(format!(
                "resonant shell k = {} lies beyond the form-factor cutoff; Re γ is zero there",
                format::real(f.omega)
            ));
        }
    }
}

fn coeffs(config: &ExperimentConfig) -> Result<RunOutput, Error> {
    let transitions = config.transitions();
    let coeffs = config.coefficients()?;
    let mut out = RunOutput::default();
    shell_warnings(&mut out, &coeffs);

    let mut w = KvWriter::new();
    w.kv("basis", BASIS_LABEL)
        .kv("dimension", transitions.dim().to_string())
        .kv("frequencies", coeffs.len().to_string());
    for (i, f) in coeffs.frequencies().iter().enumerate() {
        w.section(&format!("frequency.{i}"))
            .real("omega", f.omega)
            .complex("gamma", f.gamma)
            .complex("field", f.field)
            .kv("driven", f.driven.to_string());
        if let Some((s, t)) = f.window.edges() {
            w.kv("window", format!("{},{}", format::real(s), format::real(t)));
        }
        let pairs: Vec<String> = f.pairs.iter().map(|(p, _)| p.to_string()).collect();
        w.kv("pairs", pairs.join(" "));
    }
    for t in coeffs.transitions() {
        w.section(&format!("transition.{}", t.pair))
            .complex("dipole", t.dipole)
            .real("omega", t.omega)
            .complex("weighted_gamma", t.weighted_gamma)
            .complex("rabi", t.rabi);
    }
    out.push("coeffs.txt", w.finish());
    Ok(out)
}

fn evolve(config: &ExperimentConfig) -> Result<RunOutput, Error> {
    let solver = config
        .solver
        .as_ref()
        .ok_or_else(|| crate::config::ConfigError::Invalid {
            path: "solver".into(),
            message: "the evolve command needs a [solver] section".into(),
        })?;
    let l = config.superoperator()?;
    let mut out = RunOutput::default();
    shell_warnings(&mut out, l.coefficients());
    let traj = dynamics::evolve(&solver.initial_state, &l, solver.t_span, &solver.control)?;
    let d = l.dim();

    let mut csv = String::from("t");
    for m in 0..d {
        for n in m..d {
            let _ = write!(csv, ",re_rho_{m}_{n},im_rho_{m}_{n}");
        }
    }
    csv.push('\n');
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        csv.push_str(&format::real(*t));
        for m in 0..d {
            for n in m..d {
                let z = rho.entry(m, n);
                let _ = write!(csv, ",{},{}", format::real(z.re), format::real(z.im));
            }
        }
        csv.push('\n');
    }

    let mut diag = String::from("t,trace_error,min_eigenvalue\n");
    for (t, dg) in traj.times.iter().zip(&traj.diagnostics) {
        let _ = writeln!(
            diag,
            "{},{},{}",
            format::real(*t),
            format::real(dg.trace_error),
            format::real(dg.min_eigenvalue)
        );
    }
    if traj.min_eigenvalue() < -1e-8 {
        out.warnings.push(format!(
            "state left the positive cone: smallest eigenvalue {}",
            format::real(traj.min_eigenvalue())
        ));
    }
    out.push("trajectory.csv", csv);
    out.push("trajectory_diagnostics.csv", diag);
    Ok(out)
}

fn steady(config: &ExperimentConfig) -> Result<RunOutput, Error> {
    let l = config.superoperator()?;
    let mut out = RunOutput::default();
    shell_warnings(&mut out, l.coefficients());
    let res = steady::steady_state_with(&l, config.kernel_rtol)?;
    if res.degenerate {
        out.degenerate = true;
        out.warnings.push(format!(
            "stationary state is not unique: kernel dimension {}; reporting a Hermitian basis",
            res.kernel_dimension
        ));
    }
    out.push("steady.txt", steady_report(l.dim(), &res));
    Ok(out)
}

fn steady_report(dim: usize, res: &steady::SteadyStateResult) -> String {
    let mut w = KvWriter::new();
    w.kv("basis", BASIS_LABEL)
        .kv("dimension", dim.to_string())
        .kv("kernel_dimension", res.kernel_dimension.to_string())
        .kv("degenerate", res.degenerate.to_string())
        .real("residual", res.residual)
        .real("generator_norm", res.generator_norm)
        .real("gap", res.gap);
    for (i, rho) in res.states.iter().enumerate() {
        w.section(&format!("state.{i}"));
        for m in 0..dim {
            for n in 0..dim {
                w.complex(&format!("rho_{m}_{n}"), rho[(m, n)]);
            }
        }
    }
    w.finish()
}

/// Contents of a `steady.txt` artifact read back.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyReport {
    pub dimension: usize,
    pub kernel_dimension: usize,
    pub degenerate: bool,
    pub residual: f64,
    pub generator_norm: f64,
    pub gap: f64,
    pub states: Vec<CMatrix>,
}

pub fn parse_steady(text: &str) -> Result<SteadyReport, String> {
    let entries = parse_kv(text)?;
    let top = |key: &str| -> Result<&str, String> {
        entries
            .iter()
            .find(|e| e.section.is_empty() && e.key == key)
            .map(|e| e.value.as_str())
            .ok_or_else(|| format!("missing `{key}`"))
    };
    let num = |key: &str| -> Result<f64, String> {
        top(key)?
            .parse()
            .map_err(|_| format!("`{key}` is not a number"))
    };
    let int = |key: &str| -> Result<usize, String> {
        top(key)?
            .parse()
            .map_err(|_| format!("`{key}` is not an integer"))
    };
    if top("basis")? != BASIS_LABEL {
        return Err(format!("unsupported basis {:?}", top("basis")?));
    }
    let dimension = int("dimension")?;
    let kernel_dimension = int("kernel_dimension")?;
    let mut states: Vec<CMatrix> = Vec::new();
    for e in entries.iter().filter(|e| !e.section.is_empty()) {
        let idx: usize = e
            .section
            .strip_prefix("state.")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("unexpected section [{}]", e.section))?;
        let (m, n) = e
            .key
            .strip_prefix("rho_")
            .and_then(|k| k.split_once('_'))
            .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
            .filter(|&(m, n)| m < dimension && n < dimension)
            .ok_or_else(|| format!("unexpected key `{}`", e.key))?;
        let z: Complex64 =
            parse_complex(&e.value).ok_or_else(|| format!("bad value for `{}`", e.key))?;
        while states.len() <= idx {
            states.push(CMatrix::from_element(dimension, dimension, ZERO));
        }
        states[idx][(m, n)] = z;
    }
    Ok(SteadyReport {
        dimension,
        kernel_dimension,
        degenerate: top("degenerate")? == "true",
        residual: num("residual")?,
        generator_norm: num("generator_norm")?,
        gap: num("gap")?,
        states,
    })
}

fn design(config: &ExperimentConfig) -> Result<RunOutput, Error> {
    let design = config
        .design
        .as_ref()
        .ok_or_else(|| crate::config::ConfigError::Invalid {
            path: "design".into(),
            message: "the design command needs a [design] section".into(),
        })?;
    let transitions = config.transitions();
    // the designed lasers replace whatever the config drives
    let coeffs = config.coefficients_with(&[])?;
    let (rabi2, rabi3) = control::design_rabi_with(&design.target, design.convention);
    let check =
        control::verify_design(rabi2, rabi3, &transitions, &coeffs, &design.target.state())?;

    let mut out = RunOutput::default();
    let mut w = KvWriter::new();
    let (c0, c1) = design.target.amplitudes();
    w.kv("basis", BASIS_LABEL)
        .complex("target_c0", c0)
        .complex("target_c1", c1)
        .real("scale", design.target.scale())
        .kv(
            "convention",
            match design.convention {
                control::DarkStateConvention::Consistent => "consistent",
                control::DarkStateConvention::Literal => "literal",
            },
        )
        .complex("rabi_2_1", rabi2)
        .complex("rabi_2_0", rabi3);
    match &config.bath {
        BathConfig::FormFactor { profile, .. } => {
            for (key, pair, rabi) in [
                ("intensity_2_1", PAIR_2_1, rabi2),
                ("intensity_2_0", PAIR_2_0, rabi3),
            ] {
                let dipole = config.atom.dipole(pair).unwrap_or(ZERO);
                let f = control::design_intensities(
                    rabi,
                    profile,
                    dipole,
                    config.atom.transition_frequency(pair),
                )?;
                w.complex(key, f);
            }
        }
        BathConfig::Direct(_) => {
            w.kv("intensity_2_1", "n/a").kv("intensity_2_0", "n/a");
        }
    }
    w.real("fidelity", check.fidelity)
        .real("gap", check.gap)
        .real("residual", check.residual);
    if check.fidelity < 1.0 - 1e-8 {
        out.warnings.push(format!(
            "designed stationary state misses the target: fidelity {}",
            format::real(check.fidelity)
        ));
    }
    out.push("design.txt", w.finish());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    const LAMBDA: &str = r#"
[atom]
energies = [0.0, 0.5, 2.0]
dipoles = [
  { transition = "(2,1)", amplitude = 1.0 },
  { transition = "(2,0)", amplitude = 1.0 },
]
[bath]
model = "direct"
gammas = [
  { transition = "(2,1)", value = 1.0 },
  { transition = "(2,0)", value = 1.5 },
]
[design]
target = "0.6|0> + 0.8|1>"
"#;

    #[test]
    fn steady_roundtrip() {
        let cfg = parse_config(&format!(
            "{LAMBDA}\n[[lasers]]\ntarget = \"(2,1)\"\nrabi = 1.0\n[[lasers]]\ntarget = \"(2,0)\"\nrabi = \"0+2j\"\n"
        ))
        .unwrap();
        let out = run(Command::Steady, &cfg).unwrap();
        assert!(!out.degenerate);
        let report = parse_steady(out.artifact("steady.txt").unwrap()).unwrap();
        assert_eq!(report.dimension, 3);
        assert_eq!(report.kernel_dimension, 1);
        let l = cfg.superoperator().unwrap();
        let res = steady::steady_state(&l).unwrap();
        // 17 significant digits survive the trip exactly
        assert_eq!(report.states[0], res.states[0]);
        assert_eq!(report.gap, res.gap);
        assert!(out.artifact("steady.txt.meta").is_some());
    }

    #[test]
    fn undriven_lambda_is_flagged() {
        let cfg = parse_config(LAMBDA).unwrap();
        let out = run(Command::Steady, &cfg).unwrap();
        assert!(out.degenerate);
        assert!(out.warnings.iter().any(|w| w.contains("not unique")));
        let report = parse_steady(out.artifact("steady.txt").unwrap()).unwrap();
        assert!(report.degenerate && report.kernel_dimension >= 2);
        assert_eq!(report.states.len(), report.kernel_dimension);
    }

    #[test]
    fn design_reports_fidelity() {
        let cfg = parse_config(LAMBDA).unwrap();
        let out = run(Command::Design, &cfg).unwrap();
        let entries = parse_kv(out.artifact("design.txt").unwrap()).unwrap();
        let get = |k: &str| entries.iter().find(|e| e.key == k).unwrap().value.clone();
        let f: f64 = get("fidelity").parse().unwrap();
        assert!(f > 1.0 - 1e-9, "{f}");
        assert_eq!(get("intensity_2_1"), "n/a");
        assert_eq!(
            parse_complex(&get("rabi_2_1")),
            Some(Complex64::new(-0.6, 0.0))
        );
    }

    #[test]
    fn evolve_needs_solver_and_writes_csv() {
        let cfg = parse_config(LAMBDA).unwrap();
        assert!(matches!(run(Command::Evolve, &cfg), Err(Error::Config(_))));

        let cfg = parse_config(&format!(
            "{LAMBDA}\n[solver]\nt_span = [0.0, 0.1]\ndt = 0.01\ninitial_state = 2\n"
        ))
        .unwrap();
        let out = run(Command::Evolve, &cfg).unwrap();
        let csv = out.artifact("trajectory.csv").unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,re_rho_0_0,im_rho_0_0,re_rho_0_1,im_rho_0_1,re_rho_0_2,im_rho_0_2,re_rho_1_1,im_rho_1_1,re_rho_1_2,im_rho_1_2,re_rho_2_2,im_rho_2_2"
        );
        assert_eq!(lines.count(), 11);
        assert!(out.artifact("trajectory_diagnostics.csv").is_some());
    }

    #[test]
    fn coeffs_lists_every_transition() {
        let cfg = parse_config(LAMBDA).unwrap();
        let out = run(Command::Coeffs, &cfg).unwrap();
        let text = out.artifact("coeffs.txt").unwrap();
        assert!(text.contains("[transition.(2,1)]"));
        assert!(text.contains("[transition.(2,0)]"));
        assert!(text.contains("[frequency.1]"));
    }
}
