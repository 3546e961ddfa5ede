use thiserror::Error;

use crate::{
    atom::AtomError, bath::BathError, config::ConfigError, control::ControlError,
    dynamics::DynamicsError, liouvillian::LiouvillianError, steady::SteadyStateError,
};

/// Any failure raised by the library, tagged by the module that produced it.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Atom(#[from] AtomError),
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    Liouvillian(#[from] LiouvillianError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    SteadyState(#[from] SteadyStateError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse failure class used for CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Numerical,
    Degenerate,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Config => 2,
            Category::Numerical => 3,
            Category::Degenerate => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::Numerical => "numerical",
            Category::Degenerate => "degenerate-kernel",
        }
    }
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            // Atom and laser assignment problems come from user input.
            Error::Atom(_) | Error::Config(_) | Error::Io { .. } => Category::Config,
            Error::Bath(e) if e.is_input_error() => Category::Config,
            Error::Control(ControlError::DegenerateKernel { .. }) => Category::Degenerate,
            Error::Control(e) if e.is_input_error() => Category::Config,
            _ => Category::Numerical,
        }
    }
}
