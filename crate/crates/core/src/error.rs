use std::fmt;

use thiserror::Error;

use crate::mesh::MeshQualityReport;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("resource error: {0}")]
    Resource(String),
    #[error("mesh error: {message} ({report})")]
    Mesh {
        message: String,
        report: Box<MeshQualityReport>,
    },
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("solver error: {message} ({report})")]
    Solver { message: String, report: SolverFailure },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Diagnostic payload carried by solver failures.
#[derive(Debug, Clone, Default)]
pub struct SolverFailure {
    pub iterations: usize,
    pub residual: f64,
    /// Best value obtained before the failure (e.g. a lower bound for a norm).
    pub best_estimate: Option<f64>,
}

impl fmt::Display for SolverFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "iterations={} residual={:.3e}", self.iterations, self.residual)?;
        if let Some(b) = self.best_estimate {
            write!(f, " best={b:.6e}")?;
        }
        Ok(())
    }
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn solver(msg: impl Into<String>, report: SolverFailure) -> Self {
        Error::Solver {
            message: msg.into(),
            report,
        }
    }

    /// Short module-level name used by the command line runner.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Argument(_) => "argument",
            Error::Geometry(_) => "geometry",
            Error::Resource(_) => "resource",
            Error::Mesh { .. } => "mesh",
            Error::Assembly(_) => "assembly",
            Error::Solver { .. } => "solver",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
