use std::path::PathBuf;

use hodgecurl_core::{HodgeError, HomologyError, MeshError, SpectralError, SymplecticError};
use thiserror::Error;

/// Malformed mesh file.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    /// 1-based.
    pub line: usize,
    /// Byte offset of the start of the offending line.
    pub byte: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("partition-I: {0}")]
    Partition(String),
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("cannot read {path}: {source}")]
    Input { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("homology: {0}")]
    Homology(#[from] HomologyError),
    #[error("hodge: {0}")]
    Hodge(#[from] HodgeError),
    #[error("symplectic: {0}")]
    Symplectic(SymplecticError),
    #[error("solver: {0}")]
    Solver(String),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Partition(_) | CliError::Output { .. } => 1,
            CliError::Parse(_) | CliError::Input { .. } | CliError::Mesh(_) => 2,
            CliError::Homology(_) => 3,
            CliError::Hodge(_) | CliError::Symplectic(_) => 4,
            CliError::Solver(_) => 5,
        }
    }
}

impl From<SymplecticError> for CliError {
    fn from(e: SymplecticError) -> Self {
        match e {
            SymplecticError::BadPartition(m) => CliError::Partition(m),
            SymplecticError::InvalidLagrangian(m) => CliError::Config(format!("invalid Lagrangian: {m}")),
            other => CliError::Symplectic(other),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::IndefiniteMass => CliError::Solver(e.to_string()),
            SpectralError::SolverFailure(m) => CliError::Solver(m),
            SpectralError::Unsupported(m) => CliError::Config(m),
            SpectralError::Symplectic(s) => s.into(),
            SpectralError::Hodge(h) => CliError::Hodge(h),
            SpectralError::Homology(h) => CliError::Homology(h),
        }
    }
}

/// Exit status when every command step succeeded but `verify` found a
/// failing check.
pub const EXIT_VERIFY_FAILED: i32 = 6;
