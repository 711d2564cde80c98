//! Error type shared by all solver components.

use std::fmt;
use std::path::PathBuf;

use crate::sparse::SolveReport;

#[derive(Debug)]
pub enum Error {
    /// Mesh construction or validation failed (degenerate triangle,
    /// non-conforming connectivity, bad counts).
    InvalidMesh(String),
    /// Vector/matrix size disagreement.
    DimensionMismatch { expected: usize, got: usize },
    /// A field vector was paired with a mesh of a different refinement level.
    LevelMismatch { expected: u32, got: u32 },
    /// Model or scheme parameters violate a precondition.
    InvalidSpec(String),
    /// An iterative linear solve did not reach its tolerance.
    LinearSolve {
        context: &'static str,
        report: SolveReport,
    },
    /// Newton iteration exhausted its budget.
    NewtonFailure { iterations: usize, residual: f64 },
    /// Newton residuals grew over consecutive iterations.
    NewtonDiverged { iterations: usize, residual: f64 },
    /// A time step inside a path solve failed.
    PathFailure { step: usize, source: Box<Error> },
    /// A Monte Carlo sample failed; the seed allows replay.
    SampleFailure {
        sample: usize,
        seed: u64,
        source: Box<Error>,
    },
    /// File I/O failure, tagged with the path involved.
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// Malformed text input (mesh file, CSV).
    Parse(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidMesh(msg) => write!(f, "invalid mesh: {msg}"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::LevelMismatch { expected, got } => {
                write!(f, "mesh level mismatch: expected {expected}, got {got}")
            }
            Error::InvalidSpec(msg) => write!(f, "invalid specification: {msg}"),
            Error::LinearSolve { context, report } => write!(
                f,
                "linear solve failed in {context}: {} iterations, residual {:.3e}",
                report.iterations, report.final_residual_norm
            ),
            Error::NewtonFailure {
                iterations,
                residual,
            } => write!(
                f,
                "Newton did not converge after {iterations} iterations (residual {residual:.3e})"
            ),
            Error::NewtonDiverged {
                iterations,
                residual,
            } => write!(
                f,
                "Newton diverged at iteration {iterations} (residual {residual:.3e})"
            ),
            Error::PathFailure { step, source } => {
                write!(f, "path solve failed at step {step}: {source}")
            }
            Error::SampleFailure {
                sample,
                seed,
                source,
            } => write!(f, "sample {sample} (seed {seed:#018x}) failed: {source}"),
            Error::Io { path, source } => write!(f, "I/O error on {}: {source}", path.display()),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::PathFailure { source, .. } | Error::SampleFailure { source, .. } => {
                Some(source.as_ref())
            }
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
