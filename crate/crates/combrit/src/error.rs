//! Error types shared across the crate.
//!
//! `Error` covers numerical and domain failures (singular pivots, shape
//! mismatches, card limits); `FileError` covers I/O and text-format problems.
//! The CLI maps the former to exit code 2 and the latter to exit code 3.

use std::fmt;
use std::io;

/// Numerical / domain error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Operand shapes are incompatible.
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    /// A square matrix was required.
    NotSquare { rows: usize, cols: usize },
    /// The matrix does not have the required triangular structure.
    NotTriangular { expected: &'static str },
    /// An entry is NaN or infinite.
    NonFinite,
    /// A triangular diagonal entry is below the singularity tolerance.
    SingularDiagonal { index: usize },
    /// A column became numerically dependent during orthogonalization.
    RankDeficient { column: usize },
    /// A Crout pivot is below the singularity tolerance.
    ZeroPivot { row: usize },
    /// No column permutation with a nonzero diagonal could be found.
    SplitFailed,
    /// A diagonal block could not be inverted at the given split step.
    BlockPivotFailed { step: usize },
    /// Hopscotch endpoints must satisfy 0 < a <= b (1-based).
    InvalidEndpoints { a: usize, b: usize },
    /// An exact integer count would overflow its carrier.
    CountOverflow,
    /// Requested card order is outside the supported 2..=24 range.
    CardTooLarge { beta: usize },
    /// The matrix order exceeds what the card can invert element-wise.
    CardTooSmall { needed: usize, beta: usize },
    /// A structural parameter (block count, base size, ...) is out of range.
    InvalidParameter { name: &'static str, value: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { left, right } => write!(
                f,
                "shape mismatch: {}x{} vs {}x{}",
                left.0, left.1, right.0, right.1
            ),
            Error::NotSquare { rows, cols } => {
                write!(f, "matrix must be square, got {rows}x{cols}")
            }
            Error::NotTriangular { expected } => {
                write!(f, "matrix is not {expected}")
            }
            Error::NonFinite => write!(f, "matrix entries must be finite"),
            Error::SingularDiagonal { index } => {
                write!(f, "diagonal entry {index} is below the singularity tolerance")
            }
            Error::RankDeficient { column } => {
                write!(f, "column {column} is numerically rank deficient")
            }
            Error::ZeroPivot { row } => {
                write!(f, "pivot {row} is below the singularity tolerance")
            }
            Error::SplitFailed => write!(f, "no column permutation yields a nonzero diagonal"),
            Error::BlockPivotFailed { step } => {
                write!(f, "singular diagonal block at split step {step}")
            }
            Error::InvalidEndpoints { a, b } => {
                write!(f, "invalid endpoints ({a}, {b}): need 0 < a <= b")
            }
            Error::CountOverflow => write!(f, "integer count overflow"),
            Error::CardTooLarge { beta } => {
                write!(f, "card order {beta} outside supported range 2..=24")
            }
            Error::CardTooSmall { needed, beta } => {
                write!(f, "card of order {beta} cannot invert order {needed} element-wise")
            }
            Error::InvalidParameter { name, value } => {
                write!(f, "invalid parameter {name} = {value}")
            }
        }
    }
}

impl std::error::Error for Error {}

/// I/O or text-format error for matrix and card files.
#[derive(Debug)]
pub enum FileError {
    Io(io::Error),
    /// Malformed content; `line` is 1-based.
    Format { line: usize, msg: String },
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FileError::Io(e) => write!(f, "i/o error: {e}"),
            FileError::Format { line, msg } => write!(f, "format error at line {line}: {msg}"),
        }
    }
}

impl std::error::Error for FileError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            FileError::Io(e) => Some(e),
            FileError::Format { .. } => None,
        }
    }
}

impl From<io::Error> for FileError {
    fn from(e: io::Error) -> Self {
        FileError::Io(e)
    }
}
