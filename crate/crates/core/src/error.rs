use std::fmt;

use crate::model::Violation;

/// A non-empty list of invariant violations.
#[derive(Clone, Debug, PartialEq)]
pub struct Violations(pub Vec<Violation>);

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(Violations),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(Violations),
    #[error("invalid assignment: {0}")]
    InvalidAssignment(Violations),
    #[error("dimension mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    DimensionMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("unknown hospital `{0}`")]
    UnknownHospital(String),
    #[error("couple stranded: couple `{couple}` found no hospital with two vacancies")]
    CoupleStranded { couple: String },
    #[error("every draw order strands a couple")]
    AllOrdersStranded,
    #[error("too many decision units for exact enumeration: {units} > {max}")]
    TooManyUnits { units: usize, max: usize },
    #[error("problem has couples; a couple-free problem is required")]
    CouplesPresent,
    #[error("couples at hospital `{hospital}` need {needed} seats but capacity is {capacity}")]
    CapacityOverflow {
        hospital: String,
        needed: usize,
        capacity: usize,
    },
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("iterative scaling did not converge after {sweeps} sweeps (deviation {deviation:e})")]
    NotConverged { sweeps: usize, deviation: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("graph is not cubic: vertex {vertex} has degree {degree}")]
    NotCubic { vertex: usize, degree: usize },
    #[error(
        "improper edge coloring: edges {first} and {second} share color {color} at vertex {vertex}"
    )]
    ImproperColoring {
        first: usize,
        second: usize,
        color: u8,
        vertex: usize,
    },
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("linear program: {0}")]
    Lp(#[from] crate::lp::LpError),
    /// A broken internal invariant, e.g. a residual matrix without a perfect assignment.
    #[error("internal invariant broken: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
