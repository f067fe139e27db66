//! Probabilistic intern-to-hospital assignment.
//!
//! The pipeline estimates each intern's Random Serial Dictatorship lottery
//! ([`rsd`]), trades probability shares under a Do-No-Harm constraint
//! ([`lp`]), and implements the traded matrix as a lottery over concrete
//! assignments: exactly for singles-only markets ([`bvn`]) and approximately,
//! with a `2/q̲` row-L1 guarantee, when couples must be co-located
//! ([`couples`]).

pub mod bvn;
pub mod couples;
pub mod error;
pub mod harness;
pub mod instances;
pub mod io;
pub mod lp;
pub mod model;
pub mod rating;
pub mod rsd;
pub mod seeding;

pub use error::{Error, Result};
pub use model::{
    domain_membership, ensure_target, validate_assignment, validate_problem, validate_target,
    ConvexCombination, DeterministicAssignment, Hospital, HospitalId, InternId, Matrix, Problem,
    RawProblem, RawUnit, TargetMatrix, UnitId, UnitKind, TOLERANCE,
};
