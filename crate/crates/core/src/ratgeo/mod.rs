//! Exact rational geometry: scalars, vectors, matrices, polyhedra and LP.

mod linalg;
mod lp;
mod polyhedron;
mod rational;

use thiserror::Error;

pub use linalg::{homogeneous_compose, HomogeneousMatrix, RatMatrix, RatVector};
pub use lp::{is_feasible, lp_feasible, lp_optimize, witness_size_bound, Feasibility, Optimum, Sense};
pub use polyhedron::{Constraint, Polyhedron, Relation};
pub use rational::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeoError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse rational {0:?}")]
    ParseRational(String),
    #[error("ragged matrix rows")]
    Ragged,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not homogeneous (last row must be 0 ... 0 1)")]
    NotHomogeneous,
    #[error("optimization over a polyhedron with strict rows is unsupported")]
    StrictRowsInOptimization,
}

/// Size measure: bit length for integers, the larger of numerator and
/// denominator sizes for rationals, the maximum over entries otherwise.
pub trait SizeOf {
    fn size_of(&self) -> u64;
}

impl SizeOf for Rational {
    fn size_of(&self) -> u64 {
        self.size()
    }
}

impl SizeOf for RatVector {
    fn size_of(&self) -> u64 {
        self.size()
    }
}

impl SizeOf for RatMatrix {
    fn size_of(&self) -> u64 {
        self.size()
    }
}

impl SizeOf for HomogeneousMatrix {
    fn size_of(&self) -> u64 {
        self.size()
    }
}

impl SizeOf for Polyhedron {
    fn size_of(&self) -> u64 {
        self.size()
    }
}

pub fn size_of<T: SizeOf + ?Sized>(x: &T) -> u64 {
    x.size_of()
}
