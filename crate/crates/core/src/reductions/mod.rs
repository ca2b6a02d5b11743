//! Generators for hardness gadgets and the discrete oracles they are
//! validated against.

pub mod extend;
pub mod lba;
pub mod subset_sum;

use thiserror::Error;

use crate::paf::PafError;
use crate::ratgeo::GeoError;

pub use extend::extend_to_total;
pub use lba::{
    encode_tm_config, encode_word, lba_reach_instance, lba_step, LbaOptions, LbaReduction, Move, TmConfig, TmSpec,
};
pub use subset_sum::{
    encode_config, subset_sum_bruteforce, subset_sum_control_instance, subset_sum_reach_instance, subset_transition,
    Configuration, GadgetKind, GadgetParams, NamedRegion, SubsetSumInstance, SubsetSumReduction,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error(transparent)]
    Paf(#[from] PafError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("brute force over {n} weights exceeds the limit of {limit}")]
    BruteForceBudget { n: usize, limit: usize },
    #[error("invalid machine: {0}")]
    InvalidMachine(String),
    #[error("head leaves the {cells} available cells")]
    SpaceBound { cells: usize },
    #[error("boxes {0} and {1} overlap")]
    OverlappingBoxes(usize, usize),
    #[error("box {0} is not an axis-aligned box in the unit square")]
    NotABox(usize),
}
