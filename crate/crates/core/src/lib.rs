pub mod bounded;
pub mod cli;
pub mod driver;
pub mod format;
pub mod paf;
pub mod precision;
pub mod ratgeo;
pub mod reductions;
