//! Numerical laboratory for Rieffel deformations and their modulation maps.

pub mod crossed;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod modulation;
pub mod phase_space;
pub mod reps;
pub mod weyl;

pub use error::{LabError, Result};
pub use phase_space::{PhaseGrid, PhasePoint, Symbol, C64};
