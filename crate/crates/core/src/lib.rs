//! Truncated Fock-space simulation of photon addition, subtraction and the
//! phase-space, engineering and entanglement tools built around them.

pub mod cond;
pub mod config;
pub mod engineer;
pub mod entangle;
pub mod error;
pub mod fock;
pub mod format;
pub mod linalg;
pub mod ops;
pub mod phasespace;
pub mod stats;

pub use error::{Error, Result};
pub use fock::{trace_distance, ConditionResult, DensityMatrix, Dims, FockVector, Mode, State, StateRef, StateView};
pub use linalg::{CMat, CVec, C64};
