//! Process-wide numerical thresholds.
//!
//! Values are stored atomically so they can be read from rayon workers.
//! Tests that change them should restore the previous value.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use crate::error::{Error, Result};

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-14;
pub const DEFAULT_GUARD_BAND: usize = 8;
pub const DEFAULT_SINGLE_DIM: usize = 65;
pub const DEFAULT_TWO_MODE_DIM: usize = 41;

static TAIL_TOL: AtomicU64 = AtomicU64::new(0x3DDB7CDFD9D7BDBB); // 1e-10
static ZERO_THRESH: AtomicU64 = AtomicU64::new(0x3D06849B86A12B9B); // 1e-14
static STRICT: AtomicBool = AtomicBool::new(false);

pub fn tail_tolerance() -> f64 {
    f64::from_bits(TAIL_TOL.load(Ordering::Relaxed))
}

pub fn set_tail_tolerance(tol: f64) {
    TAIL_TOL.store(tol.to_bits(), Ordering::Relaxed);
}

pub fn zero_threshold() -> f64 {
    f64::from_bits(ZERO_THRESH.load(Ordering::Relaxed))
}

pub fn set_zero_threshold(t: f64) {
    ZERO_THRESH.store(t.to_bits(), Ordering::Relaxed);
}

pub fn strict() -> bool {
    STRICT.load(Ordering::Relaxed)
}

/// In strict mode truncation warnings become `Error::Truncation`.
pub fn set_strict(on: bool) {
    STRICT.store(on, Ordering::Relaxed);
}

/// Report a tail mass above tolerance: a log warning normally, an error in strict mode.
pub(crate) fn check_tail(what: &str, tail: f64) -> Result<()> {
    let tol = tail_tolerance();
    if tail > tol {
        if strict() {
            return Err(Error::Truncation { tail, tol });
        }
        log::warn!("TruncationWarning: {what}: tail mass {tail:e} > {tol:e}");
    }
    Ok(())
}
