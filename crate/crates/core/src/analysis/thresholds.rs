//! Frozen pilot-calibrated thresholds.
//!
//! These probabilities are only known to be bounded below (or above) by a
//! constant, without the constant itself. Each bound was set from pilot runs
//! with margin and then frozen; the pilot figures are kept next to the value.
//! Pilots used the elite `(1, ..., n)` reinforced once with `rho = 1`, the
//! edge-based scheme and `10^5` draws per size unless stated otherwise.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};

pub const PILOT_NOTE: &str = "frozen pilot threshold";

/// Sizes covered by the C4 to C6 pilots.
pub const CALIBRATED_N: RangeInclusive<usize> = 10..=128;

/// Exponent the C6 threshold was calibrated for.
pub const C6_DELTA: f64 = 0.5;

/// Lower bound on the frequency of an exact k-exchange of the elite.
///
/// k = 2: pilot frequencies 0.184, 0.170, 0.156, 0.151 at n = 10, 16, 32, 64.
/// k = 3: pilot frequencies 0.112, 0.125, 0.136, 0.142, 0.143 at
/// n = 10, 16, 32, 64, 128.
pub fn c4_min(k: usize) -> Result<f64> {
    match k {
        2 => Ok(0.10),
        3 => Ok(0.075),
        _ => Err(Error::NotApplicable(format!("no frozen C4 threshold for k={k}"))),
    }
}

/// Lower bound on the frequency of a draw costing no more than the elite.
/// Pilot frequencies 0.668, 0.653, 0.643, 0.636, 0.636 at n = 10, 16, 32,
/// 64, 128.
pub const C5_MIN: f64 = 0.5;

/// Upper bound on the frequency of a draw of exchange order `>= n^0.5`.
/// Pilot frequencies 0.034, 0.052, 0.007, 0.001 at n = 10, 16, 32, 64 and
/// below 1e-4 at n = 128 (5 * 10^4 draws).
pub const C6_MAX: f64 = 0.1;

/// Small-sample contrast on G1, edge-based: instance size, evaluations per
/// trial and trials per arm.
pub const CONTRAST_N: usize = 64;
pub const CONTRAST_EVALUATIONS: u64 = 100_000;
pub const CONTRAST_TRIALS: usize = 20;

/// With `N = 1` at most this success rate; pilot 0 of 10 trials, every
/// trajectory non-monotone.
pub const CONTRAST_N1_MAX_SUCCESS: f64 = 0.2;

/// With `N = ceil((ln n)^2) = 18` at least this success rate; pilot 10 of
/// 10 trials, hits between iterations 1838 and 4596 of 5555.
pub const CONTRAST_LOG_MIN_SUCCESS: f64 = 0.8;

/// Minimum fraction of `N = 1` trials whose iteration-best cost rises at
/// least once.
pub const CONTRAST_MIN_NONMONOTONE: f64 = 0.5;

pub(crate) fn check_calibrated(n: usize) -> Result<()> {
    if CALIBRATED_N.contains(&n) {
        Ok(())
    } else {
        Err(Error::NotApplicable(format!(
            "frozen thresholds cover n in {}..={}, got {n}",
            CALIBRATED_N.start(),
            CALIBRATED_N.end()
        )))
    }
}
