//! Exact oracles, Monte Carlo bound checks and runtime experiments.

pub mod claims;
pub mod crossings;
pub mod experiment;
pub mod oracle;
pub mod stats;
pub mod thresholds;
