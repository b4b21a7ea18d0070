//! Support library behind the `volterra-lab` binary: artifact writers,
//! configuration resolution and the seed fan-out used by experiments and
//! by the acceptance suite.

pub mod artifacts;
pub mod config;
pub mod parallel;
