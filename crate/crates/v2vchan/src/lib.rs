//! Closed-loop lab for non-stationary vehicle-to-vehicle small-scale fading:
//! synthesize time-frequency channel responses with a known time-varying
//! Rician K-factor on the first delay tap, then run the full estimation
//! pipeline (sub-banding, tap alignment, large-scale removal, moment-based K
//! estimation, distribution fitting) to recover the generating statistics.

pub mod container;
pub mod error;
pub mod fitting;
pub mod kfactor;
pub mod rng;
pub mod scenario;
pub mod subband;
pub mod synth;

pub use error::{Error, Result};
