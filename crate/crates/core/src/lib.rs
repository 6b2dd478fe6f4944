//! Link-level spectral and energy efficiency of pinching-antenna downlinks.
//!
//! Waveguides run along `y` at `x̄_i = (i−1)d`, height `D`, fed from
//! `y = −L/2`. Users are indexed from 1 in public APIs that take user or
//! waveguide numbers; vectors are 0-based.

pub mod asymptotics;
pub mod beamforming;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod placement;

pub use error::{Error, Result};
pub use model::{Point3, SystemConfig, UserDrop};
