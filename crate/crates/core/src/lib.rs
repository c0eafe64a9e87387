//! Quadrant-wise MIMO weather radar toolkit.
//!
//! The crate covers the whole chain of a four-quadrant phased array run as a
//! coherent MIMO radar:
//!
//! * [`geometry`]: planar layouts, quadrant phase centers and the virtual
//!   array obtained by spatially convolving transmit and receive centers.
//! * [`beampattern`]: Taylor tapers, array factors, two-way patterns and
//!   beamwidth / sidelobe metrics.
//! * [`steering`]: steering vectors, the transmit/receive path matrix and
//!   snapshot synthesis.
//! * [`echo`]: Gaussian-spectrum weather IQ series and the alternating
//!   polarization and staggered quadrant pulsing schemes.
//! * [`moments`]: pulse-pair covariance estimators for both modes and the
//!   mean-power variance model.
//! * [`experiments`]: profile reconstruction, variance-vs-samples curves and
//!   scan-time accounting.
//!
//! Phase convention: a target at positive radial velocity rotates the IQ
//! phase forward in time, `s(t) ~ exp(+j 2 pi f_d t)` with `f_d = 2 v / lambda`,
//! and steering phases are `exp(+j 2 pi f tau)`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beampattern;
pub mod echo;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod moments;
pub mod profile;
pub mod rng;
pub mod steering;

pub use error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Free-space wavelength for a carrier frequency in Hz.
pub fn wavelength(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT / frequency_hz
}

/// Linear power ratio from decibels.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Decibels from a linear power ratio.
#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Wraps an angle into `(-pi, pi]`.
#[inline]
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}
