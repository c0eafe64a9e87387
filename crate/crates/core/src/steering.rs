//! Narrowband MIMO snapshot model: steering vectors, the transmit/receive
//! path matrix and snapshot synthesis.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::beampattern::Direction;
use crate::geometry::{PhaseCenterSet, Point2};
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Geometric one-way delay of a phase center toward `dir`, seconds.
pub fn geometric_delay(p: Point2, dir: Direction) -> f64 {
    let u = dir.unit_vector();
    (p.x * u[0] + p.y * u[1]) / SPEED_OF_LIGHT
}

/// `exp(j 2 pi f tau_m)` for each center.
pub fn steering_vector(centers: &[Point2], dir: Direction, frequency_hz: f64) -> Result<Vec<Complex64>> {
    if centers.is_empty() {
        return Err(Error::Steering("no phase centers".into()));
    }
    Ok(centers
        .iter()
        .map(|&p| phasor(frequency_hz, geometric_delay(p, dir)))
        .collect())
}

fn phasor(f: f64, tau: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * f * tau)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringContext {
    pub tx_delays: Vec<f64>,
    pub rx_delays: Vec<f64>,
    pub frequency_hz: f64,
    pub direction: Direction,
}

impl SteeringContext {
    pub fn from_geometry(pcs: &PhaseCenterSet, direction: Direction, frequency_hz: f64) -> Result<Self> {
        if pcs.tx_centers.is_empty() || pcs.rx_centers.is_empty() {
            return Err(Error::Steering("phase-center set has an empty side".into()));
        }
        if !(frequency_hz > 0.0) {
            return Err(Error::Steering(format!("frequency must be positive, got {frequency_hz}")));
        }
        Ok(SteeringContext {
            tx_delays: pcs.tx_centers.iter().map(|&p| geometric_delay(p, direction)).collect(),
            rx_delays: pcs.rx_centers.iter().map(|&p| geometric_delay(p, direction)).collect(),
            frequency_hz,
            direction,
        })
    }

    /// Same geometry evaluated at another instantaneous frequency.
    pub fn at_frequency(&self, frequency_hz: f64) -> Self {
        SteeringContext {
            frequency_hz,
            ..self.clone()
        }
    }
}

/// `A[k, l] = exp(j 2 pi f (tau_t[k] + tau_r[l]))`, transmit by receive.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    pub entries: Array2<Complex64>,
}

impl PathMatrix {
    pub fn n_tx(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_rx(&self) -> usize {
        self.entries.ncols()
    }
}

pub fn path_matrix(ctx: &SteeringContext) -> PathMatrix {
    let f = ctx.frequency_hz;
    let entries = Array2::from_shape_fn((ctx.tx_delays.len(), ctx.rx_delays.len()), |(k, l)| {
        phasor(f, ctx.tx_delays[k] + ctx.rx_delays[l])
    });
    PathMatrix { entries }
}

/// Received snapshot: `out[l] = sum_k A[k, l] y[k]`.
pub fn synthesize_snapshot(a: &PathMatrix, y: &[Complex64]) -> Result<Vec<Complex64>> {
    if y.len() != a.n_tx() {
        return Err(Error::Steering(format!(
            "snapshot needs {} transmit samples, got {}",
            a.n_tx(),
            y.len()
        )));
    }
    let yv = ndarray::ArrayView1::from(y);
    Ok(a.entries.t().dot(&yv).to_vec())
}
