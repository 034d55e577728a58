//! Builtin demonstrations.

use std::f64::consts::PI;

use crate::dmp::{RolloutConfig, Trajectory, Vector};
use crate::error::Result;

/// The planar spiral `(t cos(pi t), t sin(pi t))` on `t in [0, 1]`, with
/// exact velocities and accelerations.
pub fn spiral(dt: f64) -> Result<Trajectory> {
    let steps = RolloutConfig::new(dt, 1.0).steps()?;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
    let mut positions = Vec::with_capacity(times.len());
    let mut velocities = Vec::with_capacity(times.len());
    let mut accelerations = Vec::with_capacity(times.len());
    for &t in &times {
        let (s, c) = (PI * t).sin_cos();
        positions.push(Vector::from_column_slice(&[t * c, t * s]));
        velocities.push(Vector::from_column_slice(&[c - PI * t * s, s + PI * t * c]));
        accelerations.push(Vector::from_column_slice(&[
            -2.0 * PI * s - PI * PI * t * c,
            2.0 * PI * c - PI * PI * t * s,
        ]));
    }
    Trajectory::new(times, positions, velocities, accelerations)
}
