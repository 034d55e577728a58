//! Comparison of an adapted trajectory against its obstacle-free reference.

use serde::{Deserialize, Serialize};

use crate::avoidance::Obstacle;
use crate::dmp::{Trajectory, Vector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonReport {
    /// `|x_ref(t) - x(t)|` on the reference time grid.
    pub deviation_series: Vec<f64>,
    /// `|xdd(t)|` of the adapted trajectory on the reference time grid.
    pub accel_norm_series: Vec<f64>,
    pub max_deviation: f64,
    pub max_accel_norm: f64,
    pub final_goal_error: f64,
    /// Smallest isopotential (volumes) or distance (points) seen by the
    /// adapted samples; `None` without obstacles.
    pub min_clearance: Option<f64>,
    pub collided: bool,
}

/// Compares against the reference's final position as the goal.
pub fn compare(
    reference: &Trajectory,
    adapted: &Trajectory,
    obstacles: &[Obstacle],
) -> Result<ComparisonReport> {
    compare_with_goal(reference, adapted, obstacles, reference.last_position())
}

pub fn compare_with_goal(
    reference: &Trajectory,
    adapted: &Trajectory,
    obstacles: &[Obstacle],
    goal: &Vector,
) -> Result<ComparisonReport> {
    let d = reference.dims();
    if adapted.dims() != d || goal.len() != d {
        return Err(Error::Dimension(format!(
            "reference is {d}-dimensional, adapted {} and goal {}",
            adapted.dims(),
            goal.len()
        )));
    }
    if let Some(o) = obstacles
        .iter()
        .find(|o| o.dims().is_some_and(|od| od != d))
    {
        return Err(Error::Dimension(format!(
            "{}-dimensional obstacle for a {d}-dimensional trajectory",
            o.dims().unwrap_or(0)
        )));
    }
    let ref_end = reference.duration();
    let ad_end = adapted.duration();
    if ref_end < adapted.times()[0] || ad_end < reference.times()[0] {
        return Err(Error::invalid(format!(
            "time ranges [0, {ref_end}] and [0, {ad_end}] do not overlap"
        )));
    }

    let mut deviation_series = Vec::with_capacity(reference.len());
    let mut accel_norm_series = Vec::with_capacity(reference.len());
    for (t, x_ref) in reference.times().iter().zip(reference.positions()) {
        deviation_series.push((x_ref - adapted.position_at(*t)).norm());
        accel_norm_series.push(adapted.acceleration_at(*t).norm());
    }

    let mut min_clearance: Option<f64> = None;
    for (t, x) in adapted.times().iter().zip(adapted.positions()) {
        for o in obstacles {
            let c = o.at_time(*t).clearance(x);
            min_clearance = Some(min_clearance.map_or(c, |m| m.min(c)));
        }
    }

    Ok(ComparisonReport {
        max_deviation: max(&deviation_series),
        max_accel_norm: max(&accel_norm_series),
        final_goal_error: (adapted.last_position() - goal).norm(),
        collided: min_clearance.is_some_and(|c| !(c > 0.0)),
        min_clearance,
        deviation_series,
        accel_norm_series,
    })
}

fn max(series: &[f64]) -> f64 {
    series.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
