use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::scenario::{VehicleState, WorldMap};

/// Predicted kinematic state at the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionPrediction {
    pub position: Vec2,
    pub velocity: Vec2,
}

/// Constant-acceleration extrapolation from a history sampled every `tau`
/// seconds, oldest first. Acceleration is the finite difference of the
/// reported velocities across the history.
pub fn extrapolate(history: &[VehicleState], tau: f64, horizon: f64) -> Result<MotionPrediction> {
    if history.len() < 2 {
        return Err(Error::invalid(format!(
            "mobility history needs at least 2 states, got {}",
            history.len()
        )));
    }
    if !(tau > 0.0) || !(horizon >= 0.0) {
        return Err(Error::invalid("period must be positive and horizon non-negative"));
    }
    let first = &history[0];
    let last = &history[history.len() - 1];
    let span = tau * (history.len() - 1) as f64;
    let accel = (last.velocity - first.velocity) * (1.0 / span);
    Ok(MotionPrediction {
        position: last.position + last.velocity * horizon + accel * (0.5 * horizon * horizon),
        velocity: last.velocity + accel * horizon,
    })
}

/// [`extrapolate`], with the position snapped to the nearest road point.
pub fn predict_mobility(history: &[VehicleState], tau: f64, horizon: f64, map: &WorldMap) -> Result<MotionPrediction> {
    let mut p = extrapolate(history, tau, horizon)?;
    p.position = map.snap_to_road(p.position);
    Ok(p)
}

/// The predicted state as a vehicle record at the horizon.
pub fn predicted_state(last: &VehicleState, p: &MotionPrediction) -> VehicleState {
    VehicleState {
        position: p.position,
        velocity: p.velocity,
        ..*last
    }
}
