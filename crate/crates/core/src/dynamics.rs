//! Four-state kinematic bicycle model of the true vehicle.
//!
//! The state is the rear-axle position, heading and speed. Over one step
//! the rear axle follows a circular arc of radius `l / steer` and length
//! `d = a dt² / 2 + v dt`; the arc is expressed in the body frame as
//! `(dx, dy, dtheta)` and rotated into the world frame.

use serde::{Deserialize, Serialize};

use crate::estimator::wrap_angle;
use crate::{Error, Result};

/// Below this steering magnitude the arc is replaced by its Taylor
/// expansion, which removes the `l / steer` singularity.
pub const STEER_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    /// Heading in (-π, π].
    pub theta: f64,
    /// Forward speed, never negative.
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    pub accel: f64,
    pub steer: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlLimits {
    pub max_steer_rad: f64,
    pub max_accel: f64,
}

impl Default for ControlLimits {
    fn default() -> Self {
        Self {
            max_steer_rad: 0.55,
            max_accel: 3.0,
        }
    }
}

impl ControlInput {
    pub fn clamped(self, limits: &ControlLimits) -> ControlInput {
        ControlInput {
            accel: self.accel.clamp(-limits.max_accel, limits.max_accel),
            steer: self.steer.clamp(-limits.max_steer_rad, limits.max_steer_rad),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsParams {
    /// Front-to-rear axle distance.
    pub wheelbase_m: f64,
    pub dt_s: f64,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self {
            wheelbase_m: 2.85,
            dt_s: 0.1,
        }
    }
}

impl DynamicsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.wheelbase_m > 0.0) {
            return Err(Error::param("wheelbase_m", "must be positive"));
        }
        if !(self.dt_s > 0.0) {
            return Err(Error::param("dt_s", "must be positive"));
        }
        Ok(())
    }
}

/// Body-frame motion over one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Displacement {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
    /// Arc length travelled.
    pub distance: f64,
}

/// Distance covered in `dt` from speed `v` under constant `accel`. When
/// braking would reverse the vehicle it stops instead.
pub fn travel_distance(v: f64, accel: f64, dt: f64) -> f64 {
    if accel < 0.0 && v + accel * dt < 0.0 {
        v * v / (-2.0 * accel)
    } else {
        0.5 * accel * dt * dt + v * dt
    }
}

pub fn displacement_terms(v: f64, ctrl: ControlInput, params: &DynamicsParams) -> Displacement {
    let l = params.wheelbase_m;
    let d = travel_distance(v, ctrl.accel, params.dt_s);
    let phi = ctrl.steer;
    let dtheta = d * phi / l;
    if phi.abs() < STEER_EPSILON {
        return Displacement {
            dx: d,
            dy: d * d * phi / (2.0 * l),
            dtheta,
            distance: d,
        };
    }
    let rho = l / phi;
    let half = (0.5 * dtheta).sin();
    Displacement {
        dx: rho * dtheta.sin(),
        // 1 - cos x = 2 sin²(x/2) avoids cancellation for gentle curves
        dy: 2.0 * rho * half * half,
        dtheta,
        distance: d,
    }
}

pub fn apply_displacement(state: &VehicleState, disp: &Displacement, accel: f64, dt: f64) -> VehicleState {
    let (s, c) = state.theta.sin_cos();
    VehicleState {
        x: state.x + disp.dx * c - disp.dy * s,
        y: state.y + disp.dx * s + disp.dy * c,
        theta: wrap_angle(state.theta + disp.dtheta),
        v: (state.v + accel * dt).max(0.0),
    }
}

pub fn step(state: &VehicleState, ctrl: ControlInput, params: &DynamicsParams) -> VehicleState {
    let disp = displacement_terms(state.v, ctrl, params);
    apply_displacement(state, &disp, ctrl.accel, params.dt_s)
}
