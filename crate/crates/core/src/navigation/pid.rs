use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Bound on the magnitude of the integral term's contribution.
    pub integral_limit: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 1.0,
            ki: 0.05,
            kd: 0.0,
            integral_limit: 1.0,
        }
    }
}

/// Steering gains: proportional on cross-track and heading error, integral
/// and derivative on cross-track error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteeringGains {
    pub kp_cross_track: f64,
    pub kp_heading: f64,
    pub ki: f64,
    pub kd: f64,
    pub integral_limit: f64,
}

impl Default for SteeringGains {
    fn default() -> Self {
        // critically damped lane keeping for the default wheelbase
        Self {
            kp_cross_track: 0.1,
            kp_heading: 1.2,
            ki: 0.005,
            kd: 0.0,
            integral_limit: 0.05,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SteeringPid {
    gains: SteeringGains,
    integral: f64,
    previous: Option<f64>,
}

impl SteeringPid {
    pub fn new(gains: SteeringGains) -> Self {
        Self {
            gains,
            integral: 0.0,
            previous: None,
        }
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.previous = None;
    }

    /// Steering angle for signed cross-track error (positive when the path
    /// lies to the vehicle's left) and heading error (path minus vehicle).
    pub fn steer(&mut self, cross_track: f64, heading_err: f64, dt: f64, max_steer: f64) -> f64 {
        let g = &self.gains;
        self.integral += cross_track * dt;
        if g.ki > 0.0 {
            let bound = g.integral_limit / g.ki;
            self.integral = self.integral.clamp(-bound, bound);
        }
        let derivative = match self.previous {
            Some(prev) if dt > 0.0 => (cross_track - prev) / dt,
            _ => 0.0,
        };
        self.previous = Some(cross_track);
        let phi = g.kp_cross_track * cross_track + g.kp_heading * heading_err + g.ki * self.integral + g.kd * derivative;
        phi.clamp(-max_steer, max_steer)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SpeedPid {
    gains: PidGains,
    integral: f64,
    previous: Option<f64>,
}

impl SpeedPid {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            integral: 0.0,
            previous: None,
        }
    }

    pub fn accel(&mut self, v: f64, v_ref: f64, dt: f64, max_accel: f64) -> f64 {
        let g = &self.gains;
        let err = v_ref - v;
        self.integral += err * dt;
        if g.ki > 0.0 {
            let bound = g.integral_limit / g.ki;
            self.integral = self.integral.clamp(-bound, bound);
        }
        let derivative = match self.previous {
            Some(prev) if dt > 0.0 => (err - prev) / dt,
            _ => 0.0,
        };
        self.previous = Some(err);
        (g.kp * err + g.ki * self.integral + g.kd * derivative).clamp(-max_accel, max_accel)
    }
}
