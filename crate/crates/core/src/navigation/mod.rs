//! Intersection-level navigation and low-level path tracking.
//!
//! The outer loop works only from the pose estimate: it picks a target
//! (goal or landmark), scores each turning option by how far its exit
//! heading deviates from the bearing to that target, and adds a penalty
//! for choices already made at the same remembered intersection. The inner
//! loop is a pair of PID controllers that keep the true vehicle on the
//! chosen road.

mod decision;
mod pid;
mod strategy;

pub use decision::{decide_intersection, option_costs, Decision, VisitMemory, VisitRecord};
pub use pid::{PidGains, SpeedPid, SteeringGains, SteeringPid};
pub use strategy::{goal_reached, select_target, Strategy, Target};

use serde::{Deserialize, Serialize};

use crate::citygen::{NodeId, SegmentId};
use crate::{Error, Result};

/// Manoeuvre taken at an intersection, in canonical option order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Turn {
    Straight,
    Right,
    Left,
    UTurn,
}

/// One legal way through an intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionOption {
    pub index: usize,
    /// Direction of travel after the intersection, θ⁺.
    pub heading: f64,
    pub exit_segment: SegmentId,
    /// Intersection at the far end of the exit segment.
    pub next: NodeId,
    pub turn: Turn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavConfig {
    pub strategy: Strategy,
    /// Hybrid strategy switches to landmark seeking above this 2σ major axis.
    pub hybrid_threshold_m: f64,
    /// Added to an option's cost for every earlier time it was taken here (rad).
    pub penalty_increment_rad: f64,
    pub visit_match_radius_m: f64,
    pub goal_radius_m: f64,
    /// Distance before an intersection at which it is detected.
    pub detection_distance_m: f64,
    /// How far past the intersection centre the exit point lies.
    pub exit_offset_m: f64,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::StraightToGoal,
            hybrid_threshold_m: 50.0,
            penalty_increment_rad: std::f64::consts::FRAC_PI_3,
            visit_match_radius_m: 50.0,
            goal_radius_m: 50.0,
            detection_distance_m: 15.0,
            exit_offset_m: 15.0,
        }
    }
}

impl NavConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("hybrid_threshold_m", self.hybrid_threshold_m),
            ("penalty_increment_rad", self.penalty_increment_rad),
            ("visit_match_radius_m", self.visit_match_radius_m),
            ("goal_radius_m", self.goal_radius_m),
            ("detection_distance_m", self.detection_distance_m),
        ] {
            if !(v > 0.0) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        if !(self.exit_offset_m >= 0.0) {
            return Err(Error::param("exit_offset_m", "must be non-negative"));
        }
        Ok(())
    }
}
