use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::NavConfig;
use crate::citygen::{Landmark, LandmarkId};
use crate::estimator::{position_ellipse_major_axis, PoseEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Head for the goal; landmark fixes only happen by chance.
    StraightToGoal,
    /// Chain through the nearest landmark that is closer to the goal.
    LandmarkToLandmark,
    /// Head for the goal until the 2σ major axis exceeds the threshold,
    /// then seek landmarks.
    Hybrid,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::StraightToGoal, Strategy::LandmarkToLandmark, Strategy::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::StraightToGoal => "straight_to_goal",
            Strategy::LandmarkToLandmark => "landmark_to_landmark",
            Strategy::Hybrid => "hybrid",
        }
    }

    pub fn from_name(name: &str) -> Option<Strategy> {
        Strategy::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Goal(Vector2<f64>),
    Landmark { id: LandmarkId, position: Vector2<f64> },
}

impl Target {
    pub fn position(&self) -> Vector2<f64> {
        match *self {
            Target::Goal(p) => p,
            Target::Landmark { position, .. } => position,
        }
    }
}

fn nearest_useful_landmark<'a>(
    est: &PoseEstimate,
    goal: Vector2<f64>,
    landmarks: impl IntoIterator<Item = &'a Landmark>,
) -> Option<&'a Landmark> {
    let here = est.position();
    let remaining = (goal - here).norm();
    landmarks
        .into_iter()
        .filter(|l| (l.position - goal).norm() < remaining)
        .map(|l| ((l.position - here).norm(), l))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, l)| l)
}

/// Where the vehicle should head next. `landmarks` are the candidates the
/// caller still considers worth visiting.
pub fn select_target<'a>(
    cfg: &NavConfig,
    est: &PoseEstimate,
    goal: Vector2<f64>,
    landmarks: impl IntoIterator<Item = &'a Landmark>,
) -> Target {
    let seek = match cfg.strategy {
        Strategy::StraightToGoal => false,
        Strategy::LandmarkToLandmark => true,
        Strategy::Hybrid => position_ellipse_major_axis(est) > cfg.hybrid_threshold_m,
    };
    if !seek {
        return Target::Goal(goal);
    }
    match nearest_useful_landmark(est, goal, landmarks) {
        Some(l) => Target::Landmark {
            id: l.id,
            position: l.position,
        },
        None => Target::Goal(goal),
    }
}

/// Closed test on the estimated position.
pub fn goal_reached(est: &PoseEstimate, goal: Vector2<f64>, cfg: &NavConfig) -> bool {
    (est.position() - goal).norm() <= cfg.goal_radius_m
}
