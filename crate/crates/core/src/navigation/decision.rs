use std::collections::BTreeMap;

use nalgebra::Vector2;

use super::{IntersectionOption, NavConfig, Turn};
use crate::citygen::Cardinal;
use crate::estimator::{wrap_angle, PoseEstimate};
use crate::{Error, Result};

/// An intersection as remembered from the estimated pose at detection time.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitRecord {
    pub position: Vector2<f64>,
    pub approach: Cardinal,
    pub decisions: BTreeMap<Turn, u32>,
}

impl VisitRecord {
    pub fn count(&self, turn: Turn) -> u32 {
        self.decisions.get(&turn).copied().unwrap_or(0)
    }
}

/// Intersections visited so far and the choices made at each.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VisitMemory {
    records: Vec<VisitRecord>,
}

impl VisitMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[VisitRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn clear(&mut self) {
        self.records.clear();
    }

    fn matched_index(&self, position: Vector2<f64>, approach: Cardinal, radius_m: f64) -> Option<usize> {
        self.records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.approach == approach)
            .map(|(i, r)| (i, (r.position - position).norm()))
            .filter(|&(_, d)| d <= radius_m)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }

    /// Nearest record with the same approach direction within the match radius.
    pub fn match_visited(&self, est: &PoseEstimate, approach: Cardinal, cfg: &NavConfig) -> Option<&VisitRecord> {
        self.matched_index(est.position(), approach, cfg.visit_match_radius_m)
            .map(|i| &self.records[i])
    }

    pub fn record_decision(&mut self, est: &PoseEstimate, approach: Cardinal, turn: Turn, cfg: &NavConfig) {
        match self.matched_index(est.position(), approach, cfg.visit_match_radius_m) {
            Some(i) => *self.records[i].decisions.entry(turn).or_insert(0) += 1,
            None => self.records.push(VisitRecord {
                position: est.position(),
                approach,
                decisions: BTreeMap::from([(turn, 1)]),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub index: usize,
    pub cost: f64,
    pub penalty: f64,
}

/// `(angle term, penalty)` for every option.
///
/// The bearing to the target is taken from each option's exit point, which
/// lies `exit_offset_m` past the estimated intersection centre along the
/// option's heading.
pub fn option_costs(
    options: &[IntersectionOption],
    est: &PoseEstimate,
    target: Vector2<f64>,
    memory: &VisitMemory,
    cfg: &NavConfig,
) -> Vec<(f64, f64)> {
    let heading = est.heading();
    let approach = Cardinal::from_heading(heading);
    let record = memory.match_visited(est, approach, cfg);
    let center = est.position() + Vector2::new(heading.cos(), heading.sin()) * cfg.detection_distance_m;
    options
        .iter()
        .map(|o| {
            let exit = center + Vector2::new(o.heading.cos(), o.heading.sin()) * cfg.exit_offset_m;
            let to_target = target - exit;
            let bearing = to_target.y.atan2(to_target.x);
            let count = record.map_or(0, |r| r.count(o.turn));
            (wrap_angle(o.heading - bearing).abs(), cfg.penalty_increment_rad * count as f64)
        })
        .collect()
}

/// Chooses the option minimizing angular deviation plus revisit penalty.
/// Ties go to the lowest index.
pub fn decide_intersection(
    options: &[IntersectionOption],
    est: &PoseEstimate,
    target: Vector2<f64>,
    memory: &VisitMemory,
    cfg: &NavConfig,
) -> Result<Decision> {
    if options.is_empty() {
        return Err(Error::NoOptions);
    }
    let mut best: Option<Decision> = None;
    for (index, (angle, penalty)) in option_costs(options, est, target, memory, cfg).into_iter().enumerate() {
        let cost = angle + penalty;
        if best.is_none_or(|b| cost < b.cost) {
            best = Some(Decision { index, cost, penalty });
        }
    }
    best.ok_or(Error::NoOptions)
}
