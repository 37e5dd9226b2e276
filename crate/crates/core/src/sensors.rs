//! Simulated odometry, compass and landmark sensing.

use std::collections::HashMap;

use nalgebra::Vector2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::citygen::{Landmark, LandmarkId};
use crate::estimator::{symmetric_eigenvalues_2x2, wrap_angle, PoseEstimate};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdometryParams {
    pub ticks_per_rev: u32,
    pub wheel_radius_m: f64,
    pub track_width_m: f64,
    /// 1σ multiplicative slip on each wheel's arc per measurement.
    pub slip_sigma: f64,
}

impl Default for OdometryParams {
    fn default() -> Self {
        Self {
            ticks_per_rev: 100,
            wheel_radius_m: 0.3,
            track_width_m: 1.6,
            slip_sigma: 0.01,
        }
    }
}

impl OdometryParams {
    pub fn validate(&self) -> Result<()> {
        if self.ticks_per_rev == 0 {
            return Err(Error::param("ticks_per_rev", "must be positive"));
        }
        if !(self.wheel_radius_m > 0.0) {
            return Err(Error::param("wheel_radius_m", "must be positive"));
        }
        if !(self.track_width_m > 0.0) {
            return Err(Error::param("track_width_m", "must be positive"));
        }
        if !(self.slip_sigma >= 0.0) {
            return Err(Error::param("slip_sigma", "must be non-negative"));
        }
        Ok(())
    }

    /// Wheel arc per encoder tick, `2πr / N`.
    pub fn tick_arc(&self) -> f64 {
        std::f64::consts::TAU * self.wheel_radius_m / self.ticks_per_rev as f64
    }
}

/// Encoder counts accumulated since the previous measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OdometryMeasurement {
    pub ticks_left: i64,
    pub ticks_right: i64,
}

/// Differential-drive wheel encoders.
///
/// Wheel rotation is accumulated continuously and reported as the change
/// of the rounded counter, so the quantization error of the running total
/// never exceeds half a tick per wheel.
#[derive(Debug, Clone)]
pub struct Odometer {
    params: OdometryParams,
    left_ticks: f64,
    right_ticks: f64,
    left_count: i64,
    right_count: i64,
}

impl Odometer {
    pub fn new(params: OdometryParams) -> Self {
        Self {
            params,
            left_ticks: 0.0,
            right_ticks: 0.0,
            left_count: 0,
            right_count: 0,
        }
    }

    pub fn params(&self) -> &OdometryParams {
        &self.params
    }

    pub fn simulate<R: Rng + ?Sized>(&mut self, true_dd: f64, true_dtheta: f64, rng: &mut R) -> OdometryMeasurement {
        let half_w = 0.5 * self.params.track_width_m;
        let n_l: f64 = rng.sample(StandardNormal);
        let n_r: f64 = rng.sample(StandardNormal);
        let slip = self.params.slip_sigma;
        let s_l = (true_dd - half_w * true_dtheta) * (1.0 + slip * n_l);
        let s_r = (true_dd + half_w * true_dtheta) * (1.0 + slip * n_r);
        let arc = self.params.tick_arc();
        self.left_ticks += s_l / arc;
        self.right_ticks += s_r / arc;
        let left = self.left_ticks.round() as i64;
        let right = self.right_ticks.round() as i64;
        let m = OdometryMeasurement {
            ticks_left: left - self.left_count,
            ticks_right: right - self.right_count,
        };
        self.left_count = left;
        self.right_count = right;
        m
    }
}

/// Converts encoder counts to `(distance, heading change)`.
pub fn decode_odometry(m: &OdometryMeasurement, params: &OdometryParams) -> (f64, f64) {
    let c = params.tick_arc();
    let (l, r) = (m.ticks_left as f64, m.ticks_right as f64);
    (0.5 * c * (l + r), c * (r - l) / params.track_width_m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompassMeasurement {
    /// Measured heading in (-π, π].
    pub z: f64,
    /// 1σ of the measurement.
    pub sigma: f64,
}

/// 1σ compass error for a quoted ±2σ bound in degrees.
pub fn compass_sigma_from_two_sigma_deg(two_sigma_deg: f64) -> f64 {
    0.5 * two_sigma_deg.to_radians()
}

pub fn simulate_compass<R: Rng + ?Sized>(true_theta: f64, sigma: f64, rng: &mut R) -> CompassMeasurement {
    let n: f64 = rng.sample(StandardNormal);
    CompassMeasurement {
        z: wrap_angle(true_theta + sigma * n),
        sigma,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandmarkFix {
    pub landmark_id: LandmarkId,
    /// Measured vehicle position (the landmark's surveyed location plus noise).
    pub z: Vector2<f64>,
    /// Isotropic 1σ.
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionParams {
    pub detection_rate: f64,
    pub detection_radius_m: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            detection_rate: 1.0,
            detection_radius_m: 30.0,
        }
    }
}

impl DetectionParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.detection_rate) {
            return Err(Error::param("detection_rate", "must lie in [0, 1]"));
        }
        if !(self.detection_radius_m > 0.0) {
            return Err(Error::param("detection_radius_m", "must be positive"));
        }
        Ok(())
    }
}

fn noisy_fix<R: Rng + ?Sized>(landmark: &Landmark, sigma_pos: f64, rng: &mut R) -> LandmarkFix {
    let nx: f64 = rng.sample(StandardNormal);
    let ny: f64 = rng.sample(StandardNormal);
    LandmarkFix {
        landmark_id: landmark.id,
        z: landmark.position + Vector2::new(nx, ny) * sigma_pos,
        sigma: sigma_pos,
    }
}

/// Single-shot detection: the nearest landmark within range is seen with
/// probability `detection_rate`.
pub fn simulate_landmark_detection<R: Rng + ?Sized>(
    true_position: Vector2<f64>,
    landmarks: &[Landmark],
    det: &DetectionParams,
    sigma_pos: f64,
    rng: &mut R,
) -> Option<LandmarkFix> {
    let nearest = landmarks
        .iter()
        .map(|l| ((l.position - true_position).norm(), l))
        .filter(|(d, _)| *d <= det.detection_radius_m)
        .min_by(|a, b| a.0.total_cmp(&b.0))?
        .1;
    if rng.random::<f64>() < det.detection_rate {
        Some(noisy_fix(nearest, sigma_pos, rng))
    } else {
        None
    }
}

/// 2σ position ellipse of an estimate, grown by a fixed margin on both axes.
#[derive(Debug, Clone, Copy)]
pub struct Gate {
    center: Vector2<f64>,
    axis_major: Vector2<f64>,
    semi_major: f64,
    semi_minor: f64,
}

impl Gate {
    pub fn new(est: &PoseEstimate, inflation_m: f64) -> Gate {
        let p = est.position_cov();
        let (a, b, c) = (p[(0, 0)], 0.5 * (p[(0, 1)] + p[(1, 0)]), p[(1, 1)]);
        let (lmax, lmin) = symmetric_eigenvalues_2x2(a, b, c);
        // eigenvector of lmax; for an isotropic block any direction works
        let axis = if b.abs() > 0.0 {
            Vector2::new(b, lmax - a).normalize()
        } else if a >= c {
            Vector2::new(1.0, 0.0)
        } else {
            Vector2::new(0.0, 1.0)
        };
        Gate {
            center: est.position(),
            axis_major: axis,
            semi_major: 2.0 * lmax.max(0.0).sqrt() + inflation_m,
            semi_minor: 2.0 * lmin.max(0.0).sqrt() + inflation_m,
        }
    }

    /// Closed-set membership test.
    pub fn contains(&self, p: Vector2<f64>) -> bool {
        let d = p - self.center;
        let u = d.dot(&self.axis_major);
        let v = d.x * -self.axis_major.y + d.y * self.axis_major.x;
        let (a, b) = (self.semi_major, self.semi_minor);
        if b <= 0.0 {
            return v == 0.0 && u.abs() <= a;
        }
        (u / a).powi(2) + (v / b).powi(2) <= 1.0
    }
}

/// Landmarks inside the 2σ ellipse of `est` inflated by `inflation_m`.
pub fn gate_landmarks<'a>(est: &PoseEstimate, landmarks: &'a [Landmark], inflation_m: f64) -> Vec<&'a Landmark> {
    let gate = Gate::new(est, inflation_m);
    landmarks.iter().filter(|l| gate.contains(l.position)).collect()
}

/// Buckets landmarks on a square grid for radius queries.
#[derive(Debug, Clone)]
struct LandmarkGrid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl LandmarkGrid {
    fn new(landmarks: &[Landmark], cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, l) in landmarks.iter().enumerate() {
            buckets.entry(Self::key(cell, l.position)).or_default().push(i);
        }
        Self { cell, buckets }
    }

    fn key(cell: f64, p: Vector2<f64>) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    fn near(&self, p: Vector2<f64>) -> impl Iterator<Item = usize> + '_ {
        let (cx, cy) = Self::key(self.cell, p);
        (-1..=1)
            .flat_map(move |dx| (-1..=1).map(move |dy| (cx + dx, cy + dy)))
            .filter_map(|k| self.buckets.get(&k))
            .flatten()
            .copied()
    }
}

#[derive(Debug, Clone, Copy)]
struct Pass {
    will_detect: bool,
    emitted: bool,
    last_distance: f64,
}

/// Range-triggered landmark detector used inside closed-loop trials.
///
/// Each time the vehicle enters a landmark's detection radius one Bernoulli
/// draw decides whether this pass will produce a fix; leaving the radius
/// re-arms the draw. A successful pass reports its fix at the point of
/// closest approach. Landmarks outside the estimator's inflated 2σ gate at
/// entry are masked for the whole pass.
#[derive(Debug, Clone)]
pub struct LandmarkDetector {
    params: DetectionParams,
    sigma_pos: f64,
    grid: LandmarkGrid,
    passes: HashMap<usize, Pass>,
}

impl LandmarkDetector {
    pub fn new(landmarks: &[Landmark], params: DetectionParams, sigma_pos: f64) -> Self {
        Self {
            params,
            sigma_pos,
            grid: LandmarkGrid::new(landmarks, params.detection_radius_m.max(1.0)),
            passes: HashMap::new(),
        }
    }

    pub fn step<R: Rng + ?Sized>(
        &mut self,
        true_position: Vector2<f64>,
        est: &PoseEstimate,
        landmarks: &[Landmark],
        rng: &mut R,
    ) -> Option<LandmarkFix> {
        let radius = self.params.detection_radius_m;
        let mut in_range: Vec<(usize, f64)> = self
            .grid
            .near(true_position)
            .map(|i| (i, (landmarks[i].position - true_position).norm()))
            .filter(|&(_, d)| d <= radius)
            .collect();
        in_range.sort_by_key(|&(i, _)| i);
        self.passes.retain(|i, _| in_range.iter().any(|&(j, _)| j == *i));

        let mut gate = None;
        let mut best: Option<(usize, f64)> = None;
        for (i, d) in in_range {
            match self.passes.get_mut(&i) {
                None => {
                    let draw = rng.random::<f64>() < self.params.detection_rate;
                    let gate = gate.get_or_insert_with(|| Gate::new(est, radius));
                    let will_detect = draw && gate.contains(landmarks[i].position);
                    self.passes.insert(
                        i,
                        Pass {
                            will_detect,
                            emitted: false,
                            last_distance: d,
                        },
                    );
                }
                Some(pass) => {
                    let receding = d > pass.last_distance;
                    pass.last_distance = d;
                    if pass.will_detect && !pass.emitted && receding && best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((i, d));
                    }
                }
            }
        }
        let (i, _) = best?;
        if let Some(pass) = self.passes.get_mut(&i) {
            pass.emitted = true;
        }
        Some(noisy_fix(&landmarks[i], self.sigma_pos, rng))
    }
}
