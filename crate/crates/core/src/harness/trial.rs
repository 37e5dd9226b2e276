use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::citygen::{
    generate_city, intersection_options, place_landmarks, sample_next_goal, sample_start_goal_with, CityGenParams,
    CityMap, Landmark, NodeId, SegmentId,
};
use crate::dynamics::{apply_displacement, displacement_terms, ControlInput, ControlLimits, DynamicsParams, VehicleState};
use crate::estimator::{
    is_lost, position_ellipse_major_axis, predict, update_compass, update_landmark, wrap_angle, PoseEstimate,
    ProcessNoiseParams,
};
use crate::navigation::{
    decide_intersection, goal_reached, select_target, IntersectionOption, NavConfig, PidGains, SpeedPid,
    SteeringGains, SteeringPid, Turn, VisitMemory,
};
use crate::rng::{derive_seed, rng_from_seed, stream_seed, SimRng, Stream};
use crate::sensors::{
    decode_odometry, simulate_compass, DetectionParams, LandmarkDetector, Odometer, OdometryParams,
};
use crate::{Error, Result};

/// How goals are issued during a trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum GoalPlan {
    /// One goal at a Euclidean distance drawn from the band.
    Single { min_euclid_m: f64, max_euclid_m: f64 },
    /// A new goal is spawned whenever the current one is reached. The trial
    /// succeeds once the summed start-to-goal distances of reached legs
    /// reach `target_progression_m`; without a target it runs until lost or
    /// until `max_distance_m` has been driven.
    Chained {
        leg_min_m: f64,
        leg_max_m: f64,
        #[serde(default)]
        target_progression_m: Option<f64>,
        #[serde(default)]
        max_distance_m: Option<f64>,
        /// Replace the landmark set with a fresh draw for every leg.
        #[serde(default)]
        landmarks_per_leg: bool,
    },
}

impl Default for GoalPlan {
    fn default() -> Self {
        GoalPlan::Single {
            min_euclid_m: 500.0,
            max_euclid_m: 12_000.0,
        }
    }
}

impl GoalPlan {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = match *self {
            GoalPlan::Single { min_euclid_m, max_euclid_m } => (min_euclid_m, max_euclid_m),
            GoalPlan::Chained {
                leg_min_m,
                leg_max_m,
                target_progression_m,
                max_distance_m,
                ..
            } => {
                if target_progression_m.is_some_and(|t| !(t > 0.0)) {
                    return Err(Error::param("target_progression_m", "must be positive"));
                }
                if max_distance_m.is_some_and(|t| !(t > 0.0)) {
                    return Err(Error::param("max_distance_m", "must be positive"));
                }
                (leg_min_m, leg_max_m)
            }
        };
        if !(lo >= 0.0 && hi >= lo) {
            return Err(Error::param("goals", "distance band must satisfy 0 <= min <= max"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    /// The city seed is replaced by one derived from the trial seed.
    pub city: CityGenParams,
    pub dynamics: DynamicsParams,
    pub limits: ControlLimits,
    pub odometry: OdometryParams,
    /// 1σ compass noise; zero disables the compass.
    pub compass_sigma_rad: f64,
    pub compass_period_s: f64,
    pub detection: DetectionParams,
    /// 1σ of each landmark position fix.
    pub fix_sigma_m: f64,
    pub nav: NavConfig,
    pub process_noise: ProcessNoiseParams,
    pub initial_sigma_pos_m: f64,
    pub initial_sigma_heading_rad: f64,
    pub lost_threshold_m: f64,
    /// Overrides the timeout derived from the goal distance.
    pub max_sim_time_s: Option<f64>,
    pub stuck_time_s: f64,
    pub v_ref: f64,
    pub v_turn: f64,
    pub steering: SteeringGains,
    pub speed: PidGains,
    pub goals: GoalPlan,
    pub seed: u64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            city: CityGenParams::default(),
            dynamics: DynamicsParams::default(),
            limits: ControlLimits::default(),
            odometry: OdometryParams::default(),
            compass_sigma_rad: 30f64.to_radians() / 2.0,
            compass_period_s: 0.2,
            detection: DetectionParams::default(),
            fix_sigma_m: 5.0,
            nav: NavConfig::default(),
            process_noise: ProcessNoiseParams::default(),
            initial_sigma_pos_m: 1.0,
            initial_sigma_heading_rad: 2f64.to_radians(),
            lost_threshold_m: 100.0,
            max_sim_time_s: None,
            stuck_time_s: 60.0,
            v_ref: 10.0,
            v_turn: 5.0,
            steering: SteeringGains::default(),
            speed: PidGains::default(),
            goals: GoalPlan::default(),
            seed: 0,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        self.city.validate()?;
        self.dynamics.validate()?;
        self.odometry.validate()?;
        self.detection.validate()?;
        self.nav.validate()?;
        self.goals.validate()?;
        let non_negative = [
            ("compass_sigma_rad", self.compass_sigma_rad),
            ("initial_sigma_pos_m", self.initial_sigma_pos_m),
            ("initial_sigma_heading_rad", self.initial_sigma_heading_rad),
            ("process_noise.sigma_d", self.process_noise.sigma_d),
            ("process_noise.sigma_dtheta", self.process_noise.sigma_dtheta),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) {
                return Err(Error::param(name, "must be non-negative"));
            }
        }
        let positive = [
            ("compass_period_s", self.compass_period_s),
            ("fix_sigma_m", self.fix_sigma_m),
            ("lost_threshold_m", self.lost_threshold_m),
            ("stuck_time_s", self.stuck_time_s),
            ("v_ref", self.v_ref),
            ("v_turn", self.v_turn),
            ("limits.max_steer_rad", self.limits.max_steer_rad),
            ("limits.max_accel", self.limits.max_accel),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        if self.max_sim_time_s.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::param("max_sim_time_s", "must be positive"));
        }
        if let GoalPlan::Chained {
            target_progression_m: None,
            max_distance_m: None,
            ..
        } = self.goals
        {
            if self.max_sim_time_s.is_none() {
                return Err(Error::param(
                    "goals",
                    "chained goals need target_progression_m, max_distance_m or max_sim_time_s",
                ));
            }
        }
        if self.city.block_size_m < 2.0 * self.nav.detection_distance_m {
            return Err(Error::param(
                "nav.detection_distance_m",
                "must be at most half the block size",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Reached,
    Lost,
    Timeout,
    Stuck,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [Outcome::Reached, Outcome::Lost, Outcome::Timeout, Outcome::Stuck];

    pub fn name(self) -> &'static str {
        match self {
            Outcome::Reached => "reached",
            Outcome::Lost => "lost",
            Outcome::Timeout => "timeout",
            Outcome::Stuck => "stuck",
        }
    }

    pub fn from_name(name: &str) -> Option<Outcome> {
        Outcome::ALL.into_iter().find(|o| o.name() == name)
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    pub outcome: Outcome,
    /// Path length driven until termination.
    pub manhattan_m: f64,
    /// Start-to-goal distance; for chained goals, the sum over reached legs.
    pub euclid_m: f64,
    pub final_axis_m: f64,
    pub n_fixes: u32,
    pub n_intersections: u32,
    pub n_goals: u32,
    pub sim_time_s: f64,
    /// `(distance driven, 2σ major axis)` every [`AXIS_SAMPLE_M`] metres.
    pub axis_profile: Vec<(f64, f64)>,
}

pub const AXIS_SAMPLE_M: f64 = 250.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorRow {
    pub t: f64,
    pub truth: VehicleState,
    pub mean: Vector3<f64>,
    pub axis_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRow {
    pub t: f64,
    pub intersection_est: Vector2<f64>,
    pub n_options: usize,
    pub chosen_index: usize,
    pub cost: f64,
    pub penalty: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialTrace {
    pub estimator: Vec<EstimatorRow>,
    pub decisions: Vec<DecisionRow>,
}

/// Distance before a turn at which the path switches to the exit road.
const TURN_LEAD_M: f64 = 5.0;
/// Distance from a dead-end cap at which the vehicle reverses.
const UTURN_LEAD_M: f64 = 1.0;
/// The vehicle slows for a turn inside this distance.
const SLOW_ZONE_M: f64 = 25.0;
const UTURN_SPEED: f64 = 2.0;
const STOPPED_SPEED: f64 = 0.1;
const MIN_TIMEOUT_S: f64 = 120.0;
const TIMEOUT_FACTOR: f64 = 5.0;

struct Leg {
    segment: SegmentId,
    toward: NodeId,
    origin: Vector2<f64>,
    dir: Vector2<f64>,
    heading: f64,
    end: Vector2<f64>,
}

impl Leg {
    fn new(map: &CityMap, segment: SegmentId, toward: NodeId) -> Leg {
        let from = map.segment(segment).other(toward);
        let origin = map.node_position(from);
        let end = map.node_position(toward);
        let dir = (end - origin).normalize();
        Leg {
            segment,
            toward,
            origin,
            dir,
            heading: dir.y.atan2(dir.x),
            end,
        }
    }

    fn remaining(&self, p: Vector2<f64>) -> f64 {
        (self.end - p).dot(&self.dir)
    }

    /// Positive when the path lies to the vehicle's left.
    fn cross_track(&self, p: Vector2<f64>) -> f64 {
        let r = p - self.origin;
        -(self.dir.x * r.y - self.dir.y * r.x)
    }
}

struct Sim<'a> {
    cfg: &'a TrialConfig,
    map: CityMap,
    truth: VehicleState,
    est: PoseEstimate,
    leg: Leg,
    pending: Option<IntersectionOption>,
    goal: Vector2<f64>,
    memory: VisitMemory,
    consumed: Vec<bool>,
    steer_pid: SteeringPid,
    speed_pid: SpeedPid,
    odometer: Odometer,
    detector: LandmarkDetector,
    scenario_rng: SimRng,
    odo_rng: SimRng,
    compass_rng: SimRng,
    detect_rng: SimRng,
    t: f64,
    next_compass_t: f64,
    stopped_s: f64,
    distance: f64,
    progression: f64,
    leg_euclid: f64,
    leg_index: u64,
    n_fixes: u32,
    n_intersections: u32,
    n_goals: u32,
    max_time: f64,
    axis_profile: Vec<(f64, f64)>,
    next_axis_sample: f64,
    trace: Option<TrialTrace>,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a TrialConfig, traced: bool) -> Result<Self> {
        let city = CityGenParams {
            seed: stream_seed(cfg.seed, Stream::City),
            ..cfg.city.clone()
        };
        let map = generate_city(&city)?;
        let map = place_landmarks(map, city.landmark_density, derive_seed(stream_seed(cfg.seed, Stream::Landmarks), 0));
        let mut scenario_rng = rng_from_seed(stream_seed(cfg.seed, Stream::Scenario));
        let (lo, hi) = match cfg.goals {
            GoalPlan::Single { min_euclid_m, max_euclid_m } => (min_euclid_m, max_euclid_m),
            GoalPlan::Chained { leg_min_m, leg_max_m, .. } => (leg_min_m, leg_max_m),
        };
        let scenario = sample_start_goal_with(&map, lo, hi, &mut scenario_rng)?;
        let horizon_m = match cfg.goals {
            GoalPlan::Single { .. } => scenario.euclidean_start_goal_m,
            GoalPlan::Chained {
                target_progression_m,
                max_distance_m,
                ..
            } => target_progression_m.or(max_distance_m).unwrap_or(f64::INFINITY),
        };
        let max_time = cfg
            .max_sim_time_s
            .unwrap_or_else(|| (TIMEOUT_FACTOR * horizon_m / cfg.v_ref).max(MIN_TIMEOUT_S));

        let truth = VehicleState {
            x: scenario.start.x,
            y: scenario.start.y,
            theta: scenario.start.theta,
            v: 0.0,
        };
        let (sp, sh) = (cfg.initial_sigma_pos_m, cfg.initial_sigma_heading_rad);
        let est = PoseEstimate::new(
            truth.x,
            truth.y,
            truth.theta,
            Matrix3::from_diagonal(&Vector3::new(sp * sp, sp * sp, sh * sh)),
        );
        let leg = Leg::new(&map, scenario.start_segment, scenario.start_toward);
        let detector = LandmarkDetector::new(&map.landmarks, cfg.detection, cfg.fix_sigma_m);
        let consumed = vec![false; map.landmarks.len()];
        Ok(Sim {
            cfg,
            truth,
            est,
            leg,
            pending: None,
            goal: scenario.goal,
            memory: VisitMemory::new(),
            consumed,
            steer_pid: SteeringPid::new(cfg.steering),
            speed_pid: SpeedPid::new(cfg.speed),
            odometer: Odometer::new(cfg.odometry),
            detector,
            scenario_rng,
            odo_rng: rng_from_seed(stream_seed(cfg.seed, Stream::Odometry)),
            compass_rng: rng_from_seed(stream_seed(cfg.seed, Stream::Compass)),
            detect_rng: rng_from_seed(stream_seed(cfg.seed, Stream::Detection)),
            t: 0.0,
            next_compass_t: 0.0,
            stopped_s: 0.0,
            distance: 0.0,
            progression: 0.0,
            leg_euclid: scenario.euclidean_start_goal_m,
            leg_index: 0,
            n_fixes: 0,
            n_intersections: 0,
            n_goals: 0,
            max_time,
            axis_profile: vec![(0.0, position_ellipse_major_axis(&est))],
            next_axis_sample: AXIS_SAMPLE_M,
            trace: traced.then(TrialTrace::default),
            map,
        })
    }

    fn position(&self) -> Vector2<f64> {
        Vector2::new(self.truth.x, self.truth.y)
    }

    fn control(&mut self) -> ControlInput {
        let cfg = self.cfg;
        let p = self.position();
        let remaining = self.leg.remaining(p);
        let v_ref = match self.pending.map(|o| o.turn) {
            Some(Turn::UTurn) if remaining < SLOW_ZONE_M => UTURN_SPEED,
            Some(Turn::Left | Turn::Right) if remaining < SLOW_ZONE_M => cfg.v_turn,
            _ => cfg.v_ref,
        };
        let dt = cfg.dynamics.dt_s;
        let accel = self.speed_pid.accel(self.truth.v, v_ref, dt, cfg.limits.max_accel);
        let steer = self.steer_pid.steer(
            self.leg.cross_track(p),
            wrap_angle(self.leg.heading - self.truth.theta),
            dt,
            cfg.limits.max_steer_rad,
        );
        ControlInput { accel, steer }.clamped(&cfg.limits)
    }

    fn switch_leg(&mut self, option: IntersectionOption) {
        if option.turn == Turn::UTurn {
            self.truth.theta = wrap_angle(self.truth.theta + std::f64::consts::PI);
            // the reversal is reported exactly, without travel
            self.est = predict(&self.est, 0.0, std::f64::consts::PI, &self.cfg.process_noise);
        }
        self.leg = Leg::new(&self.map, option.exit_segment, option.next);
        self.pending = None;
        self.steer_pid.reset();
    }

    fn advance_path(&mut self) {
        let Some(option) = self.pending else { return };
        let remaining = self.leg.remaining(self.position());
        let lead = match option.turn {
            Turn::Straight => 0.0,
            Turn::Left | Turn::Right => TURN_LEAD_M,
            Turn::UTurn => UTURN_LEAD_M,
        };
        if remaining <= lead {
            self.switch_leg(option);
        }
    }

    fn sense(&mut self, true_dd: f64, true_dtheta: f64) {
        let cfg = self.cfg;
        let m = self.odometer.simulate(true_dd, true_dtheta, &mut self.odo_rng);
        let (dd, dtheta) = decode_odometry(&m, &cfg.odometry);
        self.est = predict(&self.est, dd, dtheta, &cfg.process_noise);

        if cfg.compass_sigma_rad > 0.0 && self.t + 1e-9 >= self.next_compass_t {
            let z = simulate_compass(self.truth.theta, cfg.compass_sigma_rad, &mut self.compass_rng);
            self.est = update_compass(&self.est, &z);
            self.next_compass_t += cfg.compass_period_s;
        }

        let p = self.position();
        if let Some(fix) = self.detector.step(p, &self.est, &self.map.landmarks, &mut self.detect_rng) {
            self.est = update_landmark(&self.est, &fix);
            self.n_fixes += 1;
            self.consumed[fix.landmark_id] = true;
        }
    }

    fn candidate_landmarks(&self) -> impl Iterator<Item = &Landmark> {
        self.map.landmarks.iter().filter(|l| !self.consumed[l.id])
    }

    fn consume_reached_landmarks(&mut self) {
        let here = self.est.position();
        let radius = self.cfg.nav.goal_radius_m;
        for l in &self.map.landmarks {
            if (l.position - here).norm() <= radius {
                self.consumed[l.id] = true;
            }
        }
    }

    /// Chooses the manoeuvre for the upcoming intersection.
    fn handle_intersection(&mut self) -> Result<()> {
        let cfg = &self.cfg.nav;
        let node = self.leg.toward;
        let options = intersection_options(&self.map, node, self.leg.heading)?;
        // the vehicle perceives exits relative to itself
        let rel: Vec<IntersectionOption> = options
            .iter()
            .map(|o| IntersectionOption {
                heading: wrap_angle(self.est.heading() + o.heading - self.leg.heading),
                ..*o
            })
            .collect();
        let target = select_target(cfg, &self.est, self.goal, self.candidate_landmarks()).position();
        let decision = decide_intersection(&rel, &self.est, target, &self.memory, cfg)?;
        let chosen = options[decision.index];
        let approach = crate::citygen::Cardinal::from_heading(self.est.heading());
        self.memory.record_decision(&self.est, approach, chosen.turn, cfg);
        self.n_intersections += 1;
        if let Some(trace) = self.trace.as_mut() {
            let h = self.est.heading();
            trace.decisions.push(DecisionRow {
                t: self.t,
                intersection_est: self.est.position() + Vector2::new(h.cos(), h.sin()) * cfg.detection_distance_m,
                n_options: options.len(),
                chosen_index: decision.index,
                cost: decision.cost,
                penalty: decision.penalty,
            });
        }
        self.pending = Some(chosen);
        Ok(())
    }

    /// Returns the outcome when the trial is over.
    fn on_goal_reached(&mut self) -> Result<Option<Outcome>> {
        self.n_goals += 1;
        self.progression += self.leg_euclid;
        let GoalPlan::Chained {
            leg_min_m,
            leg_max_m,
            target_progression_m,
            landmarks_per_leg,
            ..
        } = self.cfg.goals
        else {
            return Ok(Some(Outcome::Reached));
        };
        if target_progression_m.is_some_and(|t| self.progression >= t) {
            return Ok(Some(Outcome::Reached));
        }
        let here = self.position();
        let (_, goal) = sample_next_goal(
            &self.map,
            self.leg.segment,
            self.leg.toward,
            here,
            leg_min_m,
            leg_max_m,
            &mut self.scenario_rng,
        )?;
        self.goal = goal;
        self.leg_euclid = (goal - here).norm();
        self.leg_index += 1;
        self.memory.clear();
        if landmarks_per_leg {
            let seed = derive_seed(stream_seed(self.cfg.seed, Stream::Landmarks), self.leg_index);
            self.map = place_landmarks(self.map.clone(), self.cfg.city.landmark_density, seed);
            self.detector = LandmarkDetector::new(&self.map.landmarks, self.cfg.detection, self.cfg.fix_sigma_m);
        }
        self.consumed = vec![false; self.map.landmarks.len()];
        Ok(None)
    }

    fn record(&mut self) {
        while self.distance >= self.next_axis_sample {
            self.axis_profile
                .push((self.next_axis_sample, position_ellipse_major_axis(&self.est)));
            self.next_axis_sample += AXIS_SAMPLE_M;
        }
        if let Some(trace) = self.trace.as_mut() {
            trace.estimator.push(EstimatorRow {
                t: self.t,
                truth: self.truth,
                mean: self.est.mean,
                axis_m: position_ellipse_major_axis(&self.est),
            });
        }
    }

    fn step(&mut self) -> Result<Option<Outcome>> {
        let cfg = self.cfg;
        let dt = cfg.dynamics.dt_s;
        let ctrl = self.control();
        let disp = displacement_terms(self.truth.v, ctrl, &cfg.dynamics);
        self.truth = apply_displacement(&self.truth, &disp, ctrl.accel, dt);
        self.t += dt;
        self.distance += disp.distance;
        self.sense(disp.distance, disp.dtheta);
        self.advance_path();
        self.record();

        if is_lost(&self.est, cfg.lost_threshold_m) {
            return Ok(Some(Outcome::Lost));
        }
        self.consume_reached_landmarks();
        if goal_reached(&self.est, self.goal, &cfg.nav) {
            if let Some(outcome) = self.on_goal_reached()? {
                return Ok(Some(outcome));
            }
        }
        if self.t >= self.max_time {
            return Ok(Some(Outcome::Timeout));
        }
        if let GoalPlan::Chained {
            max_distance_m: Some(cap),
            ..
        } = cfg.goals
        {
            if self.distance >= cap {
                return Ok(Some(Outcome::Timeout));
            }
        }
        self.stopped_s = if self.truth.v < STOPPED_SPEED { self.stopped_s + dt } else { 0.0 };
        if self.stopped_s >= cfg.stuck_time_s {
            return Ok(Some(Outcome::Stuck));
        }

        if self.pending.is_none() && self.leg.remaining(self.position()) <= cfg.nav.detection_distance_m {
            match self.handle_intersection() {
                Ok(()) => {}
                Err(Error::NoExit(_)) => return Ok(Some(Outcome::Stuck)),
                Err(e) => return Err(e),
            }
        }
        Ok(None)
    }

    fn finish(self, outcome: Outcome) -> (TrialResult, Option<TrialTrace>) {
        let euclid_m = match self.cfg.goals {
            GoalPlan::Single { .. } => self.leg_euclid,
            GoalPlan::Chained { .. } => self.progression,
        };
        let result = TrialResult {
            seed: self.cfg.seed,
            outcome,
            manhattan_m: self.distance,
            euclid_m,
            final_axis_m: position_ellipse_major_axis(&self.est),
            n_fixes: self.n_fixes,
            n_intersections: self.n_intersections,
            n_goals: self.n_goals,
            sim_time_s: self.t,
            axis_profile: self.axis_profile,
        };
        (result, self.trace)
    }
}

fn run(cfg: &TrialConfig, traced: bool) -> Result<(TrialResult, Option<TrialTrace>)> {
    cfg.validate()?;
    let mut sim = Sim::new(cfg, traced)?;
    loop {
        if let Some(outcome) = sim.step()? {
            return Ok(sim.finish(outcome));
        }
    }
}

/// Runs one closed-loop trial. The result is a pure function of `cfg`.
pub fn run_trial(cfg: &TrialConfig) -> Result<TrialResult> {
    run(cfg, false).map(|(r, _)| r)
}

pub fn run_trial_traced(cfg: &TrialConfig) -> Result<(TrialResult, TrialTrace)> {
    run(cfg, true).map(|(r, t)| (r, t.unwrap_or_default()))
}
