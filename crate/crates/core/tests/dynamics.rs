use std::f64::consts::PI;

use nalgebra::{Rotation2, Vector2};
use proptest::prelude::*;
use urbannav::dynamics::{displacement_terms, step, travel_distance, ControlInput, DynamicsParams, VehicleState};
use urbannav::estimator::wrap_angle;
use urbannav::navigation::{SpeedPid, SteeringGains, SteeringPid, PidGains};

fn state() -> impl Strategy<Value = VehicleState> {
    (-1e3..1e3f64, -1e3..1e3f64, -PI..PI, 0.0..30.0f64).prop_map(|(x, y, theta, v)| VehicleState { x, y, theta, v })
}

fn control() -> impl Strategy<Value = ControlInput> {
    (-3.0..3.0f64, -0.55..0.55f64).prop_map(|(accel, steer)| ControlInput { accel, steer })
}

proptest! {
    #[test]
    fn speed_stays_non_negative(s in state(), c in control()) {
        let next = step(&s, c, &DynamicsParams::default());
        prop_assert!(next.v >= 0.0);
        prop_assert!(next.theta > -PI && next.theta <= PI);
    }

    #[test]
    fn arc_length_matches_travel(v in 0.0..30.0f64, c in control()) {
        let p = DynamicsParams::default();
        let d = displacement_terms(v, c, &p);
        prop_assert!((d.distance - travel_distance(v, c.accel, p.dt_s)).abs() < 1e-12);
        let chord = d.dx.hypot(d.dy);
        prop_assert!(chord <= d.distance + 1e-12);
        prop_assert!((d.dtheta - d.distance * c.steer / p.wheelbase_m).abs() < 1e-12);
    }

    #[test]
    fn rigid_motion_equivariance(s in state(), c in control(), alpha in -PI..PI, tx in -500.0..500.0f64, ty in -500.0..500.0f64) {
        let p = DynamicsParams::default();
        let rot = Rotation2::new(alpha);
        let move_state = |s: &VehicleState| {
            let q = rot * Vector2::new(s.x, s.y) + Vector2::new(tx, ty);
            VehicleState { x: q.x, y: q.y, theta: wrap_angle(s.theta + alpha), v: s.v }
        };
        let a = step(&move_state(&s), c, &p);
        let b = move_state(&step(&s, c, &p));
        prop_assert!((a.x - b.x).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9);
        prop_assert!(wrap_angle(a.theta - b.theta).abs() < 1e-12);
        prop_assert_eq!(a.v, b.v);
    }

    #[test]
    fn mirrored_steering_mirrors_path(v in 0.1..30.0f64, c in control()) {
        let p = DynamicsParams::default();
        let l = displacement_terms(v, c, &p);
        let r = displacement_terms(v, ControlInput { steer: -c.steer, ..c }, &p);
        prop_assert!((l.dx - r.dx).abs() < 1e-12);
        prop_assert!((l.dy + r.dy).abs() < 1e-12);
        prop_assert!((l.dtheta + r.dtheta).abs() < 1e-12);
    }
}

#[test]
fn braking_stops_instead_of_reversing() {
    let p = DynamicsParams::default();
    let s = VehicleState { x: 0.0, y: 0.0, theta: 0.0, v: 0.1 };
    let next = step(&s, ControlInput { accel: -3.0, steer: 0.0 }, &p);
    assert_eq!(next.v, 0.0);
    assert!(next.x > 0.0 && next.x < 0.1 * p.dt_s);
}

#[test]
fn quarter_circle_lands_on_arc() {
    let p = DynamicsParams { wheelbase_m: 2.0, dt_s: 0.01 };
    let steer = 0.5;
    let radius = p.wheelbase_m / steer;
    let steps = 200;
    let v = 0.5 * PI * radius / (steps as f64 * p.dt_s);
    let mut s = VehicleState { x: 0.0, y: 0.0, theta: 0.0, v };
    for _ in 0..steps {
        s = step(&s, ControlInput { accel: 0.0, steer }, &p);
    }
    assert!((s.x - radius).abs() < 1e-6, "{s:?}");
    assert!((s.y - radius).abs() < 1e-6, "{s:?}");
    assert!((s.theta - PI / 2.0).abs() < 1e-9);
}

#[test]
fn lane_keeping_settles_within_half_a_metre() {
    let p = DynamicsParams::default();
    let mut steer_pid = SteeringPid::new(SteeringGains::default());
    let mut speed_pid = SpeedPid::new(PidGains::default());
    let mut s = VehicleState { x: 0.0, y: 2.0, theta: 0.05, v: 0.0 };
    let mut worst_late: f64 = 0.0;
    for k in 0..1200 {
        let steer = steer_pid.steer(-s.y, -s.theta, p.dt_s, 0.55);
        let accel = speed_pid.accel(s.v, 10.0, p.dt_s, 3.0);
        s = step(&s, ControlInput { accel, steer }, &p);
        if k >= 300 {
            worst_late = worst_late.max(s.y.abs());
        }
    }
    assert!(worst_late < 0.5, "cross-track {worst_late}");
    assert!((s.v - 10.0).abs() < 0.1);
}
