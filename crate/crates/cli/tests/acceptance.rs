//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rand::Rng;
use urbannav::citygen::Cardinal;
use urbannav::dynamics::{displacement_terms, step, ControlInput, DynamicsParams, VehicleState, STEER_EPSILON};
use urbannav::estimator::{
    is_lost, motion_jacobians, motion_mean, position_ellipse_major_axis, predict, update_compass, update_landmark,
    PoseEstimate, ProcessNoiseParams,
};
use urbannav::harness::output::{result_rows, results_csv};
use urbannav::harness::stats::{
    average_lost_distance, distance_overhead, range_at_success, restricted_mean_range, spearman, spearman_interval,
    success_rate_by_distance, survival_fraction,
};
use urbannav::harness::{run_sweep, run_trial, GoalPlan, Outcome, SweepGrid, SweepResult, TrialConfig, TrialResult};
use urbannav::navigation::{decide_intersection, IntersectionOption, NavConfig, Strategy, Turn, VisitMemory};
use urbannav::rng::{rng_from_seed, SimRng};
use urbannav::sensors::{CompassMeasurement, LandmarkFix};
use urbannav_cli::config::RunConfig;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn config(name: &str) -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    RunConfig::load(&path).unwrap_or_else(|e| panic!("{e}"))
}

fn sweep_with(run: &RunConfig, grid: SweepGrid, base: &TrialConfig, trials: usize) -> SweepResult {
    let seed = run.sweep.as_ref().map_or(1, |s| s.base_seed);
    run_sweep(base, &grid, trials, seed, None).expect("sweep")
}

fn range_grid(compass: &[f64]) -> SweepGrid {
    SweepGrid {
        strategies: vec![Strategy::StraightToGoal],
        densities: vec![0.0],
        detection_rates: vec![1.0],
        compass_two_sigma_deg: compass.to_vec(),
    }
}

fn no_compass_collapse() -> Verdict {
    let run = config("fig3_range.cfg");
    let sweep = sweep_with(&run, range_grid(&[0.0]), &run.trial, 200);
    match average_lost_distance(&sweep.cells[0].trials) {
        Ok(mean) => verdict(
            (100.0..=1000.0).contains(&mean),
            format!("mean lost distance {mean:.0} m over 200 trials (band 100..1000 m)"),
        ),
        Err(e) => verdict(false, e.to_string()),
    }
}

fn compass_ordering() -> Verdict {
    let run = config("fig3_range.cfg");
    let sweep = sweep_with(&run, range_grid(&[10.0, 20.0, 30.0, 0.0]), &run.trial, 100);
    let trials = |i: usize| -> &[TrialResult] { &sweep.cells[i].trials };
    let ranges: Vec<f64> = (0..4).map(|i| restricted_mean_range(trials(i)).unwrap_or(0.0)).collect();
    let ordered = ranges.windows(2).all(|w| w[0] > w[1]);
    let lost20 = average_lost_distance(trials(1)).unwrap_or(f64::NAN);
    let lost30 = average_lost_distance(trials(2)).unwrap_or(f64::NAN);
    let survive10 = survival_fraction(trials(0), 30_000.0).unwrap_or(0.0);
    let pass = ordered
        && (4000.0..=20_000.0).contains(&lost30)
        && (10_000.0..=40_000.0).contains(&lost20)
        && survive10 >= 0.8;
    verdict(
        pass,
        format!(
            "range 10/20/30/none = {:.1}/{:.1}/{:.1}/{:.2} km (strict order {ordered}); lost mean 30 deg {:.1} km \
             (4..20), 20 deg {:.1} km (10..40); 10 deg survival at 30 km {:.0}% (>= 80%)",
            ranges[0] / 1e3,
            ranges[1] / 1e3,
            ranges[2] / 1e3,
            ranges[3] / 1e3,
            lost30 / 1e3,
            lost20 / 1e3,
            survive10 * 100.0
        ),
    )
}

fn success_indicator(t: &TrialResult) -> f64 {
    f64::from(u8::from(t.outcome == Outcome::Reached))
}

fn landmark_monotonicity() -> Verdict {
    let run = config("fig4_landmarks.cfg");
    let base = TrialConfig {
        goals: GoalPlan::Single {
            min_euclid_m: 4500.0,
            max_euclid_m: 5500.0,
        },
        ..run.trial.clone()
    };
    let grid = SweepGrid {
        strategies: Strategy::ALL.to_vec(),
        densities: vec![1.0, 3.0, 10.0],
        detection_rates: vec![0.2, 0.6, 1.0],
        compass_two_sigma_deg: vec![30.0],
    };
    let sweep = sweep_with(&run, grid, &base, 100);
    let mut pass = true;
    let mut parts = Vec::new();
    for s in Strategy::ALL {
        let (mut dens, mut rate, mut ok) = (Vec::new(), Vec::new(), Vec::new());
        for c in sweep.cells.iter().filter(|c| c.cell.strategy == s) {
            for t in &c.trials {
                dens.push(c.cell.density);
                rate.push(c.cell.detection_rate);
                ok.push(success_indicator(t));
            }
        }
        for (axis, x) in [("density", &dens), ("rate", &rate)] {
            let rho = spearman(x, &ok).unwrap_or(f64::NAN);
            let (lo, _) = spearman_interval(rho, ok.len(), 1.96).unwrap_or((f64::NAN, f64::NAN));
            pass &= lo >= 0.0;
            parts.push(format!("{} {axis} rho {rho:.3} (95% lower {lo:.3})", s.name()));
        }
    }
    verdict(pass, parts.join("; "))
}

fn strategy_ordering() -> Verdict {
    let run = config("fig4_landmarks.cfg");
    let sweep_cfg = run.sweep.as_ref().expect("sweep section");
    let mid = |v: &[f64]| v[v.len() / 2];
    let grid = SweepGrid {
        strategies: Strategy::ALL.to_vec(),
        densities: vec![mid(&sweep_cfg.grid.densities)],
        detection_rates: vec![mid(&sweep_cfg.grid.detection_rates)],
        compass_two_sigma_deg: vec![30.0],
    };
    let sweep = sweep_with(&run, grid, &run.trial, 400);
    let range = |i: usize| {
        success_rate_by_distance(&sweep.cells[i].trials, sweep_cfg.bin_width_m)
            .and_then(|c| range_at_success(&c, 0.8))
            .unwrap_or(0.0)
    };
    let (r_straight, r_l2l, r_hybrid) = (range(0), range(1), range(2));
    let straight = &sweep.cells[0].trials;
    let ovh_l2l = distance_overhead(&sweep.cells[1].trials, straight).unwrap_or(f64::NAN);
    let ovh_hybrid = distance_overhead(&sweep.cells[2].trials, straight).unwrap_or(f64::NAN);
    let pass = r_l2l > r_straight
        && r_hybrid > r_straight
        && ovh_l2l > ovh_hybrid
        && ovh_hybrid > 0.0
        && (0.10..=0.55).contains(&ovh_l2l)
        && (0.03..=0.35).contains(&ovh_hybrid);
    verdict(
        pass,
        format!(
            "density {} rate {}: range@80% straight/l2l/hybrid = {:.1}/{:.1}/{:.1} km; overhead l2l {:.3} \
             (0.10..0.55), hybrid {:.3} (0.03..0.35)",
            sweep.cells[0].cell.density,
            sweep.cells[0].cell.detection_rate,
            r_straight / 1e3,
            r_l2l / 1e3,
            r_hybrid / 1e3,
            ovh_l2l,
            ovh_hybrid
        ),
    )
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = a - b;
    d.sin().atan2(d.cos()).abs()
}

fn decision_oracle() -> Verdict {
    let cfg = NavConfig::default();
    let mut rng = rng_from_seed(0xD0C5);
    let kinds = [Turn::Straight, Turn::Right, Turn::Left, Turn::UTurn];
    let mut agree = 0;
    let n = 1000;
    for _ in 0..n {
        let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let pos = Vector2::new(rng.random_range(-5000.0..5000.0), rng.random_range(-5000.0..5000.0));
        let est = PoseEstimate::new(pos.x, pos.y, heading, Matrix3::identity());
        let target = Vector2::new(rng.random_range(-8000.0..8000.0), rng.random_range(-8000.0..8000.0));
        let count = rng.random_range(1..=4);
        let mut turns = kinds.to_vec();
        for i in 0..4 {
            turns.swap(i, rng.random_range(i..4));
        }
        let options: Vec<IntersectionOption> = (0..count)
            .map(|i| IntersectionOption {
                index: i,
                heading: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
                exit_segment: i,
                next: i,
                turn: turns[i],
            })
            .collect();
        let mut memory = VisitMemory::new();
        let mut history = [0u32; 4];
        let approach = Cardinal::from_heading(heading);
        for _ in 0..rng.random_range(0..6) {
            let k = rng.random_range(0..4);
            memory.record_decision(&est, approach, kinds[k], &cfg);
            history[k] += 1;
        }

        let center = pos + Vector2::new(heading.cos(), heading.sin()) * cfg.detection_distance_m;
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, o) in options.iter().enumerate() {
            let exit = center + Vector2::new(o.heading.cos(), o.heading.sin()) * cfg.exit_offset_m;
            let phi = (target.y - exit.y).atan2(target.x - exit.x);
            let k = kinds.iter().position(|&t| t == o.turn).unwrap();
            let cost = angle_diff(o.heading, phi) + cfg.penalty_increment_rad * f64::from(history[k]);
            if cost < best.1 {
                best = (i, cost);
            }
        }
        if decide_intersection(&options, &est, target, &memory, &cfg).map(|d| d.index) == Ok(best.0) {
            agree += 1;
        }
    }
    verdict(agree == n, format!("{agree}/{n} instances agree with brute force"))
}

fn random_estimate(rng: &mut SimRng) -> PoseEstimate {
    let a = Matrix3::from_fn(|_, _| rng.random_range(-3.0..3.0));
    let cov = a * a.transpose() + Matrix3::identity() * 1e-3;
    PoseEstimate::new(
        rng.random_range(-1e4..1e4),
        rng.random_range(-1e4..1e4),
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        cov,
    )
}

fn ekf_numerics() -> Verdict {
    let mut rng = rng_from_seed(0xE4F);
    let h = 1e-6;
    let mut worst_jac: f64 = 0.0;
    for _ in 0..10_000 {
        let m = Vector3::new(
            rng.random_range(-1e3..1e3),
            rng.random_range(-1e3..1e3),
            rng.random_range(-3.0..3.0),
        );
        let dd = rng.random_range(0.0..3.0);
        let dth = rng.random_range(-0.3..0.3);
        let (f, g) = motion_jacobians(&m, dd, dth);
        let diff = |a: Vector3<f64>, b: Vector3<f64>| {
            let mut d = a - b;
            d.z = d.z.sin().atan2(d.z.cos());
            d / (2.0 * h)
        };
        for j in 0..3 {
            let mut e = Vector3::zeros();
            e[j] = h;
            let col = diff(motion_mean(&(m + e), dd, dth), motion_mean(&(m - e), dd, dth));
            for i in 0..3 {
                worst_jac = worst_jac.max((f[(i, j)] - col[i]).abs() / f[(i, j)].abs().max(1.0));
            }
        }
        let cols = [
            diff(motion_mean(&m, dd + h, dth), motion_mean(&m, dd - h, dth)),
            diff(motion_mean(&m, dd, dth + h), motion_mean(&m, dd, dth - h)),
        ];
        for (j, col) in cols.iter().enumerate() {
            for i in 0..3 {
                worst_jac = worst_jac.max((g[(i, j)] - col[i]).abs() / g[(i, j)].abs().max(1.0));
            }
        }
    }

    let q = ProcessNoiseParams::default();
    let mut min_eig = f64::INFINITY;
    let mut trace_violations = 0;
    let mut heading_violations = 0;
    for _ in 0..100_000 {
        let mut est = random_estimate(&mut rng);
        for _ in 0..8 {
            match rng.random_range(0..3) {
                0 => est = predict(&est, rng.random_range(0.0..2.0), rng.random_range(-0.2..0.2), &q),
                1 => {
                    let before = est.heading_var();
                    let z = CompassMeasurement {
                        z: rng.random_range(-3.0..3.0),
                        sigma: rng.random_range(0.01..1.0),
                    };
                    est = update_compass(&est, &z);
                    if est.heading_var() > before * (1.0 + 1e-12) {
                        heading_violations += 1;
                    }
                }
                _ => {
                    let before = est.position_cov().trace();
                    let fix = LandmarkFix {
                        landmark_id: 0,
                        z: est.position() + Vector2::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)),
                        sigma: rng.random_range(0.5..20.0),
                    };
                    est = update_landmark(&est, &fix);
                    if est.position_cov().trace() > before * (1.0 + 1e-12) {
                        trace_violations += 1;
                    }
                }
            }
            min_eig = min_eig.min(est.cov.symmetric_eigen().eigenvalues.min());
        }
    }
    let pass = worst_jac <= 1e-6 && min_eig >= -1e-9 && trace_violations == 0 && heading_violations == 0;
    verdict(
        pass,
        format!(
            "worst Jacobian relative error {worst_jac:.2e} (<= 1e-6); min covariance eigenvalue {min_eig:.2e} \
             (>= -1e-9); trace increases {trace_violations}; heading variance increases {heading_violations}"
        ),
    )
}

fn dynamics_checks() -> Verdict {
    let p = DynamicsParams::default();
    let mut rng = rng_from_seed(0xB1C);
    let (mut cont, mut arc, mut rot): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..10_000 {
        let v = rng.random_range(0.0..30.0);
        let a = rng.random_range(-3.0..3.0);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };

        // exact arc at the threshold against the expansion just below it
        let exact = displacement_terms(v, ControlInput { accel: a, steer: sign * STEER_EPSILON }, &p);
        let below = displacement_terms(
            v,
            ControlInput {
                accel: a,
                steer: sign * STEER_EPSILON * (1.0 - 1e-12),
            },
            &p,
        );
        cont = cont.max((exact.dx - below.dx).abs()).max((exact.dy - below.dy).abs());

        let steer = rng.random_range(-0.55..0.55);
        let d = displacement_terms(v, ControlInput { accel: 0.0, steer }, &p);
        let chord = d.dx.hypot(d.dy);
        let half = 0.5 * d.dtheta;
        let geometric = if half.abs() > 1e-12 { chord * half / half.sin() } else { chord };
        arc = arc.max((geometric - v * p.dt_s).abs()).max((d.distance - v * p.dt_s).abs());

        let s = VehicleState {
            x: rng.random_range(-1e3..1e3),
            y: rng.random_range(-1e3..1e3),
            theta: rng.random_range(-3.0..3.0),
            v,
        };
        let ctrl = ControlInput { accel: a, steer };
        let alpha: f64 = rng.random_range(-3.0..3.0);
        let rot2 = Matrix2::new(alpha.cos(), -alpha.sin(), alpha.sin(), alpha.cos());
        let rotate = |s: &VehicleState| {
            let q = rot2 * Vector2::new(s.x, s.y);
            VehicleState {
                x: q.x,
                y: q.y,
                theta: s.theta + alpha,
                v: s.v,
            }
        };
        let lhs = step(&rotate(&s), ctrl, &p);
        let rhs = rotate(&step(&s, ctrl, &p));
        let scale = rhs.x.hypot(rhs.y).max(1.0);
        rot = rot
            .max(lhs.x.hypot(lhs.y).max(1.0).recip() * (lhs.x - rhs.x).hypot(lhs.y - rhs.y))
            .max(angle_diff(lhs.theta, rhs.theta))
            .max((lhs.v - rhs.v).abs() / scale);
    }
    verdict(
        cont < 1e-9 && arc < 1e-9 && rot < 1e-12,
        format!("fallback continuity {cont:.2e} m (< 1e-9); arc length {arc:.2e} m (< 1e-9); rotation {rot:.2e} (< 1e-12)"),
    )
}

fn determinism() -> Verdict {
    let run = config("smoke.cfg");
    let cfg = run.single_trial();
    let a = run_trial(&cfg).expect("trial");
    let b = run_trial(&cfg).expect("trial");
    let bits = |r: &TrialResult| {
        [r.manhattan_m, r.euclid_m, r.final_axis_m, r.sim_time_s].map(f64::to_bits).to_vec()
    };
    let trial_same = a == b && bits(&a) == bits(&b);
    let sweep_cfg = run.sweep.as_ref().expect("sweep section");
    let csv = |workers| {
        let s = run_sweep(&run.trial, &sweep_cfg.grid, 8, sweep_cfg.base_seed, Some(workers)).expect("sweep");
        results_csv(&result_rows(&s)).expect("csv")
    };
    let (one, four) = (csv(1), csv(4));
    verdict(
        trial_same && one == four,
        format!(
            "trial rerun identical: {trial_same}; results.csv identical for 1 and 4 workers: {} ({} bytes)",
            one == four,
            one.len()
        ),
    )
}

fn lost_exactness() -> Verdict {
    let at = |a: f64, b: f64| PoseEstimate::new(0.0, 0.0, 0.0, Matrix3::from_diagonal(&Vector3::new(a, b, 0.01)));
    let axis = position_ellipse_major_axis(&at(625.0, 625.0));
    let pass = axis == 100.0 && !is_lost(&at(625.0, 625.0), 100.0) && is_lost(&at(630.0, 625.0), 100.0);
    verdict(pass, format!("diag(625,625): axis {axis} m, not lost; diag(630,625): lost"))
}

fn experiment_analogue() -> Verdict {
    let run = config("experiment_ithaca.cfg");
    let sweep_cfg = run.sweep.as_ref().expect("sweep section");
    let sweep = sweep_with(&run, sweep_cfg.grid.clone(), &run.trial, sweep_cfg.trials_per_cell);
    let trials = &sweep.cells[0].trials;
    let reached = trials.iter().filter(|t| t.outcome == Outcome::Reached).count();
    let frac = reached as f64 / trials.len() as f64;
    verdict(
        (0.6..=1.0).contains(&frac) && trials.len() == 50,
        format!("{reached}/{} trials reached 6.9 km cumulative progression ({:.0}%, band 60..100%)", trials.len(), frac * 100.0),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        ("no-compass collapse", no_compass_collapse),
        ("compass-uncertainty ordering", compass_ordering),
        ("landmark-study monotonicity", landmark_monotonicity),
        ("strategy ordering and overhead", strategy_ordering),
        ("decision rule oracle", decision_oracle),
        ("EKF numerics", ekf_numerics),
        ("dynamics invariants", dynamics_checks),
        ("determinism", determinism),
        ("lost criterion", lost_exactness),
        ("experiment analogue", experiment_analogue),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "criterion {:>2} {} {name} ({:.1}s): {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
