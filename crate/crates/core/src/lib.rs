//! Limited-information urban navigation simulator.
//!
//! A vehicle drives a randomly generated gridded city using only wheel
//! odometry, a noisy compass and occasional fixes from a sparse map of known
//! landmarks. Its pose is tracked with a three-state extended Kalman filter
//! and routed intersection by intersection with a compass-bearing decision
//! rule that penalizes repeating earlier choices. The [`harness`] module runs
//! seeded closed-loop trials and Monte Carlo sweeps over them.
//!
//! Module map:
//!
//! * [`citygen`]: grid road networks, roadside landmarks, start/goal scenarios
//! * [`dynamics`]: kinematic bicycle model of the true vehicle
//! * [`sensors`]: encoder, compass and landmark-detection simulators
//! * [`estimator`]: EKF prediction and updates, uncertainty ellipse, lost test
//! * [`navigation`]: intersection decisions, target strategies, PID tracking
//! * [`harness`]: trials, sweeps, statistics and CSV output

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod citygen;
pub mod dynamics;
mod error;
pub mod estimator;
pub mod harness;
pub mod navigation;
pub mod rng;
pub mod sensors;

pub use error::{Error, Result};
