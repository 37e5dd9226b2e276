//! Three-state (x, y, θ) extended Kalman filter for the vehicle pose.
//!
//! Prediction is driven by decoded odometry increments; updates come from
//! the compass (heading) and from landmark fixes (position). Both updates
//! use the Joseph form so the covariance stays symmetric positive
//! semidefinite. The filter also provides the 2σ position-ellipse metric
//! used to decide when the vehicle is lost.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix2, Matrix3, Matrix3x2, RowVector3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::sensors::{CompassMeasurement, LandmarkFix};
use crate::{Error, Result};

/// Wraps an angle into (-π, π].
#[inline]
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// [`wrap_angle`] that rejects NaN and infinities.
pub fn checked_wrap_angle(theta: f64) -> Result<f64> {
    if theta.is_finite() {
        Ok(wrap_angle(theta))
    } else {
        Err(Error::NonFinite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseEstimate {
    /// (x, y, θ)
    pub mean: Vector3<f64>,
    pub cov: Matrix3<f64>,
}

impl PoseEstimate {
    pub fn new(x: f64, y: f64, theta: f64, cov: Matrix3<f64>) -> Self {
        Self {
            mean: Vector3::new(x, y, wrap_angle(theta)),
            cov,
        }
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.mean.x, self.mean.y)
    }

    pub fn heading(&self) -> f64 {
        self.mean.z
    }

    pub fn position_cov(&self) -> Matrix2<f64> {
        self.cov.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn heading_var(&self) -> f64 {
        self.cov[(2, 2)]
    }
}

/// Eigenvalues `(larger, smaller)` of the symmetric matrix `[[a, b], [b, c]]`.
pub fn symmetric_eigenvalues_2x2(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mean = 0.5 * (a + c);
    let r = (0.5 * (a - c)).hypot(b);
    (mean + r, mean - r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessNoiseParams {
    /// Fractional 1σ error of each distance increment.
    pub sigma_d: f64,
    /// Heading random walk, rad per √m travelled.
    pub sigma_dtheta: f64,
}

impl Default for ProcessNoiseParams {
    fn default() -> Self {
        Self {
            sigma_d: 0.01,
            sigma_dtheta: 0.02,
        }
    }
}

/// Mean motion: advance `dd` along the mid-step heading, then turn by `dtheta`.
pub fn motion_mean(mean: &Vector3<f64>, dd: f64, dtheta: f64) -> Vector3<f64> {
    let mid = mean.z + 0.5 * dtheta;
    Vector3::new(
        mean.x + dd * mid.cos(),
        mean.y + dd * mid.sin(),
        wrap_angle(mean.z + dtheta),
    )
}

/// Jacobians of [`motion_mean`] w.r.t. the state (F) and the odometry
/// increment `(dd, dtheta)` (G).
pub fn motion_jacobians(mean: &Vector3<f64>, dd: f64, dtheta: f64) -> (Matrix3<f64>, Matrix3x2<f64>) {
    let (s, c) = (mean.z + 0.5 * dtheta).sin_cos();
    #[rustfmt::skip]
    let f = Matrix3::new(
        1.0, 0.0, -dd * s,
        0.0, 1.0,  dd * c,
        0.0, 0.0,  1.0,
    );
    #[rustfmt::skip]
    let g = Matrix3x2::new(
        c, -0.5 * dd * s,
        s,  0.5 * dd * c,
        0.0, 1.0,
    );
    (f, g)
}

fn symmetrize(p: Matrix3<f64>) -> Matrix3<f64> {
    (p + p.transpose()) * 0.5
}

pub fn predict(est: &PoseEstimate, dd: f64, dtheta: f64, q: &ProcessNoiseParams) -> PoseEstimate {
    let (f, g) = motion_jacobians(&est.mean, dd, dtheta);
    let var_d = (q.sigma_d * dd).powi(2);
    let var_theta = q.sigma_dtheta * q.sigma_dtheta * dd.abs();
    let noise = Matrix2::new(var_d, 0.0, 0.0, var_theta);
    PoseEstimate {
        mean: motion_mean(&est.mean, dd, dtheta),
        cov: symmetrize(f * est.cov * f.transpose() + g * noise * g.transpose()),
    }
}

/// Heading update; the innovation is wrapped before the gain is applied.
pub fn update_compass(est: &PoseEstimate, z: &CompassMeasurement) -> PoseEstimate {
    let h = RowVector3::new(0.0, 0.0, 1.0);
    let r = z.sigma * z.sigma;
    let p = est.cov;
    let s = p[(2, 2)] + r;
    if s <= 0.0 {
        return *est;
    }
    let k: Vector3<f64> = p.column(2) / s;
    let innovation = wrap_angle(z.z - est.mean.z);
    let mut mean = est.mean + k * innovation;
    mean.z = wrap_angle(mean.z);
    let a = Matrix3::identity() - k * h;
    PoseEstimate {
        mean,
        cov: symmetrize(a * p * a.transpose() + k * r * k.transpose()),
    }
}

/// Direct position update from a landmark fix.
pub fn update_landmark(est: &PoseEstimate, fix: &LandmarkFix) -> PoseEstimate {
    #[rustfmt::skip]
    let h = nalgebra::Matrix2x3::new(
        1.0, 0.0, 0.0,
        0.0, 1.0, 0.0,
    );
    let r = Matrix2::identity() * (fix.sigma * fix.sigma);
    let p = est.cov;
    let s = h * p * h.transpose() + r;
    let Some(s_inv) = s.try_inverse() else {
        return *est;
    };
    let k: Matrix3x2<f64> = p * h.transpose() * s_inv;
    let innovation = fix.z - est.position();
    let mut mean = est.mean + k * innovation;
    mean.z = wrap_angle(mean.z);
    let a = Matrix3::identity() - k * h;
    PoseEstimate {
        mean,
        cov: symmetrize(a * p * a.transpose() + k * r * k.transpose()),
    }
}

/// Full major-axis length of the 2σ position ellipse, `4 √λ_max`.
pub fn position_ellipse_major_axis(est: &PoseEstimate) -> f64 {
    let p = &est.cov;
    let (lmax, _) = symmetric_eigenvalues_2x2(p[(0, 0)], 0.5 * (p[(0, 1)] + p[(1, 0)]), p[(1, 1)]);
    4.0 * lmax.max(0.0).sqrt()
}

/// The vehicle is lost once the 2σ major axis strictly exceeds `threshold_m`.
pub fn is_lost(est: &PoseEstimate, threshold_m: f64) -> bool {
    position_ellipse_major_axis(est) > threshold_m
}
