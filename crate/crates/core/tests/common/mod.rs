//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's numeric code.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Mat3 = Matrix3<f64>;

pub fn rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Rotation matrix of a unit quaternion given as (w, x, y, z).
pub fn quat_to_matrix(w: f64, x: f64, y: f64, z: f64) -> Mat3 {
    Mat3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Rotation angle between two rotation matrices. Uses the Frobenius
/// distance, `|A - B|_F = 2 sqrt(2) sin(theta / 2)`, which stays accurate for
/// tiny angles where the trace formula does not.
pub fn matrix_angle(a: &Mat3, b: &Mat3) -> f64 {
    let d = (a - b).norm() / (2.0 * 2f64.sqrt());
    2.0 * d.min(1.0).asin()
}

/// Minimum-jerk profile from `x0` to `g` over `duration`: position,
/// velocity, acceleration at `t`.
pub fn min_jerk(x0: f64, g: f64, duration: f64, t: f64) -> (f64, f64, f64) {
    let tau = t / duration;
    let span = g - x0;
    let p = 10.0 * tau.powi(3) - 15.0 * tau.powi(4) + 6.0 * tau.powi(5);
    let v = (30.0 * tau.powi(2) - 60.0 * tau.powi(3) + 30.0 * tau.powi(4)) / duration;
    let a = (60.0 * tau - 180.0 * tau.powi(2) + 120.0 * tau.powi(3)) / (duration * duration);
    (x0 + span * p, span * v, span * a)
}

/// Cumulative trapezoid integral starting at `x0`.
pub fn trapezoid(v: &[f64], dt: f64, x0: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    let mut acc = x0;
    out.push(acc);
    for w in v.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * dt;
        out.push(acc);
    }
    out
}

/// Window-wise mean with truncated edges, written as a direct double loop.
pub fn mean_filter_reference(u: &[f64], k: usize) -> Vec<f64> {
    let left = (k - 1) / 2;
    let right = k - 1 - left;
    (0..u.len())
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + right).min(u.len() - 1);
            u[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Kernel centers and widths rebuilt from their definition.
pub fn kernel_layout(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let centers: Vec<f64> = if n == 1 {
        vec![1.0]
    } else {
        (0..n)
            .map(|i| (-alpha * i as f64 / (n - 1) as f64).exp())
            .collect()
    };
    let mut widths: Vec<f64> = centers
        .windows(2)
        .map(|c| (c[1] - c[0]).powi(2).recip())
        .collect();
    let last = widths.last().copied().unwrap_or(1.0);
    widths.push(last);
    (centers, widths)
}

/// Weighted least squares for a single regressor: minimizes
/// `sum_j psi_j (f_j - w s_j)^2` by solving the weighted design system with
/// a QR decomposition.
pub fn weighted_least_squares(s: &[f64], f: &[f64], psi: &[f64]) -> f64 {
    let n = s.len();
    let a = DMatrix::from_fn(n, 1, |j, _| psi[j].sqrt() * s[j]);
    let b = DVector::from_fn(n, |j, _| psi[j].sqrt() * f[j]);
    let qr = a.qr();
    let qtb = qr.q().transpose() * b;
    qtb[0] / qr.r()[(0, 0)]
}

/// Step response of `x'' + 2 w x' + w^2 x = 0` from `x(0) = e0`, `x'(0) = 0`.
pub fn critically_damped(e0: f64, omega: f64, t: f64) -> f64 {
    e0 * (1.0 + omega * t) * (-omega * t).exp()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
