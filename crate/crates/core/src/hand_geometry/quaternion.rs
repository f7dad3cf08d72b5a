use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Rotation quaternion stored as `(w, x, y, z)`, `w` being the real part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Quaternion<T> {
    pub fn new(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::zero())
    }

    /// Rotation by `angle` about `axis`; the axis is normalized, and a zero
    /// axis gives the identity.
    pub fn from_axis_angle(axis: [T; 3], angle: T) -> Self {
        let len = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(len > T::zero()) {
            return Self::identity();
        }
        let half = angle / T::lit(2.0);
        let (s, c) = half.sin_cos();
        let k = s / len;
        Self::new(c, axis[0] * k, axis[1] * k, axis[2] * k)
    }

    pub fn about_x(angle: T) -> Self {
        Self::from_axis_angle([T::one(), T::zero(), T::zero()], angle)
    }

    pub fn about_y(angle: T) -> Self {
        Self::from_axis_angle([T::zero(), T::one(), T::zero()], angle)
    }

    pub fn about_z(angle: T) -> Self {
        Self::from_axis_angle([T::zero(), T::zero(), T::one()], angle)
    }

    /// Rotation vector `v * dt` applied as the exponential map.
    pub fn from_rotation_vector(v: [T; 3]) -> Self {
        let angle = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if angle <= T::epsilon() {
            // first-order expansion keeps tiny rotations accurate
            let half = T::lit(0.5);
            return Self::new(T::one(), v[0] * half, v[1] * half, v[2] * half).normalized();
        }
        Self::from_axis_angle(v, angle)
    }

    pub fn vector(&self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(&self) -> T {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Inverse of a unit quaternion.
    pub fn inverse(&self) -> Self {
        let n2 = self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z;
        let c = self.conjugate();
        Self::new(c.w / n2, c.x / n2, c.y / n2, c.z / n2)
    }

    pub fn dot(&self, other: &Self) -> T {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.w, -self.x, -self.y, -self.z)
    }

    /// Raw Hamilton product, no renormalization.
    pub fn hamilton(&self, b: &Self) -> Self {
        let a = self;
        Self::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.x * b.w + a.w * b.x + a.y * b.z - a.z * b.y,
            a.y * b.w + a.w * b.y + a.z * b.x - a.x * b.z,
            a.z * b.w + a.w * b.z + a.x * b.y - a.y * b.x,
        )
    }

    /// Angle of the rotation taking `self` to `other`, in `[0, pi]`.
    pub fn angle_to(&self, other: &Self) -> T {
        let d = self.dot(other).abs().min(T::one());
        T::lit(2.0) * d.acos()
    }

    /// Normalized linear interpolation along the shorter arc.
    pub fn nlerp(&self, other: &Self, alpha: T) -> Self {
        let other = if self.dot(other) < T::zero() {
            other.neg()
        } else {
            *other
        };
        let beta = T::one() - alpha;
        Self::new(
            beta * self.w + alpha * other.w,
            beta * self.x + alpha * other.x,
            beta * self.y + alpha * other.y,
            beta * self.z + alpha * other.z,
        )
        .normalized()
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl<T: Real> Mul for Quaternion<T> {
    type Output = Self;

    /// Hamilton product followed by renormalization.
    fn mul(self, rhs: Self) -> Self {
        self.hamilton(&rhs).normalized()
    }
}

impl<T: Real> Default for Quaternion<T> {
    fn default() -> Self {
        Self::identity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn identity_is_neutral() {
        let q = Quaternion::new(0.5, 0.5, -0.5, 0.5);
        assert_eq!(Quaternion::identity() * q, q);
        assert_eq!(q * Quaternion::identity(), q);
    }

    #[test]
    fn inverse_composes_to_identity() {
        let q = Quaternion::about_z(0.7f64) * Quaternion::about_x(-0.2);
        let e = q * q.inverse();
        assert!((e.w - 1.0).abs() < 1e-15);
        assert!(e.vector().iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn rotation_vector_matches_axis_angle() {
        let a = Quaternion::from_rotation_vector([0.0, 0.0, FRAC_PI_2]);
        let b = Quaternion::about_z(FRAC_PI_2);
        assert!(a.angle_to(&b) < 1e-12);
        let tiny = Quaternion::from_rotation_vector([1e-20_f64, 0.0, 0.0]);
        assert!((tiny.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nlerp_takes_short_way() {
        let a = Quaternion::about_z(0.1f64);
        let b = Quaternion::about_z(0.3).neg();
        let m = a.nlerp(&b, 0.5);
        assert!(m.angle_to(&Quaternion::about_z(0.2)) < 1e-12);
    }
}
