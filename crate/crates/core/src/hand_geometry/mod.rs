//! Hand keypoints to end-effector poses.
//!
//! A keypoint frame is turned into a pose in four steps: the wrist, thumb tip
//! and index tip are deprojected into world space, yaw/pitch/roll are read off
//! the finger geometry, the angles are converted into a quaternion and rotated
//! a quarter turn about Y so the gripper points down, and the thumb-index
//! distance decides whether the gripper is closed.

mod quaternion;

pub use quaternion::Quaternion;

use serde::{Deserialize, Serialize};

use crate::demo_io::{CameraConfig, Keypoint, KeypointFrame};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const WRIST: usize = 0;
pub const THUMB_TIP: usize = 4;
pub const INDEX_TIP: usize = 8;

/// Default thumb-index distance below which the hand is considered grasping (m).
pub const DEFAULT_GRASP_THRESHOLD: f64 = 0.10;
/// Default half-width of the grasp hysteresis band (m).
pub const DEFAULT_GRASP_HYSTERESIS: f64 = 0.01;

/// Point in the camera-centred world frame; `z` is measured up from the workplane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WorldPoint<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> WorldPoint<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn to_array(&self) -> [T; 3] {
        [self.x, self.y, self.z]
    }
}

/// Yaw about Z, pitch about Y, roll about X, all in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles<T> {
    pub yaw: T,
    pub pitch: T,
    pub roll: T,
}

impl<T: Real> EulerAngles<T> {
    pub fn new(yaw: T, pitch: T, roll: T) -> Self {
        Self { yaw, pitch, roll }
    }
}

/// Hand pose at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandPose<T> {
    pub wrist: WorldPoint<T>,
    pub euler: EulerAngles<T>,
    /// Target end-effector orientation, correction already applied.
    pub orientation: Quaternion<T>,
    pub thumb_index_distance: T,
    pub grasp: bool,
}

/// Deprojects a pixel with known depth using the field-of-view camera model.
pub fn pixel_to_world<T: Real>(
    x_px: T,
    y_px: T,
    depth: T,
    cam: &CameraConfig<T>,
) -> Result<WorldPoint<T>> {
    if !(depth > T::zero()) || !depth.is_finite() {
        return Err(Error::InvalidInput(format!(
            "depth must be positive, got {depth}"
        )));
    }
    if !x_px.is_finite() || !y_px.is_finite() {
        return Err(Error::InvalidInput(
            "pixel coordinates must be finite".into(),
        ));
    }
    let half = T::lit(0.5);
    let ax = (x_px - cam.resolution_x * half) / cam.resolution_x * cam.fov_x;
    let ay = (y_px - cam.resolution_y * half) / cam.resolution_y * cam.fov_y;
    Ok(WorldPoint::new(
        depth * ax.tan(),
        depth * ay.tan(),
        cam.mount_height - depth,
    ))
}

/// Inverse of [`pixel_to_world`].
pub fn world_to_pixel<T: Real>(p: &WorldPoint<T>, cam: &CameraConfig<T>) -> Result<Keypoint<T>> {
    let depth = cam.mount_height - p.z;
    if !(depth > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "point at z = {} is not below the camera at height {}",
            p.z, cam.mount_height
        )));
    }
    let half = T::lit(0.5);
    let x_px = cam.resolution_x * half + (p.x / depth).atan() / cam.fov_x * cam.resolution_x;
    let y_px = cam.resolution_y * half + (p.y / depth).atan() / cam.fov_y * cam.resolution_y;
    Ok(Keypoint { x_px, y_px, depth })
}

/// Yaw, pitch and roll from the thumb tip, index tip and wrist.
///
/// Each angle is a two-argument arctangent, so a zero denominator yields
/// +-pi/2 instead of a division by zero.
pub fn euler_from_keypoints<T: Real>(
    thumb: &WorldPoint<T>,
    index: &WorldPoint<T>,
    wrist: &WorldPoint<T>,
) -> Result<EulerAngles<T>> {
    if thumb == index && index == wrist {
        return Err(Error::DegenerateGeometry(
            "wrist, thumb and index coincide".into(),
        ));
    }
    let yaw = (index.x - thumb.x).atan2(thumb.y - index.y);
    let pitch = (wrist.z - thumb.z).atan2(thumb.x - wrist.x);
    let roll = (index.z - thumb.z).atan2(thumb.y - index.y);
    Ok(EulerAngles::new(yaw, pitch, roll))
}

/// Hamilton product of two unit quaternions, renormalized.
pub fn quaternion_multiply<T: Real>(a: &Quaternion<T>, b: &Quaternion<T>) -> Quaternion<T> {
    *a * *b
}

/// Composes roll about X, then pitch about Y, then yaw about Z as
/// `q = qx(roll) * qy(pitch) * qz(yaw)`, matching `R = Rx Ry Rz`.
pub fn euler_to_quaternion<T: Real>(e: &EulerAngles<T>) -> Quaternion<T> {
    let half = T::lit(0.5);
    let (sr, cr) = (e.roll * half).sin_cos();
    let (sp, cp) = (e.pitch * half).sin_cos();
    let (sy, cy) = (e.yaw * half).sin_cos();
    Quaternion::new(
        cr * cp * cy - sr * sp * sy,
        sr * cp * cy + cr * sp * sy,
        cr * sp * cy - sr * cp * sy,
        cr * cp * sy + sr * sp * cy,
    )
    .normalized()
}

/// Inverse of [`euler_to_quaternion`] (pitch restricted to `[-pi/2, pi/2]`).
pub fn quaternion_to_euler<T: Real>(q: &Quaternion<T>) -> EulerAngles<T> {
    let q = q.normalized();
    let two = T::lit(2.0);
    let one = T::one();
    // Entries of R = Rx(roll) Ry(pitch) Rz(yaw).
    let r00 = one - two * (q.y * q.y + q.z * q.z);
    let r01 = two * (q.x * q.y - q.w * q.z);
    let r02 = two * (q.x * q.z + q.w * q.y);
    let r12 = two * (q.y * q.z - q.w * q.x);
    let r22 = one - two * (q.x * q.x + q.y * q.y);
    let pitch = r02.max(-one).min(one).asin();
    let yaw = (-r01).atan2(r00);
    let roll = (-r12).atan2(r22);
    EulerAngles::new(yaw, pitch, roll)
}

fn y_quarter_turn<T: Real>() -> Quaternion<T> {
    Quaternion::about_y(T::FRAC_PI_2())
}

/// Rotates the hand orientation a quarter turn about its Y axis so that a
/// flat hand maps onto a downward-pointing gripper.
pub fn apply_end_effector_correction<T: Real>(hand: &Quaternion<T>) -> Quaternion<T> {
    *hand * y_quarter_turn()
}

pub fn remove_end_effector_correction<T: Real>(target: &Quaternion<T>) -> Quaternion<T> {
    *target * y_quarter_turn().conjugate()
}

/// Thumb-index grasp detector with a hysteresis band around the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspDetector<T> {
    pub threshold: T,
    pub hysteresis: T,
}

impl<T: Real> Default for GraspDetector<T> {
    fn default() -> Self {
        Self {
            threshold: T::lit(DEFAULT_GRASP_THRESHOLD),
            hysteresis: T::lit(DEFAULT_GRASP_HYSTERESIS),
        }
    }
}

impl<T: Real> GraspDetector<T> {
    pub fn new(threshold: T, hysteresis: T) -> Result<Self> {
        if !(threshold > T::zero()) || hysteresis < T::zero() || hysteresis >= threshold {
            return Err(Error::InvalidInput(format!(
                "grasp threshold {threshold} / hysteresis {hysteresis} out of range"
            )));
        }
        Ok(Self {
            threshold,
            hysteresis,
        })
    }

    pub fn update(&self, distance: T, previous: bool) -> bool {
        if distance < self.threshold - self.hysteresis {
            true
        } else if distance > self.threshold + self.hysteresis {
            false
        } else {
            previous
        }
    }

    /// Folds the detector over a distance sequence starting from an open hand.
    pub fn run(&self, distances: &[T]) -> Vec<bool> {
        let mut state = false;
        distances
            .iter()
            .map(|&d| {
                state = self.update(d, state);
                state
            })
            .collect()
    }
}

/// Grasp state with the default hysteresis band.
pub fn grasp_from_distance<T: Real>(distance: T, threshold: T, previous: bool) -> bool {
    GraspDetector {
        threshold,
        hysteresis: T::lit(DEFAULT_GRASP_HYSTERESIS).min(threshold * T::lit(0.5)),
    }
    .update(distance, previous)
}

fn deproject_landmark<T: Real>(
    frame: &KeypointFrame<T>,
    index: usize,
    cam: &CameraConfig<T>,
) -> Result<WorldPoint<T>> {
    let k = &frame.keypoints[index];
    pixel_to_world(k.x_px, k.y_px, k.depth, cam)
}

/// Full per-frame conversion: deprojection, Euler angles, corrected
/// quaternion, thumb-index distance and grasp state.
pub fn frame_to_pose<T: Real>(
    frame: &KeypointFrame<T>,
    cam: &CameraConfig<T>,
    grasp: &GraspDetector<T>,
    previous_grasp: bool,
) -> Result<HandPose<T>> {
    let wrist = deproject_landmark(frame, WRIST, cam)?;
    let thumb = deproject_landmark(frame, THUMB_TIP, cam)?;
    let index = deproject_landmark(frame, INDEX_TIP, cam)?;
    let euler = euler_from_keypoints(&thumb, &index, &wrist)?;
    let orientation = apply_end_effector_correction(&euler_to_quaternion(&euler));
    let thumb_index_distance = thumb.distance(&index);
    Ok(HandPose {
        wrist,
        euler,
        orientation,
        thumb_index_distance,
        grasp: grasp.update(thumb_index_distance, previous_grasp),
    })
}

/// Converts every frame, threading the grasp state through the sequence.
pub fn recording_to_poses<T: Real>(
    frames: &[KeypointFrame<T>],
    cam: &CameraConfig<T>,
    grasp: &GraspDetector<T>,
) -> Result<Vec<(T, HandPose<T>)>> {
    let mut previous = false;
    let mut out = Vec::with_capacity(frames.len());
    for (i, frame) in frames.iter().enumerate() {
        let pose = frame_to_pose(frame, cam, grasp, previous).map_err(|e| match e {
            Error::DegenerateGeometry(m) => Error::DegenerateGeometry(format!("frame {i}: {m}")),
            other => other,
        })?;
        previous = pose.grasp;
        out.push((frame.t, pose));
    }
    Ok(out)
}
