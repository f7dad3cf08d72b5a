//! Learning pick-and-place motions from recorded hand demonstrations.
//!
//! The crate turns a stream of 21-landmark hand keypoints (pixel
//! coordinates plus depth) into an end-effector pose trajectory, smooths it,
//! learns the wrist path with Dynamic Movement Primitives, re-targets it to
//! new start and goal points, and checks the result by driving a simulated
//! Cartesian impedance-controlled plant along it.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod demo_io;
pub mod dmp;
pub mod error;
pub mod hand_geometry;
pub mod preprocess;
pub mod robot_sim;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CameraConfig64 = demo_io::CameraConfig<f64>;
pub type CameraConfig32 = demo_io::CameraConfig<f32>;
pub type Recording64 = demo_io::DemonstrationRecording<f64>;
pub type Recording32 = demo_io::DemonstrationRecording<f32>;
pub type Quaternion64 = hand_geometry::Quaternion<f64>;
pub type Quaternion32 = hand_geometry::Quaternion<f32>;
pub type HandPose64 = hand_geometry::HandPose<f64>;
pub type HandPose32 = hand_geometry::HandPose<f32>;
pub type PoseTrajectory64 = preprocess::PoseTrajectory<f64>;
pub type PoseTrajectory32 = preprocess::PoseTrajectory<f32>;
pub type DmpModel64 = dmp::DmpModel<f64>;
pub type DmpModel32 = dmp::DmpModel<f32>;
pub type ImpedanceGains64 = robot_sim::ImpedanceGains<f64>;
