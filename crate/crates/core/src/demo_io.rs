//! File formats that decouple capture from processing.
//!
//! * Demonstration recordings: UTF-8, one JSON object per line,
//!   `{"t": seconds, "keypoints": [[x_px, y_px, depth_m], ... x21]}`.
//! * Camera configuration: one JSON document with keys
//!   `H`, `X`, `Y`, `theta_x_deg`, `theta_y_deg`.
//! * Trajectories: CSV with header `t,x,y,z,qw,qx,qy,qz,d_ti,grasp`.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hand_geometry::{quaternion_to_euler, remove_end_effector_correction, Quaternion};
use crate::preprocess::PoseTrajectory;
use crate::scalar::Real;

pub const KEYPOINT_COUNT: usize = 21;
pub const TRAJECTORY_HEADER: &str = "t,x,y,z,qw,qx,qy,qz,d_ti,grasp";

/// Pinhole-with-field-of-view camera looking straight down at the workplane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraConfig<T> {
    /// Mounting height above the workplane (m).
    pub mount_height: T,
    /// Image width in pixels.
    pub resolution_x: T,
    /// Image height in pixels.
    pub resolution_y: T,
    /// Horizontal field of view (rad).
    pub fov_x: T,
    /// Vertical field of view (rad).
    pub fov_y: T,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraFile {
    #[serde(rename = "H")]
    h: f64,
    #[serde(rename = "X")]
    x: f64,
    #[serde(rename = "Y")]
    y: f64,
    theta_x_deg: f64,
    theta_y_deg: f64,
}

impl<T: Real> CameraConfig<T> {
    pub fn from_degrees(
        mount_height: f64,
        resolution_x: f64,
        resolution_y: f64,
        fov_x_deg: f64,
        fov_y_deg: f64,
    ) -> Result<Self> {
        let check = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Camera(format!("{name} must be positive, got {v}")))
            }
        };
        check("H", mount_height)?;
        check("X", resolution_x)?;
        check("Y", resolution_y)?;
        check("theta_x_deg", fov_x_deg)?;
        check("theta_y_deg", fov_y_deg)?;
        for (name, v) in [("theta_x_deg", fov_x_deg), ("theta_y_deg", fov_y_deg)] {
            if v >= 180.0 {
                return Err(Error::Camera(format!(
                    "{name} must be below 180 degrees, got {v}"
                )));
            }
        }
        Ok(Self {
            mount_height: T::lit(mount_height),
            resolution_x: T::lit(resolution_x),
            resolution_y: T::lit(resolution_y),
            fov_x: T::lit(fov_x_deg.to_radians()),
            fov_y: T::lit(fov_y_deg.to_radians()),
        })
    }

    /// The configuration used throughout the bundled examples.
    pub fn realsense_default() -> Self {
        Self::from_degrees(1.0, 640.0, 480.0, 69.0, 42.0).expect("valid constants")
    }

    pub fn to_json(&self) -> String {
        let file = CameraFile {
            h: self.mount_height.to_f64_lossy(),
            x: self.resolution_x.to_f64_lossy(),
            y: self.resolution_y.to_f64_lossy(),
            theta_x_deg: self.fov_x.to_f64_lossy().to_degrees(),
            theta_y_deg: self.fov_y.to_f64_lossy().to_degrees(),
        };
        serde_json::to_string_pretty(&file).expect("plain struct serializes")
    }
}

pub fn parse_camera_config<T: Real>(text: &str) -> Result<CameraConfig<T>> {
    let file: CameraFile = serde_json::from_str(text).map_err(|e| Error::Camera(e.to_string()))?;
    CameraConfig::from_degrees(file.h, file.x, file.y, file.theta_x_deg, file.theta_y_deg)
}

pub fn load_camera_config<T: Real>(path: impl AsRef<Path>) -> Result<CameraConfig<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_camera_config(&text)
}

/// Pixel column, pixel row and depth of one landmark.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Keypoint<T> {
    pub x_px: T,
    pub y_px: T,
    pub depth: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeypointFrame<T> {
    /// Seconds since the start of the recording.
    pub t: T,
    pub keypoints: [Keypoint<T>; KEYPOINT_COUNT],
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemonstrationRecording<T> {
    pub camera: CameraConfig<T>,
    pub frames: Vec<KeypointFrame<T>>,
}

impl<T: Real> DemonstrationRecording<T> {
    pub fn duration(&self) -> T {
        match (self.frames.first(), self.frames.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => T::zero(),
        }
    }
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    t: f64,
    keypoints: Vec<[f64; 3]>,
}

fn check_frame<T: Real>(
    line: usize,
    record: FrameRecord,
    cam: &CameraConfig<T>,
) -> Result<KeypointFrame<T>> {
    if !record.t.is_finite() {
        return Err(Error::record(line, "timestamp is not finite"));
    }
    if record.keypoints.len() != KEYPOINT_COUNT {
        return Err(Error::record(
            line,
            format!(
                "expected {KEYPOINT_COUNT} keypoints, found {}",
                record.keypoints.len()
            ),
        ));
    }
    let width = cam.resolution_x.to_f64_lossy();
    let height = cam.resolution_y.to_f64_lossy();
    let mut keypoints = [Keypoint::default(); KEYPOINT_COUNT];
    for (i, [x, y, d]) in record.keypoints.into_iter().enumerate() {
        if !(0.0..=width).contains(&x) {
            return Err(Error::record(
                line,
                format!("keypoint {i}: x_px = {x} outside [0, {width}]"),
            ));
        }
        if !(0.0..=height).contains(&y) {
            return Err(Error::record(
                line,
                format!("keypoint {i}: y_px = {y} outside [0, {height}]"),
            ));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::record(
                line,
                format!("keypoint {i}: depth {d} must be positive"),
            ));
        }
        keypoints[i] = Keypoint {
            x_px: T::lit(x),
            y_px: T::lit(y),
            depth: T::lit(d),
        };
    }
    Ok(KeypointFrame {
        t: T::lit(record.t),
        keypoints,
    })
}

/// Parses and validates a recording. Blank lines are ignored; any other
/// problem rejects the whole input.
pub fn parse_recording<T: Real, R: Read>(
    reader: R,
    camera: &CameraConfig<T>,
) -> Result<DemonstrationRecording<T>> {
    let mut frames: Vec<KeypointFrame<T>> = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::record(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FrameRecord =
            serde_json::from_str(&line).map_err(|e| Error::record(line_no, e.to_string()))?;
        let frame = check_frame(line_no, record, camera)?;
        if let Some(prev) = frames.last() {
            if !(frame.t > prev.t) {
                return Err(Error::record(
                    line_no,
                    format!(
                        "timestamp {} does not increase (previous {})",
                        frame.t, prev.t
                    ),
                ));
            }
        }
        frames.push(frame);
    }
    if frames.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "a recording needs at least 2 frames, found {}",
            frames.len()
        )));
    }
    Ok(DemonstrationRecording {
        camera: *camera,
        frames,
    })
}

pub fn load_recording<T: Real>(
    path: impl AsRef<Path>,
    camera: &CameraConfig<T>,
) -> Result<DemonstrationRecording<T>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_recording(file, camera)
}

/// Serializes one frame in the recording line format (no trailing newline).
pub fn format_frame<T: Real>(frame: &KeypointFrame<T>) -> String {
    let record = FrameRecord {
        t: frame.t.to_f64_lossy(),
        keypoints: frame
            .keypoints
            .iter()
            .map(|k| {
                [
                    k.x_px.to_f64_lossy(),
                    k.y_px.to_f64_lossy(),
                    k.depth.to_f64_lossy(),
                ]
            })
            .collect(),
    };
    serde_json::to_string(&record).expect("finite numbers serialize")
}

pub fn write_recording<T: Real>(
    recording: &DemonstrationRecording<T>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for frame in &recording.frames {
        out.push_str(&format_frame(frame));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Renders a trajectory as CSV text.
pub fn format_trajectory<T: Real>(traj: &PoseTrajectory<T>) -> Result<String> {
    if traj.is_empty() {
        return Err(Error::InvalidInput(
            "cannot write an empty trajectory".into(),
        ));
    }
    let mut out = String::with_capacity(traj.len() * 160);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for i in 0..traj.len() {
        let q = traj.orientation[i];
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            traj.t[i],
            traj.position[0][i],
            traj.position[1][i],
            traj.position[2][i],
            q.w,
            q.x,
            q.y,
            q.z,
            traj.d_ti[i],
            u8::from(traj.grasp[i]),
        ));
    }
    Ok(out)
}

pub fn write_trajectory<T: Real>(traj: &PoseTrajectory<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = format_trajectory(traj)?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Reads a trajectory CSV. Euler angles are recovered from the stored
/// (corrected) quaternion; velocity and acceleration are left at zero.
pub fn parse_trajectory<T: Real, R: Read>(reader: R) -> Result<PoseTrajectory<T>> {
    let mut lines = BufReader::new(reader).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == TRAJECTORY_HEADER => {}
        Some(Ok(h)) => {
            return Err(Error::record(1, format!("unexpected header {h:?}")));
        }
        Some(Err(e)) => return Err(Error::record(1, e.to_string())),
        None => return Err(Error::record(1, "empty file")),
    }
    let mut t = Vec::new();
    let mut pos: [Vec<T>; 3] = Default::default();
    let mut orientation = Vec::new();
    let mut d_ti = Vec::new();
    let mut grasp = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| Error::record(line_no, e.to_string()))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::record(
                line_no,
                format!("expected 10 columns, found {}", fields.len()),
            ));
        }
        let mut nums = [0.0f64; 9];
        for (k, f) in fields[..9].iter().enumerate() {
            nums[k] = f.trim().parse().map_err(|_| {
                Error::record(line_no, format!("column {}: bad number {f:?}", k + 1))
            })?;
            if !nums[k].is_finite() {
                return Err(Error::record(
                    line_no,
                    format!("column {}: not finite", k + 1),
                ));
            }
        }
        let g = match fields[9].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::record(
                    line_no,
                    format!("grasp must be 0 or 1, got {other:?}"),
                ))
            }
        };
        t.push(T::lit(nums[0]));
        for a in 0..3 {
            pos[a].push(T::lit(nums[1 + a]));
        }
        orientation.push(
            Quaternion::new(
                T::lit(nums[4]),
                T::lit(nums[5]),
                T::lit(nums[6]),
                T::lit(nums[7]),
            )
            .normalized(),
        );
        d_ti.push(T::lit(nums[8]));
        grasp.push(g);
    }
    if t.is_empty() {
        return Err(Error::InvalidInput("trajectory has no samples".into()));
    }
    let euler = orientation
        .iter()
        .map(|q| quaternion_to_euler(&remove_end_effector_correction(q)))
        .collect();
    Ok(PoseTrajectory::from_samples(
        t,
        pos,
        euler,
        orientation,
        d_ti,
        grasp,
    ))
}

pub fn load_trajectory<T: Real>(path: impl AsRef<Path>) -> Result<PoseTrajectory<T>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(file)
}
