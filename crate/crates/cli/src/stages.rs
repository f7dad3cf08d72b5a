//! The pipeline stages, shared by the single-stage subcommands and
//! `pipeline`.

use std::path::Path;

use anyhow::{bail, Context, Result};
use lfd_core::demo_io::{load_camera_config, load_recording, CameraConfig, DemonstrationRecording};
use lfd_core::dmp::{self, DmpConfig, DmpModel};
use lfd_core::hand_geometry::{recording_to_poses, GraspDetector};
use lfd_core::preprocess::{differentiate, resample_uniform, smooth_poses, PoseTrajectory};
use lfd_core::robot_sim::{simulate_tracking, ImpedanceGains, SimulationLog};
use nalgebra::Matrix6;

pub const AXES: [&str; 3] = ["x", "y", "z"];

/// A point where each coordinate may be left unset.
pub type PartialPoint = [Option<f64>; 3];

pub fn load_inputs(
    demo: &Path,
    camera: &Path,
) -> Result<(CameraConfig<f64>, DemonstrationRecording<f64>)> {
    let cam = load_camera_config(camera)
        .with_context(|| format!("reading camera config {}", camera.display()))?;
    let rec = load_recording(demo, &cam)
        .with_context(|| format!("reading recording {}", demo.display()))?;
    Ok((cam, rec))
}

fn poses_to_trajectory(poses: &[(f64, lfd_core::HandPose64)]) -> PoseTrajectory<f64> {
    PoseTrajectory::from_samples(
        poses.iter().map(|(t, _)| *t).collect(),
        std::array::from_fn(|a| poses.iter().map(|(_, p)| p.wrist.to_array()[a]).collect()),
        poses.iter().map(|(_, p)| p.euler).collect(),
        poses.iter().map(|(_, p)| p.orientation).collect(),
        poses.iter().map(|(_, p)| p.thumb_index_distance).collect(),
        poses.iter().map(|(_, p)| p.grasp).collect(),
    )
}

/// Per-frame conversion at the recording's own timestamps.
pub fn convert(
    rec: &DemonstrationRecording<f64>,
    cam: &CameraConfig<f64>,
) -> Result<PoseTrajectory<f64>> {
    let poses = recording_to_poses(&rec.frames, cam, &GraspDetector::default())?;
    Ok(poses_to_trajectory(&poses))
}

/// Mean filter over every channel, then resampling onto a uniform grid.
pub fn smooth(
    rec: &DemonstrationRecording<f64>,
    cam: &CameraConfig<f64>,
    window: usize,
) -> Result<PoseTrajectory<f64>> {
    let grasp = GraspDetector::default();
    let poses = recording_to_poses(&rec.frames, cam, &grasp)?;
    let smoothed = smooth_poses(&poses, window)?;
    Ok(resample_uniform(&smoothed, &grasp)?)
}

fn check_uniform(traj: &PoseTrajectory<f64>) -> Result<()> {
    let dt = traj.dt();
    let worst = traj
        .t
        .windows(2)
        .map(|w| ((w[1] - w[0]) - dt).abs())
        .fold(0.0, f64::max);
    if worst > 1e-6 * dt {
        bail!(
            "poses are not uniformly sampled (step deviates by {worst:.3e} s); \
             fit the output of `smooth` instead"
        );
    }
    Ok(())
}

pub struct AxisFit {
    pub rmse: f64,
    pub range: f64,
}

impl AxisFit {
    pub fn percent(&self) -> f64 {
        if self.range > 0.0 {
            100.0 * self.rmse / self.range
        } else {
            0.0
        }
    }
}

/// Fits a model and measures how well it reproduces the demonstration with
/// the demonstrated endpoints.
pub fn fit(
    traj: &PoseTrajectory<f64>,
    config: &DmpConfig<f64>,
) -> Result<(DmpModel<f64>, [AxisFit; 3])> {
    check_uniform(traj)?;
    let demo = differentiate(traj.clone());
    let model = dmp::fit(&demo, config).map_err(|e| match e {
        lfd_core::Error::DegenerateSpan { axis, span, limit } => anyhow::anyhow!(
            "degenerate span on axis {}: |g - x0| = {span:.3e} below {limit:.0e}; \
             the original variant cannot scale its forcing term, use --variant modified",
            AXES[axis]
        ),
        other => other.into(),
    })?;
    let out = dmp::rollout(&model, demo.start(), demo.end(), demo.len(), model.dt)?;
    let rmse = dmp::position_rmse(&out.position, &demo.position);
    let report = std::array::from_fn(|a| {
        let (lo, hi) = demo.position[a]
            .iter()
            .fold((f64::MAX, f64::MIN), |(l, h), &x| (l.min(x), h.max(x)));
        AxisFit {
            rmse: rmse[a],
            range: hi - lo,
        }
    });
    Ok((model, report))
}

pub fn resolve(point: &PartialPoint, fallback: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|a| point[a].unwrap_or(fallback[a]))
}

/// Rolls the model out between new endpoints for `horizon` times the
/// demonstration length and attaches the demonstrated orientation, aperture
/// and grasp sequence.
pub fn rollout(
    model: &DmpModel<f64>,
    demo: &PoseTrajectory<f64>,
    start: [f64; 3],
    goal: [f64; 3],
    horizon: f64,
) -> Result<PoseTrajectory<f64>> {
    if !(horizon >= 1.0 && horizon.is_finite()) {
        bail!("horizon must be at least 1 (multiples of the demonstration length), got {horizon}");
    }
    let steps = model.steps_for_horizon(horizon);
    let out = dmp::rollout(model, start, goal, steps, model.dt)?;
    Ok(dmp::replay_attach(&out, demo)?)
}

pub fn gains(stiffness: f64, damping: f64) -> Result<ImpedanceGains<f64>> {
    ImpedanceGains::uniform(stiffness, damping).context("invalid impedance gains")
}

pub fn simulate(
    traj: &PoseTrajectory<f64>,
    gains: &ImpedanceGains<f64>,
    substeps: usize,
) -> Result<SimulationLog<f64>> {
    if substeps == 0 {
        bail!("substeps must be at least 1");
    }
    let dt = traj.dt() / substeps as f64;
    Ok(simulate_tracking(traj, gains, &Matrix6::identity(), dt)?)
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
