//! Smoothing, uniform resampling and differentiation of pose signals.

use crate::error::{Error, Result};
use crate::hand_geometry::{
    apply_end_effector_correction, euler_to_quaternion, EulerAngles, GraspDetector, HandPose,
    Quaternion,
};
use crate::scalar::{unwrap_angles, wrap_angle, Real};

/// Window size used when none is given.
pub const DEFAULT_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    X,
    Y,
    Z,
    Yaw,
    Pitch,
    Roll,
    ThumbIndex,
}

impl Channel {
    pub const ALL: [Channel; 7] = [
        Channel::X,
        Channel::Y,
        Channel::Z,
        Channel::Yaw,
        Channel::Pitch,
        Channel::Roll,
        Channel::ThumbIndex,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::Y => "y",
            Channel::Z => "z",
            Channel::Yaw => "psi",
            Channel::Pitch => "theta",
            Channel::Roll => "phi",
            Channel::ThumbIndex => "d_ti",
        }
    }

    pub fn is_angle(&self) -> bool {
        matches!(self, Channel::Yaw | Channel::Pitch | Channel::Roll)
    }
}

/// One scalar signal sampled at a fixed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalChannel<T> {
    pub channel: Channel,
    pub samples: Vec<T>,
    pub dt: T,
}

/// Uniformly sampled pose trajectory with per-axis derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseTrajectory<T> {
    pub t: Vec<T>,
    pub position: [Vec<T>; 3],
    pub velocity: [Vec<T>; 3],
    pub acceleration: [Vec<T>; 3],
    pub euler: Vec<EulerAngles<T>>,
    pub orientation: Vec<Quaternion<T>>,
    pub d_ti: Vec<T>,
    pub grasp: Vec<bool>,
}

impl<T: Real> PoseTrajectory<T> {
    /// Builds a trajectory with zero velocity and acceleration channels.
    pub fn from_samples(
        t: Vec<T>,
        position: [Vec<T>; 3],
        euler: Vec<EulerAngles<T>>,
        orientation: Vec<Quaternion<T>>,
        d_ti: Vec<T>,
        grasp: Vec<bool>,
    ) -> Self {
        let n = t.len();
        let zeros = || [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]];
        Self {
            t,
            position,
            velocity: zeros(),
            acceleration: zeros(),
            euler,
            orientation,
            d_ti,
            grasp,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `t_last - t_first`.
    pub fn duration(&self) -> T {
        match (self.t.first(), self.t.last()) {
            (Some(&a), Some(&b)) => b - a,
            _ => T::zero(),
        }
    }

    /// Sample interval of the (uniform) grid.
    pub fn dt(&self) -> T {
        if self.len() < 2 {
            return T::zero();
        }
        self.duration() / T::from_usize_lossy(self.len() - 1)
    }

    pub fn position_at(&self, i: usize) -> [T; 3] {
        [
            self.position[0][i],
            self.position[1][i],
            self.position[2][i],
        ]
    }

    pub fn start(&self) -> [T; 3] {
        self.position_at(0)
    }

    pub fn end(&self) -> [T; 3] {
        self.position_at(self.len() - 1)
    }

    /// Checks that every channel has the same length (at least 2).
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "trajectory needs at least 2 samples, found {n}"
            )));
        }
        let lens = [
            self.position[0].len(),
            self.position[1].len(),
            self.position[2].len(),
            self.velocity[0].len(),
            self.acceleration[0].len(),
            self.euler.len(),
            self.orientation.len(),
            self.d_ti.len(),
            self.grasp.len(),
        ];
        if let Some(&bad) = lens.iter().find(|&&l| l != n) {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: bad,
            });
        }
        Ok(())
    }
}

/// Centered moving average. Even windows take `floor((k-1)/2)` samples on
/// the left and `ceil((k-1)/2)` on the right; near the ends the window
/// shrinks to the samples that exist.
pub fn mean_filter_slice<T: Real>(samples: &[T], k: usize) -> Result<Vec<T>> {
    let n = samples.len();
    if k < 1 {
        return Err(Error::InvalidInput("window size must be at least 1".into()));
    }
    if k > n {
        return Err(Error::InvalidInput(format!(
            "window size {k} exceeds signal length {n}"
        )));
    }
    let left = (k - 1) / 2;
    let right = k - 1 - left;
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + right).min(n - 1);
            let sum = samples[lo..=hi].iter().fold(T::zero(), |acc, &v| acc + v);
            sum / T::from_usize_lossy(hi - lo + 1)
        })
        .collect())
}

pub fn mean_filter<T: Real>(channel: &SignalChannel<T>, k: usize) -> Result<SignalChannel<T>> {
    Ok(SignalChannel {
        channel: channel.channel,
        samples: mean_filter_slice(&channel.samples, k)?,
        dt: channel.dt,
    })
}

fn median<T: Real>(values: &mut [T]) -> T {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) * T::lit(0.5)
    }
}

/// Median spacing of a strictly increasing time sequence.
pub fn median_interval<T: Real>(t: &[T]) -> T {
    let mut gaps: Vec<T> = t.windows(2).map(|w| w[1] - w[0]).collect();
    median(&mut gaps)
}

fn check_timestamps<T: Real>(t: &[T]) -> Result<()> {
    if t.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 frames, found {}",
            t.len()
        )));
    }
    if let Some(i) = t.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(format!(
            "timestamps not strictly increasing at frame {}",
            i + 1
        )));
    }
    Ok(())
}

/// Applies the moving average to position, Euler and thumb-index channels of
/// a pose sequence and recomputes the orientation quaternions. Angles are
/// unwrapped before filtering. Grasp flags are carried through unchanged.
pub fn smooth_poses<T: Real>(
    poses: &[(T, HandPose<T>)],
    k: usize,
) -> Result<Vec<(T, HandPose<T>)>> {
    let dt = if poses.len() >= 2 {
        median_interval(&poses.iter().map(|(t, _)| *t).collect::<Vec<_>>())
    } else {
        T::one()
    };
    let mut filtered: Vec<Vec<T>> = Vec::with_capacity(Channel::ALL.len());
    for channel in Channel::ALL {
        let raw: Vec<T> = poses
            .iter()
            .map(|(_, p)| channel_value(p, channel))
            .collect();
        let raw = if channel.is_angle() {
            unwrap_angles(&raw)
        } else {
            raw
        };
        let out = mean_filter(
            &SignalChannel {
                channel,
                samples: raw,
                dt,
            },
            k,
        )?;
        filtered.push(out.samples);
    }
    Ok(poses
        .iter()
        .enumerate()
        .map(|(i, (t, p))| {
            let euler = EulerAngles::new(
                wrap_angle(filtered[3][i]),
                wrap_angle(filtered[4][i]),
                wrap_angle(filtered[5][i]),
            );
            let mut pose = *p;
            pose.wrist.x = filtered[0][i];
            pose.wrist.y = filtered[1][i];
            pose.wrist.z = filtered[2][i];
            pose.euler = euler;
            pose.orientation = apply_end_effector_correction(&euler_to_quaternion(&euler));
            pose.thumb_index_distance = filtered[6][i];
            (*t, pose)
        })
        .collect())
}

fn channel_value<T: Real>(p: &HandPose<T>, c: Channel) -> T {
    match c {
        Channel::X => p.wrist.x,
        Channel::Y => p.wrist.y,
        Channel::Z => p.wrist.z,
        Channel::Yaw => p.euler.yaw,
        Channel::Pitch => p.euler.pitch,
        Channel::Roll => p.euler.roll,
        Channel::ThumbIndex => p.thumb_index_distance,
    }
}

fn interpolate<T: Real>(t: &[T], v: &[T], grid: &[T]) -> Vec<T> {
    let mut seg = 0;
    grid.iter()
        .map(|&tq| {
            while seg + 2 < t.len() && tq > t[seg + 1] {
                seg += 1;
            }
            let (t0, t1) = (t[seg], t[seg + 1]);
            if tq == t0 {
                return v[seg];
            }
            if tq == t1 {
                return v[seg + 1];
            }
            let alpha = (tq - t0) / (t1 - t0);
            v[seg] + (v[seg + 1] - v[seg]) * alpha
        })
        .collect()
}

/// Linear interpolation onto a uniform grid whose spacing is the median
/// frame interval, adjusted so the grid ends exactly at the last timestamp.
/// Quaternions come from the interpolated Euler angles; the grasp flag is
/// recomputed from the interpolated thumb-index distance.
pub fn resample_uniform<T: Real>(
    frames: &[(T, HandPose<T>)],
    grasp: &GraspDetector<T>,
) -> Result<PoseTrajectory<T>> {
    let t: Vec<T> = frames.iter().map(|(t, _)| *t).collect();
    check_timestamps(&t)?;
    let step = median_interval(&t);
    let t0 = t[0];
    let duration = t[t.len() - 1] - t0;
    let intervals = (duration / step).round().to_usize().unwrap_or(1).max(1);
    let grid_step = duration / T::from_usize_lossy(intervals);
    let mut grid: Vec<T> = (0..=intervals)
        .map(|i| t0 + grid_step * T::from_usize_lossy(i))
        .collect();
    grid[intervals] = t[t.len() - 1];

    let channel = |c: Channel| {
        let raw: Vec<T> = frames.iter().map(|(_, p)| channel_value(p, c)).collect();
        if c.is_angle() {
            interpolate(&t, &unwrap_angles(&raw), &grid)
                .into_iter()
                .map(wrap_angle)
                .collect()
        } else {
            interpolate(&t, &raw, &grid)
        }
    };
    let position = [
        channel(Channel::X),
        channel(Channel::Y),
        channel(Channel::Z),
    ];
    let (yaw, pitch, roll) = (
        channel(Channel::Yaw),
        channel(Channel::Pitch),
        channel(Channel::Roll),
    );
    let euler: Vec<EulerAngles<T>> = (0..grid.len())
        .map(|i| EulerAngles::new(yaw[i], pitch[i], roll[i]))
        .collect();
    let orientation = euler
        .iter()
        .map(|e| apply_end_effector_correction(&euler_to_quaternion(e)))
        .collect();
    let d_ti = channel(Channel::ThumbIndex);
    let grasp = grasp.run(&d_ti);
    Ok(PoseTrajectory::from_samples(
        grid,
        position,
        euler,
        orientation,
        d_ti,
        grasp,
    ))
}

/// First derivative on a uniform grid: central differences inside,
/// second-order one-sided differences at the ends.
pub fn first_derivative<T: Real>(x: &[T], dt: T) -> Vec<T> {
    let n = x.len();
    match n {
        0 => Vec::new(),
        1 => vec![T::zero()],
        2 => {
            let v = (x[1] - x[0]) / dt;
            vec![v, v]
        }
        _ => {
            let two = T::lit(2.0);
            let (three, four) = (T::lit(3.0), T::lit(4.0));
            let mut v = Vec::with_capacity(n);
            v.push((-three * x[0] + four * x[1] - x[2]) / (two * dt));
            for i in 1..n - 1 {
                v.push((x[i + 1] - x[i - 1]) / (two * dt));
            }
            v.push((three * x[n - 1] - four * x[n - 2] + x[n - 3]) / (two * dt));
            v
        }
    }
}

/// Second derivative on a uniform grid, same stencil orders as
/// [`first_derivative`].
pub fn second_derivative<T: Real>(x: &[T], dt: T) -> Vec<T> {
    let n = x.len();
    let dt2 = dt * dt;
    let two = T::lit(2.0);
    match n {
        0 => Vec::new(),
        1 | 2 => vec![T::zero(); n],
        3 => vec![(x[0] - two * x[1] + x[2]) / dt2; 3],
        _ => {
            let (four, five) = (T::lit(4.0), T::lit(5.0));
            let mut a = Vec::with_capacity(n);
            a.push((two * x[0] - five * x[1] + four * x[2] - x[3]) / dt2);
            for i in 1..n - 1 {
                a.push((x[i + 1] - two * x[i] + x[i - 1]) / dt2);
            }
            a.push((two * x[n - 1] - five * x[n - 2] + four * x[n - 3] - x[n - 4]) / dt2);
            a
        }
    }
}

/// Fills the velocity and acceleration channels from the positions.
pub fn differentiate<T: Real>(mut traj: PoseTrajectory<T>) -> PoseTrajectory<T> {
    let dt = traj.dt();
    if dt > T::zero() {
        for axis in 0..3 {
            traj.velocity[axis] = first_derivative(&traj.position[axis], dt);
            traj.acceleration[axis] = second_derivative(&traj.position[axis], dt);
        }
    }
    traj
}
