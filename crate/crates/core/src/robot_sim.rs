//! Joint/Cartesian dynamics transforms and a Cartesian impedance-controlled
//! plant used to check that learned trajectories can be tracked.
//!
//! The transforms need a square, invertible Jacobian. Redundant arms would
//! need a generalized inverse and are not handled here.

use nalgebra::{DMatrix, DVector, Matrix6, RealField, Vector6};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hand_geometry::Quaternion;
use crate::preprocess::PoseTrajectory;
use crate::scalar::Real;

pub const DEFAULT_IMPEDANCE_STIFFNESS: f64 = 400.0;
pub const DEFAULT_IMPEDANCE_DAMPING: f64 = 40.0;

/// Rigid-body model in joint coordinates, `M(q) qdd + C(q, qd) qd + G(q) = tau`.
///
/// Implementations must be re-entrant: every method is a pure function of
/// its arguments.
pub trait JointSpaceModel<T: RealField + Copy> {
    fn dof(&self) -> usize;
    fn mass(&self, q: &DVector<T>) -> DMatrix<T>;
    fn coriolis(&self, q: &DVector<T>, qd: &DVector<T>) -> DMatrix<T>;
    fn gravity(&self, q: &DVector<T>) -> DVector<T>;
    fn jacobian(&self, q: &DVector<T>) -> DMatrix<T>;
}

/// Dynamics expressed in task space at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianModel<T: RealField + Copy> {
    pub mass: DMatrix<T>,
    pub coriolis: DMatrix<T>,
    pub gravity: DVector<T>,
}

/// Time derivative of the Jacobian along `qd`, by a central difference of
/// `J(q +- h qd)`.
pub fn jacobian_derivative<T: RealField + Copy, M: JointSpaceModel<T>>(
    model: &M,
    q: &DVector<T>,
    qd: &DVector<T>,
) -> DMatrix<T> {
    let h: T = nalgebra::convert(1e-6);
    let forward = model.jacobian(&(q + qd * h));
    let backward = model.jacobian(&(q - qd * h));
    (forward - backward) / (h + h)
}

fn inverse_jacobian<T: RealField + Copy>(j: &DMatrix<T>) -> Result<DMatrix<T>> {
    if !j.is_square() {
        return Err(Error::InvalidInput(format!(
            "Jacobian must be square, got {}x{}",
            j.nrows(),
            j.ncols()
        )));
    }
    let sv = j.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    let condition = if min > T::zero() {
        max / min
    } else {
        nalgebra::convert(f64::INFINITY)
    };
    // Accept up to ~1e12 for f64, proportionally less for f32.
    let limit = T::one() / (T::default_epsilon() * nalgebra::convert(1e4));
    if !(condition < limit) {
        let condition: f64 = nalgebra::try_convert(condition).unwrap_or(f64::INFINITY);
        return Err(Error::SingularJacobian { condition });
    }
    j.clone().try_inverse().ok_or(Error::SingularJacobian {
        condition: f64::INFINITY,
    })
}

/// Task-space inertia, Coriolis matrix and gravity for a square Jacobian:
/// `Mx = J^-T M J^-1`, `Cx = J^-T (C - M J^-1 Jd) J^-1`, `Gx = J^-T G`.
pub fn to_cartesian<T: RealField + Copy, M: JointSpaceModel<T>>(
    model: &M,
    q: &DVector<T>,
    qd: &DVector<T>,
) -> Result<CartesianModel<T>> {
    check_dims(model, q, qd)?;
    let j = model.jacobian(q);
    let j_inv = inverse_jacobian(&j)?;
    let j_inv_t = j_inv.transpose();
    let m = model.mass(q);
    let c = model.coriolis(q, qd);
    let jd = jacobian_derivative(model, q, qd);
    Ok(CartesianModel {
        mass: &j_inv_t * &m * &j_inv,
        coriolis: &j_inv_t * (c - &m * &j_inv * jd) * &j_inv,
        gravity: &j_inv_t * model.gravity(q),
    })
}

fn check_dims<T: RealField + Copy, M: JointSpaceModel<T>>(
    model: &M,
    q: &DVector<T>,
    qd: &DVector<T>,
) -> Result<()> {
    let n = model.dof();
    for v in [q, qd] {
        if v.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: v.len(),
            });
        }
    }
    Ok(())
}

/// Task-space velocity and acceleration, `xd = J qd`, `xdd = J qdd + Jd qd`.
pub fn twist_from_joint<T: RealField + Copy, M: JointSpaceModel<T>>(
    model: &M,
    q: &DVector<T>,
    qd: &DVector<T>,
    qdd: &DVector<T>,
) -> Result<(DVector<T>, DVector<T>)> {
    check_dims(model, q, qd)?;
    check_dims(model, q, qdd)?;
    let j = model.jacobian(q);
    let jd = jacobian_derivative(model, q, qd);
    let xd = &j * qd;
    let xdd = &j * qdd + jd * qd;
    Ok((xd, xdd))
}

/// Joint torques realizing a task-space wrench with Coriolis and gravity
/// compensation, `tau = J^T wrench + C qd + G`.
pub fn joint_torque<T: RealField + Copy, M: JointSpaceModel<T>>(
    model: &M,
    q: &DVector<T>,
    qd: &DVector<T>,
    wrench: &DVector<T>,
) -> Result<DVector<T>> {
    check_dims(model, q, qd)?;
    let j = model.jacobian(q);
    if wrench.len() != j.nrows() {
        return Err(Error::LengthMismatch {
            expected: j.nrows(),
            actual: wrench.len(),
        });
    }
    Ok(j.transpose() * wrench + model.coriolis(q, qd) * qd + model.gravity(q))
}

/// Planar arm with two revolute joints and point masses at the link tips.
/// Task space is the tip position `(x, y)`, so the Jacobian is 2x2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarTwoLink<T> {
    pub lengths: [T; 2],
    pub masses: [T; 2],
    pub gravity: T,
}

impl<T: RealField + Copy> PlanarTwoLink<T> {
    pub fn tip(&self, q: &DVector<T>) -> [T; 2] {
        let [l1, l2] = self.lengths;
        let q12 = q[0] + q[1];
        [
            l1 * q[0].cos() + l2 * q12.cos(),
            l1 * q[0].sin() + l2 * q12.sin(),
        ]
    }
}

impl<T: RealField + Copy> JointSpaceModel<T> for PlanarTwoLink<T> {
    fn dof(&self) -> usize {
        2
    }

    fn mass(&self, q: &DVector<T>) -> DMatrix<T> {
        let [l1, l2] = self.lengths;
        let [m1, m2] = self.masses;
        let c2 = q[1].cos();
        let two: T = nalgebra::convert(2.0);
        let m11 = (m1 + m2) * l1 * l1 + m2 * l2 * l2 + two * m2 * l1 * l2 * c2;
        let m12 = m2 * l2 * l2 + m2 * l1 * l2 * c2;
        let m22 = m2 * l2 * l2;
        DMatrix::from_row_slice(2, 2, &[m11, m12, m12, m22])
    }

    fn coriolis(&self, q: &DVector<T>, qd: &DVector<T>) -> DMatrix<T> {
        let [l1, l2] = self.lengths;
        let m2 = self.masses[1];
        let h = m2 * l1 * l2 * q[1].sin();
        DMatrix::from_row_slice(
            2,
            2,
            &[-h * qd[1], -h * (qd[0] + qd[1]), h * qd[0], T::zero()],
        )
    }

    fn gravity(&self, q: &DVector<T>) -> DVector<T> {
        let [l1, l2] = self.lengths;
        let [m1, m2] = self.masses;
        let g = self.gravity;
        let q12 = q[0] + q[1];
        DVector::from_vec(vec![
            (m1 + m2) * g * l1 * q[0].cos() + m2 * g * l2 * q12.cos(),
            m2 * g * l2 * q12.cos(),
        ])
    }

    fn jacobian(&self, q: &DVector<T>) -> DMatrix<T> {
        let [l1, l2] = self.lengths;
        let q12 = q[0] + q[1];
        DMatrix::from_row_slice(
            2,
            2,
            &[
                -l1 * q[0].sin() - l2 * q12.sin(),
                -l2 * q12.sin(),
                l1 * q[0].cos() + l2 * q12.cos(),
                l2 * q12.cos(),
            ],
        )
    }
}

/// End-effector position and orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T> {
    pub position: [T; 3],
    pub orientation: Quaternion<T>,
}

/// Simulated end-effector state; `twist` is linear velocity then angular
/// velocity, both in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState<T> {
    pub pose: Pose<T>,
    pub twist: [T; 6],
    pub t: T,
}

impl<T: Real> PlantState<T> {
    pub fn at_rest(pose: Pose<T>) -> Self {
        Self {
            pose,
            twist: [T::zero(); 6],
            t: T::zero(),
        }
    }
}

/// Diagonal stiffness and damping of the virtual spring-damper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceGains<T> {
    pub stiffness: [T; 6],
    pub damping: [T; 6],
}

impl<T: Real> ImpedanceGains<T> {
    pub fn new(stiffness: [T; 6], damping: [T; 6]) -> Result<Self> {
        for (name, values) in [("stiffness", &stiffness), ("damping", &damping)] {
            if let Some(i) = values
                .iter()
                .position(|v| !(*v > T::zero() && v.is_finite()))
            {
                return Err(Error::InvalidInput(format!(
                    "impedance {name}[{i}] must be positive, got {}",
                    values[i]
                )));
            }
        }
        Ok(Self { stiffness, damping })
    }

    pub fn uniform(stiffness: T, damping: T) -> Result<Self> {
        Self::new([stiffness; 6], [damping; 6])
    }
}

impl<T: Real> Default for ImpedanceGains<T> {
    fn default() -> Self {
        Self::uniform(
            T::lit(DEFAULT_IMPEDANCE_STIFFNESS),
            T::lit(DEFAULT_IMPEDANCE_DAMPING),
        )
        .expect("positive defaults")
    }
}

/// Vector part of `q * target^-1`, sign-flipped to the shorter rotation.
pub fn orientation_error<T: Real>(q: &Quaternion<T>, target: &Quaternion<T>) -> [T; 3] {
    let e = q.hamilton(&target.inverse());
    let e = if e.w < T::zero() { e.neg() } else { e };
    e.vector()
}

/// Wrench `-K e - D xd`, `e` stacking the position error and the
/// orientation error.
pub fn impedance_wrench<T: Real>(
    state: &PlantState<T>,
    target: &Pose<T>,
    gains: &ImpedanceGains<T>,
) -> [T; 6] {
    let rot = orientation_error(&state.pose.orientation, &target.orientation);
    let mut error = [T::zero(); 6];
    for i in 0..3 {
        error[i] = state.pose.position[i] - target.position[i];
        error[i + 3] = rot[i];
    }
    std::array::from_fn(|i| -gains.stiffness[i] * error[i] - gains.damping[i] * state.twist[i])
}

/// Kinetic plus spring energy of the plant about a fixed target. The
/// rotational term is exact when the three rotational stiffnesses are equal.
pub fn plant_energy<T: Real + RealField>(
    state: &PlantState<T>,
    target: &Pose<T>,
    gains: &ImpedanceGains<T>,
    inertia: &Matrix6<T>,
) -> T {
    let v = Vector6::from_column_slice(&state.twist);
    let half = T::lit(0.5);
    let kinetic = (v.transpose() * inertia * v)[(0, 0)] * half;
    let mut potential = T::zero();
    for i in 0..3 {
        let e = state.pose.position[i] - target.position[i];
        potential += half * gains.stiffness[i] * e * e;
    }
    let e = state
        .pose
        .orientation
        .hamilton(&target.orientation.inverse());
    let w = Float::min(Float::abs(e.w), T::one());
    let k_rot = (gains.stiffness[3] + gains.stiffness[4] + gains.stiffness[5]) / T::lit(3.0);
    potential += T::lit(2.0) * k_rot * (T::one() - w);
    kinetic + potential
}

/// One logged simulation sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSample<T> {
    pub t: T,
    pub pose: Pose<T>,
    /// Position error `x - x_target`.
    pub error: [T; 3],
    pub orientation_error: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationLog<T> {
    pub samples: Vec<SimulationSample<T>>,
    /// Root mean square of the position error norm (m).
    pub position_rmse: T,
    /// Root mean square of the orientation error angle (rad).
    pub orientation_rmse: T,
    pub max_position_error: T,
}

pub const SIMULATION_HEADER: &str = "t,x,y,z,qw,qx,qy,qz,ex,ey,ez";

impl<T: Real> SimulationLog<T> {
    /// CSV rows followed by a `#` summary line.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 160);
        out.push_str(SIMULATION_HEADER);
        out.push('\n');
        for s in &self.samples {
            let p = s.pose.position;
            let q = s.pose.orientation;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                s.t, p[0], p[1], p[2], q.w, q.x, q.y, q.z, s.error[0], s.error[1], s.error[2]
            ));
        }
        out.push_str(&format!(
            "# rmse_position={},rmse_orientation={},max_position_error={}\n",
            self.position_rmse, self.orientation_rmse, self.max_position_error
        ));
        out
    }
}

fn target_between<T: Real>(traj: &PoseTrajectory<T>, i: usize, alpha: T) -> Pose<T> {
    let j = (i + 1).min(traj.len() - 1);
    let a = traj.position_at(i);
    let b = traj.position_at(j);
    Pose {
        position: std::array::from_fn(|k| a[k] + (b[k] - a[k]) * alpha),
        orientation: traj.orientation[i].nlerp(&traj.orientation[j], alpha),
    }
}

/// Single semi-implicit Euler step of `inertia * xdd = wrench`.
pub fn step_plant<T: Real + RealField>(
    state: &PlantState<T>,
    target: &Pose<T>,
    gains: &ImpedanceGains<T>,
    inertia_inv: &Matrix6<T>,
    dt: T,
) -> PlantState<T> {
    let wrench = Vector6::from_column_slice(&impedance_wrench(state, target, gains));
    let accel = inertia_inv * wrench;
    let twist: [T; 6] = std::array::from_fn(|i| state.twist[i] + accel[i] * dt);
    let position = std::array::from_fn(|i| state.pose.position[i] + twist[i] * dt);
    let spin = Quaternion::from_rotation_vector([twist[3] * dt, twist[4] * dt, twist[5] * dt]);
    PlantState {
        pose: Pose {
            position,
            orientation: spin.hamilton(&state.pose.orientation).normalized(),
        },
        twist,
        t: state.t + dt,
    }
}

/// Drives a constant-inertia plant (gravity pre-compensated) along `traj`
/// with the impedance law. The plant starts at rest on the first pose; the
/// target is interpolated between trajectory samples when `dt` is finer
/// than the trajectory grid. One log sample is written per trajectory
/// sample.
pub fn simulate_tracking<T: Real + RealField>(
    traj: &PoseTrajectory<T>,
    gains: &ImpedanceGains<T>,
    inertia: &Matrix6<T>,
    dt: T,
) -> Result<SimulationLog<T>> {
    traj.validate()?;
    let traj_dt = traj.dt();
    if !(dt > T::zero()) || dt > traj_dt * T::lit(1.0 + 1e-9) {
        return Err(Error::InvalidInput(format!(
            "simulation step {dt} must be positive and not exceed the trajectory step {traj_dt}"
        )));
    }
    let inertia_inv = inertia
        .cholesky()
        .ok_or_else(|| {
            Error::InvalidInput("plant inertia must be symmetric positive definite".into())
        })?
        .inverse();
    let substeps = Float::max(Float::round(traj_dt / dt), T::one())
        .to_usize()
        .unwrap_or(1);
    let h = traj_dt / T::from_usize_lossy(substeps);

    let first = Pose {
        position: traj.position_at(0),
        orientation: traj.orientation[0],
    };
    let mut state = PlantState::at_rest(first);
    state.t = traj.t[0];
    let mut samples = Vec::with_capacity(traj.len());
    let mut sq_pos = T::zero();
    let mut sq_rot = T::zero();
    let mut max_pos = T::zero();
    for i in 0..traj.len() {
        let target = Pose {
            position: traj.position_at(i),
            orientation: traj.orientation[i],
        };
        let error: [T; 3] = std::array::from_fn(|k| state.pose.position[k] - target.position[k]);
        let e2 = error[0] * error[0] + error[1] * error[1] + error[2] * error[2];
        let rot = state.pose.orientation.angle_to(&target.orientation);
        sq_pos += e2;
        sq_rot += rot * rot;
        max_pos = Float::max(max_pos, Float::sqrt(e2));
        samples.push(SimulationSample {
            t: traj.t[i],
            pose: state.pose,
            error,
            orientation_error: rot,
        });
        if i + 1 == traj.len() {
            break;
        }
        for sub in 0..substeps {
            let alpha = T::from_usize_lossy(sub) / T::from_usize_lossy(substeps);
            let target = target_between(traj, i, alpha);
            state = step_plant(&state, &target, gains, &inertia_inv, h);
            let finite = state.twist.iter().all(|v| Float::is_finite(*v))
                && state.pose.position.iter().all(|v| Float::is_finite(*v))
                && state.pose.orientation.is_finite();
            if !finite {
                return Err(Error::Diverged {
                    step: i * substeps + sub,
                });
            }
        }
        state.t = traj.t[i + 1];
    }
    let n = T::from_usize_lossy(samples.len());
    Ok(SimulationLog {
        samples,
        position_rmse: Float::sqrt(sq_pos / n),
        orientation_rmse: Float::sqrt(sq_rot / n),
        max_position_error: max_pos,
    })
}
