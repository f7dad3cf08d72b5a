mod common;

use common::*;
use lfd_core::hand_geometry::{EulerAngles, Quaternion};
use lfd_core::preprocess::PoseTrajectory;
use lfd_core::robot_sim::{
    impedance_wrench, orientation_error, plant_energy, simulate_tracking, step_plant, to_cartesian,
    twist_from_joint, ImpedanceGains, JointSpaceModel, PlanarTwoLink, PlantState, Pose,
};
use nalgebra::{DMatrix, DVector, Matrix6};
use proptest::prelude::*;
use rand::Rng;

/// Six-joint model with configuration-dependent random inertia, Jacobian
/// and gravity.
struct RandomArm {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    j0: DMatrix<f64>,
    j1: DMatrix<f64>,
    c: DMatrix<f64>,
    g: DVector<f64>,
}

impl RandomArm {
    fn new(rng: &mut impl Rng) -> Self {
        let mut m = |scale: f64| DMatrix::from_fn(6, 6, |_, _| rng.random_range(-scale..scale));
        let a = m(1.0);
        let b = m(0.5);
        let j0 = DMatrix::<f64>::identity(6, 6) * 2.0 + m(0.4);
        let j1 = m(0.3);
        let c = m(1.0);
        let g = DVector::from_fn(6, |_, _| rng.random_range(-10.0..10.0));
        Self { a, b, j0, j1, c, g }
    }
}

impl JointSpaceModel<f64> for RandomArm {
    fn dof(&self) -> usize {
        6
    }
    fn mass(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let l = DMatrix::from_fn(6, 6, |i, j| self.a[(i, j)] + self.b[(i, j)] * q[j].sin());
        l.transpose() * l + DMatrix::identity(6, 6)
    }
    fn coriolis(&self, q: &DVector<f64>, qd: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(6, 6, |i, j| self.c[(i, j)] * q[i].cos() * qd[j])
    }
    fn gravity(&self, q: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(6, |i, _| self.g[i] * q[i].cos())
    }
    fn jacobian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(6, 6, |i, j| self.j0[(i, j)] + self.j1[(i, j)] * q[j].sin())
    }
}

#[test]
fn energy_and_gravity_power_invariant_on_random_systems() {
    let mut rng = rng(41);
    for _ in 0..100 {
        let arm = RandomArm::new(&mut rng);
        let q = DVector::from_fn(6, |_, _| rng.random_range(-3.0..3.0));
        let qd = DVector::from_fn(6, |_, _| rng.random_range(-2.0..2.0));
        let cart = to_cartesian(&arm, &q, &qd).unwrap();
        let xd = arm.jacobian(&q) * &qd;
        let joint_ke = (qd.transpose() * arm.mass(&q) * &qd)[(0, 0)];
        let task_ke = (xd.transpose() * &cart.mass * &xd)[(0, 0)];
        assert!((joint_ke - task_ke).abs() <= 1e-9 * joint_ke.abs().max(1.0));
        let joint_power = arm.gravity(&q).dot(&qd);
        let task_power = cart.gravity.dot(&xd);
        assert!((joint_power - task_power).abs() <= 1e-9 * joint_power.abs().max(1.0));
        let sym = (&cart.mass - cart.mass.transpose()).norm();
        assert!(sym <= 1e-9 * cart.mass.norm());
        assert!(cart.mass.clone().cholesky().is_some());
    }
}

#[test]
fn twist_matches_finite_differences_of_the_tip() {
    let arm = PlanarTwoLink {
        lengths: [0.4, 0.3],
        masses: [2.0, 1.5],
        gravity: 9.81,
    };
    let mut rng = rng(42);
    for _ in 0..50 {
        let q0 = DVector::from_fn(2, |_, _| rng.random_range(-2.5..2.5));
        if (q0[1] as f64).sin().abs() < 0.2 {
            continue;
        }
        let qd = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        let qdd = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        let path = |t: f64| arm.tip(&(&q0 + &qd * t + &qdd * (0.5 * t * t)));
        let h = 1e-4;
        let (p_m, p_0, p_p) = (path(-h), path(0.0), path(h));
        let (xd, xdd) = twist_from_joint(&arm, &q0, &qd, &qdd).unwrap();
        for k in 0..2 {
            let v = (p_p[k] - p_m[k]) / (2.0 * h);
            let a = (p_p[k] - 2.0 * p_0[k] + p_m[k]) / (h * h);
            assert!((xd[k] - v).abs() <= 1e-5);
            assert!((xdd[k] - a).abs() <= 1e-5, "{} vs {a}", xdd[k]);
        }
    }
}

fn step_trajectory(from: [f64; 3], to: [f64; 3], n: usize, dt: f64) -> PoseTrajectory<f64> {
    let position = std::array::from_fn(|a| {
        (0..n)
            .map(|i| if i == 0 { from[a] } else { to[a] })
            .collect()
    });
    PoseTrajectory::from_samples(
        (0..n).map(|i| i as f64 * dt).collect(),
        position,
        vec![EulerAngles::default(); n],
        vec![Quaternion::identity(); n],
        vec![0.2; n],
        vec![false; n],
    )
}

#[test]
fn step_response_follows_critically_damped_solution() {
    let gains = ImpedanceGains::default();
    let target = Pose {
        position: [0.0; 3],
        orientation: Quaternion::identity(),
    };
    let e0 = 0.05;
    let mut state = PlantState::at_rest(Pose {
        position: [e0, 0.0, 0.0],
        orientation: Quaternion::identity(),
    });
    let dt = 1e-5;
    let inv = Matrix6::identity();
    for i in 1..=50_000 {
        state = step_plant(&state, &target, &gains, &inv, dt);
        if i % 5000 == 0 {
            let want = critically_damped(e0, 20.0, i as f64 * dt);
            assert!(
                (state.pose.position[0] - want).abs() <= 1e-3 * e0,
                "t {}",
                i as f64 * dt
            );
        }
    }
}

#[test]
fn constant_target_settles_without_overshoot() {
    let traj = step_trajectory([0.1, 0.2, 0.3], [0.15, 0.2, 0.3], 1001, 0.002);
    let log = simulate_tracking(
        &traj,
        &ImpedanceGains::default(),
        &Matrix6::identity(),
        0.0005,
    )
    .unwrap();
    let overshoot = log
        .samples
        .iter()
        .map(|s| s.pose.position[0] - 0.15)
        .fold(0.0f64, f64::max);
    assert!(overshoot <= 0.05 * 0.05, "overshoot {overshoot}");
    let last = log.samples.last().unwrap();
    assert!(last.error[0].abs() < 1e-6);
}

#[test]
fn energy_decreases_towards_constant_target() {
    let gains = ImpedanceGains::default();
    let target = Pose {
        position: [0.2, -0.1, 0.4],
        orientation: Quaternion::about_z(0.3),
    };
    let mut state = PlantState {
        pose: Pose {
            position: [0.25, -0.05, 0.35],
            orientation: Quaternion::from_axis_angle([1.0, 1.0, 0.0], 0.8),
        },
        twist: [0.1, -0.2, 0.05, 0.3, 0.0, -0.4],
        t: 0.0,
    };
    let inertia = Matrix6::from_diagonal(&nalgebra::Vector6::new(2.0, 2.0, 2.0, 0.1, 0.1, 0.1));
    let inv = inertia.try_inverse().unwrap();
    let mut energy = plant_energy(&state, &target, &gains, &inertia);
    for _ in 0..20_000 {
        state = step_plant(&state, &target, &gains, &inv, 1e-4);
        let next = plant_energy(&state, &target, &gains, &inertia);
        assert!(next <= energy + 1e-6, "{next} > {energy}");
        energy = next;
    }
    assert!(energy < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn zero_wrench_at_rest_only_on_target(
        offset in prop::array::uniform3(-0.2f64..0.2),
        axis in prop::array::uniform3(-1.0f64..1.0),
        angle in -3.0f64..3.0,
        stiffness in prop::array::uniform6(1.0f64..1000.0),
    ) {
        let gains = ImpedanceGains::new(stiffness, [10.0; 6]).unwrap();
        let target = Pose { position: [0.3, 0.1, 0.2], orientation: Quaternion::about_x(0.5) };
        let rotation = Quaternion::from_axis_angle(axis, angle);
        let pose = Pose {
            position: std::array::from_fn(|i| target.position[i] + offset[i]),
            orientation: rotation.hamilton(&target.orientation).normalized(),
        };
        let w = impedance_wrench(&PlantState::at_rest(pose), &target, &gains);
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let moved = offset.iter().any(|v| v.abs() > 1e-3)
            || orientation_error(&pose.orientation, &target.orientation).iter().any(|v| v.abs() > 1e-3);
        if moved {
            prop_assert!(norm > 0.0);
        }
        let w_target = impedance_wrench(&PlantState::at_rest(target), &target, &gains);
        prop_assert!(w_target.iter().all(|v| *v == 0.0));
    }
}
