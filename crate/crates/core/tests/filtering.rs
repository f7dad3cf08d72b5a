mod common;

use common::*;
use lfd_core::hand_geometry::{
    apply_end_effector_correction, euler_to_quaternion, EulerAngles, GraspDetector, HandPose,
    WorldPoint,
};
use lfd_core::preprocess::{
    differentiate, first_derivative, mean_filter_slice, resample_uniform, second_derivative,
    smooth_poses, PoseTrajectory, DEFAULT_WINDOW,
};
use proptest::prelude::*;
use rand::Rng;

fn pose_at(t: f64) -> HandPose<f64> {
    let euler = EulerAngles::new(0.5 * t.sin(), 0.2 * t, -0.3 + 0.1 * t.cos());
    HandPose {
        wrist: WorldPoint::new(0.4 + 0.1 * t, -0.2 + 0.05 * t * t, 0.1 + 0.02 * t.sin()),
        euler,
        orientation: apply_end_effector_correction(&euler_to_quaternion(&euler)),
        thumb_index_distance: 0.12 - 0.01 * t,
        grasp: false,
    }
}

#[test]
fn filter_matches_reference_loop() {
    let mut rng = rng(21);
    for _ in 0..100 {
        let n = rng.random_range(1..120);
        let k = rng.random_range(1..16).min(n);
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let got = mean_filter_slice(&u, k).unwrap();
        let want = mean_filter_reference(&u, k);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn tuned_window_is_accepted() {
    let u: Vec<f64> = (0..40).map(|i| (i as f64 * 0.3).sin()).collect();
    let out = mean_filter_slice(&u, DEFAULT_WINDOW).unwrap();
    assert_eq!(DEFAULT_WINDOW, 10);
    assert_eq!(out.len(), u.len());
}

#[test]
fn window_must_fit_signal() {
    assert!(mean_filter_slice(&[1.0, 2.0, 3.0], 4).is_err());
    assert!(mean_filter_slice(&[1.0, 2.0, 3.0], 0).is_err());
    assert_eq!(
        mean_filter_slice(&[1.0, 2.0, 3.0, 4.0, 5.0], 3).unwrap(),
        vec![1.5, 2.0, 3.0, 4.0, 4.5]
    );
}

#[test]
fn jittered_timestamps_resample_to_uniform_grid() {
    let mut rng = rng(22);
    let mut t = 0.0;
    let mut frames = Vec::new();
    for _ in 0..300 {
        frames.push((t, pose_at(t)));
        t += 1.0 / 30.0 + rng.random_range(-0.004..0.004);
    }
    let traj = resample_uniform(&frames, &GraspDetector::default()).unwrap();
    let dt = traj.dt();
    for w in traj.t.windows(2) {
        assert!(((w[1] - w[0]) - dt).abs() < 1e-9);
    }
    assert!((dt - 1.0 / 30.0).abs() < 1e-3);
    let (first, last) = (&frames[0], &frames[frames.len() - 1]);
    assert_eq!(traj.t[0], first.0);
    assert_eq!(traj.t[traj.len() - 1], last.0);
    assert_eq!(traj.start(), first.1.wrist.to_array());
    assert_eq!(traj.end(), last.1.wrist.to_array());
    for q in &traj.orientation {
        assert!((q.norm() - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn smoothing_keeps_record_count_and_unit_quaternions() {
    let frames: Vec<_> = (0..100)
        .map(|i| (i as f64 * 0.03, pose_at(i as f64 * 0.03)))
        .collect();
    let smoothed = smooth_poses(&frames, DEFAULT_WINDOW).unwrap();
    assert_eq!(smoothed.len(), frames.len());
    for (_, p) in &smoothed {
        assert!((p.orientation.norm() - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn differentiation_integrates_back() {
    // dt^2 convergence of the trapezoid reconstruction
    let errors: Vec<f64> = [200usize, 400]
        .iter()
        .map(|&n| {
            let dt = 2.0 / (n - 1) as f64;
            let x: Vec<f64> = (0..n)
                .map(|i| (1.3 * i as f64 * dt).sin() + 0.2 * i as f64 * dt)
                .collect();
            let v = first_derivative(&x, dt);
            let back = trapezoid(&v, dt, x[0]);
            back.iter()
                .zip(&x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(errors[0] < 1e-3);
    let ratio = errors[0] / errors[1];
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn second_derivative_of_min_jerk() {
    let n = 500;
    let dt = 2.0 / (n - 1) as f64;
    let x: Vec<f64> = (0..n)
        .map(|i| min_jerk(0.1, 0.6, 2.0, i as f64 * dt).0)
        .collect();
    let a = second_derivative(&x, dt);
    for (i, ai) in a.iter().enumerate() {
        let want = min_jerk(0.1, 0.6, 2.0, i as f64 * dt).2;
        assert!((ai - want).abs() < 1e-3, "{i}: {ai} vs {want}");
    }
}

#[test]
fn differentiate_fills_every_axis() {
    let n = 50;
    let t: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
    let position = std::array::from_fn(|axis| t.iter().map(|&t| (axis as f64 + 1.0) * t).collect());
    let traj = PoseTrajectory::from_samples(
        t.clone(),
        position,
        vec![EulerAngles::default(); n],
        vec![Default::default(); n],
        vec![0.2; n],
        vec![false; n],
    );
    let traj = differentiate(traj);
    for axis in 0..3 {
        for v in &traj.velocity[axis] {
            assert!((v - (axis as f64 + 1.0)).abs() < 1e-12);
        }
        for a in &traj.acceleration[axis] {
            assert!(a.abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn filter_is_linear(
        u in prop::collection::vec(-10.0f64..10.0, 1..80),
        seed in any::<u64>(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        k in 1usize..12,
    ) {
        let k = k.min(u.len());
        let mut r = rng(seed);
        let v: Vec<f64> = u.iter().map(|_| r.random_range(-10.0..10.0)).collect();
        let mixed: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let fu = mean_filter_slice(&u, k).unwrap();
        let fv = mean_filter_slice(&v, k).unwrap();
        let fm = mean_filter_slice(&mixed, k).unwrap();
        for i in 0..u.len() {
            prop_assert!((fm[i] - (a * fu[i] + b * fv[i])).abs() <= 1e-10);
        }
    }

    #[test]
    fn filter_stays_within_window_bounds(
        u in prop::collection::vec(-10.0f64..10.0, 1..80),
        k in 1usize..12,
    ) {
        let k = k.min(u.len());
        let out = mean_filter_slice(&u, k).unwrap();
        let (lo, hi) = u.iter().fold((f64::MAX, f64::MIN), |(l, h), &x| (l.min(x), h.max(x)));
        let left = (k - 1) / 2;
        let right = k - 1 - left;
        for (i, y) in out.iter().enumerate() {
            let w = &u[i.saturating_sub(left)..=(i + right).min(u.len() - 1)];
            let wl = w.iter().copied().fold(f64::MAX, f64::min);
            let wh = w.iter().copied().fold(f64::MIN, f64::max);
            prop_assert!(*y >= wl - 1e-12 && *y <= wh + 1e-12);
            prop_assert!(*y >= lo - 1e-12 && *y <= hi + 1e-12);
        }
    }

    #[test]
    fn filter_fixes_constants(c in -10.0f64..10.0, n in 1usize..50, k in 1usize..12) {
        let out = mean_filter_slice(&vec![c; n], k.min(n)).unwrap();
        for y in out {
            prop_assert!((y - c).abs() <= 1e-12);
        }
    }

    #[test]
    fn resample_preserves_endpoints(
        gaps in prop::collection::vec(0.01f64..0.06, 2..100),
    ) {
        let mut t = 0.0;
        let mut frames = vec![(0.0, pose_at(0.0))];
        for g in gaps {
            t += g;
            frames.push((t, pose_at(t)));
        }
        let traj = resample_uniform(&frames, &GraspDetector::default()).unwrap();
        let last = &frames[frames.len() - 1];
        prop_assert_eq!(traj.start(), frames[0].1.wrist.to_array());
        prop_assert_eq!(traj.end(), last.1.wrist.to_array());
        prop_assert_eq!(traj.t[traj.len() - 1], last.0);
        prop_assert_eq!(traj.d_ti[traj.len() - 1], last.1.thumb_index_distance);
    }
}
