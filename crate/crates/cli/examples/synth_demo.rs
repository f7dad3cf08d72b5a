//! Generates the bundled example data: a camera config, a synthetic
//! pick-and-place keypoint recording and a pipeline config.
//!
//! The hand is described in world coordinates (wrist path, yaw/pitch/roll,
//! thumb-index aperture), projected to pixels with the camera model, and
//! perturbed with seeded pixel and depth noise.
//!
//! Usage: cargo run -p lfd-cli --example synth_demo -- [OUT_DIR]

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use lfd_core::demo_io::{format_frame, CameraConfig, Keypoint, KeypointFrame, KEYPOINT_COUNT};
use lfd_core::dmp::DEFAULT_HORIZON;
use lfd_core::hand_geometry::{world_to_pixel, WorldPoint, INDEX_TIP, THUMB_TIP, WRIST};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const SEED: u64 = 20240611;
const FPS: f64 = 30.0;

// phase boundaries in seconds
const CLOSE_START: f64 = 1.0;
const CLOSE_END: f64 = 2.0;
const MOVE_END: f64 = 8.0;
const OPEN_END: f64 = 9.0;
const END: f64 = 10.5;

const PICK: [f64; 3] = [0.30, -0.16, 0.15];
const PLACE: [f64; 3] = [0.38, 0.26, 0.23];
const LIFT: f64 = 0.10;

const OPEN: f64 = 0.14;
const CLOSED: f64 = 0.04;

fn min_jerk(tau: f64) -> f64 {
    let tau = tau.clamp(0.0, 1.0);
    tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau)
}

fn progress(t: f64, from: f64, to: f64) -> f64 {
    min_jerk((t - from) / (to - from))
}

struct HandState {
    wrist: [f64; 3],
    yaw: f64,
    pitch: f64,
    roll: f64,
    aperture: f64,
}

fn hand_at(t: f64) -> HandState {
    let p = progress(t, CLOSE_END, MOVE_END);
    let mut wrist: [f64; 3] = std::array::from_fn(|a| PICK[a] + (PLACE[a] - PICK[a]) * p);
    wrist[2] += LIFT * (PI * p).sin().powi(2);
    let aperture = if t < MOVE_END {
        OPEN + (CLOSED - OPEN) * progress(t, CLOSE_START, CLOSE_END)
    } else {
        CLOSED + (OPEN - CLOSED) * progress(t, MOVE_END, OPEN_END)
    };
    HandState {
        wrist,
        yaw: (40.0 * (1.0 - p)).to_radians(),
        pitch: (50.0 * p).to_radians(),
        roll: 5f64.to_radians(),
        aperture,
    }
}

/// Wrist, thumb tip and index tip positions consistent with the keypoint
/// angle conventions: the thumb sits ahead of the wrist tilted by the
/// pitch, and the index is offset from the thumb so that yaw and roll come
/// out of the thumb-to-index vector.
fn landmarks(h: &HandState) -> [[f64; 3]; 3] {
    let reach = 0.09;
    let w = h.wrist;
    let thumb = [
        w[0] + reach * h.pitch.cos(),
        w[1],
        w[2] - reach * h.pitch.sin(),
    ];
    let (ty, tr) = (h.yaw.tan(), h.roll.tan());
    let c = h.aperture / (1.0 + ty * ty + tr * tr).sqrt();
    let index = [thumb[0] + c * ty, thumb[1] - c, thumb[2] + c * tr];
    [w, thumb, index]
}

fn lerp(a: [f64; 3], b: [f64; 3], u: f64) -> [f64; 3] {
    std::array::from_fn(|i| a[i] + (b[i] - a[i]) * u)
}

/// All 21 landmarks: the three tracked ones exactly, the rest spread along
/// the wrist-thumb and wrist-index segments.
fn all_landmarks(h: &HandState) -> [[f64; 3]; KEYPOINT_COUNT] {
    let [w, thumb, index] = landmarks(h);
    let mut out = [w; KEYPOINT_COUNT];
    for (i, p) in out.iter_mut().enumerate().skip(1) {
        let u = (i % 4) as f64 / 4.0 + 0.2;
        *p = if i < 5 {
            lerp(w, thumb, u)
        } else {
            lerp(w, index, u.min(0.95))
        };
    }
    out[WRIST] = w;
    out[THUMB_TIP] = thumb;
    out[INDEX_TIP] = index;
    out
}

fn main() {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"));
    std::fs::create_dir_all(&out_dir).expect("create output directory");

    let cam: CameraConfig<f64> = CameraConfig::realsense_default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let pixel_noise = Normal::new(0.0, 0.3).unwrap();
    let depth_noise = Normal::new(0.0, 0.0008).unwrap();

    let mut text = String::new();
    let mut t = 0.0;
    let mut frames = 0;
    while t <= END {
        let hand = hand_at(t);
        let mut keypoints = [Keypoint::default(); KEYPOINT_COUNT];
        for (k, p) in keypoints.iter_mut().zip(all_landmarks(&hand)) {
            let px = world_to_pixel(&WorldPoint::new(p[0], p[1], p[2]), &cam)
                .expect("landmark below the camera");
            *k = Keypoint {
                x_px: (px.x_px + pixel_noise.sample(&mut rng)).clamp(0.0, cam.resolution_x),
                y_px: (px.y_px + pixel_noise.sample(&mut rng)).clamp(0.0, cam.resolution_y),
                depth: px.depth + depth_noise.sample(&mut rng),
            };
            assert!(
                px.x_px > 0.0
                    && px.x_px < cam.resolution_x
                    && px.y_px > 0.0
                    && px.y_px < cam.resolution_y,
                "landmark leaves the image at t = {t}"
            );
        }
        let frame = KeypointFrame {
            t: (t * 1e6).round() / 1e6,
            keypoints,
        };
        writeln!(text, "{}", format_frame(&frame)).unwrap();
        frames += 1;
        t += 1.0 / FPS + rng.random_range(-0.003..0.003);
    }

    let demo = out_dir.join("pick_place.demo.jsonl");
    std::fs::write(&demo, text).expect("write recording");
    std::fs::write(out_dir.join("camera.json"), cam.to_json() + "\n").expect("write camera");
    let pipeline = serde_json::json!({
        "demo": "pick_place.demo.jsonl",
        "camera": "camera.json",
        "window": 10,
        "basis": 50,
        "stiffness": 150.0,
        "variant": "modified",
        "start": [0.37, -0.34, 0.22],
        "goal": [0.51, 0.11, 0.31],
        "horizon": DEFAULT_HORIZON,
        "impedance_stiffness": 400.0,
        "impedance_damping": 40.0,
        "out": "out"
    });
    std::fs::write(
        out_dir.join("pipeline.json"),
        serde_json::to_string_pretty(&pipeline).unwrap() + "\n",
    )
    .expect("write pipeline config");
    println!("wrote {frames} frames to {}", demo.display());
}
