//! Dynamic Movement Primitives for the three position axes.
//!
//! Both variants share the transformation system
//!
//! ```text
//! duration * dv/dt = K (g - x) - D v + forcing
//! duration * dx/dt = v
//! ```
//!
//! and differ in the forcing term. The original variant scales the learned
//! term by the span, `forcing = (g - x0) f(s)`, which vanishes when the
//! start is close to the goal and mirrors the shape when the span changes
//! sign. The modified variant uses `forcing = -K (g - x0) s + f(s)`, so the
//! learned `f` never depends on the start or goal.
//!
//! `f(s) = s * sum(w_i psi_i(s)) / sum(psi_i(s))` with Gaussian kernels
//! `psi_i(s) = exp(-h_i (s - c_i)^2)` over the phase `s = exp(-alpha t / duration)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::PoseTrajectory;
use crate::scalar::Real;

pub const DEFAULT_BASIS_COUNT: usize = 50;
pub const DEFAULT_STIFFNESS: f64 = 150.0;
/// Spans smaller than this cannot be used by the original variant.
pub const MIN_SPAN: f64 = 1e-6;
/// Default rollout length in multiples of the demonstration. The learned
/// forcing term decays with the phase past the demo's end, so rollouts of
/// noisy demonstrations need some extra time to settle on the goal.
pub const DEFAULT_HORIZON: f64 = 2.5;

/// Phase decay so that the phase reaches 0.01 at the nominal duration.
pub fn default_alpha<T: Real>() -> T {
    T::lit(100f64.ln())
}

/// Critical damping for a unit-mass spring of the given stiffness.
pub fn critical_damping<T: Real>(stiffness: T) -> T {
    T::lit(2.0) * stiffness.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Original,
    Modified,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Variant::Original),
            "modified" => Ok(Variant::Modified),
            other => Err(Error::InvalidInput(format!(
                "unknown variant {other:?} (expected original or modified)"
            ))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Original => "original",
            Variant::Modified => "modified",
        })
    }
}

/// First-order phase system `duration * ds/dt = -alpha * s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalSystem<T> {
    pub alpha: T,
    pub phase: T,
}

impl<T: Real> CanonicalSystem<T> {
    pub fn new(alpha: T) -> Self {
        Self {
            alpha,
            phase: T::one(),
        }
    }

    /// Advances the phase by `dt` seconds using the exact exponential solution.
    pub fn step(&mut self, dt: T, duration: T) -> T {
        self.phase = phase_step(self.phase, self.alpha, dt, duration);
        self.phase
    }

    /// Phase at `t` seconds after the start.
    pub fn phase_at(&self, t: T, duration: T) -> T {
        (-self.alpha * t / duration).exp()
    }
}

pub fn phase_step<T: Real>(phase: T, alpha: T, dt: T, duration: T) -> T {
    phase * (-alpha * dt / duration).exp()
}

/// Gaussian kernels over the phase and one weight vector per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSet<T> {
    pub centers: Vec<T>,
    pub widths: Vec<T>,
    pub weights: [Vec<T>; 3],
}

impl<T: Real> BasisSet<T> {
    /// Centers equally spaced in time, `c_i = exp(-alpha i / (n - 1))`;
    /// widths from the squared spacing to the next center, the last one
    /// copied from its neighbour. Weights start at zero.
    pub fn new(n: usize, alpha: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("basis count must be at least 1".into()));
        }
        if !(alpha > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "phase decay must be positive, got {alpha}"
            )));
        }
        let centers: Vec<T> = if n == 1 {
            vec![T::one()]
        } else {
            let last = T::from_usize_lossy(n - 1);
            (0..n)
                .map(|i| (-alpha * T::from_usize_lossy(i) / last).exp())
                .collect()
        };
        let mut widths: Vec<T> = centers
            .windows(2)
            .map(|c| T::one() / ((c[1] - c[0]) * (c[1] - c[0])))
            .collect();
        widths.push(widths.last().copied().unwrap_or(T::one()));
        Ok(Self {
            centers,
            widths,
            weights: [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]],
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Raw kernel activations at phase `s`.
    pub fn activations(&self, s: T) -> Vec<T> {
        self.centers
            .iter()
            .zip(&self.widths)
            .map(|(&c, &h)| (-h * (s - c) * (s - c)).exp())
            .collect()
    }

    /// Learned forcing `f(s)` for `axis`.
    pub fn forcing(&self, axis: usize, s: T) -> T {
        self.forcing_with(&self.weights[axis], s)
    }

    /// Normalized weighted kernel mixture times `s`. The normalization is
    /// computed relative to the largest exponent, so it stays finite far
    /// from every center.
    pub fn forcing_with(&self, weights: &[T], s: T) -> T {
        let exponents: Vec<T> = self
            .centers
            .iter()
            .zip(&self.widths)
            .map(|(&c, &h)| -h * (s - c) * (s - c))
            .collect();
        let peak = exponents.iter().copied().fold(T::neg_infinity(), T::max);
        let mut num = T::zero();
        let mut den = T::zero();
        for (e, &w) in exponents.iter().zip(weights) {
            let a = (*e - peak).exp();
            num = num + w * a;
            den = den + a;
        }
        num / den * s
    }
}

/// Per-axis regression targets for the forcing term, with their phases.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingTarget<T> {
    pub phases: Vec<T>,
    pub values: [Vec<T>; 3],
}

/// Forcing values that make the transformation system reproduce a
/// differentiated demonstration exactly.
///
/// Original: `(d^2 a - K (g - x) + D d v) / (g - x0)`;
/// modified: `d^2 a - K (g - x) + D d v + K (g - x0) s`, with `d` the
/// duration, `v`/`a` the demonstrated velocity/acceleration.
pub fn compute_f_target<T: Real>(
    traj: &PoseTrajectory<T>,
    stiffness: T,
    damping: T,
    alpha: T,
    variant: Variant,
) -> Result<ForcingTarget<T>> {
    traj.validate()?;
    let duration = traj.duration();
    if !(duration > T::zero()) {
        return Err(Error::InvalidInput(
            "demonstration has zero duration".into(),
        ));
    }
    let start = traj.start();
    let goal = traj.end();
    if variant == Variant::Original {
        for axis in 0..3 {
            let span = goal[axis] - start[axis];
            if span.abs() < T::lit(MIN_SPAN) {
                return Err(Error::DegenerateSpan {
                    axis,
                    span: span.abs().to_f64_lossy(),
                    limit: MIN_SPAN,
                });
            }
        }
    }
    let cs = CanonicalSystem::new(alpha);
    let t0 = traj.t[0];
    let phases: Vec<T> = traj
        .t
        .iter()
        .map(|&t| cs.phase_at(t - t0, duration))
        .collect();
    let d2 = duration * duration;
    let values = std::array::from_fn(|axis| {
        let span = goal[axis] - start[axis];
        (0..traj.len())
            .map(|j| {
                let x = traj.position[axis][j];
                let v = traj.velocity[axis][j];
                let a = traj.acceleration[axis][j];
                let base = d2 * a - stiffness * (goal[axis] - x) + damping * duration * v;
                match variant {
                    Variant::Original => base / span,
                    Variant::Modified => base + stiffness * span * phases[j],
                }
            })
            .collect()
    });
    Ok(ForcingTarget { phases, values })
}

/// Locally weighted regression: for each kernel `i`,
/// `w_i = sum_j s_j psi_i(s_j) f_j / sum_j s_j^2 psi_i(s_j)`.
pub fn fit_weights<T: Real>(f_target: &[T], phases: &[T], basis: &BasisSet<T>) -> Result<Vec<T>> {
    if f_target.len() != phases.len() {
        return Err(Error::LengthMismatch {
            expected: phases.len(),
            actual: f_target.len(),
        });
    }
    if phases.len() < basis.len() {
        return Err(Error::InvalidInput(format!(
            "{} samples cannot fit {} basis functions",
            phases.len(),
            basis.len()
        )));
    }
    basis
        .centers
        .iter()
        .zip(&basis.widths)
        .enumerate()
        .map(|(i, (&c, &h))| {
            let mut num = T::zero();
            let mut den = T::zero();
            for (&s, &f) in phases.iter().zip(f_target) {
                let psi = (-h * (s - c) * (s - c)).exp();
                num = num + s * psi * f;
                den = den + s * s * psi;
            }
            if den > T::zero() && den.is_finite() {
                Ok(num / den)
            } else {
                Err(Error::NoPhaseSupport { index: i })
            }
        })
        .collect()
}

/// Hyper-parameters for fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmpConfig<T> {
    pub stiffness: T,
    pub damping: T,
    pub basis_count: usize,
    pub alpha: T,
    pub variant: Variant,
}

impl<T: Real> Default for DmpConfig<T> {
    fn default() -> Self {
        let stiffness = T::lit(DEFAULT_STIFFNESS);
        Self {
            stiffness,
            damping: critical_damping(stiffness),
            basis_count: DEFAULT_BASIS_COUNT,
            alpha: default_alpha(),
            variant: Variant::Modified,
        }
    }
}

impl<T: Real> DmpConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.stiffness > T::zero() && self.stiffness.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "stiffness must be positive, got {}",
                self.stiffness
            )));
        }
        if !(self.damping > T::zero() && self.damping.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "damping must be positive, got {}",
                self.damping
            )));
        }
        if self.basis_count == 0 {
            return Err(Error::InvalidInput("basis count must be at least 1".into()));
        }
        Ok(())
    }
}

/// A fitted three-axis movement primitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmpModel<T> {
    pub variant: Variant,
    pub stiffness: T,
    pub damping: T,
    /// Demonstration length in seconds.
    pub duration: T,
    pub alpha_s: T,
    pub n_basis: usize,
    pub start: [T; 3],
    pub goal: [T; 3],
    pub basis: BasisSet<T>,
    /// Sample interval of the demonstration.
    pub dt: T,
    /// Sample count of the demonstration.
    pub samples: usize,
}

/// Fits a model to a differentiated demonstration.
pub fn fit<T: Real>(traj: &PoseTrajectory<T>, config: &DmpConfig<T>) -> Result<DmpModel<T>> {
    config.validate()?;
    let target = compute_f_target(
        traj,
        config.stiffness,
        config.damping,
        config.alpha,
        config.variant,
    )?;
    let mut basis = BasisSet::new(config.basis_count, config.alpha)?;
    for axis in 0..3 {
        basis.weights[axis] = fit_weights(&target.values[axis], &target.phases, &basis)?;
    }
    Ok(DmpModel {
        variant: config.variant,
        stiffness: config.stiffness,
        damping: config.damping,
        duration: traj.duration(),
        alpha_s: config.alpha,
        n_basis: config.basis_count,
        start: traj.start(),
        goal: traj.end(),
        basis,
        dt: traj.dt(),
        samples: traj.len(),
    })
}

/// Integrator state for one rollout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutState<T> {
    pub position: [T; 3],
    /// Scaled velocity `duration * dx/dt`.
    pub velocity: [T; 3],
    pub phase: T,
    pub step: usize,
}

/// Output of [`rollout`]: positions plus the signals needed for analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout<T> {
    pub t: Vec<T>,
    pub position: [Vec<T>; 3],
    pub velocity: [Vec<T>; 3],
    pub acceleration: [Vec<T>; 3],
    pub phase: Vec<T>,
    /// Learned `f(s)` per axis, independent of start and goal.
    pub forcing: [Vec<T>; 3],
}

impl<T: Real> Rollout<T> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn end(&self) -> [T; 3] {
        let n = self.len() - 1;
        [
            self.position[0][n],
            self.position[1][n],
            self.position[2][n],
        ]
    }
}

impl<T: Real> DmpModel<T> {
    /// Forcing actually applied to the transformation system for the given
    /// endpoints (before the division by the duration).
    pub fn effective_forcing(&self, axis: usize, s: T, start: T, goal: T) -> T {
        let f = self.basis.forcing(axis, s);
        match self.variant {
            Variant::Original => (goal - start) * f,
            Variant::Modified => f - self.stiffness * (goal - start) * s,
        }
    }

    /// Number of samples covering `factor` times the demonstration length at
    /// the demonstration's sample interval.
    pub fn steps_for_horizon(&self, factor: T) -> usize {
        let intervals = T::from_usize_lossy(self.samples.saturating_sub(1)) * factor;
        intervals.round().to_usize().unwrap_or(0) + 1
    }

    pub fn to_json(&self) -> Result<String>
    where
        T: Serialize,
    {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self>
    where
        T: for<'de> Deserialize<'de>,
    {
        let model: Self = serde_json::from_str(text)?;
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        let n = self.basis.len();
        if n != self.n_basis
            || self.basis.widths.len() != n
            || self.basis.weights.iter().any(|w| w.len() != n)
        {
            return Err(Error::InvalidInput(format!(
                "model declares {} basis functions but stores {}",
                self.n_basis, n
            )));
        }
        if !(self.duration > T::zero()) || !(self.stiffness > T::zero()) {
            return Err(Error::InvalidInput(
                "model duration and stiffness must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()>
    where
        T: Serialize,
    {
        let path = path.as_ref();
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self>
    where
        T: for<'de> Deserialize<'de>,
    {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Integrates the transformation system from `start` towards `goal` with
/// explicit Euler steps of `dt` seconds, returning `n_steps` samples.
pub fn rollout<T: Real>(
    model: &DmpModel<T>,
    start: [T; 3],
    goal: [T; 3],
    n_steps: usize,
    dt: T,
) -> Result<Rollout<T>> {
    if n_steps < 2 {
        return Err(Error::InvalidInput(format!(
            "rollout needs at least 2 steps, got {n_steps}"
        )));
    }
    if !(dt > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let duration = model.duration;
    let (k, d) = (model.stiffness, model.damping);
    let mut state = RolloutState {
        position: start,
        velocity: [T::zero(); 3],
        phase: T::one(),
        step: 0,
    };
    let mut cs = CanonicalSystem::new(model.alpha_s);
    let empty = || -> [Vec<T>; 3] { std::array::from_fn(|_| Vec::with_capacity(n_steps)) };
    let mut out = Rollout {
        t: Vec::with_capacity(n_steps),
        position: empty(),
        velocity: empty(),
        acceleration: empty(),
        phase: Vec::with_capacity(n_steps),
        forcing: empty(),
    };
    let h = dt / duration;
    for step in 0..n_steps {
        state.step = step;
        let s = state.phase;
        out.t.push(dt * T::from_usize_lossy(step));
        out.phase.push(s);
        let mut next = state;
        for axis in 0..3 {
            let f = model.basis.forcing(axis, s);
            let span = goal[axis] - start[axis];
            let forcing = match model.variant {
                Variant::Original => span * f,
                Variant::Modified => f - k * span * s,
            };
            let x = state.position[axis];
            let v = state.velocity[axis];
            let dv = k * (goal[axis] - x) - d * v + forcing;
            out.position[axis].push(x);
            out.velocity[axis].push(v / duration);
            out.acceleration[axis].push(dv / (duration * duration));
            out.forcing[axis].push(f);
            next.velocity[axis] = v + h * dv;
            next.position[axis] = x + h * v;
            if !(next.velocity[axis].is_finite() && next.position[axis].is_finite()) {
                return Err(Error::Diverged { step });
            }
        }
        next.phase = cs.step(dt, duration);
        state = next;
    }
    Ok(out)
}

/// Combines rolled-out positions with the demonstration's orientation,
/// thumb-index distance and grasp sequence, matched by sample index. When
/// the rollout runs past the end of the demonstration, the final
/// demonstrated orientation and grasp state are held.
pub fn replay_attach<T: Real>(
    rollout: &Rollout<T>,
    demo: &PoseTrajectory<T>,
) -> Result<PoseTrajectory<T>> {
    demo.validate()?;
    let n = rollout.len();
    if n < demo.len() {
        return Err(Error::LengthMismatch {
            expected: demo.len(),
            actual: n,
        });
    }
    let last = demo.len() - 1;
    let src = |i: usize| i.min(last);
    let t0 = demo.t[0];
    Ok(PoseTrajectory {
        t: rollout.t.iter().map(|&t| t + t0).collect(),
        position: rollout.position.clone(),
        velocity: rollout.velocity.clone(),
        acceleration: rollout.acceleration.clone(),
        euler: (0..n).map(|i| demo.euler[src(i)]).collect(),
        orientation: (0..n).map(|i| demo.orientation[src(i)]).collect(),
        d_ti: (0..n).map(|i| demo.d_ti[src(i)]).collect(),
        grasp: (0..n).map(|i| demo.grasp[src(i)]).collect(),
    })
}

/// Per-axis root-mean-square difference between the first `n` samples of two
/// position sets, `n` being the shorter length.
pub fn position_rmse<T: Real>(a: &[Vec<T>; 3], b: &[Vec<T>; 3]) -> [T; 3] {
    std::array::from_fn(|axis| {
        let n = a[axis].len().min(b[axis].len());
        if n == 0 {
            return T::zero();
        }
        let sum = (0..n).fold(T::zero(), |acc, i| {
            let e = a[axis][i] - b[axis][i];
            acc + e * e
        });
        (sum / T::from_usize_lossy(n)).sqrt()
    })
}
