mod stages;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use lfd_core::demo_io::{format_trajectory, load_trajectory};
use lfd_core::dmp::{
    DmpConfig, DmpModel, Variant, DEFAULT_BASIS_COUNT, DEFAULT_HORIZON, DEFAULT_STIFFNESS,
};
use lfd_core::preprocess::DEFAULT_WINDOW;
use lfd_core::robot_sim::{DEFAULT_IMPEDANCE_DAMPING, DEFAULT_IMPEDANCE_STIFFNESS};
use serde::Deserialize;

use stages::{PartialPoint, AXES};

/// Learn pick-and-place trajectories from recorded hand demonstrations.
#[derive(Parser)]
#[command(name = "lfd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a keypoint recording into a raw pose CSV.
    Convert {
        #[arg(long)]
        demo: PathBuf,
        #[arg(long)]
        camera: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Convert, mean-filter and resample a recording onto a uniform grid.
    Smooth {
        #[arg(long)]
        demo: PathBuf,
        #[arg(long)]
        camera: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Fit a movement primitive to a uniformly sampled pose CSV.
    Fit {
        #[arg(long)]
        poses: PathBuf,
        #[command(flatten)]
        dmp: DmpArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Roll a fitted model out between new start and goal points.
    Rollout {
        #[arg(long)]
        model: PathBuf,
        /// Pose CSV the model was fitted on; supplies orientation and grasp.
        #[arg(long)]
        poses: PathBuf,
        #[arg(long, value_parser = parse_point)]
        start: Option<PartialPoint>,
        #[arg(long, value_parser = parse_point)]
        goal: Option<PartialPoint>,
        /// Rollout length in multiples of the demonstration length.
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Track a trajectory with the impedance-controlled plant.
    Simulate {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long, default_value_t = DEFAULT_IMPEDANCE_STIFFNESS)]
        stiffness: f64,
        #[arg(long, default_value_t = DEFAULT_IMPEDANCE_DAMPING)]
        damping: f64,
        /// Integration steps per trajectory sample.
        #[arg(long, default_value_t = 10)]
        substeps: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run convert, smooth, fit, rollout and simulate in sequence.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct DmpArgs {
    #[arg(long, default_value_t = DEFAULT_BASIS_COUNT)]
    basis: usize,
    #[arg(long, default_value_t = DEFAULT_STIFFNESS)]
    stiffness: f64,
    /// Defaults to critical damping, 2 sqrt(stiffness).
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long, default_value_t = Variant::Modified)]
    variant: Variant,
}

impl DmpArgs {
    fn config(&self) -> DmpConfig<f64> {
        DmpConfig {
            stiffness: self.stiffness,
            damping: self.damping.unwrap_or(2.0 * self.stiffness.sqrt()),
            basis_count: self.basis,
            variant: self.variant,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct PipelineArgs {
    /// JSON file with any of the settings below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    demo: Option<PathBuf>,
    #[arg(long)]
    camera: Option<PathBuf>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    basis: Option<usize>,
    #[arg(long)]
    stiffness: Option<f64>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long, value_parser = parse_point)]
    start: Option<PartialPoint>,
    #[arg(long, value_parser = parse_point)]
    goal: Option<PartialPoint>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    impedance_stiffness: Option<f64>,
    #[arg(long)]
    impedance_damping: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Pipeline settings; relative paths in a config file are resolved against
/// the file's directory.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineConfig {
    demo: Option<PathBuf>,
    camera: Option<PathBuf>,
    #[serde(default = "default_window")]
    window: usize,
    #[serde(default = "default_basis")]
    basis: usize,
    #[serde(default = "default_stiffness")]
    stiffness: f64,
    damping: Option<f64>,
    #[serde(default = "default_variant")]
    variant: Variant,
    #[serde(default)]
    start: PartialPoint,
    #[serde(default)]
    goal: PartialPoint,
    #[serde(default = "default_horizon")]
    horizon: f64,
    #[serde(default = "default_impedance_stiffness")]
    impedance_stiffness: f64,
    #[serde(default = "default_impedance_damping")]
    impedance_damping: f64,
    #[serde(default = "default_out")]
    out: PathBuf,
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}
fn default_basis() -> usize {
    DEFAULT_BASIS_COUNT
}
fn default_stiffness() -> f64 {
    DEFAULT_STIFFNESS
}
fn default_variant() -> Variant {
    Variant::Modified
}
fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}
fn default_impedance_stiffness() -> f64 {
    DEFAULT_IMPEDANCE_STIFFNESS
}
fn default_impedance_damping() -> f64 {
    DEFAULT_IMPEDANCE_DAMPING
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Parses `x,y,z`; an empty or `_` component keeps the demonstrated value.
fn parse_point(s: &str) -> Result<PartialPoint, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z but got {s:?}"));
    }
    let mut point = [None; 3];
    for (slot, part) in point.iter_mut().zip(&parts) {
        if part.is_empty() || *part == "_" {
            continue;
        }
        let v: f64 = part
            .parse()
            .map_err(|_| format!("{part:?} is not a number"))?;
        if !v.is_finite() {
            return Err(format!("{part:?} is not finite"));
        }
        *slot = Some(v);
    }
    Ok(point)
}

fn fmt_point(p: [f64; 3]) -> String {
    format!("({:.4}, {:.4}, {:.4})", p[0], p[1], p[2])
}

fn report_fit(report: &[stages::AxisFit; 3]) {
    for (name, axis) in AXES.iter().zip(report) {
        println!(
            "  {name}: reproduction rmse {:.3e} m ({:.2}% of range {:.4} m)",
            axis.rmse,
            axis.percent(),
            axis.range
        );
    }
}

fn report_rollout(traj: &lfd_core::PoseTrajectory64, goal: [f64; 3]) {
    let end = traj.end();
    let err: [f64; 3] = std::array::from_fn(|a| (end[a] - goal[a]).abs());
    println!(
        "  endpoint {} goal {} max axis error {:.3e} m",
        fmt_point(end),
        fmt_point(goal),
        err.iter().copied().fold(0.0, f64::max)
    );
}

fn report_simulation(log: &lfd_core::robot_sim::SimulationLog<f64>) {
    println!(
        "  position rmse {:.6e} m, orientation rmse {:.6e} rad, max position error {:.6e} m",
        log.position_rmse, log.orientation_rmse, log.max_position_error
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Convert { demo, camera, out } => {
            let (cam, rec) = stages::load_inputs(&demo, &camera)?;
            let traj = stages::convert(&rec, &cam)?;
            let path = out.join("poses.csv");
            stages::write(&path, &format_trajectory(&traj)?)?;
            println!("wrote {} ({} frames)", path.display(), traj.len());
        }
        Command::Smooth {
            demo,
            camera,
            window,
            out,
        } => {
            let (cam, rec) = stages::load_inputs(&demo, &camera)?;
            let traj = stages::smooth(&rec, &cam, window)?;
            let path = out.join("smoothed.csv");
            stages::write(&path, &format_trajectory(&traj)?)?;
            println!(
                "wrote {} ({} samples, dt {:.6} s)",
                path.display(),
                traj.len(),
                traj.dt()
            );
        }
        Command::Fit { poses, dmp, out } => {
            let traj = load_trajectory(&poses)
                .with_context(|| format!("reading poses {}", poses.display()))?;
            let (model, report) = stages::fit(&traj, &dmp.config())?;
            let path = out.join("model.json");
            model.save(&path)?;
            println!(
                "wrote {} ({} variant, {} basis functions)",
                path.display(),
                model.variant,
                model.n_basis
            );
            report_fit(&report);
        }
        Command::Rollout {
            model,
            poses,
            start,
            goal,
            horizon,
            out,
        } => {
            let model: DmpModel<f64> = DmpModel::load(&model)
                .with_context(|| format!("reading model {}", model.display()))?;
            let demo = load_trajectory(&poses)
                .with_context(|| format!("reading poses {}", poses.display()))?;
            let start = stages::resolve(&start.unwrap_or_default(), model.start);
            let goal = stages::resolve(&goal.unwrap_or_default(), model.goal);
            let traj = stages::rollout(&model, &demo, start, goal, horizon)?;
            let path = out.join("rollout.csv");
            stages::write(&path, &format_trajectory(&traj)?)?;
            println!("wrote {} ({} samples)", path.display(), traj.len());
            report_rollout(&traj, goal);
        }
        Command::Simulate {
            trajectory,
            stiffness,
            damping,
            substeps,
            out,
        } => {
            let gains = stages::gains(stiffness, damping)?;
            let traj = load_trajectory(&trajectory)
                .with_context(|| format!("reading trajectory {}", trajectory.display()))?;
            let log = stages::simulate(&traj, &gains, substeps)?;
            let path = out.join("simulation.csv");
            stages::write(&path, &log.to_csv())?;
            println!("wrote {}", path.display());
            report_simulation(&log);
        }
        Command::Pipeline(args) => pipeline(args)?,
    }
    Ok(())
}

fn load_pipeline_config(args: &PipelineArgs) -> Result<PipelineConfig> {
    let mut cfg: PipelineConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let mut cfg: PipelineConfig = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            let base = path.parent().unwrap_or(Path::new(""));
            for p in [&mut cfg.demo, &mut cfg.camera].into_iter().flatten() {
                *p = base.join(&*p);
            }
            cfg.out = base.join(&cfg.out);
            cfg
        }
        None => serde_json::from_str("{}").expect("defaults"),
    };
    if let Some(v) = &args.demo {
        cfg.demo = Some(v.clone());
    }
    if let Some(v) = &args.camera {
        cfg.camera = Some(v.clone());
    }
    if let Some(v) = &args.out {
        cfg.out = v.clone();
    }
    cfg.window = args.window.unwrap_or(cfg.window);
    cfg.basis = args.basis.unwrap_or(cfg.basis);
    cfg.stiffness = args.stiffness.unwrap_or(cfg.stiffness);
    cfg.damping = args.damping.or(cfg.damping);
    cfg.variant = args.variant.unwrap_or(cfg.variant);
    cfg.horizon = args.horizon.unwrap_or(cfg.horizon);
    cfg.impedance_stiffness = args.impedance_stiffness.unwrap_or(cfg.impedance_stiffness);
    cfg.impedance_damping = args.impedance_damping.unwrap_or(cfg.impedance_damping);
    for (dst, src) in [(&mut cfg.start, &args.start), (&mut cfg.goal, &args.goal)] {
        if let Some(src) = src {
            for a in 0..3 {
                if src[a].is_some() {
                    dst[a] = src[a];
                }
            }
        }
    }
    Ok(cfg)
}

fn pipeline(args: PipelineArgs) -> Result<()> {
    let cfg = load_pipeline_config(&args)?;
    let demo = cfg
        .demo
        .as_ref()
        .context("no demonstration given (--demo or config)")?;
    let camera = cfg
        .camera
        .as_ref()
        .context("no camera config given (--camera or config)")?;
    // validate everything cheap before the first stage runs
    let gains = stages::gains(cfg.impedance_stiffness, cfg.impedance_damping)?;
    let dmp_config = DmpConfig {
        stiffness: cfg.stiffness,
        damping: cfg.damping.unwrap_or(2.0 * cfg.stiffness.sqrt()),
        basis_count: cfg.basis,
        variant: cfg.variant,
        ..Default::default()
    };
    dmp_config.validate()?;
    let out = &cfg.out;

    let (cam, rec) = stages::load_inputs(demo, camera).context("stage convert failed")?;
    let raw = stages::convert(&rec, &cam).context("stage convert failed")?;
    stages::write(&out.join("poses.csv"), &format_trajectory(&raw)?)?;
    println!("convert: {} frames", raw.len());

    let smoothed = stages::smooth(&rec, &cam, cfg.window).context("stage smooth failed")?;
    stages::write(&out.join("smoothed.csv"), &format_trajectory(&smoothed)?)?;
    println!(
        "smooth: {} samples at dt {:.6} s (window {})",
        smoothed.len(),
        smoothed.dt(),
        cfg.window
    );

    // fit on the file contents so the stages see exactly what they would
    // when run one at a time
    let smoothed = load_trajectory(out.join("smoothed.csv")).context("stage fit failed")?;
    let (model, report) = stages::fit(&smoothed, &dmp_config).context("stage fit failed")?;
    model
        .save(out.join("model.json"))
        .context("stage fit failed")?;
    println!(
        "fit: {} variant, {} basis functions",
        model.variant, model.n_basis
    );
    report_fit(&report);

    let start = stages::resolve(&cfg.start, model.start);
    let goal = stages::resolve(&cfg.goal, model.goal);
    let rolled = stages::rollout(&model, &smoothed, start, goal, cfg.horizon)
        .context("stage rollout failed")?;
    stages::write(&out.join("rollout.csv"), &format_trajectory(&rolled)?)?;
    println!(
        "rollout: {} samples from {}",
        rolled.len(),
        fmt_point(start)
    );
    report_rollout(&rolled, goal);

    let rolled = load_trajectory(out.join("rollout.csv")).context("stage simulate failed")?;
    let log = stages::simulate(&rolled, &gains, 10).context("stage simulate failed")?;
    stages::write(&out.join("simulation.csv"), &log.to_csv())?;
    println!("simulate:");
    report_simulation(&log);
    println!("outputs in {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
