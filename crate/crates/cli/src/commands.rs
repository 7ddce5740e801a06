use crate::Failure;
use clap::Args;
use serde_json::json;
use std::path::{Path, PathBuf};
use twinarm_core::harness::{
    run_gap_scenario, run_stiffness_experiment, run_trajectory_experiment, write_deviation_table, write_gap_log,
    write_manifest, write_stiffness_table, write_trajectories, HarnessError, RunManifest, Shape, TwinConfig,
};
use twinarm_core::teleop::{replay_trace, run_session, write_trace_file, ExecutorSink};
use twinarm_core::twin_control::{deviation_metrics, StiffnessProfile, TimedPosition};
use twinarm_core::arm_model::forward_kinematics;

pub fn load_config(path: Option<&Path>) -> Result<TwinConfig, Failure> {
    Ok(match path {
        Some(p) => TwinConfig::load(p).map_err(|e| match e {
            // an unreadable config file is a usage problem, not a transport one
            HarnessError::Io(io) => Failure::Validation(format!("{}: {io}", p.display())),
            other => other.into(),
        })?,
        None => TwinConfig::default(),
    })
}

#[derive(Args, Debug)]
pub struct OutArgs {
    /// Output directory, created if missing.
    #[arg(long, default_value = "twinarm-out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// circle, square, triangle or star; all four when omitted.
    #[arg(long)]
    pub shape: Option<String>,
    /// Stiffness profile, LLL..HHH.
    #[arg(long)]
    pub stiffness: Option<String>,
    /// Executor to demonstrator size ratio.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Seconds per shape.
    #[arg(long, default_value_t = 60.0)]
    pub duration: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Trace CSV recorded by `experiment` or `serve`.
    pub trace: PathBuf,
    #[arg(long)]
    pub scale: Option<f64>,
    /// Where to write the replayed trajectories; nothing is written when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn prepare_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Transport(format!("{}: {e}", dir.display())))
}

fn name_of(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn finish(dir: &Path, command: &str, cfg: TwinConfig, outputs: Vec<PathBuf>, summary: serde_json::Value) -> Result<(), Failure> {
    let manifest_path = dir.join("manifest.json");
    let mut names: Vec<String> = outputs.iter().map(|p| name_of(p)).collect();
    names.push(name_of(&manifest_path));
    let manifest = RunManifest {
        command: command.to_string(),
        config: cfg,
        outputs: names,
        summary,
    };
    write_manifest(&manifest_path, &manifest)?;
    log::info!("wrote {} files to {}", manifest.outputs.len(), dir.display());
    Ok(())
}

fn with_scale(mut cfg: TwinConfig, scale: Option<f64>) -> Result<TwinConfig, Failure> {
    if let Some(x) = scale {
        cfg.executor.scale = x;
        cfg.executor.per_section = None;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn experiment(mut cfg: TwinConfig, args: ExperimentArgs) -> Result<(), Failure> {
    if let Some(p) = &args.stiffness {
        cfg.stiffness.profile = p.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let cfg = with_scale(cfg, args.scale)?;
    let shapes = match &args.shape {
        Some(s) => vec![s.parse::<Shape>()?],
        None => Shape::FIGURES.to_vec(),
    };
    let dir = &args.out.out;
    prepare_dir(dir)?;
    let mut rows = Vec::new();
    let mut outputs = Vec::new();
    let mut summary = serde_json::Map::new();
    println!("{:<10} {:>8} {:>8} {:>8}", "shape", "x(%)", "y(%)", "z(%)");
    for shape in shapes {
        let run = run_trajectory_experiment(&cfg, shape, args.duration)?;
        let trajectory = dir.join(format!("{shape}_trajectory.csv"));
        let trace = dir.join(format!("{shape}_trace.csv"));
        write_trajectories(&trajectory, &run.demo_tip, &run.exec_tip)?;
        write_trace_file(&trace, &run.frames).map_err(HarnessError::from)?;
        outputs.extend([trajectory, trace]);
        let [x, y, z] = run.deviation.formatted();
        println!("{:<10} {x:>8} {y:>8} {z:>8}", shape.name());
        summary.insert(
            shape.name().into(),
            json!({ "deviation": run.deviation, "frames": run.stats.frames_applied }),
        );
        rows.push((shape, run.deviation));
    }
    let table = dir.join("deviation.csv");
    write_deviation_table(&table, &rows)?;
    outputs.push(table);
    finish(dir, "experiment", cfg, outputs, summary.into())
}

pub fn stiffness(cfg: TwinConfig, args: OutArgs) -> Result<(), Failure> {
    let geom = cfg.demo_geometry()?;
    let base = cfg.profile()?;
    let profiles: Vec<StiffnessProfile> = StiffnessProfile::all().iter().map(|p| base.with_levels(p.levels)).collect();
    let rows = run_stiffness_experiment(&cfg.tip_load()?, &profiles, &geom, &cfg.friction)?;
    prepare_dir(&args.out)?;
    let table = args.out.join("stiffness.csv");
    write_stiffness_table(&table, &rows)?;
    println!("{:<8} {:>9} {:>9} {:>9} {:>12}", "profile", "theta_1", "theta_2", "theta_3", "tip disp (m)");
    for r in &rows {
        println!(
            "{:<8} {:>9.4} {:>9.4} {:>9.4} {:>12.4}",
            r.profile, r.thetas[0], r.thetas[1], r.thetas[2], r.tip_displacement
        );
    }
    finish(&args.out, "stiffness", cfg, vec![table], json!({ "profiles": rows }))
}

pub fn gap_demo(cfg: TwinConfig, args: OutArgs) -> Result<(), Failure> {
    let log = run_gap_scenario(&cfg)?;
    prepare_dir(&args.out)?;
    let path = args.out.join("gap_log.csv");
    write_gap_log(&path, &log)?;
    for p in &log.phases {
        println!("{:<18} {:<4} {:>6.2} s -> {:>6.2} s", p.phase.name(), p.profile, p.start, p.end);
    }
    println!("profile sequence: {}", log.profile_sequence.join(" -> "));
    let summary = json!({
        "phases": log.phases,
        "profile_sequence": log.profile_sequence,
        "total_duration": log.total_duration,
    });
    finish(&args.out, "gap-demo", cfg, vec![path], summary)
}

pub fn replay(cfg: TwinConfig, args: ReplayArgs) -> Result<(), Failure> {
    let cfg = with_scale(cfg, args.scale)?;
    let mut source = replay_trace(&args.trace).map_err(HarnessError::from)?;
    let total = source.len();
    let session = cfg.session_config()?;
    let demo_geom = cfg.demo_geometry()?;
    let exec_geom = cfg.exec_geometry()?;
    let mut sink = ExecutorSink::new(exec_geom.clone(), demo_geom.layout.clone(), session.mapping, session.tracking);
    let stats = run_session(&mut source, &mut sink, &session).map_err(HarnessError::from)?;
    println!("replayed {} of {total} frames", stats.frames_applied);
    if sink.log().is_empty() {
        return Ok(());
    }
    let x = exec_geom.total_length() / demo_geom.total_length();
    let tip = |c, g| -> [f64; 3] { forward_kinematics(c, g).tip_position().coords.into() };
    let (demo, exec): (Vec<_>, Vec<_>) = sink
        .log()
        .iter()
        .map(|s| {
            let t = s.t_us as f64 * 1e-6;
            (
                TimedPosition::new(t, tip(&s.demo, &demo_geom)),
                TimedPosition::new(t, tip(&s.exec, &exec_geom).map(|c| c / x)),
            )
        })
        .unzip();
    let report = deviation_metrics(&demo, &exec).map_err(HarnessError::from)?;
    let [dx, dy, dz] = report.formatted();
    println!("deviation x {dx} y {dy} z {dz}");
    if let Some(dir) = &args.out {
        prepare_dir(dir)?;
        let path = dir.join("replay_trajectory.csv");
        write_trajectories(&path, &demo, &exec)?;
        let summary = json!({ "trace": args.trace.display().to_string(), "deviation": report, "stats": stats });
        finish(dir, "replay", cfg, vec![path], summary)?;
    }
    Ok(())
}
