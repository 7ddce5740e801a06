use super::load_path::{generate_load_path, LoadScript, Shape};
use super::{HarnessError, TwinConfig};
use crate::arm_model::{forward_kinematics, ArmConfig, ArmGeometry, TendonVector, SECTIONS, TENDONS, TENDONS_PER_SECTION};
use crate::statics::{
    actuation_force, backdrive_step, solve_equilibrium, ArmState, ExternalLoad, FrictionParams, TendonChannelState,
};
use crate::teleop::{run_session, ExecutorSample, ExecutorSink, SessionStats, TendonFrame};
use crate::twin_control::{
    apply_stiffness_profile, deviation_metrics, DeviationReport, StiffnessLevel, StiffnessProfile, TimedPosition,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

fn tip(config: &ArmConfig, geom: &ArmGeometry) -> [f64; 3] {
    forward_kinematics(config, geom).tip_position().coords.into()
}

/// Ratio used to bring executor tip positions back to demonstrator scale.
fn tip_scale(demo: &ArmGeometry, exec: &ArmGeometry) -> f64 {
    exec.total_length() / demo.total_length()
}

/// Frame timestamp of sample `k`.
fn stamp(k: usize, rate_hz: f64) -> u64 {
    (k as f64 * 1e6 / rate_hz).round() as u64
}

/// The simulated hand-driven demonstrator: steps the arm under a load and
/// samples its tendons, with seeded encoder noise, into frames.
struct Demonstrator {
    geom: ArmGeometry,
    state: ArmState,
    cfg: TwinConfig,
    noise: Normal<f64>,
    rng: ChaCha8Rng,
    dt: f64,
    frames: Vec<TendonFrame>,
}

impl Demonstrator {
    fn new(cfg: &TwinConfig) -> Result<Self, HarnessError> {
        let geom = cfg.demo_geometry()?;
        let noise = Normal::new(0.0, cfg.session.encoder_noise)
            .map_err(|e| HarnessError::Validation(format!("encoder noise: {e}")))?;
        Ok(Demonstrator {
            state: ArmState::at_rest(ArmConfig::STRAIGHT, &geom.layout),
            geom,
            cfg: cfg.clone(),
            noise,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            dt: 1.0 / cfg.session.rate_hz,
            frames: Vec::new(),
        })
    }

    /// Samples the current state as the next frame.
    fn sample(&mut self, currents: &[f64; TENDONS]) {
        let k = self.frames.len();
        let clean = self.state.tendon_displacements();
        let measured = TendonVector(std::array::from_fn(|j| clean.0[j] + self.noise.sample(&mut self.rng)));
        self.frames
            .push(TendonFrame::new(k as u32, stamp(k, self.cfg.session.rate_hz), &measured, currents));
    }

    fn step(&mut self, loads: &[ExternalLoad], profile: &StiffnessProfile) -> Result<(), HarnessError> {
        let params = self.cfg.backdrive_params(profile);
        backdrive_step(&mut self.state, loads, &apply_stiffness_profile(profile), self.dt, &self.geom, &params)?;
        Ok(())
    }
}

/// Everything one trajectory experiment produced.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRun {
    pub shape: Shape,
    pub deviation: DeviationReport,
    pub stats: SessionStats,
    /// Demonstrator tip as perceived from the streamed frames, m.
    pub demo_tip: Vec<TimedPosition>,
    /// Executor tip divided by the size ratio, m.
    pub exec_tip: Vec<TimedPosition>,
    #[serde(skip)]
    pub frames: Vec<TendonFrame>,
    #[serde(skip)]
    pub samples: Vec<ExecutorSample>,
}

fn tip_series(samples: &[ExecutorSample], demo: &ArmGeometry, exec: &ArmGeometry) -> (Vec<TimedPosition>, Vec<TimedPosition>) {
    let x = tip_scale(demo, exec);
    samples
        .iter()
        .map(|s| {
            let t = s.t_us as f64 * 1e-6;
            (
                TimedPosition::new(t, tip(&s.demo, demo)),
                TimedPosition::new(t, tip(&s.exec, exec).map(|c| c / x)),
            )
        })
        .unzip()
}

/// Drives the demonstrator along `shape` for `duration` seconds, streams it to
/// the executor through a lockstep session and compares both tip trajectories.
pub fn run_trajectory_experiment(cfg: &TwinConfig, shape: Shape, duration: f64) -> Result<TrajectoryRun, HarnessError> {
    cfg.validate()?;
    if !(duration.is_finite() && duration > 0.0) {
        return Err(HarnessError::Validation(format!("duration must be positive, got {duration}")));
    }
    let script = cfg.load_script(shape)?;
    let profile = cfg.profile()?;
    let currents = apply_stiffness_profile(&profile);
    let mut demo = Demonstrator::new(cfg)?;
    let n = (duration * cfg.session.rate_hz).round().max(1.0) as usize;
    for k in 0..n {
        if k > 0 {
            let load = generate_load_path(&script, (k - 1) as f64 * demo.dt)?;
            demo.step(&[load], &profile)?;
        }
        demo.sample(&currents);
    }

    let session = cfg.session_config()?;
    let exec_geom = cfg.exec_geometry()?;
    let mut sink = ExecutorSink::new(exec_geom.clone(), demo.geom.layout.clone(), session.mapping, session.tracking);
    let frames = demo.frames;
    let stats = run_session(&mut frames.clone().into_iter(), &mut sink, &session)?;
    let samples = sink.into_log();
    let (demo_tip, exec_tip) = tip_series(&samples, &demo.geom, &exec_geom);
    let deviation = deviation_metrics(&demo_tip, &exec_tip)?;
    Ok(TrajectoryRun {
        shape,
        deviation,
        stats,
        demo_tip,
        exec_tip,
        frames,
        samples,
    })
}

/// Equilibrium of one profile under the shared load.
#[derive(Debug, Clone, Serialize)]
pub struct StiffnessRow {
    pub profile: String,
    pub thetas: [f64; SECTIONS],
    pub phis: [f64; SECTIONS],
    pub tip: [f64; 3],
    /// Distance of the tip from its straight position, m.
    pub tip_displacement: f64,
    pub converged: bool,
}

/// Solves the loaded equilibrium for every profile. Each tendon carries the
/// actuation force of its profile current; the profile's controller stiffness
/// adds to the section stiffness.
pub fn run_stiffness_experiment(
    load: &ExternalLoad,
    profiles: &[StiffnessProfile],
    geom: &ArmGeometry,
    friction: &FrictionParams,
) -> Result<Vec<StiffnessRow>, HarnessError> {
    if profiles.len() < 2 {
        return Err(HarnessError::Validation("need at least two profiles to compare".into()));
    }
    geom.validate()?;
    load.validate(geom)?;
    let straight = tip(&ArmConfig::STRAIGHT, geom);
    profiles
        .iter()
        .map(|profile| {
            let currents = apply_stiffness_profile(profile);
            let mut channels = [TendonChannelState::default(); TENDONS];
            for (ch, i) in channels.iter_mut().zip(currents) {
                *ch = TendonChannelState {
                    current: i,
                    ..TendonChannelState::with_tension(actuation_force(i, friction)?)
                };
            }
            let eq = solve_equilibrium(std::slice::from_ref(load), &channels, geom, profile);
            let p = tip(&eq.config, geom);
            let d = (0..3).map(|a| (p[a] - straight[a]).powi(2)).sum::<f64>().sqrt();
            Ok(StiffnessRow {
                profile: profile.name(),
                thetas: eq.config.thetas(),
                phis: eq.config.phis(),
                tip: p,
                tip_displacement: d,
                converged: eq.converged,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapPhase {
    Entry,
    LateralSearch,
    RotationalSearch,
    Retraction,
}

impl GapPhase {
    pub const ALL: [GapPhase; 4] = [
        GapPhase::Entry,
        GapPhase::LateralSearch,
        GapPhase::RotationalSearch,
        GapPhase::Retraction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GapPhase::Entry => "entry",
            GapPhase::LateralSearch => "lateral-search",
            GapPhase::RotationalSearch => "rotational-search",
            GapPhase::Retraction => "retraction",
        }
    }
}

/// Stiffness profile of each gap phase, in order.
pub const GAP_SCHEDULE: [&str; 4] = ["LLL", "LHH", "HLL", "LLL"];

#[derive(Debug, Clone, Serialize)]
pub struct PhaseRecord {
    pub phase: GapPhase,
    pub profile: String,
    pub start: f64,
    pub end: f64,
    pub frames: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapSample {
    pub t: f64,
    pub phase: GapPhase,
    /// Profile read back from the currents carried by the frame.
    pub profile: String,
    pub demo_tip: [f64; 3],
    pub exec_tip: [f64; 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct GapLog {
    pub phases: Vec<PhaseRecord>,
    /// Profile of each stretch of consecutive frames, in order.
    pub profile_sequence: Vec<String>,
    pub samples: Vec<GapSample>,
    pub stats: SessionStats,
    /// Frame count over rate, s.
    pub total_duration: f64,
}

/// Recovers a profile from tendon currents, or `None` if a section's currents
/// match neither level.
fn profile_from_currents(currents: &[f64; TENDONS], template: &StiffnessProfile) -> Option<String> {
    let mut levels = [StiffnessLevel::Low; SECTIONS];
    for (i, level) in levels.iter_mut().enumerate() {
        let section = &currents[i * TENDONS_PER_SECTION..(i + 1) * TENDONS_PER_SECTION];
        let near = |v: f64| section.iter().all(|c| (c - v).abs() <= 1e-6 * v.abs().max(1.0));
        *level = if near(template.currents.low) {
            StiffnessLevel::Low
        } else if near(template.currents.high) {
            StiffnessLevel::High
        } else {
            return None;
        };
    }
    Some(template.with_levels(levels).name())
}

fn phase_script(cfg: &TwinConfig, phase: GapPhase, duration: f64) -> Result<Option<LoadScript>, HarnessError> {
    let (shape, period) = match phase {
        // a quarter of a slow sweep: the hand pulls steadily out to full reach
        GapPhase::Entry => (Shape::LateralSweep, 4.0 * duration),
        GapPhase::LateralSearch => (Shape::LateralSweep, duration),
        GapPhase::RotationalSearch => (Shape::RotationSweep, duration / 2.0),
        GapPhase::Retraction => return Ok(None),
    };
    let mut script = cfg.load_script(shape)?;
    script.period = period;
    Ok(Some(script))
}

/// Runs entry, lateral search, rotational search and retraction under the
/// LLL, LHH, HLL, LLL schedule, then checks from the streamed frames that the
/// profiles were applied in that order.
pub fn run_gap_scenario(cfg: &TwinConfig) -> Result<GapLog, HarnessError> {
    cfg.validate()?;
    let base = cfg.profile()?;
    let mut demo = Demonstrator::new(cfg)?;
    let mut phases = Vec::new();
    let mut phase_of_frame = Vec::new();
    let mut elapsed = 0.0;
    for (phase, (duration, name)) in GapPhase::ALL.into_iter().zip(cfg.gap.durations().into_iter().zip(GAP_SCHEDULE)) {
        let profile = base.with_levels(name.parse::<StiffnessProfile>().expect("schedule names parse").levels);
        let currents = apply_stiffness_profile(&profile);
        let script = phase_script(cfg, phase, duration)?;
        let n = (duration * cfg.session.rate_hz).round() as usize;
        let first = demo.frames.len();
        for k in 0..n {
            if !demo.frames.is_empty() {
                let loads = match &script {
                    Some(s) => vec![generate_load_path(s, k as f64 * demo.dt)?],
                    None => Vec::new(),
                };
                demo.step(&loads, &profile)?;
            }
            demo.sample(&currents);
            phase_of_frame.push(phase);
        }
        let rate = cfg.session.rate_hz;
        phases.push(PhaseRecord {
            phase,
            profile: profile.name(),
            start: first as f64 / rate,
            end: demo.frames.len() as f64 / rate,
            frames: n,
        });
        elapsed += duration;
        log::info!(target: "twinarm::gap", "{} done at {elapsed:.3} s with {}", phase.name(), profile.name());
    }

    let session = cfg.session_config()?;
    let exec_geom = cfg.exec_geometry()?;
    let mut sink = ExecutorSink::new(exec_geom.clone(), demo.geom.layout.clone(), session.mapping, session.tracking);
    let stats = run_session(&mut demo.frames.clone().into_iter(), &mut sink, &session)?;
    let x = tip_scale(&demo.geom, &exec_geom);

    let mut samples = Vec::with_capacity(demo.frames.len());
    let mut profile_sequence: Vec<String> = Vec::new();
    for ((frame, s), phase) in demo.frames.iter().zip(sink.log()).zip(&phase_of_frame) {
        let profile = profile_from_currents(&frame.current_array(), &base)
            .ok_or_else(|| HarnessError::Schedule(format!("frame {} carries unknown currents", frame.seq)))?;
        if profile_sequence.last() != Some(&profile) {
            profile_sequence.push(profile.clone());
        }
        samples.push(GapSample {
            t: s.t_us as f64 * 1e-6,
            phase: *phase,
            profile,
            demo_tip: tip(&s.demo, &demo.geom),
            exec_tip: tip(&s.exec, &exec_geom).map(|c| c / x),
        });
    }
    if profile_sequence != GAP_SCHEDULE {
        return Err(HarnessError::Schedule(format!(
            "expected {} but frames show {}",
            GAP_SCHEDULE.join(" -> "),
            profile_sequence.join(" -> ")
        )));
    }
    Ok(GapLog {
        phases,
        profile_sequence,
        samples,
        stats,
        total_duration: demo.frames.len() as f64 / cfg.session.rate_hz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_tracking_has_no_deviation() {
        let mut cfg = TwinConfig::default();
        cfg.tracking = crate::twin_control::TrackingParams::IDEAL;
        cfg.executor.scale = 1.0;
        let run = run_trajectory_experiment(&cfg, Shape::Square, 4.0).unwrap();
        assert_eq!(run.deviation.values(), [0.0; 3]);
        assert_eq!(run.frames.len(), 400);
    }

    #[test]
    fn stiffness_needs_two_profiles() {
        let geom = ArmGeometry::demonstrator();
        let load = ExternalLoad::at_tip(&geom, nalgebra::Vector3::new(0.5, 0.0, 0.0));
        let one = [StiffnessProfile::default()];
        assert!(run_stiffness_experiment(&load, &one, &geom, &FrictionParams::default()).is_err());
    }

    #[test]
    fn currents_identify_profiles() {
        let base = StiffnessProfile::default();
        for p in StiffnessProfile::all() {
            assert_eq!(profile_from_currents(&apply_stiffness_profile(&p), &base).unwrap(), p.name());
        }
        assert!(profile_from_currents(&[0.3; TENDONS], &base).is_none());
    }

    #[test]
    fn short_gap_run_follows_schedule() {
        let mut cfg = TwinConfig::default();
        cfg.gap.entry = 0.5;
        cfg.gap.lateral_search = 0.2;
        cfg.gap.rotational_search = 0.4;
        cfg.gap.retraction = 0.3;
        let log = run_gap_scenario(&cfg).unwrap();
        assert_eq!(log.profile_sequence, GAP_SCHEDULE);
        assert_eq!(log.samples.len(), 140);
        assert!((log.total_duration - 1.4).abs() < 1e-12);
    }
}
