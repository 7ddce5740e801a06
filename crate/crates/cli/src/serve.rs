use crate::Failure;
use clap::Args;
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::collections::VecDeque;
use std::io::{self, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};
use tungstenite::{Message, WebSocket};
use twinarm_core::arm_model::{forward_kinematics, ArmConfig, ArmGeometry, TendonVector};
use twinarm_core::harness::{HarnessError, TwinConfig};
use twinarm_core::statics::{backdrive_step, hold_check, ArmState, ExternalLoad, FrictionParams};
use twinarm_core::teleop::console::{
    parse_inbound, ArmSnapshot, AxisTriple, ConsoleCommand, ConsoleOutbound, StateMessage,
};
use twinarm_core::teleop::{run_session, write_trace_file, ExecutorSink, FrameSink, SessionMode, TendonFrame};
use twinarm_core::twin_control::{
    apply_stiffness_profile, deviation_metrics, ControlError, ScaleMapping, StiffnessProfile, TimedPosition,
};

/// Deviation is reported over this trailing window, s.
const DEVIATION_WINDOW: f64 = 5.0;
/// Upper bound on console updates per client, Hz.
const MAX_PUSH_HZ: f64 = 60.0;

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8765)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Stop after this many seconds; runs until interrupted when omitted.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Record the streamed frames to this CSV when the session ends.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

/// Operator-adjustable session settings.
struct Controls {
    load: Option<ExternalLoad>,
    profile: StiffnessProfile,
    mapping: ScaleMapping,
    exec_geom: ArmGeometry,
    /// Bumped whenever `mapping` changes.
    scale_version: u64,
}

struct Shared {
    controls: Mutex<Controls>,
    latest: Mutex<Option<StateMessage>>,
    stop: AtomicBool,
    cfg: TwinConfig,
    demo_length: f64,
}

impl Shared {
    fn apply(&self, cmd: ConsoleCommand) -> Result<(), String> {
        let mut c = self.controls.lock().unwrap();
        match cmd {
            ConsoleCommand::Load(None) => c.load = None,
            ConsoleCommand::Load(Some((s, f))) => {
                if s > self.demo_length {
                    return Err(format!("load point {s} m is beyond the arm ({} m)", self.demo_length));
                }
                c.load = Some(ExternalLoad::new(s, Vector3::from(f)));
            }
            ConsoleCommand::Profile(p) => c.profile = c.profile.with_levels(p.levels),
            ConsoleCommand::Scale(mapping) => {
                let geom = self.cfg.demo_geometry().map_err(|e| e.to_string())?;
                c.exec_geom = geom.scaled_per_section(mapping.factors());
                c.mapping = mapping;
                c.scale_version += 1;
            }
        }
        Ok(())
    }
}

fn tip(config: &ArmConfig, geom: &ArmGeometry) -> [f64; 3] {
    forward_kinematics(config, geom).tip_position().coords.into()
}

/// The demonstrator under console control, yielding one frame per call.
struct LiveDemonstrator {
    shared: Arc<Shared>,
    geom: ArmGeometry,
    state: ArmState,
    noise: Normal<f64>,
    rng: ChaCha8Rng,
    dt: f64,
    seq: u32,
    limit: Option<u32>,
    recorded: Option<Vec<TendonFrame>>,
}

impl LiveDemonstrator {
    fn next(&mut self) -> Option<TendonFrame> {
        if self.shared.stop.load(Ordering::Acquire) || self.limit.is_some_and(|n| self.seq >= n) {
            return None;
        }
        let (load, profile) = {
            let c = self.shared.controls.lock().unwrap();
            (c.load, c.profile)
        };
        let currents = apply_stiffness_profile(&profile);
        if self.seq > 0 {
            let params = self.shared.cfg.backdrive_params(&profile);
            let loads: Vec<ExternalLoad> = load.into_iter().collect();
            if let Err(e) = backdrive_step(&mut self.state, &loads, &currents, self.dt, &self.geom, &params) {
                log::warn!("demonstrator step failed: {e}");
            }
        }
        let clean = self.state.tendon_displacements();
        let measured = TendonVector(std::array::from_fn(|j| clean.0[j] + self.noise.sample(&mut self.rng)));
        let t_us = (self.seq as f64 * self.dt * 1e6).round() as u64;
        let frame = TendonFrame::new(self.seq, t_us, &measured, &currents);
        if let Some(rec) = &mut self.recorded {
            rec.push(frame);
        }
        self.seq += 1;
        Some(frame)
    }
}

/// Executor sink that also publishes console state.
struct ConsoleSink {
    inner: ExecutorSink,
    shared: Arc<Shared>,
    demo_geom: ArmGeometry,
    friction: FrictionParams,
    scale_version: u64,
    window: VecDeque<(TimedPosition, TimedPosition)>,
}

impl ConsoleSink {
    fn deviation(&self) -> AxisTriple {
        let (demo, exec): (Vec<_>, Vec<_>) = self.window.iter().copied().unzip();
        deviation_metrics(&demo, &exec).map(|r| r.values().into()).unwrap_or_default()
    }
}

impl FrameSink for ConsoleSink {
    fn apply(&mut self, frame: &TendonFrame, dt: f64) -> Result<(), ControlError> {
        let (version, mapping, geom, profile) = {
            let c = self.shared.controls.lock().unwrap();
            (c.scale_version, c.mapping, c.exec_geom.clone(), c.profile)
        };
        if version != self.scale_version {
            self.inner.rescale(geom, mapping);
            self.scale_version = version;
            // tips before and after a size change are not comparable
            self.window.clear();
        }
        self.inner.apply(frame, dt)?;
        let sample = *self.inner.latest().expect("sample after apply");
        let exec_geom = self.inner.geometry();
        let ratio = exec_geom.total_length() / self.demo_geom.total_length();
        let demo_tip = tip(&sample.demo, &self.demo_geom);
        let exec_tip = tip(&sample.exec, exec_geom);
        let t = sample.t_us as f64 * 1e-6;
        self.window
            .push_back((TimedPosition::new(t, demo_tip), TimedPosition::new(t, exec_tip.map(|c| c / ratio))));
        while self.window.front().is_some_and(|(d, _)| t - d.t > DEVIATION_WINDOW) {
            self.window.pop_front();
        }
        let held = hold_check(&sample.demo, &frame.current_array(), &self.demo_geom, &self.friction)
            .map(|r| r.held)
            .unwrap_or(false);
        let message = StateMessage {
            t_us: sample.t_us,
            seq: sample.seq,
            demo: ArmSnapshot::new(&sample.demo, demo_tip),
            exec: ArmSnapshot::new(&sample.exec, exec_tip),
            deviation: self.deviation(),
            profile: profile.name(),
            scale: mapping.uniform_factor().unwrap_or(ratio),
            held,
        };
        *self.shared.latest.lock().unwrap() = Some(message);
        Ok(())
    }
}

fn is_timeout(e: &tungstenite::Error) -> bool {
    matches!(e, tungstenite::Error::Io(io) if matches!(io.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut))
}

fn serve_client(mut ws: WebSocket<TcpStream>, shared: Arc<Shared>, period: Duration) {
    let mut last_sent = None;
    let mut next_push = Instant::now();
    loop {
        if shared.stop.load(Ordering::Acquire) {
            let _ = ws.close(None);
            let _ = ws.flush();
            return;
        }
        match ws.read() {
            Ok(Message::Text(text)) => {
                if let Err(message) = parse_inbound(text.as_str())
                    .map_err(|e| e.to_string())
                    .and_then(|cmd| shared.apply(cmd))
                {
                    if ws.send(Message::text(ConsoleOutbound::error(message).to_json())).is_err() {
                        return;
                    }
                }
            }
            Ok(Message::Close(_)) => return,
            Ok(_) => {}
            Err(e) if is_timeout(&e) => {}
            Err(e) => {
                log::debug!("console client left: {e}");
                return;
            }
        }
        if Instant::now() >= next_push {
            next_push += period;
            let state = shared.latest.lock().unwrap().clone();
            if let Some(state) = state.filter(|s| Some(s.seq) != last_sent) {
                last_sent = Some(state.seq);
                if ws.send(Message::text(ConsoleOutbound::State(state).to_json())).is_err() {
                    return;
                }
            }
        }
    }
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>, period: Duration) {
    let mut clients = Vec::new();
    while !shared.stop.load(Ordering::Acquire) {
        match listener.accept() {
            Ok((stream, peer)) => {
                let setup = stream
                    .set_nonblocking(false)
                    .and_then(|_| stream.set_read_timeout(Some(period.min(Duration::from_millis(10)))));
                if let Err(e) = setup {
                    log::warn!("dropping console client {peer}: {e}");
                    continue;
                }
                match tungstenite::accept(stream) {
                    Ok(ws) => {
                        log::info!("console connected from {peer}");
                        let shared = Arc::clone(&shared);
                        clients.push(thread::spawn(move || serve_client(ws, shared, period)));
                    }
                    Err(e) => log::warn!("handshake with {peer} failed: {e}"),
                }
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
            Err(e) => {
                log::error!("accept failed: {e}");
                break;
            }
        }
    }
    for c in clients {
        let _ = c.join();
    }
}

pub fn serve(cfg: TwinConfig, args: ServeArgs) -> Result<(), Failure> {
    cfg.validate()?;
    if let Some(d) = args.duration {
        if !(d.is_finite() && d > 0.0) {
            return Err(Failure::Validation(format!("duration must be positive, got {d}")));
        }
    }
    let mut session = cfg.session_config()?;
    session.mode = SessionMode::RealTime {
        sink_rate_hz: session.rate_hz,
    };
    let demo_geom = cfg.demo_geometry()?;
    let exec_geom = cfg.exec_geometry()?;
    let noise = Normal::new(0.0, cfg.session.encoder_noise)
        .map_err(|e| Failure::Validation(format!("encoder noise: {e}")))?;

    let listener = TcpListener::bind((args.host.as_str(), args.port))
        .and_then(|l| l.set_nonblocking(true).map(|_| l))
        .map_err(|e| Failure::Transport(format!("cannot listen on {}:{}: {e}", args.host, args.port)))?;
    let addr = listener.local_addr().map_err(|e| Failure::Transport(e.to_string()))?;
    println!("listening on ws://{addr}");
    io::stdout().flush().ok();

    let shared = Arc::new(Shared {
        controls: Mutex::new(Controls {
            load: None,
            profile: session.profile,
            mapping: session.mapping,
            exec_geom: exec_geom.clone(),
            scale_version: 0,
        }),
        latest: Mutex::new(None),
        stop: AtomicBool::new(false),
        demo_length: demo_geom.total_length(),
        cfg: cfg.clone(),
    });
    let push_period = Duration::from_secs_f64(1.0 / session.rate_hz.min(MAX_PUSH_HZ));
    let acceptor = {
        let shared = Arc::clone(&shared);
        thread::spawn(move || accept_loop(listener, shared, push_period))
    };

    let dt = session.period();
    let mut demo = LiveDemonstrator {
        shared: Arc::clone(&shared),
        state: ArmState::at_rest(ArmConfig::STRAIGHT, &demo_geom.layout),
        geom: demo_geom.clone(),
        noise,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        dt,
        seq: 0,
        limit: args.duration.map(|d| (d / dt).round().max(1.0) as u32),
        recorded: args.trace.is_some().then(Vec::new),
    };
    let mut sink = ConsoleSink {
        inner: ExecutorSink::new(exec_geom, demo_geom.layout.clone(), session.mapping, session.tracking).without_log(),
        shared: Arc::clone(&shared),
        demo_geom,
        friction: cfg.friction,
        scale_version: 0,
        window: VecDeque::new(),
    };
    let mut source = std::iter::from_fn(|| demo.next());
    let result = run_session(&mut source, &mut sink, &session);
    shared.stop.store(true, Ordering::Release);
    let _ = acceptor.join();

    let stats = result.map_err(HarnessError::from)?;
    println!(
        "sent {} applied {} dropped {} stalls {} mean latency {:.0} us",
        stats.frames_sent, stats.frames_applied, stats.frames_dropped, stats.stalls, stats.mean_latency_us
    );
    if let (Some(path), Some(frames)) = (&args.trace, &demo.recorded) {
        write_trace_file(path, frames).map_err(HarnessError::from)?;
        log::info!("recorded {} frames to {}", frames.len(), path.display());
    }
    Ok(())
}
