use super::frame::{decode_frame, encode_frame, TendonFrame};
use super::transport::{open_link, Endpoint};
use crate::arm_model::{config_from_tendons, ArmConfig, ArmGeometry, TendonLayout, TendonVector, TENDONS_PER_SECTION};
use crate::twin_control::{executor_track, map_tendons, ControlError, ScaleMapping, StiffnessProfile, TrackingParams};
use crossbeam::queue::ArrayQueue;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

/// Bound of the queue between the receiving side and the executor.
pub const QUEUE_CAPACITY: usize = 4;

/// Produces demonstrator frames, one per session tick, until exhausted.
pub trait FrameSource: Send {
    fn next_frame(&mut self) -> Option<TendonFrame>;
}

impl<I: Iterator<Item = TendonFrame> + Send> FrameSource for I {
    fn next_frame(&mut self) -> Option<TendonFrame> {
        self.next()
    }
}

/// Receives decoded frames in increasing sequence order.
pub trait FrameSink: Send {
    /// `dt` is the time since the previously applied frame, s.
    fn apply(&mut self, frame: &TendonFrame, dt: f64) -> Result<(), ControlError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionMode {
    /// Single-threaded: every frame is sent, received and applied before the
    /// next is produced. Deterministic and free of wall-clock pacing.
    Lockstep,
    /// Producer paced at the session rate and executor paced at `sink_rate_hz`
    /// on separate threads, joined by a drop-oldest queue.
    RealTime { sink_rate_hz: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Demonstrator sampling rate, Hz.
    pub rate_hz: f64,
    pub mapping: ScaleMapping,
    pub profile: StiffnessProfile,
    pub tracking: TrackingParams,
    pub endpoint: Endpoint,
    pub mode: SessionMode,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            rate_hz: 100.0,
            mapping: ScaleMapping::IDENTITY,
            profile: StiffnessProfile::default(),
            tracking: TrackingParams::default(),
            endpoint: Endpoint::Loopback,
            mode: SessionMode::Lockstep,
        }
    }
}

fn rate_ok(hz: f64) -> bool {
    (1.0..=1000.0).contains(&hz)
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        if !rate_ok(self.rate_hz) {
            return Err(SessionError::InvalidConfig(format!("rate {} Hz outside [1, 1000]", self.rate_hz)));
        }
        if let SessionMode::RealTime { sink_rate_hz } = self.mode {
            if !rate_ok(sink_rate_hz) {
                return Err(SessionError::InvalidConfig(format!("sink rate {sink_rate_hz} Hz outside [1, 1000]")));
            }
        }
        self.tracking.validate().map_err(|e| SessionError::InvalidConfig(e.to_string()))
    }

    pub fn period(&self) -> f64 {
        1.0 / self.rate_hz
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SessionStats {
    pub frames_sent: u64,
    pub frames_received: u64,
    pub frames_applied: u64,
    /// Frames overwritten in the queue or skipped for a newer one.
    pub frames_dropped: u64,
    pub frames_corrupt: u64,
    /// Frames discarded for arriving with a sequence number not above the last applied one.
    pub out_of_order: u64,
    /// Executor ticks that found nothing to apply while the producer was still running.
    pub stalls: u64,
    /// Mean time from send to apply, microseconds.
    pub mean_latency_us: f64,
}

impl SessionStats {
    pub fn drop_fraction(&self) -> f64 {
        if self.frames_sent == 0 {
            0.0
        } else {
            self.frames_dropped as f64 / self.frames_sent as f64
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("transport failed after {} frames: {source}", stats.frames_sent)]
    Transport { source: io::Error, stats: SessionStats },
    #[error("executor rejected frame {seq}: {source}")]
    Sink {
        seq: u32,
        source: ControlError,
        stats: SessionStats,
    },
}

impl SessionError {
    /// Statistics gathered before the failure.
    pub fn partial_stats(&self) -> Option<&SessionStats> {
        match self {
            SessionError::InvalidConfig(_) => None,
            SessionError::Transport { stats, .. } | SessionError::Sink { stats, .. } => Some(stats),
        }
    }
}

/// Executor-side bookkeeping shared by both modes.
struct Applier {
    last: Option<(u32, u64)>,
    default_dt: f64,
    latency_sum: f64,
    stats: SessionStats,
}

impl Applier {
    fn new(cfg: &SessionConfig) -> Self {
        Applier {
            last: None,
            default_dt: cfg.period(),
            latency_sum: 0.0,
            stats: SessionStats::default(),
        }
    }

    /// Decodes and applies one message. Returns the applied sequence number.
    fn handle(&mut self, bytes: &[u8], sink: &mut dyn FrameSink) -> Result<Option<u32>, (u32, ControlError)> {
        let Ok(frame) = decode_frame(bytes) else {
            self.stats.frames_corrupt += 1;
            return Ok(None);
        };
        let dt = match self.last {
            Some((seq, _)) if frame.seq <= seq => {
                self.stats.out_of_order += 1;
                return Ok(None);
            }
            Some((_, t)) if frame.t_us > t => (frame.t_us - t) as f64 * 1e-6,
            _ => self.default_dt,
        };
        sink.apply(&frame, dt).map_err(|e| (frame.seq, e))?;
        self.last = Some((frame.seq, frame.t_us));
        self.stats.frames_applied += 1;
        Ok(Some(frame.seq))
    }

    fn record_latency(&mut self, sent: Instant) {
        self.latency_sum += sent.elapsed().as_secs_f64() * 1e6;
    }

    fn finish(mut self) -> SessionStats {
        if self.stats.frames_applied > 0 {
            self.stats.mean_latency_us = self.latency_sum / self.stats.frames_applied as f64;
        }
        self.stats
    }
}

/// Streams frames from `source` to `sink` through the configured transport.
///
/// On a transport failure the session stops and the error carries the
/// statistics gathered so far.
pub fn run_session(
    source: &mut dyn FrameSource,
    sink: &mut dyn FrameSink,
    cfg: &SessionConfig,
) -> Result<SessionStats, SessionError> {
    cfg.validate()?;
    match cfg.mode {
        SessionMode::Lockstep => run_lockstep(source, sink, cfg),
        SessionMode::RealTime { sink_rate_hz } => run_realtime(source, sink, cfg, sink_rate_hz),
    }
}

fn run_lockstep(
    source: &mut dyn FrameSource,
    sink: &mut dyn FrameSink,
    cfg: &SessionConfig,
) -> Result<SessionStats, SessionError> {
    let mut applier = Applier::new(cfg);
    let (mut tx, mut rx) = open_link(&cfg.endpoint).map_err(|source| SessionError::Transport {
        source,
        stats: SessionStats::default(),
    })?;
    while let Some(frame) = source.next_frame() {
        let sent = Instant::now();
        let received = tx.send(&encode_frame(&frame)).and_then(|_| {
            applier.stats.frames_sent += 1;
            rx.recv()?
                .ok_or_else(|| io::Error::new(io::ErrorKind::UnexpectedEof, "link closed"))
        });
        let bytes = match received {
            Ok(b) => b,
            Err(source) => {
                return Err(SessionError::Transport {
                    source,
                    stats: applier.finish(),
                })
            }
        };
        applier.stats.frames_received += 1;
        match applier.handle(&bytes, sink) {
            Ok(Some(_)) => applier.record_latency(sent),
            Ok(None) => {}
            Err((seq, source)) => {
                return Err(SessionError::Sink {
                    seq,
                    source,
                    stats: applier.finish(),
                })
            }
        }
    }
    Ok(applier.finish())
}

fn sleep_until(deadline: Instant) {
    let now = Instant::now();
    if deadline > now {
        thread::sleep(deadline - now);
    }
}

fn run_realtime(
    source: &mut dyn FrameSource,
    sink: &mut dyn FrameSink,
    cfg: &SessionConfig,
    sink_rate_hz: f64,
) -> Result<SessionStats, SessionError> {
    let (tx, mut rx) = open_link(&cfg.endpoint).map_err(|source| SessionError::Transport {
        source,
        stats: SessionStats::default(),
    })?;
    let queue = ArrayQueue::<Vec<u8>>::new(QUEUE_CAPACITY);
    let sent_at = Mutex::new(HashMap::<u32, Instant>::new());
    let evicted = AtomicU64::new(0);
    let received = AtomicU64::new(0);
    let producer_done = AtomicBool::new(false);
    let reader_done = AtomicBool::new(false);
    let stop = AtomicBool::new(false);
    let producer_period = Duration::from_secs_f64(cfg.period());
    let sink_period = Duration::from_secs_f64(1.0 / sink_rate_hz);
    let mut applier = Applier::new(cfg);
    let start = Instant::now();

    let (sent, send_error, recv_error, sink_error) = thread::scope(|s| {
        let (queue, sent_at, stop) = (&queue, &sent_at, &stop);
        let (evicted, received, producer_done, reader_done) = (&evicted, &received, &producer_done, &reader_done);

        let producer = s.spawn(move || {
            let mut tx = tx;
            let mut sent = 0u64;
            let mut error = None;
            let mut deadline = start;
            while !stop.load(Ordering::Acquire) {
                let Some(frame) = source.next_frame() else { break };
                sleep_until(deadline);
                deadline += producer_period;
                sent_at.lock().unwrap().insert(frame.seq, Instant::now());
                if let Err(e) = tx.send(&encode_frame(&frame)) {
                    error = Some(e);
                    break;
                }
                sent += 1;
            }
            producer_done.store(true, Ordering::Release);
            (sent, error)
        });

        let reader = s.spawn(move || {
            let result = loop {
                match rx.recv() {
                    Ok(Some(bytes)) => {
                        received.fetch_add(1, Ordering::Relaxed);
                        if queue.force_push(bytes).is_some() {
                            evicted.fetch_add(1, Ordering::Relaxed);
                        }
                    }
                    Ok(None) => break None,
                    Err(e) => break Some(e),
                }
            };
            reader_done.store(true, Ordering::Release);
            result
        });

        let mut sink_error = None;
        let mut tick = start + sink_period;
        loop {
            sleep_until(tick);
            tick += sink_period;
            let finished = reader_done.load(Ordering::Acquire);
            let producing = !producer_done.load(Ordering::Acquire);
            let mut newest = None;
            while let Some(bytes) = queue.pop() {
                if newest.replace(bytes).is_some() {
                    applier.stats.frames_dropped += 1;
                }
            }
            match newest {
                None if finished => break,
                None => {
                    if producing {
                        applier.stats.stalls += 1;
                    }
                }
                Some(_) if sink_error.is_some() => {}
                Some(bytes) => match applier.handle(&bytes, sink) {
                    Ok(Some(seq)) => {
                        let mut map = sent_at.lock().unwrap();
                        if let Some(t) = map.remove(&seq) {
                            applier.record_latency(t);
                        }
                        map.retain(|k, _| *k > seq);
                    }
                    Ok(None) => {}
                    Err(e) => {
                        sink_error = Some(e);
                        stop.store(true, Ordering::Release);
                    }
                },
            }
        }
        let (sent, send_error) = producer.join().expect("producer thread panicked");
        let recv_error = reader.join().expect("reader thread panicked");
        (sent, send_error, recv_error, sink_error)
    });

    applier.stats.frames_sent = sent;
    applier.stats.frames_received = received.load(Ordering::Relaxed);
    applier.stats.frames_dropped += evicted.load(Ordering::Relaxed);
    let stats = applier.finish();
    if let Some((seq, source)) = sink_error {
        return Err(SessionError::Sink { seq, source, stats });
    }
    if let Some(source) = send_error.or(recv_error) {
        return Err(SessionError::Transport { source, stats });
    }
    Ok(stats)
}

/// What the executor did with one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExecutorSample {
    pub seq: u32,
    pub t_us: u64,
    /// Demonstrator configuration perceived from the frame's tendon lengths.
    pub demo: ArmConfig,
    /// Executor configuration after tracking.
    pub exec: ArmConfig,
}

/// The simulated executor arm: scales incoming tendon displacements, tracks
/// them with its actuators and perceives its own configuration from the result.
#[derive(Debug, Clone)]
pub struct ExecutorSink {
    geom: ArmGeometry,
    demo_layout: TendonLayout,
    mapping: ScaleMapping,
    tracking: TrackingParams,
    tendons: TendonVector,
    latest: Option<ExecutorSample>,
    log: Option<Vec<ExecutorSample>>,
}

impl ExecutorSink {
    /// An executor at rest, straight.
    pub fn new(geom: ArmGeometry, demo_layout: TendonLayout, mapping: ScaleMapping, tracking: TrackingParams) -> Self {
        ExecutorSink {
            geom,
            demo_layout,
            mapping,
            tracking,
            tendons: TendonVector::ZERO,
            latest: None,
            log: Some(Vec::new()),
        }
    }

    /// Keeps only the latest sample instead of the full history.
    pub fn without_log(mut self) -> Self {
        self.log = None;
        self
    }

    pub fn set_mapping(&mut self, mapping: ScaleMapping) {
        self.mapping = mapping;
    }

    /// Swaps in a differently sized executor. Tendon displacements are scaled
    /// with the radii so the arm keeps its bend angles.
    pub fn rescale(&mut self, geom: ArmGeometry, mapping: ScaleMapping) {
        let (old, new) = (self.mapping.factors(), mapping.factors());
        for (k, dl) in self.tendons.0.iter_mut().enumerate() {
            let i = k / TENDONS_PER_SECTION;
            *dl *= new[i] / old[i];
        }
        self.geom = geom;
        self.mapping = mapping;
    }

    pub fn mapping(&self) -> ScaleMapping {
        self.mapping
    }

    pub fn geometry(&self) -> &ArmGeometry {
        &self.geom
    }

    pub fn tendons(&self) -> &TendonVector {
        &self.tendons
    }

    pub fn config(&self) -> ArmConfig {
        self.latest.map(|s| s.exec).unwrap_or(ArmConfig::STRAIGHT)
    }

    pub fn latest(&self) -> Option<&ExecutorSample> {
        self.latest.as_ref()
    }

    pub fn log(&self) -> &[ExecutorSample] {
        self.log.as_deref().unwrap_or(&[])
    }

    pub fn into_log(self) -> Vec<ExecutorSample> {
        self.log.unwrap_or_default()
    }
}

impl FrameSink for ExecutorSink {
    fn apply(&mut self, frame: &TendonFrame, dt: f64) -> Result<(), ControlError> {
        let demo_dl = frame.displacement_vector();
        let commanded = map_tendons(&demo_dl, &self.mapping);
        self.tendons = executor_track(&commanded, &self.tendons, &self.tracking, dt)?;
        let sample = ExecutorSample {
            seq: frame.seq,
            t_us: frame.t_us,
            demo: config_from_tendons(&demo_dl, &self.demo_layout).config,
            exec: config_from_tendons(&self.tendons, &self.geom.layout).config,
        };
        self.latest = Some(sample);
        if let Some(log) = &mut self.log {
            log.push(sample);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arm_model::tendon_lengths;

    fn frames(n: u32, period_us: u64) -> Vec<TendonFrame> {
        let layout = TendonLayout::default();
        (0..n)
            .map(|k| {
                let t = k as f64 * 0.01;
                let config = ArmConfig::from_angles([(0.3 + 0.2 * t.sin(), t), (0.2, 1.0 - t), (0.1 * t, 2.0)]);
                TendonFrame::new(k, k as u64 * period_us, &tendon_lengths(&config, &layout), &[0.1; 9])
            })
            .collect()
    }

    fn ideal_sink() -> ExecutorSink {
        ExecutorSink::new(
            ArmGeometry::demonstrator(),
            TendonLayout::default(),
            ScaleMapping::IDENTITY,
            TrackingParams::IDEAL,
        )
    }

    #[test]
    fn rate_bounds() {
        let mut cfg = SessionConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.rate_hz = 0.5;
        assert!(cfg.validate().is_err());
        cfg.rate_hz = 1000.0;
        assert!(cfg.validate().is_ok());
        cfg.mode = SessionMode::RealTime { sink_rate_hz: 2000.0 };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rescale_keeps_bend_angles() {
        let mut sink = ideal_sink();
        run_session(&mut frames(5, 10_000).into_iter(), &mut sink, &SessionConfig::default()).unwrap();
        let before = config_from_tendons(sink.tendons(), &sink.geometry().layout).config;
        let x = 1.5;
        sink.rescale(ArmGeometry::demonstrator().scaled(x), ScaleMapping::uniform(x).unwrap());
        let after = config_from_tendons(sink.tendons(), &sink.geometry().layout).config;
        for (a, b) in before.thetas().iter().zip(after.thetas()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lockstep_applies_every_frame() {
        let mut sink = ideal_sink();
        let stats = run_session(&mut frames(50, 10_000).into_iter(), &mut sink, &SessionConfig::default()).unwrap();
        assert_eq!((stats.frames_sent, stats.frames_applied, stats.frames_dropped), (50, 50, 0));
        for s in sink.log() {
            assert_eq!(s.demo, s.exec);
        }
    }

    #[test]
    fn lockstep_over_tcp() {
        let cfg = SessionConfig {
            endpoint: Endpoint::Tcp("127.0.0.1:0".into()),
            ..Default::default()
        };
        let mut sink = ideal_sink();
        let stats = run_session(&mut frames(20, 10_000).into_iter(), &mut sink, &cfg).unwrap();
        assert_eq!(stats.frames_applied, 20);
    }

    #[test]
    fn stale_frames_are_not_applied() {
        let mut f = frames(5, 10_000);
        f.swap(2, 3);
        let mut sink = ideal_sink();
        let stats = run_session(&mut f.into_iter(), &mut sink, &SessionConfig::default()).unwrap();
        assert_eq!(stats.out_of_order, 1);
        let seqs: Vec<u32> = sink.log().iter().map(|s| s.seq).collect();
        assert_eq!(seqs, [0, 1, 3, 4]);
    }

    #[test]
    fn realtime_matched_rates_applies_in_order() {
        let cfg = SessionConfig {
            rate_hz: 200.0,
            mode: SessionMode::RealTime { sink_rate_hz: 1000.0 },
            ..Default::default()
        };
        let mut sink = ideal_sink();
        let stats = run_session(&mut frames(40, 5_000).into_iter(), &mut sink, &cfg).unwrap();
        assert_eq!(stats.frames_sent, 40);
        assert_eq!(stats.out_of_order, 0);
        assert!(sink.log().windows(2).all(|w| w[1].seq > w[0].seq));
        assert_eq!(sink.log().last().unwrap().seq, 39);
    }
}
