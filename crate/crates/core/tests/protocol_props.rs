use proptest::prelude::*;
use twinarm_core::arm_model::{ArmGeometry, TendonLayout, TendonVector};
use twinarm_core::teleop::{
    decode_frame, encode_frame, read_trace, record_trace, run_session, Endpoint, ExecutorSink, FrameError,
    FrameSink, SessionConfig, SessionMode, TendonFrame, FRAME_LEN,
};
use twinarm_core::twin_control::{ControlError, ScaleMapping, TrackingParams};

fn any_frame() -> impl Strategy<Value = TendonFrame> {
    (any::<u32>(), any::<u64>(), prop::array::uniform9(any::<f32>()), prop::array::uniform9(any::<f32>())).prop_map(
        |(seq, t_us, displacements, currents)| TendonFrame {
            seq,
            t_us,
            displacements,
            currents,
        },
    )
}

proptest! {
    #[test]
    fn codec_round_trip_is_bit_exact(frame in any_frame()) {
        let bytes = encode_frame(&frame);
        prop_assert_eq!(bytes.len(), FRAME_LEN);
        prop_assert!(decode_frame(&bytes).unwrap().bit_eq(&frame));
    }

    #[test]
    fn single_bit_flips_are_caught(frame in any_frame(), bit in 0usize..FRAME_LEN * 8) {
        let mut bytes = encode_frame(&frame);
        bytes[bit / 8] ^= 1 << (bit % 8);
        let is_crc_mismatch = matches!(decode_frame(&bytes), Err(FrameError::CrcMismatch { .. }));
        prop_assert!(is_crc_mismatch);
    }

    #[test]
    fn trace_round_trip_is_bit_exact(frames in prop::collection::vec(any_frame(), 0..20)) {
        // the trace format carries finite values only
        let frames: Vec<TendonFrame> = frames
            .into_iter()
            .map(|mut f| {
                f.displacements = f.displacements.map(|v| if v.is_finite() { v } else { 0.0 });
                f.currents = f.currents.map(|v| if v.is_finite() { v } else { 0.0 });
                f
            })
            .collect();
        let mut buf = Vec::new();
        record_trace(&frames, &mut buf).unwrap();
        let back = read_trace(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), frames.len());
        for (a, b) in frames.iter().zip(&back) {
            prop_assert!(a.bit_eq(b));
        }
    }
}

fn frames(n: u32, rate_hz: f64) -> Vec<TendonFrame> {
    (0..n)
        .map(|k| {
            let t = k as f64 / rate_hz;
            let dl = TendonVector(std::array::from_fn(|j| 0.01 * (t + j as f64).sin()));
            TendonFrame::new(k, (t * 1e6).round() as u64, &dl, &[0.2; 9])
        })
        .collect()
}

struct Recorder(Vec<u32>);

impl FrameSink for Recorder {
    fn apply(&mut self, frame: &TendonFrame, _dt: f64) -> Result<(), ControlError> {
        self.0.push(frame.seq);
        Ok(())
    }
}

#[test]
fn realtime_session_keeps_order_under_drops() {
    let cfg = SessionConfig {
        rate_hz: 1000.0,
        mode: SessionMode::RealTime { sink_rate_hz: 100.0 },
        ..Default::default()
    };
    let mut sink = Recorder(Vec::new());
    let stats = run_session(&mut frames(1000, 1000.0).into_iter(), &mut sink, &cfg).unwrap();
    assert!(sink.0.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(stats.out_of_order, 0);
    assert_eq!(stats.frames_applied as usize, sink.0.len());
    assert_eq!(stats.frames_sent, 1000);
    assert!(stats.drop_fraction() > 0.8, "{stats:?}");
}

#[test]
fn ideal_session_copies_state() {
    let layout = TendonLayout::default();
    let geom = ArmGeometry::demonstrator();
    let input = frames(200, 100.0);
    for endpoint in [Endpoint::Loopback, Endpoint::Tcp("127.0.0.1:0".into())] {
        let cfg = SessionConfig {
            endpoint,
            ..Default::default()
        };
        let mut sink = ExecutorSink::new(geom.clone(), layout.clone(), ScaleMapping::IDENTITY, TrackingParams::IDEAL);
        run_session(&mut input.clone().into_iter(), &mut sink, &cfg).unwrap();
        assert_eq!(sink.log().len(), input.len());
        for (s, f) in sink.log().iter().zip(&input) {
            assert_eq!(s.seq, f.seq);
            assert_eq!(s.demo, s.exec);
        }
        assert_eq!(*sink.tendons(), input.last().unwrap().displacement_vector());
    }
}
