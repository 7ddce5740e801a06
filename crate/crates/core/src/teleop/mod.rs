//! Demonstrator to executor streaming: the binary tendon frame, its transport,
//! session orchestration, CSV traces and the console feed messages.

pub mod console;
mod frame;
mod session;
mod trace;
mod transport;

pub use frame::{decode_frame, encode_frame, FrameError, TendonFrame, CRC_OFFSET, FRAME_LEN, MAGIC, VERSION};
pub use session::{
    run_session, ExecutorSample, ExecutorSink, FrameSink, FrameSource, SessionConfig, SessionError, SessionMode,
    SessionStats, QUEUE_CAPACITY,
};
pub use trace::{read_trace, record_trace, replay_trace, trace_header, write_trace_file, TraceError, TraceReplay};
pub use transport::{read_message, write_message, Endpoint, MAX_MESSAGE};
