//! Monte-Carlo evaluation, timing and experiment configuration.

mod config;
mod spec;
mod sweep;
mod timing;

pub use config::{
    preset, CodeConfig, EvalConfig, ExperimentConfig, HForm, ProbeConfig, ReservoirConfig, TimingConfig, PRESETS,
};
pub use spec::{Decoder, DecoderSpec};
pub use sweep::{
    frame_input, frame_stream, replay_frame, run_sweep, snr_at_fer, wilson_interval, write_sweep_csv, write_sweep_rows, DecoderStats,
    FrameRecord, StopReason, StopRule, SweepConfig, SweepPoint, SweepResult, SweepRow, Z_95,
};
pub use timing::{run_timing, write_timing_csv, TimingRow};
