use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::spec::Decoder;
use super::sweep::{frame_input, frame_stream, SweepConfig};
use crate::automorphism::PermutationReservoir;
use crate::code::CodeSpec;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub decoder: String,
    pub snr_db: f64,
    pub frames: usize,
    pub mean_us: f64,
    pub p95_us: f64,
}

/// Per-frame wall-clock decode time on the calling thread.
///
/// Each SNR point first decodes `warmup` frames (not recorded), then
/// `frames` measured frames; every frame is decoded by all decoders in
/// turn. Frame inputs follow the sweep numbering, with warm-up frames taken
/// after the measured ones.
pub fn run_timing(
    code: &CodeSpec,
    decoders: &[Decoder],
    config: &SweepConfig,
    reservoir: &PermutationReservoir,
    frames: usize,
    warmup: usize,
) -> Result<Vec<TimingRow>> {
    let mut rows = Vec::new();
    for (s, &snr) in config.snr_db.iter().enumerate() {
        let mut times = vec![Vec::with_capacity(frames); decoders.len()];
        for f in (frames..frames + warmup).chain(0..frames) {
            let stream = frame_stream(s, f as u64);
            let (sent, llr) = frame_input(code, config, snr, stream)?;
            for (d, t) in decoders.iter().zip(times.iter_mut()) {
                let mut res = reservoir.fork(stream);
                let start = Instant::now();
                let word = d.decode(code, &llr, &sent, &mut res)?;
                let elapsed = start.elapsed().as_secs_f64() * 1e6;
                std::hint::black_box(word);
                if f < frames {
                    t.push(elapsed);
                }
            }
        }
        for (d, mut t) in decoders.iter().zip(times) {
            t.sort_by(f64::total_cmp);
            let mean = t.iter().sum::<f64>() / t.len().max(1) as f64;
            let p95 = if t.is_empty() {
                0.0
            } else {
                t[((0.95 * t.len() as f64).ceil() as usize).clamp(1, t.len()) - 1]
            };
            rows.push(TimingRow {
                decoder: d.name().to_string(),
                snr_db: snr,
                frames,
                mean_us: mean,
                p95_us: p95,
            });
        }
    }
    Ok(rows)
}

/// Columns: decoder, snr_db, frames, mean_us, p95_us.
pub fn write_timing_csv(path: impl AsRef<Path>, rows: &[TimingRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
