use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::Decoder;
use crate::automorphism::PermutationReservoir;
use crate::channel::{stream_rng, AwgnChannel, SnrKind};
use crate::code::CodeSpec;
use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (edge_low, edge_high) = (k == 0, k == n);
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if edge_low { 0.0 } else { (center - half).max(0.0) };
    let high = if edge_high { 1.0 } else { (center + half).min(1.0) };
    (low, high)
}

/// Per-point stopping: stop once every decoder has `min_frame_errors` frame
/// errors, or after `max_frames` frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    pub min_frame_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_frame_errors: 100,
            max_frames: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub stop: StopRule,
    pub seed: u64,
    #[serde(default)]
    pub snr_kind: SnrKind,
    /// Transmit uniformly random codewords instead of the all-zero word.
    #[serde(default)]
    pub random_codewords: bool,
    /// Frames decoded in parallel between stop-rule checks.
    #[serde(default = "default_chunk")]
    pub chunk_frames: usize,
}

fn default_chunk() -> usize {
    512
}

impl SweepConfig {
    pub fn new(snr_db: Vec<f64>, stop: StopRule, seed: u64) -> Self {
        Self {
            snr_db,
            stop,
            seed,
            snr_kind: SnrKind::EbN0,
            random_codewords: false,
            chunk_frames: default_chunk(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.stop.max_frames == 0 || self.chunk_frames == 0 {
            return Err(Error::Config("max_frames and chunk_frames must be >= 1".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR values must be finite".into()));
        }
        Ok(())
    }
}

/// Noise stream of frame `frame` at SNR index `point`.
pub fn frame_stream(point: usize, frame: u64) -> u64 {
    ((point as u64) << 40) | frame
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Errors,
    Frames,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecoderStats {
    pub decoder: String,
    pub bit_errors: u64,
    pub frame_errors: u64,
    /// Summed wall-clock decode time.
    pub decode_ns: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub frames: u64,
    pub stopped_by: StopReason,
    pub decoders: Vec<DecoderStats>,
    /// `disagreements[a][b]`: frames on which decoders `a` and `b` returned
    /// different words.
    pub disagreements: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub n: usize,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

/// One CSV row: a decoder at an SNR point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub decoder: String,
    pub snr_db: f64,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub ber_ci_low: f64,
    pub ber_ci_high: f64,
    pub fer: f64,
    pub fer_ci_low: f64,
    pub fer_ci_high: f64,
    pub mean_decode_us: f64,
    pub stopped_by: StopReason,
}

impl SweepResult {
    pub fn rows(&self) -> Vec<SweepRow> {
        let mut rows = Vec::new();
        for p in &self.points {
            let bits = p.frames * self.n as u64;
            for d in &p.decoders {
                let (bl, bh) = wilson_interval(d.bit_errors, bits, Z_95);
                let (fl, fh) = wilson_interval(d.frame_errors, p.frames, Z_95);
                rows.push(SweepRow {
                    decoder: d.decoder.clone(),
                    snr_db: p.snr_db,
                    frames: p.frames,
                    bit_errors: d.bit_errors,
                    frame_errors: d.frame_errors,
                    ber: d.bit_errors as f64 / bits as f64,
                    ber_ci_low: bl,
                    ber_ci_high: bh,
                    fer: d.frame_errors as f64 / p.frames as f64,
                    fer_ci_low: fl,
                    fer_ci_high: fh,
                    mean_decode_us: d.decode_ns as f64 / p.frames as f64 / 1e3,
                    stopped_by: p.stopped_by,
                });
            }
        }
        rows
    }

    /// Row of `decoder` at every point, in point order.
    pub fn curve(&self, decoder: &str) -> Vec<SweepRow> {
        self.rows().into_iter().filter(|r| r.decoder == decoder).collect()
    }
}

/// Columns: decoder, snr_db, frames, bit_errors, frame_errors, ber,
/// ber_ci_low, ber_ci_high, fer, fer_ci_low, fer_ci_high, mean_decode_us,
/// stopped_by.
pub fn write_sweep_csv(path: impl AsRef<Path>, result: &SweepResult) -> Result<()> {
    write_sweep_rows(path, &result.rows())
}

pub fn write_sweep_rows(path: impl AsRef<Path>, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// The channel input and every decoder's output for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub stream: u64,
    pub sent: Vec<u8>,
    pub llr: Vec<f64>,
    pub outputs: Vec<Vec<u8>>,
    pub decode_ns: Vec<u128>,
}

/// Channel input of one frame: the transmitted word and its LLRs.
pub fn frame_input(code: &CodeSpec, config: &SweepConfig, snr_db: f64, stream: u64) -> Result<(Vec<u8>, Vec<f64>)> {
    let channel = AwgnChannel::for_code(code, config.snr_kind);
    let mut rng = stream_rng(config.seed, stream);
    let sent = if config.random_codewords {
        let message: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
        code.encode(&message)?
    } else {
        vec![0; code.n()]
    };
    let llr = channel.transmit(&sent, snr_db, &mut rng);
    Ok((sent, llr))
}

/// Reproduces frame `frame` of SNR point `point` exactly as the sweep saw it.
pub fn replay_frame(
    code: &CodeSpec,
    decoders: &[Decoder],
    config: &SweepConfig,
    reservoir: &PermutationReservoir,
    point: usize,
    frame: u64,
) -> Result<FrameRecord> {
    let snr = *config
        .snr_db
        .get(point)
        .ok_or_else(|| Error::InvalidArgument(format!("no SNR point {point}")))?;
    run_frame(code, decoders, config, reservoir, snr, frame_stream(point, frame))
}

fn run_frame(
    code: &CodeSpec,
    decoders: &[Decoder],
    config: &SweepConfig,
    reservoir: &PermutationReservoir,
    snr_db: f64,
    stream: u64,
) -> Result<FrameRecord> {
    let (sent, llr) = frame_input(code, config, snr_db, stream)?;
    let mut outputs = Vec::with_capacity(decoders.len());
    let mut decode_ns = Vec::with_capacity(decoders.len());
    for d in decoders {
        let mut res = reservoir.fork(stream);
        let start = Instant::now();
        let word = d.decode(code, &llr, &sent, &mut res).map_err(|e| Error::Frame {
            decoder: d.name().to_string(),
            snr_db,
            seed: config.seed,
            stream,
            source: Box::new(e),
        })?;
        decode_ns.push(start.elapsed().as_nanos());
        outputs.push(word);
    }
    Ok(FrameRecord {
        stream,
        sent,
        llr,
        outputs,
        decode_ns,
    })
}

/// Monte-Carlo BER/FER sweep of one or more decoders on identical noise.
///
/// Frame `f` of point `s` uses noise stream [`frame_stream`]`(s, f)` of
/// `config.seed`, and each decoder draws its permutations from a fresh
/// `reservoir.fork` of the same stream. Frames are decoded in parallel and
/// merged in frame order, and the stop rule is checked after every frame, so
/// results do not depend on the worker count or chunk size.
pub fn run_sweep(
    code: &CodeSpec,
    decoders: &[Decoder],
    config: &SweepConfig,
    reservoir: &PermutationReservoir,
) -> Result<SweepResult> {
    config.validate()?;
    if decoders.is_empty() {
        return Err(Error::Config("sweep needs at least one decoder".into()));
    }
    let nd = decoders.len();
    let mut points = Vec::with_capacity(config.snr_db.len());
    for (s, &snr) in config.snr_db.iter().enumerate() {
        let mut stats: Vec<DecoderStats> = decoders
            .iter()
            .map(|d| DecoderStats {
                decoder: d.name().to_string(),
                bit_errors: 0,
                frame_errors: 0,
                decode_ns: 0,
            })
            .collect();
        let mut disagreements = vec![vec![0u64; nd]; nd];
        let mut frames = 0u64;
        let mut stopped_by = StopReason::Frames;
        'point: while frames < config.stop.max_frames {
            let chunk = (config.chunk_frames as u64).min(config.stop.max_frames - frames);
            let records: Vec<Result<FrameRecord>> = (frames..frames + chunk)
                .into_par_iter()
                .map(|f| run_frame(code, decoders, config, reservoir, snr, frame_stream(s, f)))
                .collect();
            for rec in records {
                let rec = rec?;
                frames += 1;
                for (st, (out, ns)) in stats.iter_mut().zip(rec.outputs.iter().zip(&rec.decode_ns)) {
                    let errors = out.iter().zip(&rec.sent).filter(|(a, b)| a != b).count() as u64;
                    st.bit_errors += errors;
                    st.frame_errors += u64::from(errors > 0);
                    st.decode_ns += ns;
                }
                for a in 0..nd {
                    for b in a + 1..nd {
                        if rec.outputs[a] != rec.outputs[b] {
                            disagreements[a][b] += 1;
                            disagreements[b][a] += 1;
                        }
                    }
                }
                if stats.iter().all(|st| st.frame_errors >= config.stop.min_frame_errors) {
                    stopped_by = StopReason::Errors;
                    break 'point;
                }
                if frames >= config.stop.max_frames {
                    break 'point;
                }
            }
        }
        points.push(SweepPoint {
            snr_db: snr,
            frames,
            stopped_by,
            decoders: stats,
            disagreements,
        });
    }
    Ok(SweepResult {
        n: code.n(),
        seed: config.seed,
        points,
    })
}

/// Interpolated SNR at which a FER curve crosses `target`, linear in
/// `(snr, log10 FER)` between the first bracketing pair of points. Points
/// with zero frame errors are skipped.
pub fn snr_at_fer(curve: &[SweepRow], target: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter(|r| r.frame_errors > 0)
        .map(|r| (r.snr_db, r.fer.log10()))
        .collect();
    let t = target.log10();
    pts.windows(2).find_map(|w| {
        let ((s0, f0), (s1, f1)) = (w[0], w[1]);
        if f0 >= t && f1 <= t && f0 != f1 {
            Some(s0 + (t - f0) * (s1 - s0) / (f1 - f0))
        } else if f0 == t {
            Some(s0)
        } else {
            None
        }
    })
}
