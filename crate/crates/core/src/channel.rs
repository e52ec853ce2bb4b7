//! BPSK over AWGN, LLR computation and zero-codeword training batches.
//!
//! LLR convention: `l = log P(c=1 | y) / P(c=0 | y)`. With the BPSK map
//! `0 → +1, 1 → −1` this gives `l = −2y/σ²`, and a positive LLR decodes to
//! bit 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::code::CodeSpec;
use crate::error::{Error, Result};

/// Sign applied to the channel output when forming LLRs: `l = LLR_SIGN · 2y/σ²`.
pub const LLR_SIGN: f64 = -1.0;

/// How an SNR value in dB is converted to a noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrKind {
    /// Eb/N0: σ² = 1 / (2 R 10^(snr/10))
    #[default]
    EbN0,
    /// Es/N0: σ² = 1 / (2 · 10^(snr/10))
    EsN0,
}

pub fn noise_variance(snr_db: f64, rate: f64, kind: SnrKind) -> f64 {
    let lin = 10f64.powf(snr_db / 10.0);
    match kind {
        SnrKind::EbN0 => 1.0 / (2.0 * rate * lin),
        SnrKind::EsN0 => 1.0 / (2.0 * lin),
    }
}

/// Hard decision on an LLR; exact zero decodes to 0.
#[inline]
pub fn hard_decision(llr: f64) -> u8 {
    u8::from(llr > 0.0)
}

pub fn hard_decisions(llrs: &[f64]) -> Vec<u8> {
    llrs.iter().map(|&l| hard_decision(l)).collect()
}

#[inline]
pub fn bpsk(bit: u8) -> f64 {
    1.0 - 2.0 * bit as f64
}

/// RNG for an independent, reproducible stream `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnChannel {
    rate: f64,
    kind: SnrKind,
}

impl AwgnChannel {
    pub fn new(rate: f64, kind: SnrKind) -> Self {
        Self { rate, kind }
    }

    pub fn for_code(code: &CodeSpec, kind: SnrKind) -> Self {
        Self::new(code.rate(), kind)
    }

    pub fn sigma2(&self, snr_db: f64) -> f64 {
        noise_variance(snr_db, self.rate, self.kind)
    }

    /// Noisy channel outputs `y = s + n` for a codeword.
    pub fn channel_outputs<R: Rng + ?Sized>(&self, codeword: &[u8], snr_db: f64, rng: &mut R) -> Vec<f64> {
        let sigma = self.sigma2(snr_db).sqrt();
        codeword
            .iter()
            .map(|&c| {
                let z: f64 = rng.sample(StandardNormal);
                bpsk(c) + sigma * z
            })
            .collect()
    }

    pub fn llrs_from_outputs(&self, y: &[f64], snr_db: f64) -> Vec<f64> {
        let sigma2 = self.sigma2(snr_db);
        y.iter().map(|&yv| LLR_SIGN * 2.0 * yv / sigma2).collect()
    }

    /// BPSK-modulates `codeword`, adds white Gaussian noise and returns LLRs.
    pub fn transmit<R: Rng + ?Sized>(&self, codeword: &[u8], snr_db: f64, rng: &mut R) -> Vec<f64> {
        let y = self.channel_outputs(codeword, snr_db, rng);
        self.llrs_from_outputs(&y, snr_db)
    }
}

/// Noisy versions of the zero codeword at several SNR points.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBatch {
    pub llrs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<u8>>,
    pub snr_db: Vec<f64>,
}

impl ChannelBatch {
    pub fn len(&self) -> usize {
        self.llrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.llrs.is_empty()
    }
}

/// `per_snr` examples at each SNR in `snr_list`, grouped by SNR in list order.
pub fn make_batch<R: Rng + ?Sized>(
    code: &CodeSpec,
    kind: SnrKind,
    snr_list: &[f64],
    per_snr: usize,
    rng: &mut R,
) -> Result<ChannelBatch> {
    if snr_list.is_empty() {
        return Err(Error::InvalidArgument("empty SNR list".into()));
    }
    if per_snr == 0 {
        return Err(Error::InvalidArgument("per_snr must be >= 1".into()));
    }
    if let Some(bad) = snr_list.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite SNR {bad}")));
    }
    let channel = AwgnChannel::for_code(code, kind);
    let zero = vec![0u8; code.n()];
    let total = snr_list.len() * per_snr;
    let mut batch = ChannelBatch {
        llrs: Vec::with_capacity(total),
        targets: Vec::with_capacity(total),
        snr_db: Vec::with_capacity(total),
    };
    for &snr in snr_list {
        for _ in 0..per_snr {
            batch.llrs.push(channel.transmit(&zero, snr, rng));
            batch.targets.push(zero.clone());
            batch.snr_db.push(snr);
        }
    }
    Ok(batch)
}

/// Inclusive grid `start, start+step, …` up to `stop` (within rounding).
pub fn snr_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0);
    let count = ((stop - start) / step + 1e-9).floor() as i64 + 1;
    (0..count.max(0)).map(|i| start + i as f64 * step).collect()
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn snr_linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::build_bch_code;

    #[test]
    fn zero_output_gives_zero_llr() {
        let ch = AwgnChannel::new(0.5, SnrKind::EbN0);
        assert_eq!(ch.llrs_from_outputs(&[0.0], 3.0), vec![0.0]);
    }

    #[test]
    fn noiseless_zero_codeword_has_negative_llrs() {
        let ch = AwgnChannel::new(1.0, SnrKind::EbN0);
        let mut rng = stream_rng(1, 0);
        let llr = ch.transmit(&[0; 64], 80.0, &mut rng);
        assert!(llr.iter().all(|&l| l < -1e6));
        assert!(hard_decisions(&llr).iter().all(|&b| b == 0));
        let one = ch.transmit(&[1; 8], 80.0, &mut rng);
        assert!(hard_decisions(&one).iter().all(|&b| b == 1));
    }

    #[test]
    fn hard_decision_tie_is_zero() {
        assert_eq!(hard_decision(0.0), 0);
        assert_eq!(hard_decision(-0.0), 0);
        assert_eq!(hard_decision(1e-300), 1);
    }

    #[test]
    fn noise_variance_rate_scaling() {
        assert!((noise_variance(0.0, 1.0, SnrKind::EbN0) - 0.5).abs() < 1e-15);
        assert!((noise_variance(0.0, 0.5, SnrKind::EbN0) - 1.0).abs() < 1e-15);
        assert!((noise_variance(10.0, 0.5, SnrKind::EsN0) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn gaussian_mean_and_variance() {
        let mut rng = stream_rng(2024, 3);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            s += z;
            s2 += z * z;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn batch_shapes_match_table_configs() {
        let code = build_bch_code(4, 1).unwrap();
        let mut rng = stream_rng(0, 0);
        let eight = snr_grid(1.0, 8.0, 1.0);
        assert_eq!(eight.len(), 8);
        let b = make_batch(&code, SnrKind::EbN0, &eight, 20, &mut rng).unwrap();
        assert_eq!(b.len(), 160);
        // 1-6 dB at 30 per point only yields 120 with four points
        let four = snr_linspace(1.0, 6.0, 4);
        let b = make_batch(&code, SnrKind::EbN0, &four, 30, &mut rng).unwrap();
        assert_eq!(b.len(), 120);
        assert!(b.targets.iter().all(|t| t.iter().all(|&x| x == 0)));
        assert_eq!(b.snr_db[29], 1.0);
        assert_eq!(b.snr_db[119], 6.0);
        let six = snr_grid(1.0, 6.0, 1.0);
        assert_eq!(make_batch(&code, SnrKind::EbN0, &six, 30, &mut rng).unwrap().len(), 180);
    }

    #[test]
    fn batch_is_deterministic_and_rejects_empty_grid() {
        let code = build_bch_code(4, 1).unwrap();
        let a = make_batch(&code, SnrKind::EbN0, &[2.0, 3.0], 4, &mut stream_rng(9, 1)).unwrap();
        let b = make_batch(&code, SnrKind::EbN0, &[2.0, 3.0], 4, &mut stream_rng(9, 1)).unwrap();
        assert_eq!(a, b);
        assert!(make_batch(&code, SnrKind::EbN0, &[], 4, &mut stream_rng(9, 1)).is_err());
    }

    #[test]
    fn grid_includes_endpoint() {
        assert_eq!(snr_grid(1.0, 5.0, 0.5).len(), 9);
        assert_eq!(*snr_grid(1.0, 5.0, 0.5).last().unwrap(), 5.0);
    }
}
