use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grad::batch_gradient;
use super::loss::LossBreakdown;
use super::optim::{rmsprop_step, RmsPropConfig, TrainState};
use crate::automorphism::PermutationReservoir;
use crate::channel::{make_batch, stream_rng, AwgnChannel, SnrKind};
use crate::code::CodeSpec;
use crate::decoder::{decode_hard, DecoderConfig, DecoderParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    /// Empty means the training grid.
    #[serde(default)]
    pub snr_db: Vec<f64>,
    pub frames_per_snr: usize,
    /// Validate after every `every` epochs; 0 disables validation.
    pub every: usize,
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            snr_db: Vec::new(),
            frames_per_snr: 10_000,
            every: 1,
            seed: 0x5eed_0f_7a11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: RmsPropConfig,
    pub snr_db: Vec<f64>,
    pub per_snr: usize,
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    #[serde(default = "one")]
    pub batches_per_epoch: usize,
    #[serde(default)]
    pub snr_kind: SnrKind,
    #[serde(default)]
    pub validation: ValidationConfig,
}

fn one() -> usize {
    1
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.optimizer.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if !(self.optimizer.grad_clip > 0.0) {
            return bad("grad_clip must be > 0");
        }
        if !(0.0..1.0).contains(&self.optimizer.rms_decay) {
            return bad("rms_decay must lie in [0, 1)");
        }
        if self.snr_db.is_empty() || self.per_snr == 0 || self.batches_per_epoch == 0 {
            return bad("training batch must contain at least one example");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and >= 0");
        }
        Ok(())
    }

    pub fn batch_size(&self) -> usize {
        self.snr_db.len() * self.per_snr
    }

    pub fn validation_grid(&self) -> &[f64] {
        if self.validation.snr_db.is_empty() {
            &self.snr_db
        } else {
            &self.validation.snr_db
        }
    }
}

/// One learning-curve row. Epoch 0 is the initial (unit) weights evaluated on
/// a batch that is not trained on; epoch `e ≥ 1` reports the loss of the
/// batches used in that epoch at the weights the epoch started from, and the
/// validation BER after its update.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: LossBreakdown,
    pub val_ber: Option<f64>,
    pub val_ber_per_snr: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct CsvRow {
    epoch: usize,
    total_loss: f64,
    l1_sum: f64,
    l2_sum: f64,
    l3: f64,
    val_ber: Option<f64>,
}

pub fn write_history_csv(path: impl AsRef<Path>, history: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in history {
        w.serialize(CsvRow {
            epoch: r.epoch,
            total_loss: r.loss.total,
            l1_sum: r.loss.l1_sum(),
            l2_sum: r.loss.l2_sum(),
            l3: r.loss.l3,
            val_ber: r.val_ber,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub state: TrainState,
    pub history: Vec<EpochRecord>,
    /// Weight snapshots requested through `snapshot_epochs`, in epoch order.
    pub snapshots: Vec<(usize, DecoderParams)>,
    /// Validated weights with the lowest aggregate validation BER; the
    /// earliest epoch wins ties. `None` when validation never ran.
    pub best: Option<(usize, DecoderParams)>,
}

/// Bit errors of the validation run at one SNR point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationPoint {
    pub snr_db: f64,
    pub frames: usize,
    pub bit_errors: u64,
    pub frame_errors: u64,
}

impl ValidationPoint {
    pub fn ber(&self, n: usize) -> f64 {
        self.bit_errors as f64 / (self.frames * n) as f64
    }
}

/// Decodes a held-out set of zero-codeword frames. Frame `f` of SNR point `s`
/// draws its noise from stream `s · frames + f` of `val.seed` and its
/// permutations from `reservoir.fork` of the same stream, so the same frames
/// are seen at every epoch and by every weight vector.
pub fn validate(
    code: &CodeSpec,
    params: &DecoderParams,
    decoder: &DecoderConfig,
    grid: &[f64],
    val: &ValidationConfig,
    kind: SnrKind,
    reservoir: &PermutationReservoir,
) -> Result<Vec<ValidationPoint>> {
    let channel = AwgnChannel::for_code(code, kind);
    let zero = vec![0u8; code.n()];
    grid.iter()
        .enumerate()
        .map(|(s, &snr)| {
            let counts = (0..val.frames_per_snr)
                .into_par_iter()
                .map(|f| {
                    let stream = (s * val.frames_per_snr + f) as u64;
                    let llr = channel.transmit(&zero, snr, &mut stream_rng(val.seed, stream));
                    let perms = reservoir.fork(stream).sample_many(decoder.i_permutations);
                    let out = decode_hard(params, decoder, code, &perms, &llr)?;
                    let errors = out.word.iter().filter(|&&b| b != 0).count() as u64;
                    Ok(errors)
                })
                .collect::<Result<Vec<u64>>>()?;
            Ok(ValidationPoint {
                snr_db: snr,
                frames: val.frames_per_snr,
                bit_errors: counts.iter().sum(),
                frame_errors: counts.iter().filter(|&&e| e > 0).count() as u64,
            })
        })
        .collect()
}

fn diverged(epoch: usize, reason: String, last_good: &DecoderParams) -> Error {
    Error::Diverged {
        epoch,
        reason,
        last_good: Box::new(last_good.clone()),
    }
}

/// Trains the tied edge weights from the unit initialization.
///
/// Epoch `e` draws its batches from noise streams `e · batches_per_epoch + b`
/// of `config.seed` and one permutation schedule per example from
/// `reservoir`, sequentially in batch order. Validation uses a fork of the
/// reservoir as it was before training, so its permutations do not move with
/// the training draws.
pub fn train(
    code: &CodeSpec,
    decoder: &DecoderConfig,
    config: &TrainConfig,
    reservoir: PermutationReservoir,
    snapshot_epochs: &[usize],
) -> Result<TrainOutcome> {
    train_from(code, decoder, config, reservoir, DecoderParams::unit(code), snapshot_epochs)
}

/// [`train`] starting from the given weights.
pub fn train_from(
    code: &CodeSpec,
    decoder: &DecoderConfig,
    config: &TrainConfig,
    mut reservoir: PermutationReservoir,
    init: DecoderParams,
    snapshot_epochs: &[usize],
) -> Result<TrainOutcome> {
    config.validate()?;
    decoder.validate()?;
    if init.edge_weights.len() != code.graph().edge_count() {
        return Err(Error::Dimension {
            what: "edge weight count",
            expected: code.graph().edge_count(),
            got: init.edge_weights.len(),
        });
    }
    let decoder = DecoderConfig {
        early_stop_on_syndrome: false,
        ..*decoder
    };
    let val_reservoir = reservoir.fork(u64::MAX - 1);
    let grid = config.validation_grid().to_vec();
    let n = code.n();

    let mut state = TrainState::new(init);
    let mut history = Vec::with_capacity(config.epochs + 1);
    let mut snapshots = Vec::new();
    let validate_at = |epoch: usize| config.validation.every > 0 && epoch % config.validation.every == 0;

    let run_validation = |params: &DecoderParams| -> Result<(Option<f64>, Vec<f64>)> {
        let points = validate(code, params, &decoder, &grid, &config.validation, config.snr_kind, &val_reservoir)?;
        let bits: u64 = points.iter().map(|p| p.bit_errors).sum();
        let total = points.iter().map(|p| p.frames * n).sum::<usize>() as f64;
        Ok((Some(bits as f64 / total), points.iter().map(|p| p.ber(n)).collect()))
    };

    let epoch_loss = |state: &TrainState, epoch: usize, reservoir: &mut PermutationReservoir, step: bool|
     -> Result<(LossBreakdown, Vec<f64>)> {
        let mut losses = Vec::with_capacity(config.batches_per_epoch);
        let mut grad_sum = vec![0.0; state.params.edge_weights.len()];
        for b in 0..config.batches_per_epoch {
            let stream = (epoch * config.batches_per_epoch + b) as u64;
            let batch = make_batch(code, config.snr_kind, &config.snr_db, config.per_snr, &mut stream_rng(config.seed, stream))?;
            let perms: Vec<_> = (0..batch.len())
                .map(|_| reservoir.sample_many(decoder.i_permutations))
                .collect();
            let g = batch_gradient(code, &state.params, &decoder, config.lambda, &batch, &perms)
                .map_err(|e| diverged(epoch, e.to_string(), &state.params))?;
            if step {
                for (a, b) in grad_sum.iter_mut().zip(&g.grad) {
                    *a += b;
                }
            }
            losses.push(g.loss);
        }
        let loss = LossBreakdown::mean(&losses).expect("at least one batch");
        if !loss.total.is_finite() {
            return Err(diverged(epoch, format!("loss is {}", loss.total), &state.params));
        }
        let scale = 1.0 / config.batches_per_epoch as f64;
        grad_sum.iter_mut().for_each(|g| *g *= scale);
        Ok((loss, grad_sum))
    };

    // epoch 0: initial weights on a batch that is never trained on
    let mut init_res = reservoir.fork(u64::MAX - 2);
    let (loss0, _) = epoch_loss(&state, 0, &mut init_res, false)?;
    let (val0, val0_per) = if validate_at(0) { run_validation(&state.params)? } else { (None, Vec::new()) };
    history.push(EpochRecord {
        epoch: 0,
        loss: loss0,
        val_ber: val0,
        val_ber_per_snr: val0_per,
    });
    if snapshot_epochs.contains(&0) {
        snapshots.push((0, state.params.clone()));
    }
    let mut best: Option<(usize, f64, DecoderParams)> = None;
    let mut track_best = |epoch: usize, ber: Option<f64>, params: &DecoderParams| {
        if let Some(ber) = ber {
            if best.as_ref().is_none_or(|(_, b, _)| ber < *b) {
                best = Some((epoch, ber, params.clone()));
            }
        }
    };
    track_best(0, val0, &state.params);

    for epoch in 1..=config.epochs {
        let (loss, grad) = epoch_loss(&state, epoch, &mut reservoir, true)?;
        let last_good = state.params.clone();
        rmsprop_step(&mut state, &grad, &config.optimizer);
        if state.params.edge_weights.iter().any(|w| !w.is_finite()) {
            return Err(diverged(epoch, "non-finite weight after update".into(), &last_good));
        }
        let (val_ber, val_ber_per_snr) = if validate_at(epoch) {
            run_validation(&state.params)?
        } else {
            (None, Vec::new())
        };
        track_best(epoch, val_ber, &state.params);
        history.push(EpochRecord {
            epoch,
            loss,
            val_ber,
            val_ber_per_snr,
        });
        if snapshot_epochs.contains(&epoch) {
            snapshots.push((epoch, state.params.clone()));
        }
    }
    Ok(TrainOutcome {
        state,
        history,
        snapshots,
        best: best.map(|(epoch, _, params)| (epoch, params)),
    })
}
