//! Hessian of the training loss with respect to the tied edge weights, its
//! eigenvalue spectrum, and paired training runs that track the spectrum.

use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::automorphism::{PermutationElement, PermutationReservoir};
use crate::channel::{make_batch, stream_rng, ChannelBatch};
use crate::code::CodeSpec;
use crate::decoder::{DecoderConfig, DecoderParams};
use crate::error::{Error, Result};
use crate::train::{batch_gradient, batch_loss, train, EpochRecord, LossBreakdown, TrainConfig};

/// Largest weight count accepted by [`hessian`].
pub const MAX_HESSIAN_PARAMS: usize = 2000;

/// Relative threshold used for "positive" and for the condition-number floor.
pub const DEFAULT_SPECTRUM_TOL: f64 = 1e-8;

/// A frozen loss: fixed batch, fixed permutation schedules, fixed λ.
#[derive(Debug, Clone)]
pub struct FrozenLoss<'a> {
    pub code: &'a CodeSpec,
    pub decoder: DecoderConfig,
    pub lambda: f64,
    pub batch: ChannelBatch,
    pub perms: Vec<Vec<PermutationElement>>,
}

impl<'a> FrozenLoss<'a> {
    /// Batch drawn from noise stream 0 of `seed` over the training grid, with
    /// one schedule per example from `reservoir`.
    pub fn draw(
        code: &'a CodeSpec,
        decoder: DecoderConfig,
        config: &TrainConfig,
        reservoir: &mut PermutationReservoir,
        seed: u64,
    ) -> Result<Self> {
        let batch = make_batch(code, config.snr_kind, &config.snr_db, config.per_snr, &mut stream_rng(seed, 0))?;
        let perms = (0..batch.len())
            .map(|_| reservoir.sample_many(decoder.i_permutations))
            .collect();
        Ok(Self {
            code,
            decoder,
            lambda: config.lambda,
            batch,
            perms,
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    pub fn loss(&self, params: &DecoderParams) -> Result<LossBreakdown> {
        batch_loss(self.code, params, &self.decoder, self.lambda, &self.batch, &self.perms)
    }

    pub fn gradient(&self, params: &DecoderParams) -> Result<Vec<f64>> {
        Ok(batch_gradient(self.code, params, &self.decoder, self.lambda, &self.batch, &self.perms)?.grad)
    }
}

#[derive(Debug, Clone)]
pub struct HessianResult {
    /// Symmetrized matrix `(H + Hᵀ)/2`.
    pub matrix: DMatrix<f64>,
    /// `max |H − Hᵀ|` before symmetrization.
    pub asymmetry: f64,
}

/// Central finite differences of the analytic gradient:
/// `H[a][b] = (g_b(w + h·e_a) − g_b(w − h·e_a)) / 2h` with
/// `h = 1e-3 · max(1, |w_a|)`.
pub fn hessian(loss: &FrozenLoss<'_>, params: &DecoderParams) -> Result<HessianResult> {
    let p = params.edge_weights.len();
    if p > MAX_HESSIAN_PARAMS {
        return Err(Error::InvalidArgument(format!(
            "{p} weights exceed the dense Hessian limit of {MAX_HESSIAN_PARAMS}"
        )));
    }
    let rows: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|a| {
            let h = 1e-3 * params.edge_weights[a].abs().max(1.0);
            let mut plus = params.clone();
            plus.edge_weights[a] += h;
            let mut minus = params.clone();
            minus.edge_weights[a] -= h;
            let gp = loss.gradient(&plus)?;
            let gm = loss.gradient(&minus)?;
            Ok(gp.iter().zip(&gm).map(|(x, y)| (x - y) / (2.0 * h)).collect())
        })
        .collect::<Result<_>>()?;
    let raw = DMatrix::from_fn(p, p, |a, b| rows[a][b]);
    if let Some(idx) = raw.iter().position(|x| !x.is_finite()) {
        let (a, b) = (idx % p, idx / p);
        return Err(Error::Numerical(format!(
            "non-finite Hessian entry for weights ({a}, {b})"
        )));
    }
    let asymmetry = (&raw - raw.transpose()).amax();
    let matrix = (&raw + raw.transpose()) * 0.5;
    Ok(HessianResult { matrix, asymmetry })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub epoch: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub positive_ratio: f64,
    /// `max|λ| / min{|λ| : |λ| > tol}`; infinite for the zero matrix.
    pub condition_number: f64,
    pub tol: f64,
}

/// Eigen-decomposes a symmetric matrix. `rel_tol` is scaled by the largest
/// eigenvalue magnitude to give the absolute threshold.
pub fn spectrum(h: &DMatrix<f64>, rel_tol: f64, epoch: usize) -> SpectrumReport {
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(h.clone()).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let max_abs = eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let tol = rel_tol * max_abs;
    let positive = eigenvalues.iter().filter(|&&l| l > tol).count();
    let min_abs = eigenvalues
        .iter()
        .map(|l| l.abs())
        .filter(|&l| l > tol)
        .fold(f64::INFINITY, f64::min);
    let condition_number = if min_abs.is_finite() && max_abs > 0.0 {
        max_abs / min_abs
    } else {
        f64::INFINITY
    };
    SpectrumReport {
        epoch,
        positive_ratio: if eigenvalues.is_empty() {
            0.0
        } else {
            positive as f64 / eigenvalues.len() as f64
        },
        eigenvalues,
        condition_number,
        tol,
    }
}

#[derive(Debug, Clone)]
pub struct ProbeRun {
    pub lambda: f64,
    pub history: Vec<EpochRecord>,
    /// Loss of the frozen probe batch (this run's λ) after every epoch,
    /// indexed by epoch.
    pub probe_loss: Vec<f64>,
    /// Weights after every epoch, indexed by epoch.
    pub weights: Vec<DecoderParams>,
    pub spectra: Vec<SpectrumReport>,
}

impl ProbeRun {
    /// Epoch at which the probe loss first closes `fraction` of its total
    /// reduction; see [`drop_epoch`].
    pub fn drop_epoch(&self, fraction: f64) -> Option<usize> {
        drop_epoch(&self.probe_loss, fraction)
    }
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub without_l2: ProbeRun,
    pub with_l2: ProbeRun,
}

/// First index at which `curve` has closed `fraction` of the gap between its
/// first value and its final level (mean of the last `min(10, len)` values).
/// `None` when the curve does not end below where it started.
pub fn drop_epoch(curve: &[f64], fraction: f64) -> Option<usize> {
    let first = *curve.first()?;
    let tail = &curve[curve.len().saturating_sub(10)..];
    let last = tail.iter().sum::<f64>() / tail.len() as f64;
    let reduction = first - last;
    if reduction <= 0.0 {
        return None;
    }
    let target = first - fraction * reduction;
    curve.iter().position(|&l| l <= target)
}

/// The frozen batch shared by both probe runs: stream 0 of `seed` and
/// permutations from a dedicated fork of `reservoir`.
pub fn probe_batch<'a>(
    code: &'a CodeSpec,
    decoder: &DecoderConfig,
    config: &TrainConfig,
    reservoir: &PermutationReservoir,
    seed: u64,
) -> Result<FrozenLoss<'a>> {
    let mut probe_res = reservoir.fork(u64::MAX - 3);
    FrozenLoss::draw(code, *decoder, config, &mut probe_res, seed)
}

/// Trains two runs that differ only in λ and records, for each, the loss of
/// a frozen probe batch after every epoch and the Hessian spectrum of that
/// loss at the checkpoint epochs. Each run is measured with its own λ.
pub fn probe_run(
    code: &CodeSpec,
    decoder: &DecoderConfig,
    config_no_l2: &TrainConfig,
    config_with_l2: &TrainConfig,
    reservoir: &PermutationReservoir,
    checkpoints: &[usize],
    probe_seed: u64,
) -> Result<ProbeReport> {
    let same = TrainConfig {
        lambda: config_no_l2.lambda,
        ..config_with_l2.clone()
    };
    if &same != config_no_l2 {
        return Err(Error::Config(
            "probe runs must use identical configs apart from lambda".into(),
        ));
    }
    let frozen = probe_batch(code, decoder, config_no_l2, reservoir, probe_seed)?;
    let all: Vec<usize> = (0..=config_no_l2.epochs).collect();
    let run = |config: &TrainConfig| -> Result<ProbeRun> {
        let out = train(code, decoder, config, reservoir.clone(), &all)?;
        let frozen = frozen.with_lambda(config.lambda);
        let weights: Vec<DecoderParams> = out.snapshots.into_iter().map(|(_, p)| p).collect();
        let probe_loss = weights
            .iter()
            .map(|p| Ok(frozen.loss(p)?.total))
            .collect::<Result<_>>()?;
        let spectra = checkpoints
            .iter()
            .filter(|&&e| e < weights.len())
            .map(|&epoch| {
                let h = hessian(&frozen, &weights[epoch])?;
                Ok(spectrum(&h.matrix, DEFAULT_SPECTRUM_TOL, epoch))
            })
            .collect::<Result<_>>()?;
        Ok(ProbeRun {
            lambda: config.lambda,
            history: out.history,
            probe_loss,
            weights,
            spectra,
        })
    };
    Ok(ProbeReport {
        without_l2: run(config_no_l2)?,
        with_l2: run(config_with_l2)?,
    })
}

#[derive(Debug, Serialize)]
struct ProbeRow {
    epoch: usize,
    loss_no_l2: f64,
    probe_loss_no_l2: Option<f64>,
    val_ber_no_l2: Option<f64>,
    positive_ratio_no_l2: Option<f64>,
    condition_number_no_l2: Option<f64>,
    loss_l2: f64,
    probe_loss_l2: Option<f64>,
    val_ber_l2: Option<f64>,
    positive_ratio_l2: Option<f64>,
    condition_number_l2: Option<f64>,
}

/// One row per epoch with both runs side by side; spectrum columns are empty
/// at epochs without a checkpoint.
pub fn write_probe_csv(path: impl AsRef<Path>, report: &ProbeReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let spec_at = |run: &ProbeRun, epoch: usize| run.spectra.iter().find(|s| s.epoch == epoch).cloned();
    for (a, b) in report.without_l2.history.iter().zip(&report.with_l2.history) {
        let sa = spec_at(&report.without_l2, a.epoch);
        let sb = spec_at(&report.with_l2, b.epoch);
        w.serialize(ProbeRow {
            epoch: a.epoch,
            loss_no_l2: a.loss.total,
            probe_loss_no_l2: report.without_l2.probe_loss.get(a.epoch).copied(),
            val_ber_no_l2: a.val_ber,
            positive_ratio_no_l2: sa.as_ref().map(|s| s.positive_ratio),
            condition_number_no_l2: sa.as_ref().map(|s| s.condition_number),
            loss_l2: b.loss.total,
            probe_loss_l2: report.with_l2.probe_loss.get(b.epoch).copied(),
            val_ber_l2: b.val_ber,
            positive_ratio_l2: sb.as_ref().map(|s| s.positive_ratio),
            condition_number_l2: sb.as_ref().map(|s| s.condition_number),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Raw eigenvalues, one line per checkpoint: `run,epoch,λ_1,…,λ_P`.
pub fn write_eigenvalue_dump(path: impl AsRef<Path>, report: &ProbeReport) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_path(path)?;
    for (name, run) in [("no_l2", &report.without_l2), ("l2", &report.with_l2)] {
        for s in &run.spectra {
            let mut rec = vec![name.to_string(), s.epoch.to_string()];
            rec.extend(s.eigenvalues.iter().map(|l| l.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_bch_code, Gf2Matrix};
    use crate::train::sigmoid;

    #[test]
    fn identity_and_diagonal_spectra() {
        let r = spectrum(&DMatrix::identity(4, 4), DEFAULT_SPECTRUM_TOL, 0);
        assert_eq!(r.positive_ratio, 1.0);
        assert!((r.condition_number - 1.0).abs() < 1e-12);
        let r = spectrum(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, -1.0])), DEFAULT_SPECTRUM_TOL, 0);
        assert_eq!(r.positive_ratio, 0.5);
        assert!((r.condition_number - 2.0).abs() < 1e-12);
        assert_eq!(r.eigenvalues, vec![-1.0, 2.0]);
        let r = spectrum(&(DMatrix::identity(3, 3) * 200.0), DEFAULT_SPECTRUM_TOL, 0);
        assert!((r.condition_number - 1.0).abs() < 1e-12);
    }

    #[test]
    fn drop_epoch_uses_final_level() {
        let curve = [10.0, 9.0, 5.0, 2.0, 1.0, 1.0];
        // final level: mean of all six values (fewer than ten)
        let last = curve.iter().sum::<f64>() / 6.0;
        let target = 10.0 - 0.9 * (10.0 - last);
        assert_eq!(drop_epoch(&curve, 0.9), curve.iter().position(|&l| l <= target));
        assert_eq!(drop_epoch(&[1.0, 2.0, 3.0], 0.9), None);
        assert_eq!(drop_epoch(&[], 0.9), None);
    }

    fn two_edge_loss(code: &CodeSpec, llr: [f64; 2], lambda: f64) -> FrozenLoss<'_> {
        FrozenLoss {
            code,
            decoder: DecoderConfig::new(1, 1),
            lambda,
            batch: ChannelBatch {
                llrs: vec![llr.to_vec()],
                targets: vec![vec![0, 0]],
                snr_db: vec![0.0],
            },
            perms: vec![vec![PermutationElement::identity(2)]],
        }
    }

    #[test]
    fn two_parameter_toy_matches_hand_derivation() {
        // one check over two bits: o_v = l_v + w_v·l_u with u the other bit, and
        // the loss is Σ_v softplus(o_v) + λ(w_0² + w_1²), so
        // H = diag(σ'(o_v)·l_u² + 2λ)
        let code = CodeSpec::from_parity_check(Gf2Matrix::from_rows(&[vec![1, 1]]).unwrap()).unwrap();
        let llr = [0.8, -1.3];
        let lambda = 0.25;
        let w = [0.7, 1.4];
        let params = DecoderParams {
            edge_weights: w.to_vec(),
            legacy: None,
        };
        let h = hessian(&two_edge_loss(&code, llr, lambda), &params).unwrap();
        for v in 0..2 {
            let u = 1 - v;
            let o = llr[v] + w[v] * llr[u];
            let s = sigmoid(o);
            let expected = s * (1.0 - s) * llr[u] * llr[u] + 2.0 * lambda;
            assert!((h.matrix[(v, v)] - expected).abs() < 1e-6, "{} vs {expected}", h.matrix[(v, v)]);
        }
        assert!(h.matrix[(0, 1)].abs() < 1e-6);
    }

    #[test]
    fn pure_penalty_hessian_is_scaled_identity() {
        let code = build_bch_code(4, 1).unwrap();
        // saturated inputs leave only the penalty curvature
        let lambda = 100.0;
        let loss = FrozenLoss {
            code: &code,
            decoder: DecoderConfig::new(1, 2),
            lambda,
            batch: ChannelBatch {
                llrs: vec![vec![-400.0; 15]],
                targets: vec![vec![0; 15]],
                snr_db: vec![0.0],
            },
            perms: vec![vec![PermutationElement::identity(15)]],
        };
        let h = hessian(&loss, &DecoderParams::unit(&code)).unwrap();
        let p = code.graph().edge_count();
        let expected = DMatrix::<f64>::identity(p, p) * (2.0 * lambda);
        assert!((&h.matrix - expected).amax() < 1e-6);
    }

    #[test]
    fn asymmetry_is_small_and_penalty_shifts_diagonal() {
        let code = build_bch_code(4, 1).unwrap();
        let decoder = DecoderConfig::new(2, 2);
        let cfg = TrainConfig {
            optimizer: crate::train::RmsPropConfig::new(1e-3, 0.1),
            snr_db: vec![1.0, 3.0],
            per_snr: 3,
            lambda: 0.0,
            epochs: 0,
            seed: 1,
            batches_per_epoch: 1,
            snr_kind: Default::default(),
            validation: Default::default(),
        };
        let mut res = PermutationReservoir::for_code(&code, 10, 50, 9).unwrap();
        let frozen = FrozenLoss::draw(&code, decoder, &cfg, &mut res, 5).unwrap();
        let params = DecoderParams::constant(&code, 0.9);
        let h0 = hessian(&frozen, &params).unwrap();
        assert!(h0.asymmetry < 1e-5 * h0.matrix.amax(), "{} vs {}", h0.asymmetry, h0.matrix.amax());
        let h1 = hessian(&frozen.with_lambda(10.0), &params).unwrap();
        let shift = &h1.matrix - &h0.matrix;
        let p = params.len();
        // λ·L3 enters once per block
        let expected = DMatrix::<f64>::identity(p, p) * (2.0 * 10.0 * 2.0);
        assert!((shift - expected).amax() < 1e-3 * 40.0);
    }
}
