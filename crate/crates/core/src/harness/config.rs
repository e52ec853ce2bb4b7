use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::spec::{Decoder, DecoderSpec};
use super::sweep::{StopRule, SweepConfig};
use crate::automorphism::PermutationReservoir;
use crate::channel::{snr_grid, snr_linspace, SnrKind};
use crate::code::{build_bch_code, build_bch_code_circulant, read_alist, CodeSpec};
use crate::decoder::DecoderConfig;
use crate::error::{Error, Result};
use crate::train::{RmsPropConfig, TrainConfig, ValidationConfig};

/// Layout of a generated BCH parity-check matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HForm {
    /// `[Pᵀ | I]`, n − k rows.
    #[default]
    Systematic,
    /// All n cyclic shifts of the parity-check polynomial.
    Circulant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum CodeConfig {
    Bch {
        m: u32,
        t: u32,
        #[serde(default)]
        form: HForm,
    },
    /// A matrix file. `m`/`t` declare it a narrow-sense BCH code so that its
    /// automorphism generators are known.
    Alist {
        path: PathBuf,
        m: Option<u32>,
        t: Option<u32>,
    },
}

impl CodeConfig {
    pub fn build(&self) -> Result<CodeSpec> {
        match self {
            CodeConfig::Bch { m, t, form: HForm::Systematic } => build_bch_code(*m, *t),
            CodeConfig::Bch { m, t, form: HForm::Circulant } => build_bch_code_circulant(*m, *t),
            CodeConfig::Alist { path, m, t } => {
                let code = read_alist(path)?;
                match (m, t) {
                    (Some(m), Some(t)) => code.assume_bch(*m, *t),
                    (None, None) => Ok(code),
                    _ => Err(Error::Config("alist code needs both m and t, or neither".into())),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirConfig {
    pub n_pr: usize,
    pub k_pr: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub decoders: Vec<String>,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingConfig {
    pub decoders: Vec<String>,
    pub snr_db: Vec<f64>,
    pub frames: usize,
    pub warmup: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// λ of the regularized run; the other run uses λ = 0.
    pub lambda: f64,
    pub checkpoints: Vec<usize>,
    pub seed: u64,
}

/// Everything one experiment needs, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub code: CodeConfig,
    pub decoder: DecoderConfig,
    pub reservoir: ReservoirConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub timing: TimingConfig,
    pub probe: ProbeConfig,
}

pub const PRESETS: [&str; 4] = ["bch63_45", "bch63_36", "bch31_16", "bch15_11"];

fn base(name: &str, code: CodeConfig, decoder: DecoderConfig, reservoir: ReservoirConfig, train: TrainConfig) -> ExperimentConfig {
    let blocks = decoder.i_permutations;
    let iters = decoder.i_bp;
    ExperimentConfig {
        name: name.into(),
        code,
        decoder,
        reservoir,
        train,
        eval: EvalConfig {
            decoders: vec!["osd-2".into(), format!("bp-{}", blocks * iters), format!("perm-rnn-1-{blocks}-{iters}")],
            sweep: SweepConfig::new(snr_grid(1.0, 6.0, 0.5), StopRule::default(), 2024),
        },
        timing: TimingConfig {
            decoders: vec!["osd-2".into(), format!("perm-rnn-1-{blocks}-{iters}")],
            snr_db: snr_grid(1.0, 6.0, 1.0),
            frames: 2000,
            warmup: 100,
            seed: 2025,
        },
        probe: ProbeConfig {
            lambda: 100.0,
            checkpoints: (0..=60).collect(),
            seed: 31,
        },
    }
}

fn train_config(lr: f64, snr_db: Vec<f64>, per_snr: usize, lambda: f64, epochs: usize) -> TrainConfig {
    TrainConfig {
        optimizer: RmsPropConfig::new(lr, 0.1),
        validation: ValidationConfig {
            snr_db: snr_grid(1.0, 6.0, 0.5),
            frames_per_snr: 10_000,
            every: 10,
            seed: 7_000_001,
        },
        snr_db,
        per_snr,
        lambda,
        epochs,
        seed: 1,
        batches_per_epoch: 1,
        snr_kind: SnrKind::EbN0,
    }
}

/// Built-in experiment settings.
///
/// `bch63_45` and `bch63_36` are the full-size settings. `bch31_16`
/// is the Hessian-probe code at desk scale and `bch15_11` a seconds-long
/// smoke run.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let cfg = match name {
        "bch63_45" => base(
            name,
            CodeConfig::Bch { m: 6, t: 3, form: HForm::Circulant },
            DecoderConfig::new(50, 2),
            ReservoirConfig { n_pr: 20, k_pr: 60, seed: 45 },
            train_config(1e-3, snr_grid(1.0, 8.0, 1.0), 20, 100.0, 1000),
        ),
        "bch63_36" => {
            let mut c = base(
                name,
                CodeConfig::Bch { m: 6, t: 5, form: HForm::Circulant },
                DecoderConfig::new(300, 2),
                ReservoirConfig { n_pr: 1000, k_pr: 4000, seed: 36 },
                train_config(1e-3, snr_linspace(1.0, 6.0, 4), 30, 1e12, 1000),
            );
            c.eval.decoders = vec!["osd-2".into(), "mrrd-10".into(), "perm-rnn-1-300-2".into()];
            c.timing.decoders = c.eval.decoders.clone();
            c
        }
        "bch31_16" => {
            let mut c = base(
                name,
                CodeConfig::Bch { m: 5, t: 3, form: HForm::Circulant },
                DecoderConfig::new(10, 2),
                ReservoirConfig { n_pr: 20, k_pr: 60, seed: 16 },
                train_config(1e-3, snr_grid(1.0, 8.0, 1.0), 20, 100.0, 1000),
            );
            c.train.validation.snr_db = snr_grid(3.0, 5.0, 0.5);
            c.train.validation.frames_per_snr = 2000;
            c.eval.decoders = vec!["ml".into(), "osd-2".into(), "bp-20".into(), "mrrd-5".into(), "perm-rnn-1-10-2".into()];
            c.eval.sweep.snr_db = snr_grid(2.0, 6.0, 0.5);
            c.timing.decoders = vec!["ml".into(), "osd-2".into(), "mrrd-5".into(), "perm-rnn-1-10-2".into()];
            c
        }
        "bch15_11" => {
            let mut c = base(
                name,
                CodeConfig::Bch { m: 4, t: 1, form: HForm::Circulant },
                DecoderConfig::new(5, 2),
                ReservoirConfig { n_pr: 10, k_pr: 30, seed: 11 },
                train_config(1e-2, snr_grid(1.0, 6.0, 1.0), 10, 0.0, 50),
            );
            c.train.validation.frames_per_snr = 1000;
            c.train.validation.every = 5;
            c.eval.decoders = vec!["uncoded".into(), "ml".into(), "bp-10".into(), "perm-rnn-1-5-2".into()];
            c.eval.sweep.stop.max_frames = 20_000;
            c.timing.decoders = c.eval.decoders.clone();
            c.timing.frames = 500;
            c.probe.checkpoints = vec![0, 10, 20];
            c
        }
        _ => return None,
    };
    Some(cfg)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// A preset name, or else a path to a TOML file.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if let Some(cfg) = preset(name_or_path) {
            return Ok(cfg);
        }
        let path = Path::new(name_or_path);
        if !path.exists() {
            return Err(Error::Config(format!(
                "`{name_or_path}` is neither a preset ({}) nor a file",
                PRESETS.join(", ")
            )));
        }
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Validates the sections that do not need the code.
    pub fn check(&self) -> Result<()> {
        self.decoder.validate()?;
        self.train.validate()?;
        for d in self.eval.decoders.iter().chain(&self.timing.decoders) {
            self.expand_alias(d).parse::<DecoderSpec>()?;
        }
        if self.reservoir.n_pr < 2 {
            return Err(Error::Config("reservoir n_pr must be >= 2".into()));
        }
        Ok(())
    }

    pub fn build_code(&self) -> Result<CodeSpec> {
        self.code.build()
    }

    pub fn build_reservoir(&self, code: &CodeSpec) -> Result<PermutationReservoir> {
        PermutationReservoir::for_code(code, self.reservoir.n_pr, self.reservoir.k_pr, self.reservoir.seed)
    }

    /// Expands the short names `nbp`, `bp`, `mrrd` and `osd` using the decoder
    /// section; other names are returned unchanged.
    pub fn expand_alias(&self, name: &str) -> String {
        let (j, k) = (self.decoder.i_permutations, self.decoder.i_bp);
        match name.trim() {
            "nbp" => format!("perm-rnn-1-{j}-{k}"),
            "bp" => format!("bp-{}", j * k),
            "mrrd" => "mrrd-10".into(),
            "osd" => "osd-2".into(),
            other => other.to_string(),
        }
    }

    pub fn build_decoders(&self, code: &CodeSpec, names: &[String]) -> Result<Vec<Decoder>> {
        names
            .iter()
            .map(|n| Decoder::build(&self.expand_alias(n).parse()?, code, &self.decoder))
            .collect()
    }
}
