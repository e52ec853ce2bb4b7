use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::automorphism::PermutationReservoir;
use crate::channel::hard_decisions;
use crate::code::CodeSpec;
use crate::decoder::{decode_hard, read_weights, DecoderConfig, DecoderParams};
use crate::error::{Error, Result};
use crate::reference::{bp_decode, mrrd_decode, osd_decode, ExhaustiveMl, MrrdConfig};

/// A decoder named on the command line or in a config file.
///
/// Grammar (case-insensitive):
///
/// ```text
/// oracle | uncoded | ml | bp-<iters> | osd-<order>
/// perm-rnn-<branches>-<blocks>-<iters>[@weights]
/// mrrd-<branches>
/// mrrd-rnn-<branches>-<blocks>-<iters>[@weights]
/// ```
///
/// `mrrd-<branches>` takes its blocks and iterations from the experiment's
/// decoder section. Without `@weights` the neural variants run unit weights.
#[derive(Debug, Clone, PartialEq)]
pub enum DecoderSpec {
    /// Returns the transmitted word.
    Oracle,
    /// Hard decision on the channel LLRs.
    Uncoded,
    Ml,
    Bp { iterations: usize },
    Osd { order: usize },
    PermRnn { branches: usize, blocks: usize, iters: usize, weights: Option<PathBuf> },
    Mrrd { branches: usize },
    MrrdRnn { branches: usize, blocks: usize, iters: usize, weights: Option<PathBuf> },
}

fn parse_nums(parts: &[&str], count: usize, name: &str) -> Result<Vec<usize>> {
    if parts.len() != count {
        return Err(Error::Config(format!("decoder `{name}` expects {count} numeric fields")));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<usize>()
                .map_err(|_| Error::Config(format!("bad number `{p}` in decoder `{name}`")))
        })
        .collect()
}

impl FromStr for DecoderSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        let (body, weights) = match trimmed.split_once('@') {
            Some((b, w)) => (b.to_ascii_lowercase(), Some(PathBuf::from(w))),
            None => (trimmed.to_ascii_lowercase(), None),
        };
        let parts: Vec<&str> = body.split('-').collect();
        let spec = match parts.as_slice() {
            ["oracle"] => DecoderSpec::Oracle,
            ["uncoded"] => DecoderSpec::Uncoded,
            ["ml"] => DecoderSpec::Ml,
            ["bp", rest @ ..] => DecoderSpec::Bp { iterations: parse_nums(rest, 1, s)?[0] },
            ["osd", rest @ ..] => DecoderSpec::Osd { order: parse_nums(rest, 1, s)?[0] },
            ["perm", "rnn", rest @ ..] => {
                let v = parse_nums(rest, 3, s)?;
                DecoderSpec::PermRnn { branches: v[0], blocks: v[1], iters: v[2], weights: weights.clone() }
            }
            ["mrrd", "rnn", rest @ ..] => {
                let v = parse_nums(rest, 3, s)?;
                DecoderSpec::MrrdRnn { branches: v[0], blocks: v[1], iters: v[2], weights: weights.clone() }
            }
            ["mrrd", rest @ ..] => DecoderSpec::Mrrd { branches: parse_nums(rest, 1, s)?[0] },
            _ => return Err(Error::Config(format!("unknown decoder `{s}`"))),
        };
        let takes_weights = matches!(spec, DecoderSpec::PermRnn { .. } | DecoderSpec::MrrdRnn { .. });
        if weights.is_some() && !takes_weights {
            return Err(Error::Config(format!("decoder `{s}` does not take weights")));
        }
        Ok(spec)
    }
}

impl fmt::Display for DecoderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let with = |f: &mut fmt::Formatter<'_>, w: &Option<PathBuf>| match w {
            Some(p) => write!(f, "@{}", p.display()),
            None => Ok(()),
        };
        match self {
            DecoderSpec::Oracle => write!(f, "oracle"),
            DecoderSpec::Uncoded => write!(f, "uncoded"),
            DecoderSpec::Ml => write!(f, "ml"),
            DecoderSpec::Bp { iterations } => write!(f, "bp-{iterations}"),
            DecoderSpec::Osd { order } => write!(f, "osd-{order}"),
            DecoderSpec::PermRnn { branches, blocks, iters, weights } => {
                write!(f, "perm-rnn-{branches}-{blocks}-{iters}")?;
                with(f, weights)
            }
            DecoderSpec::Mrrd { branches } => write!(f, "mrrd-{branches}"),
            DecoderSpec::MrrdRnn { branches, blocks, iters, weights } => {
                write!(f, "mrrd-rnn-{branches}-{blocks}-{iters}")?;
                with(f, weights)
            }
        }
    }
}

enum Kind {
    Oracle,
    Uncoded,
    Ml(Box<ExhaustiveMl>),
    Bp(usize),
    Osd(usize),
    Perm { config: DecoderConfig, params: DecoderParams },
    Mrrd { config: MrrdConfig, params: Option<DecoderParams> },
}

/// A decoder ready to run on one code.
pub struct Decoder {
    name: String,
    kind: Kind,
    llr_clip: f64,
}

impl fmt::Debug for Decoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Decoder").field("name", &self.name).finish()
    }
}

impl Decoder {
    /// Builds the decoder. `defaults` supplies the LLR clip and the block shape
    /// of `mrrd-<branches>`.
    pub fn build(spec: &DecoderSpec, code: &CodeSpec, defaults: &DecoderConfig) -> Result<Self> {
        let load = |w: &Option<PathBuf>| -> Result<DecoderParams> {
            match w {
                Some(p) => read_weights(code, p),
                None => Ok(DecoderParams::unit(code)),
            }
        };
        let kind = match spec {
            DecoderSpec::Oracle => Kind::Oracle,
            DecoderSpec::Uncoded => Kind::Uncoded,
            DecoderSpec::Ml => Kind::Ml(Box::new(ExhaustiveMl::new(code)?)),
            DecoderSpec::Bp { iterations } => Kind::Bp(*iterations),
            DecoderSpec::Osd { order } => {
                if *order > 2 {
                    return Err(Error::Config("OSD order above 2 is not supported".into()));
                }
                Kind::Osd(*order)
            }
            DecoderSpec::PermRnn { branches: 1, blocks, iters, weights } => {
                let config = DecoderConfig {
                    i_permutations: *blocks,
                    i_bp: *iters,
                    llr_clip: defaults.llr_clip,
                    early_stop_on_syndrome: true,
                    weight_self_message: defaults.weight_self_message,
                };
                config.validate()?;
                Kind::Perm { config, params: load(weights)? }
            }
            DecoderSpec::PermRnn { branches, blocks, iters, weights }
            | DecoderSpec::MrrdRnn { branches, blocks, iters, weights } => Kind::Mrrd {
                config: MrrdConfig {
                    llr_clip: defaults.llr_clip,
                    ..MrrdConfig::new(*branches, *blocks, *iters)
                },
                params: Some(load(weights)?),
            },
            DecoderSpec::Mrrd { branches } => Kind::Mrrd {
                config: MrrdConfig {
                    llr_clip: defaults.llr_clip,
                    ..MrrdConfig::new(*branches, defaults.i_permutations, defaults.i_bp)
                },
                params: None,
            },
        };
        if let Kind::Mrrd { config, .. } = &kind {
            if config.branches == 0 || config.iters_per_block == 0 {
                return Err(Error::Config(format!("decoder `{spec}` needs branches and iterations >= 1")));
            }
        }
        Ok(Self {
            name: spec.to_string(),
            kind,
            llr_clip: defaults.llr_clip,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Whether the decoder draws from the permutation reservoir.
    pub fn uses_permutations(&self) -> bool {
        matches!(self.kind, Kind::Perm { .. } | Kind::Mrrd { config: MrrdConfig { blocks: 1.., .. }, .. })
    }

    /// Decodes one frame. `sent` is only read by the oracle.
    pub fn decode(
        &self,
        code: &CodeSpec,
        llr: &[f64],
        sent: &[u8],
        reservoir: &mut PermutationReservoir,
    ) -> Result<Vec<u8>> {
        match &self.kind {
            Kind::Oracle => Ok(sent.to_vec()),
            Kind::Uncoded => Ok(hard_decisions(llr)),
            Kind::Ml(ml) => Ok(ml.decode(llr)),
            Kind::Bp(iters) => Ok(bp_decode(code, llr, *iters, self.llr_clip)?.hard_decision),
            Kind::Osd(order) => osd_decode(code, llr, *order),
            Kind::Perm { config, params } => {
                let perms = reservoir.sample_many(config.i_permutations);
                Ok(decode_hard(params, config, code, &perms, llr)?.word)
            }
            Kind::Mrrd { config, params } => Ok(mrrd_decode(code, llr, config, params.as_ref(), reservoir)?.word),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in ["oracle", "uncoded", "ml", "bp-20", "osd-2", "perm-rnn-1-10-2", "mrrd-5", "mrrd-rnn-3-10-2"] {
            let spec: DecoderSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        let w: DecoderSpec = "Perm-RNN-1-50-2@runs/W.txt".parse().unwrap();
        assert_eq!(
            w,
            DecoderSpec::PermRnn { branches: 1, blocks: 50, iters: 2, weights: Some("runs/W.txt".into()) }
        );
    }

    #[test]
    fn malformed_names_are_rejected() {
        for s in ["", "bp", "bp-x", "perm-rnn-1-2", "mrrd-1-2", "osd-2@w.txt", "viterbi"] {
            assert!(s.parse::<DecoderSpec>().is_err(), "{s}");
        }
    }
}
