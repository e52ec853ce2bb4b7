use serde::{Deserialize, Serialize};

use crate::automorphism::PermutationReservoir;
use crate::code::CodeSpec;
use crate::decoder::{decode_hard, DecoderConfig, DecoderParams, DEFAULT_LLR_CLIP};
use crate::error::{Error, Result};

use super::{bp_decode, candidate_order, correlation, CandidateList};

/// Shape of an mRRD decoder: `branches` parallel chains of `blocks`
/// (BP rounds + random automorphism) stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MrrdConfig {
    pub branches: usize,
    pub blocks: usize,
    pub iters_per_block: usize,
    #[serde(default = "default_clip")]
    pub llr_clip: f64,
}

fn default_clip() -> f64 {
    DEFAULT_LLR_CLIP
}

impl MrrdConfig {
    pub fn new(branches: usize, blocks: usize, iters_per_block: usize) -> Self {
        Self {
            branches,
            blocks,
            iters_per_block,
            llr_clip: DEFAULT_LLR_CLIP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrrdOutput {
    pub word: Vec<u8>,
    /// Zero-syndrome words found by the branches, in branch order.
    pub candidates: CandidateList,
}

/// Multiple-bases random redundant decoding.
///
/// Each branch runs the permuted-block decoder with early termination and
/// contributes its first zero-syndrome de-permuted hard decision as a
/// candidate. Permutations for all branches are drawn from `reservoir` up
/// front in branch order. `weights = None` means unit weights (classical
/// mRRD); trained weights give the weighted variant. With `blocks = 0` this is
/// plain BP with `iters_per_block` iterations.
pub fn mrrd_decode(
    code: &CodeSpec,
    llr: &[f64],
    config: &MrrdConfig,
    weights: Option<&DecoderParams>,
    reservoir: &mut PermutationReservoir,
) -> Result<MrrdOutput> {
    if config.branches == 0 || config.iters_per_block == 0 {
        return Err(Error::InvalidArgument(
            "mRRD needs at least one branch and one iteration per block".into(),
        ));
    }
    code.check_len(llr.len())?;
    if config.blocks == 0 {
        let out = bp_decode(code, llr, config.iters_per_block, config.llr_clip)?;
        let mut candidates = CandidateList::default();
        if code.is_codeword(&out.hard_decision) {
            candidates.push(out.hard_decision.clone(), correlation(&out.hard_decision, llr));
        }
        return Ok(MrrdOutput {
            word: out.hard_decision,
            candidates,
        });
    }
    if reservoir.n() != code.n() {
        return Err(Error::Dimension {
            what: "reservoir permutation length",
            expected: code.n(),
            got: reservoir.n(),
        });
    }
    let unit;
    let params = match weights {
        Some(p) => p,
        None => {
            unit = DecoderParams::unit(code);
            &unit
        }
    };
    let decoder = DecoderConfig {
        i_permutations: config.blocks,
        i_bp: config.iters_per_block,
        llr_clip: config.llr_clip,
        early_stop_on_syndrome: true,
        weight_self_message: false,
    };
    let schedules: Vec<_> = (0..config.branches)
        .map(|_| reservoir.sample_many(config.blocks))
        .collect();

    let mut candidates = CandidateList::default();
    let mut fallback: Option<(Vec<u8>, f64)> = None;
    for perms in &schedules {
        let out = decode_hard(params, &decoder, code, perms, llr)?;
        let score = correlation(&out.word, llr);
        if code.is_codeword(&out.word) {
            candidates.push(out.word, score);
        } else if fallback
            .as_ref()
            .is_none_or(|(w, s)| candidate_order((&out.word, score), (w, *s)).is_lt())
        {
            fallback = Some((out.word, score));
        }
    }
    let word = match candidates.best() {
        Some(w) => w.to_vec(),
        None => fallback.expect("at least one branch ran").0,
    };
    Ok(MrrdOutput { word, candidates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automorphism::PermutationElement;
    use crate::channel::{stream_rng, AwgnChannel, SnrKind};
    use crate::code::build_bch_code;

    fn identity_reservoir(n: usize) -> PermutationReservoir {
        let id = PermutationElement::identity(n);
        PermutationReservoir::init(&[id.clone(), id], 2, 0, 0).unwrap()
    }

    #[test]
    fn single_identity_block_reduces_to_bp() {
        let code = build_bch_code(4, 1).unwrap();
        let ch = AwgnChannel::for_code(&code, SnrKind::EbN0);
        let mut rng = stream_rng(4, 0);
        let mut checked = 0;
        for _ in 0..200 {
            let llr = ch.transmit(&[0; 15], 3.0, &mut rng);
            let bp = bp_decode(&code, &llr, 3, 15.0).unwrap();
            if !code.is_codeword(&bp.hard_decision) {
                continue;
            }
            let mut res = identity_reservoir(15);
            let out = mrrd_decode(&code, &llr, &MrrdConfig::new(1, 1, 3), None, &mut res).unwrap();
            assert_eq!(out.word, bp.hard_decision);
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn zero_blocks_is_plain_bp() {
        let code = build_bch_code(5, 3).unwrap();
        let ch = AwgnChannel::for_code(&code, SnrKind::EbN0);
        let mut rng = stream_rng(4, 1);
        let mut res = PermutationReservoir::for_code(&code, 10, 50, 1).unwrap();
        for _ in 0..50 {
            let llr = ch.transmit(&[0; 31], 2.0, &mut rng);
            let bp = bp_decode(&code, &llr, 4, 15.0).unwrap();
            let out = mrrd_decode(&code, &llr, &MrrdConfig::new(3, 0, 4), None, &mut res).unwrap();
            assert_eq!(out.word, bp.hard_decision);
        }
    }

    #[test]
    fn candidates_have_zero_syndrome() {
        let code = build_bch_code(5, 3).unwrap();
        let ch = AwgnChannel::for_code(&code, SnrKind::EbN0);
        let mut rng = stream_rng(4, 2);
        let mut res = PermutationReservoir::for_code(&code, 10, 50, 2).unwrap();
        for _ in 0..50 {
            let llr = ch.transmit(&[0; 31], 1.5, &mut rng);
            let out = mrrd_decode(&code, &llr, &MrrdConfig::new(3, 4, 2), None, &mut res).unwrap();
            assert!(out.candidates.candidates.iter().all(|(w, _)| code.is_codeword(w)));
            if !out.candidates.is_empty() {
                assert!(code.is_codeword(&out.word));
            }
        }
    }
}
