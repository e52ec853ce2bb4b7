//! Neural belief propagation with automorphism permutations between blocks.
//!
//! The decoder is a chain of `i_permutations` blocks. Block `j` starts from
//! marginals `o⁰` (the channel LLRs for the first block, the previous block's
//! permuted output afterwards) with all edge messages reset to zero, then runs
//! `i_bp` rounds of
//!
//! ```text
//! variable:  x(v→c) = tanh(½ · clamp(o[v] − x(c→v)))
//! check:     x(c→v) = clamp(2 · atanh(± Π_{v'≠v} x(v'→c)))
//! marginal:  o[v]   = o⁰[v] + Σ_c w(c,v) · x(c→v)
//! ```
//!
//! and finally permutes its marginals with `πⱼ`. The per-block output mapped
//! back to transmit coordinates is `dʲ = (π₁⁻¹ ∘ … ∘ πⱼ⁻¹)(cʲ)`.
//!
//! With all weights equal to one a single block is exactly flooding
//! sum-product BP.

mod checkpoint;
mod legacy;

pub use checkpoint::{load_weights, read_weights, save_weights, write_weights};
pub use legacy::{decode_legacy, LegacyWeights};

use serde::{Deserialize, Serialize};

use crate::automorphism::PermutationElement;
use crate::channel::hard_decisions;
use crate::code::{CodeSpec, TannerGraph};
use crate::error::{Error, Result};

/// Learnable decoder weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderParams {
    /// One weight per Tanner edge, tied across layers and blocks, in the
    /// row-major edge order of [`TannerGraph`].
    pub edge_weights: Vec<f64>,
    /// Untied weights of the original odd/even-layer formulation.
    pub legacy: Option<LegacyWeights>,
}

impl DecoderParams {
    /// All edge weights equal to one: plain BP.
    pub fn unit(code: &CodeSpec) -> Self {
        Self::constant(code, 1.0)
    }

    pub fn constant(code: &CodeSpec, value: f64) -> Self {
        Self {
            edge_weights: vec![value; code.graph().edge_count()],
            legacy: None,
        }
    }

    pub fn with_legacy(mut self, legacy: LegacyWeights) -> Self {
        self.legacy = Some(legacy);
        self
    }

    pub fn len(&self) -> usize {
        self.edge_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edge_weights.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoderConfig {
    pub i_permutations: usize,
    pub i_bp: usize,
    pub llr_clip: f64,
    /// Stop after the first block whose de-permuted hard decision is a codeword.
    #[serde(default)]
    pub early_stop_on_syndrome: bool,
    /// Multiply the subtracted check message in the variable update by its
    /// edge weight (off: plain subtraction).
    #[serde(default)]
    pub weight_self_message: bool,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            i_permutations: 1,
            i_bp: 5,
            llr_clip: DEFAULT_LLR_CLIP,
            early_stop_on_syndrome: false,
            weight_self_message: false,
        }
    }
}

pub const DEFAULT_LLR_CLIP: f64 = 15.0;

impl DecoderConfig {
    pub fn new(i_permutations: usize, i_bp: usize) -> Self {
        Self {
            i_permutations,
            i_bp,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.i_permutations == 0 || self.i_bp == 0 {
            return Err(Error::InvalidArgument(
                "i_permutations and i_bp must be >= 1".into(),
            ));
        }
        if !(self.llr_clip > 0.0 && self.llr_clip.is_finite()) {
            return Err(Error::InvalidArgument("llr_clip must be positive".into()));
        }
        Ok(())
    }
}

/// Everything one block computed. Iteration index `i` in the vectors below
/// stands for BP round `i + 1`.
#[derive(Debug, Clone, Default)]
pub struct BlockTrace {
    /// o⁰, the block's initial marginals.
    pub input: Vec<f64>,
    /// x(v→c) per round, per edge.
    pub var_messages: Vec<Vec<f64>>,
    /// x(c→v) per round, per edge.
    pub check_messages: Vec<Vec<f64>>,
    /// Marginals o after each round.
    pub mid_outputs: Vec<Vec<f64>>,
    /// πⱼ, the permutation applied at the end of the block.
    pub permutation: PermutationElement,
    /// cʲ = πⱼ(o after the last round).
    pub permuted_output: Vec<f64>,
    /// dʲ, the block output in transmit coordinates.
    pub depermuted_output: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct DecodeTrace {
    pub blocks: Vec<BlockTrace>,
    pub hard_decision: Vec<u8>,
    /// Set when early termination fired before the last block.
    pub early_stopped: bool,
}

impl DecodeTrace {
    pub fn blocks_executed(&self) -> usize {
        self.blocks.len()
    }

    pub fn iterations_executed(&self) -> usize {
        self.blocks.iter().map(|b| b.mid_outputs.len()).sum()
    }

    /// Soft output of the final executed block in transmit coordinates.
    pub fn final_output(&self) -> &[f64] {
        self.blocks
            .last()
            .map(|b| b.depermuted_output.as_slice())
            .unwrap_or(&[])
    }
}

#[inline]
fn clamp(x: f64, clip: f64) -> f64 {
    x.clamp(-clip, clip)
}

/// Variable-node message `tanh(½ · clamp(o_prev − x_check_in, ±llr_clip))`.
#[inline]
pub fn variable_update(o_prev: f64, x_check_in: f64, llr_clip: f64) -> f64 {
    (0.5 * clamp(o_prev - x_check_in, llr_clip)).tanh()
}

/// `2·atanh(p)` limited to `±llr_clip`.
#[inline]
pub fn check_output(p: f64, llr_clip: f64) -> f64 {
    let bound = (0.5 * llr_clip).tanh();
    if p >= bound {
        llr_clip
    } else if p <= -bound {
        -llr_clip
    } else {
        2.0 * p.atanh()
    }
}

/// Sign applied to the product of incoming messages at a check of the given
/// degree. LLRs put bit 1 in the numerator, so a check with an odd number of
/// edges flips the sign of the product; for even degree it is +1.
#[inline]
pub fn check_parity_sign(degree: usize) -> f64 {
    if degree % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Check-node message from the `incoming` variable messages (all edges of the
/// check except the target edge): `2·atanh(± Π incoming)`, clamped.
pub fn check_update(incoming: &[f64], llr_clip: f64) -> f64 {
    let p: f64 = incoming.iter().product();
    check_output(check_parity_sign(incoming.len() + 1) * p, llr_clip)
}

/// `o_init + Σ w·x` over the incident edges.
pub fn marginal_update(o_init: f64, edge_msgs: &[f64], weights: &[f64]) -> f64 {
    assert_eq!(edge_msgs.len(), weights.len(), "message/weight length mismatch");
    o_init + edge_msgs.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>()
}

/// Check layer over the whole graph. `scratch` must hold at least the
/// maximum check degree.
pub(crate) fn check_layer(graph: &TannerGraph, clip: f64, xv: &[f64], xc: &mut [f64], scratch: &mut Vec<f64>) {
    for c in 0..graph.num_checks() {
        let edges = graph.check_edges(c);
        let sign = check_parity_sign(edges.len());
        scratch.clear();
        let mut prefix = 1.0;
        for &e in edges {
            scratch.push(prefix);
            prefix *= xv[e];
        }
        let mut suffix = 1.0;
        for (k, &e) in edges.iter().enumerate().rev() {
            xc[e] = check_output(sign * scratch[k] * suffix, clip);
            suffix *= xv[e];
        }
    }
}

struct Round<'a> {
    graph: &'a TannerGraph,
    weights: &'a [f64],
    config: &'a DecoderConfig,
}

impl Round<'_> {
    /// One variable/check/marginal round. `xc` holds the previous round's
    /// check messages on entry (zeros for the first round) and the new ones
    /// on exit.
    fn run(&self, o0: &[f64], o_prev: &[f64], xv: &mut [f64], xc: &mut [f64], o_out: &mut [f64], scratch: &mut Vec<f64>) {
        let clip = self.config.llr_clip;
        for (e, edge) in self.graph.edges().iter().enumerate() {
            let self_msg = if self.config.weight_self_message {
                self.weights[e] * xc[e]
            } else {
                xc[e]
            };
            xv[e] = variable_update(o_prev[edge.var], self_msg, clip);
        }
        check_layer(self.graph, clip, xv, xc, scratch);
        for (v, out) in o_out.iter_mut().enumerate() {
            let mut acc = o0[v];
            for &e in self.graph.var_edges(v) {
                acc += self.weights[e] * xc[e];
            }
            *out = acc;
        }
    }
}

fn validate_inputs(
    params: &DecoderParams,
    config: &DecoderConfig,
    code: &CodeSpec,
    perms: &[PermutationElement],
    llr: &[f64],
) -> Result<()> {
    config.validate()?;
    code.check_len(llr.len())?;
    if params.edge_weights.len() != code.graph().edge_count() {
        return Err(Error::Dimension {
            what: "edge weight count",
            expected: code.graph().edge_count(),
            got: params.edge_weights.len(),
        });
    }
    if perms.len() != config.i_permutations {
        return Err(Error::Dimension {
            what: "permutation count",
            expected: config.i_permutations,
            got: perms.len(),
        });
    }
    if let Some(p) = perms.iter().find(|p| p.len() != code.n()) {
        return Err(Error::Dimension {
            what: "permutation length",
            expected: code.n(),
            got: p.len(),
        });
    }
    Ok(())
}

/// Runs the full decoder and records every intermediate quantity.
pub fn decode(
    params: &DecoderParams,
    config: &DecoderConfig,
    code: &CodeSpec,
    perms: &[PermutationElement],
    llr: &[f64],
) -> Result<DecodeTrace> {
    validate_inputs(params, config, code, perms, llr)?;
    let graph = code.graph();
    let (n, edges) = (code.n(), graph.edge_count());
    let round = Round {
        graph,
        weights: &params.edge_weights,
        config,
    };
    let mut scratch = Vec::new();
    let mut trace = DecodeTrace::default();
    let mut input = llr.to_vec();
    let mut undo = PermutationElement::identity(n);

    for perm in perms {
        let mut block = BlockTrace {
            input: input.clone(),
            permutation: perm.clone(),
            ..BlockTrace::default()
        };
        let mut xc = vec![0.0; edges];
        let mut o_prev = input.clone();
        for _ in 0..config.i_bp {
            let mut xv = vec![0.0; edges];
            let mut o = vec![0.0; n];
            round.run(&input, &o_prev, &mut xv, &mut xc, &mut o, &mut scratch);
            block.var_messages.push(xv);
            block.check_messages.push(xc.clone());
            block.mid_outputs.push(o.clone());
            o_prev = o;
        }
        block.permuted_output = perm.apply(&o_prev);
        undo = undo.compose(&perm.inverse());
        block.depermuted_output = undo.apply(&block.permuted_output);
        let hard = hard_decisions(&block.depermuted_output);
        input = block.permuted_output.clone();
        trace.blocks.push(block);
        if config.early_stop_on_syndrome && code.is_codeword(&hard) {
            trace.early_stopped = trace.blocks.len() < perms.len();
            trace.hard_decision = hard;
            return Ok(trace);
        }
        trace.hard_decision = hard;
    }
    Ok(trace)
}

/// Result of [`decode_hard`].
#[derive(Debug, Clone, PartialEq)]
pub struct HardOutput {
    pub word: Vec<u8>,
    pub soft: Vec<f64>,
    pub blocks_executed: usize,
}

/// Same computation as [`decode`] without recording the trace.
pub fn decode_hard(
    params: &DecoderParams,
    config: &DecoderConfig,
    code: &CodeSpec,
    perms: &[PermutationElement],
    llr: &[f64],
) -> Result<HardOutput> {
    validate_inputs(params, config, code, perms, llr)?;
    let graph = code.graph();
    let (n, edges) = (code.n(), graph.edge_count());
    let round = Round {
        graph,
        weights: &params.edge_weights,
        config,
    };
    let mut scratch = Vec::new();
    let mut xv = vec![0.0; edges];
    let mut xc = vec![0.0; edges];
    let mut input = llr.to_vec();
    let mut o_prev = vec![0.0; n];
    let mut o = vec![0.0; n];
    let mut undo = PermutationElement::identity(n);
    let mut soft = Vec::new();

    for (j, perm) in perms.iter().enumerate() {
        xc.iter_mut().for_each(|x| *x = 0.0);
        o_prev.copy_from_slice(&input);
        for _ in 0..config.i_bp {
            round.run(&input, &o_prev, &mut xv, &mut xc, &mut o, &mut scratch);
            std::mem::swap(&mut o_prev, &mut o);
        }
        perm.apply_into(&o_prev, &mut input);
        undo = undo.compose(&perm.inverse());
        soft = undo.apply(&input);
        if config.early_stop_on_syndrome {
            let word = hard_decisions(&soft);
            if code.is_codeword(&word) {
                return Ok(HardOutput {
                    word,
                    soft,
                    blocks_executed: j + 1,
                });
            }
        }
    }
    Ok(HardOutput {
        word: hard_decisions(&soft),
        soft,
        blocks_executed: perms.len(),
    })
}
