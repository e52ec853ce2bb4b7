use serde::Serialize;

use crate::decoder::{DecodeTrace, DecoderParams};
use crate::error::{Error, Result};

/// Floor applied to probabilities inside the logarithms.
pub const LOG_EPS: f64 = 1e-12;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Cross-entropy between `σ(x)` and a target bit, with both probabilities
/// floored at [`LOG_EPS`].
#[inline]
pub fn bce_logit(x: f64, target: f64) -> f64 {
    let p1 = sigmoid(x).max(LOG_EPS);
    let p0 = sigmoid(-x).max(LOG_EPS);
    -(target * p1.ln() + (1.0 - target) * p0.ln())
}

/// Derivative of [`bce_logit`] with respect to `x`. A floored log term
/// contributes nothing.
#[inline]
pub fn bce_logit_grad(x: f64, target: f64) -> f64 {
    let p1 = sigmoid(x);
    let p0 = sigmoid(-x);
    let mut g = 0.0;
    if p1 > LOG_EPS {
        g -= target * p0;
    }
    if p0 > LOG_EPS {
        g += (1.0 - target) * p1;
    }
    g
}

/// Mean cross-entropy of a vector of logits against a binary target.
pub fn mean_bce(logits: &[f64], target: &[u8]) -> f64 {
    let n = logits.len() as f64;
    logits
        .iter()
        .zip(target)
        .map(|(&x, &t)| bce_logit(x, f64::from(t)))
        .sum::<f64>()
        / n
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossBreakdown {
    /// Output cross-entropy of each block.
    pub l1_per_block: Vec<f64>,
    /// Cross-entropy of every intermediate marginal, `[block][round]`.
    pub l2_per_block_iter: Vec<Vec<f64>>,
    /// Squared norm of the learnable weights.
    pub l3: f64,
    pub total: f64,
    pub lambda: f64,
}

impl LossBreakdown {
    pub fn l1_sum(&self) -> f64 {
        self.l1_per_block.iter().sum()
    }

    pub fn l2_sum(&self) -> f64 {
        self.l2_per_block_iter.iter().flatten().sum()
    }

    /// `Σ_j (L1_j + λ·L3) + Σ_{j,i} L2_{j,i}` evaluated from the parts.
    pub fn recompose(&self) -> f64 {
        self.l1_per_block
            .iter()
            .map(|l1| l1 + self.lambda * self.l3)
            .sum::<f64>()
            + self.l2_sum()
    }

    /// Elementwise mean of several breakdowns of identical shape.
    pub fn mean(parts: &[LossBreakdown]) -> Option<LossBreakdown> {
        let first = parts.first()?;
        let count = parts.len() as f64;
        let mut out = first.clone();
        for p in &parts[1..] {
            for (a, b) in out.l1_per_block.iter_mut().zip(&p.l1_per_block) {
                *a += b;
            }
            for (ra, rb) in out.l2_per_block_iter.iter_mut().zip(&p.l2_per_block_iter) {
                for (a, b) in ra.iter_mut().zip(rb) {
                    *a += b;
                }
            }
            out.total += p.total;
        }
        out.l1_per_block.iter_mut().for_each(|a| *a /= count);
        out.l2_per_block_iter
            .iter_mut()
            .flatten()
            .for_each(|a| *a /= count);
        out.total /= count;
        Some(out)
    }
}

pub fn l2_penalty(params: &DecoderParams) -> f64 {
    let mut s: f64 = params.edge_weights.iter().map(|w| w * w).sum();
    if let Some(legacy) = &params.legacy {
        s += legacy.pair.iter().flatten().map(|w| w * w).sum::<f64>();
        s += legacy.output.iter().map(|w| w * w).sum::<f64>();
    }
    s
}

/// Loss of one decoded example. Intermediate marginals of block `j` live in
/// that block's permuted coordinates, so the target is mapped there before
/// comparing; for the all-zero target this is the identity.
pub fn loss(trace: &DecodeTrace, target: &[u8], params: &DecoderParams, lambda: f64) -> Result<LossBreakdown> {
    let n = target.len();
    if trace.blocks.is_empty() {
        return Err(Error::InvalidArgument("empty decode trace".into()));
    }
    if trace.blocks[0].input.len() != n {
        return Err(Error::Dimension {
            what: "target length",
            expected: trace.blocks[0].input.len(),
            got: n,
        });
    }
    let mut block_target = target.to_vec();
    let mut l1_per_block = Vec::with_capacity(trace.blocks.len());
    let mut l2_per_block_iter = Vec::with_capacity(trace.blocks.len());
    for block in &trace.blocks {
        l1_per_block.push(mean_bce(&block.depermuted_output, target));
        l2_per_block_iter.push(
            block
                .mid_outputs
                .iter()
                .map(|o| mean_bce(o, &block_target))
                .collect(),
        );
        block_target = block.permutation.apply(&block_target);
    }
    let l3 = l2_penalty(params);
    let mut out = LossBreakdown {
        l1_per_block,
        l2_per_block_iter,
        l3,
        total: 0.0,
        lambda,
    };
    out.total = out.recompose();
    Ok(out)
}
