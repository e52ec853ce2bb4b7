//! The original odd/even-layer neural BP with untied per-edge-pair weights.

use super::{check_layer, DecoderConfig};
use crate::code::CodeSpec;
use crate::error::{Error, Result};

/// Weight tables of the legacy formulation.
///
/// `pair[e]` holds one weight per other edge `e' = (c', v)` at the variable of
/// edge `e = (v, c)`, in the order of `graph.var_edges(v)` with `e` itself
/// skipped. `output[e']` weighs the final message on edge `e'` in the output
/// layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LegacyWeights {
    pub pair: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

impl LegacyWeights {
    pub fn constant(code: &CodeSpec, value: f64) -> Self {
        let graph = code.graph();
        let pair = graph
            .edges()
            .iter()
            .map(|edge| vec![value; graph.var_edges(edge.var).len() - 1])
            .collect();
        Self {
            pair,
            output: vec![value; graph.edge_count()],
        }
    }

    fn validate(&self, code: &CodeSpec) -> Result<()> {
        let graph = code.graph();
        let ok = self.pair.len() == graph.edge_count()
            && self.output.len() == graph.edge_count()
            && graph
                .edges()
                .iter()
                .zip(&self.pair)
                .all(|(edge, w)| w.len() + 1 == graph.var_edges(edge.var).len());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "legacy weight tables do not match the Tanner graph".into(),
            ))
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Runs `layers` odd/even layer pairs and returns the sigmoid outputs
/// `σ(l_v + Σ w̃ x)`. Only `config.llr_clip` is used from the config.
pub fn decode_legacy(
    legacy: Option<&LegacyWeights>,
    config: &DecoderConfig,
    code: &CodeSpec,
    layers: usize,
    llr: &[f64],
) -> Result<Vec<f64>> {
    let weights = legacy.ok_or_else(|| {
        Error::InvalidArgument("legacy decoding needs legacy weight tables".into())
    })?;
    weights.validate(code)?;
    code.check_len(llr.len())?;
    let graph = code.graph();
    let clip = config.llr_clip;
    let edges = graph.edge_count();
    let mut xv = vec![0.0; edges];
    let mut xc = vec![0.0; edges];
    let mut scratch = Vec::new();

    for _ in 0..layers {
        for (e, edge) in graph.edges().iter().enumerate() {
            let mut acc = llr[edge.var];
            let others = graph.var_edges(edge.var).iter().filter(|&&f| f != e);
            for (&f, w) in others.zip(&weights.pair[e]) {
                acc += w * xc[f];
            }
            xv[e] = (0.5 * acc.clamp(-clip, clip)).tanh();
        }
        check_layer(graph, clip, &xv, &mut xc, &mut scratch);
    }
    Ok((0..code.n())
        .map(|v| {
            let s: f64 = graph
                .var_edges(v)
                .iter()
                .map(|&e| weights.output[e] * xc[e])
                .sum();
            sigmoid(llr[v] + s)
        })
        .collect())
}
