use crate::channel::hard_decisions;
use crate::code::CodeSpec;
use crate::error::{Error, Result};

/// Per-iteration messages and marginals of flooding sum-product BP.
#[derive(Debug, Clone)]
pub struct BpOutput {
    /// Check-to-variable messages after each iteration, indexed by edge.
    pub check_messages: Vec<Vec<f64>>,
    /// `l_v + Σ_c m(c→v)` after each iteration.
    pub marginals: Vec<Vec<f64>>,
    pub hard_decision: Vec<u8>,
}

/// Flooding sum-product BP written directly in terms of extrinsic sums, with
/// variable-to-check LLRs and check outputs both limited to `±llr_clip`.
pub fn bp_decode(code: &CodeSpec, llr: &[f64], iterations: usize, llr_clip: f64) -> Result<BpOutput> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("BP needs at least one iteration".into()));
    }
    code.check_len(llr.len())?;
    let graph = code.graph();
    let edges = graph.edges();
    let mut c2v = vec![0.0; edges.len()];
    let mut v2c_tanh = vec![0.0; edges.len()];
    let mut out = BpOutput {
        check_messages: Vec::with_capacity(iterations),
        marginals: Vec::with_capacity(iterations),
        hard_decision: Vec::new(),
    };

    for _ in 0..iterations {
        for (e, edge) in edges.iter().enumerate() {
            let extrinsic: f64 = graph
                .var_edges(edge.var)
                .iter()
                .filter(|&&f| f != e)
                .map(|&f| c2v[f])
                .sum();
            let m = (llr[edge.var] + extrinsic).clamp(-llr_clip, llr_clip);
            v2c_tanh[e] = (m / 2.0).tanh();
        }
        let mut next = vec![0.0; edges.len()];
        for c in 0..graph.num_checks() {
            let members = graph.check_edges(c);
            // odd-degree checks flip the sign under the log P(1)/P(0) convention
            let sign = if members.len() % 2 == 0 { 1.0 } else { -1.0 };
            for &e in members {
                let prod: f64 = members
                    .iter()
                    .filter(|&&f| f != e)
                    .map(|&f| v2c_tanh[f])
                    .product();
                next[e] = (2.0 * (sign * prod).atanh()).clamp(-llr_clip, llr_clip);
            }
        }
        c2v = next;
        let marginal: Vec<f64> = (0..code.n())
            .map(|v| llr[v] + graph.var_edges(v).iter().map(|&e| c2v[e]).sum::<f64>())
            .collect();
        out.check_messages.push(c2v.clone());
        out.marginals.push(marginal);
    }
    out.hard_decision = hard_decisions(out.marginals.last().expect("iterations >= 1"));
    Ok(out)
}
