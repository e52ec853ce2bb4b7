//! Reverse-mode gradient of the training loss through the unrolled decoder.
//!
//! The forward trace doubles as the tape. Each block is walked backwards
//! round by round: marginal sums, then the check products, then the clamped
//! `tanh` of the variable update. Permutations move gradients by index.

use rayon::prelude::*;

use super::loss::{bce_logit_grad, loss, LossBreakdown};
use crate::automorphism::PermutationElement;
use crate::channel::ChannelBatch;
use crate::code::{CodeSpec, TannerGraph};
use crate::decoder::{check_parity_sign, decode, DecodeTrace, DecoderConfig, DecoderParams};
use crate::error::{Error, Result};

/// Gradient of the batch-mean loss together with the mean loss itself.
#[derive(Debug, Clone)]
pub struct BatchGradient {
    pub grad: Vec<f64>,
    pub loss: LossBreakdown,
}

/// Gradient of `λ·L3` alone: `2λ·w`.
pub fn l3_gradient(params: &DecoderParams, lambda: f64) -> Vec<f64> {
    params.edge_weights.iter().map(|w| 2.0 * lambda * w).collect()
}

/// Gradient of the cross-entropy terms `Σ_j L1_j + Σ_{j,i} L2_{j,i}` of one
/// example with respect to the tied edge weights.
pub fn trace_gradient(
    graph: &TannerGraph,
    params: &DecoderParams,
    config: &DecoderConfig,
    trace: &DecodeTrace,
    target: &[u8],
) -> Vec<f64> {
    let n = target.len();
    let edges = graph.edges();
    let weights = &params.edge_weights;
    let clip = config.llr_clip;
    let inv_n = 1.0 / n as f64;
    let mut gw = vec![0.0; edges.len()];

    let mut targets = Vec::with_capacity(trace.blocks.len());
    let mut t = target.to_vec();
    for block in &trace.blocks {
        let next = block.permutation.apply(&t);
        targets.push(t);
        t = next;
    }

    let mut g_next_input: Option<Vec<f64>> = None;
    let mut g_xc = vec![0.0; edges.len()];
    let mut g_xv = vec![0.0; edges.len()];
    let mut scratch = CheckScratch::default();
    for (block, y) in trace.blocks.iter().zip(&targets).rev() {
        let rounds = block.mid_outputs.len();
        let o_last = &block.mid_outputs[rounds - 1];
        // the block output in transmit coordinates is a permutation of o_last
        // carrying the same block-coordinate target, so L1 seeds o_last directly
        let mut g_o: Vec<f64> = (0..n)
            .map(|v| bce_logit_grad(o_last[v], f64::from(y[v])) * inv_n)
            .collect();
        if let Some(g_next) = &g_next_input {
            let map = block.permutation.map();
            for v in 0..n {
                g_o[v] += g_next[map[v]];
            }
        }
        let mut g_o0 = vec![0.0; n];
        let mut carry = vec![0.0; edges.len()];
        for i in (0..rounds).rev() {
            let o_i = &block.mid_outputs[i];
            for v in 0..n {
                g_o[v] += bce_logit_grad(o_i[v], f64::from(y[v])) * inv_n;
                g_o0[v] += g_o[v];
            }
            let xc = &block.check_messages[i];
            for (e, edge) in edges.iter().enumerate() {
                let g = g_o[edge.var];
                gw[e] += g * xc[e];
                g_xc[e] = carry[e] + g * weights[e];
            }
            let xv = &block.var_messages[i];
            check_backward(graph, clip, xv, &g_xc, &mut g_xv, &mut scratch);

            let o_prev = if i == 0 { &block.input } else { &block.mid_outputs[i - 1] };
            let xc_prev = (i > 0).then(|| &block.check_messages[i - 1]);
            let mut g_o_prev = vec![0.0; n];
            for (e, edge) in edges.iter().enumerate() {
                let x_in = xc_prev.map_or(0.0, |x| x[e]);
                let self_msg = if config.weight_self_message {
                    weights[e] * x_in
                } else {
                    x_in
                };
                let a = o_prev[edge.var] - self_msg;
                let ga = if a.abs() < clip {
                    g_xv[e] * 0.5 * (1.0 - xv[e] * xv[e])
                } else {
                    0.0
                };
                g_o_prev[edge.var] += ga;
                if config.weight_self_message {
                    carry[e] = -weights[e] * ga;
                    gw[e] -= x_in * ga;
                } else {
                    carry[e] = -ga;
                }
            }
            g_o = g_o_prev;
        }
        for v in 0..n {
            g_o[v] += g_o0[v];
        }
        g_next_input = Some(g_o);
    }
    gw
}

#[derive(Default)]
struct CheckScratch {
    prefix: Vec<f64>,
    p: Vec<f64>,
    gp: Vec<f64>,
    fwd: Vec<f64>,
    bwd: Vec<f64>,
}

/// Pulls `g_xc` back through the check layer into `g_xv`. Products are
/// rebuilt in the same order as the forward pass so that the saturation
/// test sees bit-identical values.
fn check_backward(graph: &TannerGraph, clip: f64, xv: &[f64], g_xc: &[f64], g_xv: &mut [f64], s: &mut CheckScratch) {
    let bound = (0.5 * clip).tanh();
    for c in 0..graph.num_checks() {
        let members = graph.check_edges(c);
        let d = members.len();
        let sign = check_parity_sign(d);
        s.prefix.clear();
        let mut prefix = 1.0;
        for &e in members {
            s.prefix.push(prefix);
            prefix *= xv[e];
        }
        s.p.clear();
        s.p.resize(d, 0.0);
        let mut suffix = 1.0;
        for (k, &e) in members.iter().enumerate().rev() {
            s.p[k] = sign * s.prefix[k] * suffix;
            suffix *= xv[e];
        }
        s.gp.clear();
        s.gp.extend(members.iter().zip(&s.p).map(|(&e, &p)| {
            if p >= bound || p <= -bound {
                0.0
            } else {
                g_xc[e] * 2.0 / (1.0 - p * p)
            }
        }));
        for &e in members {
            g_xv[e] = 0.0;
        }
        s.fwd.resize(d, 0.0);
        s.bwd.resize(d, 0.0);
        for a in 0..d {
            let gp = s.gp[a];
            if gp == 0.0 {
                continue;
            }
            // products over the check excluding positions a and b
            let mut acc = 1.0;
            for b in 0..d {
                s.fwd[b] = acc;
                if b != a {
                    acc *= xv[members[b]];
                }
            }
            acc = 1.0;
            for b in (0..d).rev() {
                s.bwd[b] = acc;
                if b != a {
                    acc *= xv[members[b]];
                }
            }
            for b in 0..d {
                if b != a {
                    g_xv[members[b]] += gp * sign * s.fwd[b] * s.bwd[b];
                }
            }
        }
    }
}

/// Decodes every example of the batch with its own permutation schedule and
/// returns the gradient of the mean total loss, including `λ·L3` once per
/// block. Examples run in parallel; per-example results are summed in batch
/// order so the result does not depend on the thread count.
pub fn batch_gradient(
    code: &CodeSpec,
    params: &DecoderParams,
    config: &DecoderConfig,
    lambda: f64,
    batch: &ChannelBatch,
    perms: &[Vec<PermutationElement>],
) -> Result<BatchGradient> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty training batch".into()));
    }
    if perms.len() != batch.len() {
        return Err(Error::Dimension {
            what: "permutation schedules per batch",
            expected: batch.len(),
            got: perms.len(),
        });
    }
    let config = DecoderConfig {
        early_stop_on_syndrome: false,
        ..*config
    };
    let graph = code.graph();
    let per_example: Vec<Result<(Vec<f64>, LossBreakdown)>> = (0..batch.len())
        .into_par_iter()
        .map(|b| {
            let trace = decode(params, &config, code, &perms[b], &batch.llrs[b])?;
            let l = loss(&trace, &batch.targets[b], params, lambda)?;
            let g = trace_gradient(graph, params, &config, &trace, &batch.targets[b]);
            if let Some(weight) = g.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFiniteGradient { weight, example: b });
            }
            Ok((g, l))
        })
        .collect();

    let mut grad = vec![0.0; params.edge_weights.len()];
    let mut losses = Vec::with_capacity(batch.len());
    for r in per_example {
        let (g, l) = r?;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
        losses.push(l);
    }
    let scale = 1.0 / batch.len() as f64;
    let blocks = config.i_permutations as f64;
    for (a, l3) in grad.iter_mut().zip(l3_gradient(params, lambda)) {
        *a = *a * scale + blocks * l3;
    }
    let loss = LossBreakdown::mean(&losses).expect("batch is not empty");
    Ok(BatchGradient { grad, loss })
}

/// Mean total loss over the batch without the gradient.
pub fn batch_loss(
    code: &CodeSpec,
    params: &DecoderParams,
    config: &DecoderConfig,
    lambda: f64,
    batch: &ChannelBatch,
    perms: &[Vec<PermutationElement>],
) -> Result<LossBreakdown> {
    let config = DecoderConfig {
        early_stop_on_syndrome: false,
        ..*config
    };
    let losses = (0..batch.len())
        .map(|b| {
            let trace = decode(params, &config, code, &perms[b], &batch.llrs[b])?;
            loss(&trace, &batch.targets[b], params, lambda)
        })
        .collect::<Result<Vec<_>>>()?;
    LossBreakdown::mean(&losses).ok_or_else(|| Error::InvalidArgument("empty training batch".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automorphism::PermutationReservoir;
    use crate::channel::{make_batch, stream_rng, SnrKind};
    use crate::code::build_bch_code;
    use rand::Rng;

    struct Setup {
        code: CodeSpec,
        params: DecoderParams,
        config: DecoderConfig,
        batch: ChannelBatch,
        perms: Vec<Vec<PermutationElement>>,
    }

    fn setup(weight_self: bool, seed: u64) -> Setup {
        let code = build_bch_code(4, 1).unwrap();
        let mut rng = stream_rng(seed, 0);
        let params = DecoderParams {
            edge_weights: (0..code.graph().edge_count())
                .map(|_| rng.random_range(0.3..1.5))
                .collect(),
            legacy: None,
        };
        let config = DecoderConfig {
            weight_self_message: weight_self,
            ..DecoderConfig::new(2, 2)
        };
        let batch = make_batch(&code, SnrKind::EbN0, &[0.0, 1.0, 2.0], 2, &mut rng).unwrap();
        let mut res = PermutationReservoir::for_code(&code, 10, 50, seed).unwrap();
        let perms = (0..batch.len()).map(|_| res.sample_many(2)).collect();
        Setup {
            code,
            params,
            config,
            batch,
            perms,
        }
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
    }

    fn check_fd(s: &Setup, lambda: f64) {
        let g = batch_gradient(&s.code, &s.params, &s.config, lambda, &s.batch, &s.perms).unwrap();
        let h = 1e-4;
        for e in (0..s.params.len()).step_by(3) {
            let mut plus = s.params.clone();
            plus.edge_weights[e] += h;
            let mut minus = s.params.clone();
            minus.edge_weights[e] -= h;
            let lp = batch_loss(&s.code, &plus, &s.config, lambda, &s.batch, &s.perms).unwrap();
            let lm = batch_loss(&s.code, &minus, &s.config, lambda, &s.batch, &s.perms).unwrap();
            let fd = (lp.total - lm.total) / (2.0 * h);
            assert!(rel_err(fd, g.grad[e]) < 1e-4, "edge {e}: fd {fd} vs {}", g.grad[e]);
        }
    }

    #[test]
    fn matches_finite_differences() {
        check_fd(&setup(false, 11), 0.0);
        check_fd(&setup(false, 12), 3.0);
    }

    #[test]
    fn matches_finite_differences_with_weighted_self_message() {
        check_fd(&setup(true, 13), 0.5);
    }

    #[test]
    fn penalty_gradient_is_two_lambda_w() {
        let s = setup(false, 14);
        let g = l3_gradient(&s.params, 100.0);
        for (gi, w) in g.iter().zip(&s.params.edge_weights) {
            assert_eq!(*gi, 200.0 * w);
        }
        // the full gradient differs from the data part by blocks × 2λw
        let g0 = batch_gradient(&s.code, &s.params, &s.config, 0.0, &s.batch, &s.perms).unwrap();
        let g1 = batch_gradient(&s.code, &s.params, &s.config, 100.0, &s.batch, &s.perms).unwrap();
        for e in 0..s.params.len() {
            let shift = g1.grad[e] - g0.grad[e];
            assert!((shift - 2.0 * 200.0 * s.params.edge_weights[e]).abs() < 1e-9);
        }
    }

    #[test]
    fn clamped_paths_pass_no_gradient() {
        let s = setup(false, 15);
        let config = DecoderConfig::new(1, 3);
        let perm = [PermutationElement::identity(15)];
        // every variable-update argument lies beyond the clip
        let llr = vec![-60.0; 15];
        let trace = decode(&s.params, &config, &s.code, &perm, &llr).unwrap();
        let graph = s.code.graph();
        let g = trace_gradient(graph, &s.params, &config, &trace, &[0; 15]);
        // only the direct marginal terms survive
        let block = &trace.blocks[0];
        let mut expected = vec![0.0; graph.edge_count()];
        for (i, o) in block.mid_outputs.iter().enumerate() {
            let extra = if i + 1 == block.mid_outputs.len() { 2.0 } else { 1.0 };
            for (e, edge) in graph.edges().iter().enumerate() {
                expected[e] += extra * bce_logit_grad(o[edge.var], 0.0) / 15.0 * block.check_messages[i][e];
            }
        }
        for (a, b) in g.iter().zip(&expected) {
            assert!((a - b).abs() <= 1e-12 * b.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn independent_of_thread_count() {
        let s = setup(false, 16);
        let a = batch_gradient(&s.code, &s.params, &s.config, 1.0, &s.batch, &s.perms).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool
            .install(|| batch_gradient(&s.code, &s.params, &s.config, 1.0, &s.batch, &s.perms))
            .unwrap();
        assert_eq!(a.grad, b.grad);
        assert_eq!(a.loss, b.loss);
    }
}
