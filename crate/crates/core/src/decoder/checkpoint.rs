//! Text checkpoint of the tied edge weights.
//!
//! ```text
//! permbp-weights v1
//! n <n> checks <h_rows> edges <E>
//! <check> <var> <weight>        (E lines, row-major over h)
//! ```
//!
//! Weights are written in shortest round-trip decimal form, so a save/load
//! cycle is lossless.

use std::fmt::Write as _;
use std::path::Path;

use super::DecoderParams;
use crate::code::CodeSpec;
use crate::error::{Error, Result};

const HEADER: &str = "permbp-weights v1";

pub fn save_weights(code: &CodeSpec, params: &DecoderParams) -> Result<String> {
    let graph = code.graph();
    if params.edge_weights.len() != graph.edge_count() {
        return Err(Error::Checkpoint(format!(
            "{} weights for a graph with {} edges",
            params.edge_weights.len(),
            graph.edge_count()
        )));
    }
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(
        out,
        "n {} checks {} edges {}",
        code.n(),
        code.h_rows(),
        graph.edge_count()
    );
    for (edge, w) in graph.edges().iter().zip(&params.edge_weights) {
        let _ = writeln!(out, "{} {} {}", edge.check, edge.var, w);
    }
    Ok(out)
}

pub fn load_weights(code: &CodeSpec, text: &str) -> Result<DecoderParams> {
    let bad = |line: usize, msg: String| Error::Checkpoint(format!("line {line}: {msg}"));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == HEADER => {}
        _ => return Err(bad(1, format!("expected header {HEADER:?}"))),
    }
    let (ln, dims) = lines.next().ok_or_else(|| bad(2, "missing dimensions".into()))?;
    let toks: Vec<&str> = dims.split_whitespace().collect();
    let expected = [
        "n".to_string(),
        code.n().to_string(),
        "checks".into(),
        code.h_rows().to_string(),
        "edges".into(),
        code.graph().edge_count().to_string(),
    ];
    if toks != expected {
        return Err(bad(ln + 1, format!("dimensions {dims:?} do not match the code")));
    }
    let graph = code.graph();
    let mut weights = Vec::with_capacity(graph.edge_count());
    for edge in graph.edges() {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| bad(0, "truncated weight list".into()))?;
        let mut it = line.split_whitespace();
        let parse_idx = |t: Option<&str>| t.and_then(|s| s.parse::<usize>().ok());
        let (c, v) = (parse_idx(it.next()), parse_idx(it.next()));
        if c != Some(edge.check) || v != Some(edge.var) {
            return Err(bad(
                ln + 1,
                format!("expected edge ({}, {})", edge.check, edge.var),
            ));
        }
        let w = it
            .next()
            .and_then(|s| s.parse::<f64>().ok())
            .filter(|w| w.is_finite())
            .ok_or_else(|| bad(ln + 1, "bad weight value".into()))?;
        weights.push(w);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(bad(ln + 1, "trailing data after weight list".into()));
    }
    Ok(DecoderParams {
        edge_weights: weights,
        legacy: None,
    })
}

pub fn write_weights(code: &CodeSpec, params: &DecoderParams, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, save_weights(code, params)?)?;
    Ok(())
}

pub fn read_weights(code: &CodeSpec, path: impl AsRef<Path>) -> Result<DecoderParams> {
    load_weights(code, &std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::build_bch_code;
    use proptest::prelude::*;

    #[test]
    fn rejects_mismatched_code() {
        let a = build_bch_code(4, 1).unwrap();
        let b = build_bch_code(5, 3).unwrap();
        let text = save_weights(&a, &DecoderParams::unit(&a)).unwrap();
        assert!(load_weights(&b, &text).is_err());
        assert!(load_weights(&a, &text.replace("v1", "v9")).is_err());
        let truncated: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(load_weights(&a, &truncated).is_err());
    }

    proptest! {
        #[test]
        fn save_load_is_lossless(ws in proptest::collection::vec(0.0f64..1e3, 32)) {
            let code = build_bch_code(4, 1).unwrap();
            let e = code.graph().edge_count();
            let params = DecoderParams {
                edge_weights: (0..e).map(|i| ws[i % ws.len()] / (i + 1) as f64).collect(),
                legacy: None,
            };
            let text = save_weights(&code, &params).unwrap();
            prop_assert_eq!(load_weights(&code, &text).unwrap(), params);
        }
    }
}
