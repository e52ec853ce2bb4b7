use crate::channel::hard_decision;
use crate::code::CodeSpec;
use crate::error::{Error, Result};

use super::{candidate_order, correlation};

/// Order-`order` ordered statistics decoding.
///
/// Positions are sorted by decreasing `|llr|` (stable, so ties keep index
/// order). The generator is Gauss-Jordan reduced along that order; a column
/// that is dependent on the already chosen ones is skipped and the next
/// reliable column is tried, so the basis always has k positions. The hard
/// decisions on the basis are re-encoded, and every flip pattern of at most
/// `order` basis bits is scored by soft correlation.
pub fn osd_decode(code: &CodeSpec, llr: &[f64], order: usize) -> Result<Vec<u8>> {
    if order > 2 {
        return Err(Error::InvalidArgument(format!(
            "OSD order must be 0, 1 or 2, got {order}"
        )));
    }
    code.check_len(llr.len())?;
    let n = code.n();
    let mut positions: Vec<usize> = (0..n).collect();
    positions.sort_by(|&a, &b| llr[b].abs().total_cmp(&llr[a].abs()));
    let (g, pivots) = code.generator().rref_with_order(&positions);
    let k = pivots.len();

    let mut base = vec![0u8; n];
    for (r, &p) in pivots.iter().enumerate() {
        if hard_decision(llr[p]) == 1 {
            for (b, &x) in base.iter_mut().zip(g.row(r)) {
                *b ^= x;
            }
        }
    }

    let mut best = base.clone();
    let mut best_score = correlation(&base, llr);
    let mut consider = |word: &[u8]| {
        let score = correlation(word, llr);
        if candidate_order((word, score), (&best, best_score)).is_lt() {
            best.copy_from_slice(word);
            best_score = score;
        }
    };
    let mut word = vec![0u8; n];
    if order >= 1 {
        for a in 0..k {
            for (w, (&b, &x)) in word.iter_mut().zip(base.iter().zip(g.row(a))) {
                *w = b ^ x;
            }
            consider(&word);
            if order >= 2 {
                let single = word.clone();
                for b in a + 1..k {
                    for (w, (&s, &x)) in word.iter_mut().zip(single.iter().zip(g.row(b))) {
                        *w = s ^ x;
                    }
                    consider(&word);
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{stream_rng, AwgnChannel, SnrKind};
    use crate::code::build_bch_code;
    use crate::reference::ExhaustiveMl;
    use rand::Rng;

    #[test]
    fn order0_noiseless_returns_transmitted_word() {
        let code = build_bch_code(5, 3).unwrap();
        let mut rng = stream_rng(1, 1);
        for _ in 0..10 {
            let msg: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
            let cw = code.encode(&msg).unwrap();
            let llr: Vec<f64> = cw
                .iter()
                .enumerate()
                .map(|(i, &c)| (if c == 1 { 1.0 } else { -1.0 }) * (1.0 + i as f64 * 0.1))
                .collect();
            assert_eq!(osd_decode(&code, &llr, 0).unwrap(), cw);
        }
    }

    #[test]
    fn outputs_are_codewords_and_orders_nest() {
        let code = build_bch_code(4, 1).unwrap();
        let ml = ExhaustiveMl::new(&code).unwrap();
        let ch = AwgnChannel::for_code(&code, SnrKind::EbN0);
        let mut rng = stream_rng(2, 2);
        let mut errors = [0usize; 3];
        let mut disagree = 0;
        for _ in 0..2000 {
            let llr = ch.transmit(&[0; 15], 2.0, &mut rng);
            let mut scores = [0.0; 3];
            for order in 0..3 {
                let w = osd_decode(&code, &llr, order).unwrap();
                assert!(code.is_codeword(&w));
                scores[order] = correlation(&w, &llr);
                errors[order] += usize::from(w.iter().any(|&b| b != 0));
                if order == 2 && w != ml.decode(&llr) {
                    disagree += 1;
                }
            }
            // larger candidate sets never score worse
            assert!(scores[1] >= scores[0] && scores[2] >= scores[1]);
        }
        assert!(errors[2] <= errors[1] + 20 && errors[1] <= errors[0] + 20, "{errors:?}");
        assert!(disagree <= 2, "order-2 disagreed with ML {disagree} times");
    }

    #[test]
    fn rejects_high_order() {
        let code = build_bch_code(4, 1).unwrap();
        assert!(osd_decode(&code, &[0.0; 15], 3).is_err());
    }
}
