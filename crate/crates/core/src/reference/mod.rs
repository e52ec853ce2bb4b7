//! Classical baselines: flooding sum-product BP, mRRD, ordered statistics
//! decoding and exhaustive maximum likelihood.

mod bp;
mod ml;
mod mrrd;
mod osd;

pub use bp::{bp_decode, BpOutput};
pub use ml::{ml_decode_exhaustive, ExhaustiveMl};
pub use mrrd::{mrrd_decode, MrrdConfig, MrrdOutput};
pub use osd::osd_decode;

use std::cmp::Ordering;

/// Soft correlation `Σ (2c_v − 1)·l_v` between a word and the channel LLRs.
/// Larger is more likely.
pub fn correlation(word: &[u8], llr: &[f64]) -> f64 {
    word.iter()
        .zip(llr)
        .map(|(&c, &l)| if c == 1 { l } else { -l })
        .sum()
}

/// Candidate order used by every list decoder: higher correlation first,
/// exact ties broken towards the lexicographically smaller word.
pub fn candidate_order(a: (&[u8], f64), b: (&[u8], f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.0.cmp(b.0))
}

/// Codewords collected by a list decoder with their correlation scores.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateList {
    pub candidates: Vec<(Vec<u8>, f64)>,
}

impl CandidateList {
    pub fn push(&mut self, word: Vec<u8>, score: f64) {
        self.candidates.push((word, score));
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn best(&self) -> Option<&[u8]> {
        self.candidates
            .iter()
            .min_by(|a, b| candidate_order((&a.0, a.1), (&b.0, b.1)))
            .map(|(w, _)| w.as_slice())
    }
}
