use crate::code::{unpack_word, CodeSpec, MAX_ENUMERATION_K};
use crate::error::{Error, Result};

use super::{candidate_order, correlation};

/// Exhaustive maximum-likelihood decoder with the codebook enumerated once.
///
/// Codes with n ≤ 64 keep the codebook as bitmasks and score a frame with
/// per-byte lookup tables of partial LLR sums. Longer codes fall back to
/// plain vectors.
#[derive(Debug, Clone)]
pub struct ExhaustiveMl {
    n: usize,
    book: Codebook,
}

#[derive(Debug, Clone)]
enum Codebook {
    Packed(Vec<u64>),
    Words(Vec<Vec<u8>>),
}

/// `a` is lexicographically smaller than `b` when read as a vector with
/// position 0 first.
#[inline]
fn mask_lex_less(a: u64, b: u64) -> bool {
    let diff = a ^ b;
    diff != 0 && a & (1u64 << diff.trailing_zeros()) == 0
}

impl ExhaustiveMl {
    pub fn new(code: &CodeSpec) -> Result<Self> {
        if code.k() > MAX_ENUMERATION_K {
            return Err(Error::TooManyCodewords {
                k: code.k(),
                limit: MAX_ENUMERATION_K,
            });
        }
        let book = if code.n() <= 64 {
            Codebook::Packed(code.codeword_masks()?)
        } else {
            Codebook::Words(code.enumerate_codewords()?.collect())
        };
        Ok(Self { n: code.n(), book })
    }

    pub fn codebook_size(&self) -> usize {
        match &self.book {
            Codebook::Packed(m) => m.len(),
            Codebook::Words(w) => w.len(),
        }
    }

    /// Codeword maximizing `Σ (2c_v − 1)·l_v`; exact ties go to the
    /// lexicographically smallest word.
    pub fn decode(&self, llr: &[f64]) -> Vec<u8> {
        assert_eq!(llr.len(), self.n, "LLR length does not match the code");
        match &self.book {
            Codebook::Packed(masks) => unpack_word(self.best_mask(masks, llr), self.n),
            Codebook::Words(words) => words
                .iter()
                .map(|w| (w, correlation(w, llr)))
                .min_by(|a, b| candidate_order((a.0, a.1), (b.0, b.1)))
                .map(|(w, _)| w.clone())
                .expect("codebook is never empty"),
        }
    }

    fn best_mask(&self, masks: &[u64], llr: &[f64]) -> u64 {
        // Σ_{c_v=1} l_v orders codewords the same way as the full correlation
        let chunks = self.n.div_ceil(8);
        let mut tables = vec![[0.0f64; 256]; chunks];
        for (b, table) in tables.iter_mut().enumerate() {
            let bits = &llr[8 * b..(8 * b + 8).min(self.n)];
            for byte in 1..256usize {
                let low = byte.trailing_zeros() as usize;
                table[byte] = table[byte & (byte - 1)] + bits.get(low).copied().unwrap_or(0.0);
            }
        }
        let score = |m: u64| -> f64 {
            tables
                .iter()
                .enumerate()
                .map(|(b, t)| t[((m >> (8 * b)) & 0xff) as usize])
                .sum()
        };
        let mut best = masks[0];
        let mut best_score = score(best);
        for &m in &masks[1..] {
            let s = score(m);
            if s > best_score || (s == best_score && mask_lex_less(m, best)) {
                best = m;
                best_score = s;
            }
        }
        best
    }
}

/// One-shot exhaustive ML decode. Enumerates the codebook on every call; use
/// [`ExhaustiveMl`] for repeated decoding.
pub fn ml_decode_exhaustive(code: &CodeSpec, llr: &[f64]) -> Result<Vec<u8>> {
    code.check_len(llr.len())?;
    Ok(ExhaustiveMl::new(code)?.decode(llr))
}
