//! Binary linear block codes: parity-check matrices, Tanner graphs, syndromes
//! and codeword enumeration.

mod alist;
mod bch;
pub mod galois;
pub mod gf2;

pub use alist::{parse_alist, read_alist, to_alist, write_alist};
pub use bch::{build_bch_code, build_bch_code_circulant};
pub use gf2::Gf2Matrix;

use crate::error::{Error, Result};

/// Largest code dimension accepted by exhaustive enumeration.
pub const MAX_ENUMERATION_K: usize = 24;

/// Parameters of a narrow-sense primitive BCH code, kept so that the
/// automorphism module knows the coordinate structure of the code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BchParams {
    pub m: u32,
    pub t: u32,
}

/// One Tanner-graph edge, joining variable `var` and check `check`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub var: usize,
    pub check: usize,
}

/// Bipartite graph of the parity-check matrix. Edges are numbered row-major
/// over `h`: all edges of check 0 by increasing variable, then check 1, and so
/// on. That numbering is the canonical ordering of learnable edge weights.
#[derive(Debug, Clone)]
pub struct TannerGraph {
    edges: Vec<Edge>,
    var_edges: Vec<Vec<usize>>,
    check_edges: Vec<Vec<usize>>,
}

impl TannerGraph {
    pub fn from_matrix(h: &Gf2Matrix) -> Self {
        let mut edges = Vec::with_capacity(h.count_ones());
        let mut var_edges = vec![Vec::new(); h.cols()];
        let mut check_edges = vec![Vec::new(); h.rows()];
        for c in 0..h.rows() {
            for v in 0..h.cols() {
                if h.get(c, v) == 1 {
                    let e = edges.len();
                    edges.push(Edge { var: v, check: c });
                    var_edges[v].push(e);
                    check_edges[c].push(e);
                }
            }
        }
        Self {
            edges,
            var_edges,
            check_edges,
        }
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges incident to variable `v`, ordered by check index.
    #[inline]
    pub fn var_edges(&self, v: usize) -> &[usize] {
        &self.var_edges[v]
    }

    /// Edges incident to check `c`, ordered by variable index.
    #[inline]
    pub fn check_edges(&self, c: usize) -> &[usize] {
        &self.check_edges[c]
    }

    pub fn num_vars(&self) -> usize {
        self.var_edges.len()
    }

    pub fn num_checks(&self) -> usize {
        self.check_edges.len()
    }

    /// Index of edge `(check, var)` if present.
    pub fn edge_index(&self, check: usize, var: usize) -> Option<usize> {
        self.check_edges
            .get(check)?
            .iter()
            .copied()
            .find(|&e| self.edges[e].var == var)
    }
}

/// A binary linear block code given by a parity-check matrix.
///
/// `h` may carry redundant rows (`h_rows > n - k`); `k` is always `n - rank(h)`.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    n: usize,
    k: usize,
    h: Gf2Matrix,
    generator: Gf2Matrix,
    graph: TannerGraph,
    bch: Option<BchParams>,
}

impl CodeSpec {
    /// Builds a code from its parity-check matrix. The generator is derived as
    /// a basis of the null space of `h`.
    pub fn from_parity_check(h: Gf2Matrix) -> Result<Self> {
        let generator = h.null_space();
        Self::with_generator(h, generator, None)
    }

    pub(crate) fn with_generator(
        h: Gf2Matrix,
        generator: Gf2Matrix,
        bch: Option<BchParams>,
    ) -> Result<Self> {
        let n = h.cols();
        if n == 0 || h.rows() == 0 {
            return Err(Error::InvalidCode("empty parity-check matrix".into()));
        }
        let rank = h.rank();
        let k = n - rank;
        if k == 0 {
            return Err(Error::InvalidCode(format!(
                "parity-check matrix has full column rank {rank}; code dimension k = 0"
            )));
        }
        if rank == 0 {
            return Err(Error::InvalidCode(
                "parity-check matrix has rank 0; k must be < n".into(),
            ));
        }
        if generator.rows() != k || generator.cols() != n || generator.rank() != k {
            return Err(Error::InvalidCode(format!(
                "generator must be a full-rank {k}x{n} matrix"
            )));
        }
        if !generator.mul_transpose(&h).is_zero() {
            return Err(Error::InvalidCode("G·Hᵀ ≠ 0".into()));
        }
        let graph = TannerGraph::from_matrix(&h);
        Ok(Self {
            n,
            k,
            h,
            generator,
            graph,
            bch,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn h_rows(&self) -> usize {
        self.h.rows()
    }

    pub fn h(&self) -> &Gf2Matrix {
        &self.h
    }

    pub fn generator(&self) -> &Gf2Matrix {
        &self.generator
    }

    pub fn graph(&self) -> &TannerGraph {
        &self.graph
    }

    pub fn bch_params(&self) -> Option<BchParams> {
        self.bch
    }

    /// Marks a loaded matrix as describing the primitive BCH code with the
    /// given parameters, so that its automorphisms become available. The
    /// caller asserts the coordinate convention (position i ↔ x^i); it is
    /// checked against the constructed code.
    pub fn assume_bch(mut self, m: u32, t: u32) -> Result<Self> {
        let reference = build_bch_code(m, t)?;
        if reference.n != self.n || reference.k != self.k {
            return Err(Error::InvalidCode(format!(
                "code ({}, {}) does not match BCH(m={m}, t={t}) = ({}, {})",
                self.n, self.k, reference.n, reference.k
            )));
        }
        if !reference.generator.mul_transpose(&self.h).is_zero() {
            return Err(Error::InvalidCode(
                "matrix does not annihilate the constructed BCH code".into(),
            ));
        }
        self.bch = Some(BchParams { m, t });
        Ok(self)
    }

    /// `h · wordᵀ` over GF(2).
    pub fn syndrome(&self, word: &[u8]) -> Result<Vec<u8>> {
        self.check_len(word.len())?;
        Ok(self.h.mul_vec(word))
    }

    pub fn is_codeword(&self, word: &[u8]) -> bool {
        word.len() == self.n
            && (0..self.h.rows()).all(|r| {
                self.h
                    .row(r)
                    .iter()
                    .zip(word)
                    .fold(0u8, |acc, (&a, &b)| acc ^ (a & b))
                    == 0
            })
    }

    /// Encodes `message` (length k) as `message · G`.
    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>> {
        if message.len() != self.k {
            return Err(Error::Dimension {
                what: "message length",
                expected: self.k,
                got: message.len(),
            });
        }
        let mut word = vec![0u8; self.n];
        for (i, _) in message.iter().enumerate().filter(|(_, &b)| b == 1) {
            for (w, g) in word.iter_mut().zip(self.generator.row(i)) {
                *w ^= g;
            }
        }
        Ok(word)
    }

    /// Streams all 2^k codewords in Gray-code order, starting with the zero word.
    pub fn enumerate_codewords(&self) -> Result<CodewordIter<'_>> {
        if self.k > MAX_ENUMERATION_K {
            return Err(Error::TooManyCodewords {
                k: self.k,
                limit: MAX_ENUMERATION_K,
            });
        }
        Ok(CodewordIter {
            generator: &self.generator,
            current: vec![0; self.n],
            index: 0,
            total: 1u64 << self.k,
        })
    }

    /// All codewords packed into `u64` bitmasks (bit v = position v). Requires
    /// n ≤ 64 and k within the enumeration limit.
    pub fn codeword_masks(&self) -> Result<Vec<u64>> {
        if self.n > 64 {
            return Err(Error::InvalidArgument(format!(
                "packed codewords need n <= 64, got {}",
                self.n
            )));
        }
        Ok(self.enumerate_codewords()?.map(|w| pack_word(&w)).collect())
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::Dimension {
                what: "word length",
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }
}

/// Packs a binary word (n ≤ 64) into a bitmask, position v at bit v.
pub fn pack_word(word: &[u8]) -> u64 {
    word.iter()
        .enumerate()
        .fold(0u64, |acc, (i, &b)| acc | ((b as u64 & 1) << i))
}

pub fn unpack_word(mask: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((mask >> i) & 1) as u8).collect()
}

pub struct CodewordIter<'a> {
    generator: &'a Gf2Matrix,
    current: Vec<u8>,
    index: u64,
    total: u64,
}

impl Iterator for CodewordIter<'_> {
    type Item = Vec<u8>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.index >= self.total {
            return None;
        }
        if self.index > 0 {
            let row = self.index.trailing_zeros() as usize;
            for (c, g) in self.current.iter_mut().zip(self.generator.row(row)) {
                *c ^= g;
            }
        }
        self.index += 1;
        Some(self.current.clone())
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.index) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for CodewordIter<'_> {}
