//! Reader and writer for the alist sparse matrix format.
//!
//! Layout (1-based indices, zero entries are padding):
//!
//! ```text
//! N M
//! max_col_degree max_row_degree
//! col_degree_1 ... col_degree_N
//! row_degree_1 ... row_degree_M
//! <N lines: row indices of each column>
//! <M lines: column indices of each row>
//! ```
//!
//! The writer pads every index line with zeros up to the maximum degree, so
//! `to_alist` output is canonical for a given matrix.

use std::fmt::Write as _;
use std::path::Path;

use super::{CodeSpec, Gf2Matrix};
use crate::error::{Error, Result};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line as (1-based line number, integer tokens).
    fn next_numbers(&mut self, what: &str) -> Result<(usize, Vec<usize>)> {
        for (idx, line) in self.inner.by_ref() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let nums = trimmed
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| Error::Alist {
                        line: idx + 1,
                        msg: format!("expected non-negative integer in {what}, found {tok:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok((idx + 1, nums));
        }
        Err(Error::Alist {
            line: 0,
            msg: format!("unexpected end of file while reading {what}"),
        })
    }
}

/// Parses alist text into a binary matrix, checking that the column and row
/// sections describe the same set of ones.
pub fn parse_alist(text: &str) -> Result<Gf2Matrix> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let err = |line: usize, msg: String| Error::Alist { line, msg };

    let (ln, dims) = lines.next_numbers("dimensions")?;
    let [n, m] = dims[..] else {
        return Err(err(ln, format!("expected 'N M', found {} numbers", dims.len())));
    };
    if n == 0 || m == 0 {
        return Err(err(ln, "dimensions must be positive".into()));
    }
    let (ln, maxd) = lines.next_numbers("maximum degrees")?;
    let [max_col, max_row] = maxd[..] else {
        return Err(err(ln, "expected two maximum degrees".into()));
    };
    let (ln, col_deg) = lines.next_numbers("column degrees")?;
    if col_deg.len() != n {
        return Err(err(ln, format!("expected {n} column degrees, found {}", col_deg.len())));
    }
    if col_deg.iter().any(|&d| d > max_col) {
        return Err(err(ln, format!("column degree exceeds declared maximum {max_col}")));
    }
    let (ln, row_deg) = lines.next_numbers("row degrees")?;
    if row_deg.len() != m {
        return Err(err(ln, format!("expected {m} row degrees, found {}", row_deg.len())));
    }
    if row_deg.iter().any(|&d| d > max_row) {
        return Err(err(ln, format!("row degree exceeds declared maximum {max_row}")));
    }

    let mut h = Gf2Matrix::zeros(m, n);
    for (col, &deg) in col_deg.iter().enumerate() {
        let (ln, idx) = lines.next_numbers("column index list")?;
        let rows: Vec<usize> = idx.iter().copied().filter(|&x| x != 0).collect();
        if rows.len() != deg {
            return Err(err(
                ln,
                format!("column {} declares degree {deg} but lists {} indices", col + 1, rows.len()),
            ));
        }
        for r in rows {
            if r > m {
                return Err(err(ln, format!("row index {r} out of range 1..={m}")));
            }
            if h.get(r - 1, col) == 1 {
                return Err(err(ln, format!("duplicate row index {r} in column {}", col + 1)));
            }
            h.set(r - 1, col, 1);
        }
    }
    for (row, &deg) in row_deg.iter().enumerate() {
        let (ln, idx) = lines.next_numbers("row index list")?;
        let cols: Vec<usize> = idx.iter().copied().filter(|&x| x != 0).collect();
        if cols.len() != deg {
            return Err(err(
                ln,
                format!("row {} declares degree {deg} but lists {} indices", row + 1, cols.len()),
            ));
        }
        let mut seen = vec![false; n];
        for c in cols {
            if c > n {
                return Err(err(ln, format!("column index {c} out of range 1..={n}")));
            }
            if h.get(row, c - 1) != 1 || seen[c - 1] {
                return Err(err(
                    ln,
                    format!("row {} lists column {c}, inconsistent with column section", row + 1),
                ));
            }
            seen[c - 1] = true;
        }
    }
    Ok(h)
}

/// Serializes a matrix in alist format.
pub fn to_alist(h: &Gf2Matrix) -> String {
    let (m, n) = (h.rows(), h.cols());
    let col_lists: Vec<Vec<usize>> = (0..n)
        .map(|c| (0..m).filter(|&r| h.get(r, c) == 1).map(|r| r + 1).collect())
        .collect();
    let row_lists: Vec<Vec<usize>> = (0..m)
        .map(|r| (0..n).filter(|&c| h.get(r, c) == 1).map(|c| c + 1).collect())
        .collect();
    let max_col = col_lists.iter().map(Vec::len).max().unwrap_or(0);
    let max_row = row_lists.iter().map(Vec::len).max().unwrap_or(0);

    let join = |v: &mut dyn Iterator<Item = usize>| {
        v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
    };
    let mut out = String::new();
    let _ = writeln!(out, "{n} {m}");
    let _ = writeln!(out, "{max_col} {max_row}");
    let _ = writeln!(out, "{}", join(&mut col_lists.iter().map(Vec::len)));
    let _ = writeln!(out, "{}", join(&mut row_lists.iter().map(Vec::len)));
    for (lists, width) in [(&col_lists, max_col), (&row_lists, max_row)] {
        for list in lists {
            let padded = list.iter().copied().chain(std::iter::repeat(0)).take(width.max(1));
            let _ = writeln!(out, "{}", join(&mut padded.into_iter()));
        }
    }
    out
}

pub fn read_alist(path: impl AsRef<Path>) -> Result<CodeSpec> {
    let text = std::fs::read_to_string(path)?;
    CodeSpec::from_parity_check(parse_alist(&text)?)
}

pub fn write_alist(code: &CodeSpec, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_alist(code.h()))?;
    Ok(())
}

impl CodeSpec {
    /// Loads a code from alist text; `k` is inferred as `n − rank(h)`.
    pub fn from_alist(text: &str) -> Result<Self> {
        Self::from_parity_check(parse_alist(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::build_bch_code;
    use proptest::prelude::*;

    const HAMMING_7_4: &str = "7 3
3 4
1 2 2 3 1 2 1
4 4 4
1 0 0
1 2 0
1 3 0
1 2 3
2 0 0
2 3 0
3 0 0
1 2 3 4
2 4 5 6
3 4 6 7
";

    #[test]
    fn parses_hamming_7_4() {
        let code = CodeSpec::from_alist(HAMMING_7_4).unwrap();
        assert_eq!((code.n(), code.k(), code.h_rows()), (7, 4, 3));
        assert_eq!(code.h().row(0), &[1, 1, 1, 1, 0, 0, 0]);
    }

    #[test]
    fn bch15_alist_infers_k_from_rank() {
        let code = build_bch_code(4, 1).unwrap();
        let loaded = CodeSpec::from_alist(&to_alist(code.h())).unwrap();
        assert_eq!((loaded.n(), loaded.k()), (15, 11));
    }

    #[test]
    fn redundant_rows_keep_rank() {
        let code = build_bch_code(4, 1).unwrap();
        let mut rows = code.h().row_vecs();
        let extra: Vec<u8> = rows[0].iter().zip(&rows[1]).map(|(a, b)| a ^ b).collect();
        rows.push(extra);
        let h = Gf2Matrix::from_rows(&rows).unwrap();
        let loaded = CodeSpec::from_alist(&to_alist(&h)).unwrap();
        assert_eq!((loaded.h_rows(), loaded.k()), (5, 11));
    }

    #[test]
    fn degree_mismatch_names_the_line() {
        let bad = HAMMING_7_4.replacen("1 2 0\n", "1 0 0\n", 1);
        match CodeSpec::from_alist(&bad) {
            Err(Error::Alist { line, .. }) => assert_eq!(line, 6),
            other => panic!("expected alist error, got {other:?}"),
        }
    }

    #[test]
    fn row_section_must_agree_with_columns() {
        let bad = HAMMING_7_4.replace("3 4 6 7\n", "3 4 5 7\n");
        match parse_alist(&bad) {
            Err(Error::Alist { line, msg }) => {
                assert_eq!(line, 14);
                assert!(msg.contains("inconsistent"), "{msg}");
            }
            other => panic!("expected alist error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_and_garbage_inputs() {
        assert!(parse_alist("7 3\n3 4\n").is_err());
        assert!(parse_alist("7 x\n").is_err());
        assert!(parse_alist("").is_err());
    }

    #[test]
    fn file_roundtrip() {
        let code = build_bch_code(5, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bch31.alist");
        write_alist(&code, &path).unwrap();
        let loaded = read_alist(&path).unwrap();
        assert_eq!(loaded.h(), code.h());
        assert_eq!(to_alist(loaded.h()), std::fs::read_to_string(&path).unwrap());
    }

    proptest! {
        #[test]
        fn alist_roundtrip_is_bit_identical(
            rows in 1usize..8,
            cols in 2usize..20,
            bits in proptest::collection::vec(0u8..2, 160),
        ) {
            let data: Vec<Vec<u8>> = (0..rows)
                .map(|r| (0..cols).map(|c| bits[(r * cols + c) % bits.len()]).collect())
                .collect();
            let h = Gf2Matrix::from_rows(&data).unwrap();
            let text = to_alist(&h);
            prop_assert_eq!(parse_alist(&text).unwrap(), h);
        }
    }
}
