use super::galois::{mask_to_coeffs, poly_mul, GaloisField};
use super::{BchParams, CodeSpec, Gf2Matrix};
use crate::error::{Error, Result};

/// Narrow-sense primitive binary BCH code of length 2^m − 1 with designed
/// error-correcting radius `t`.
///
/// Coordinate `i` carries the coefficient of `x^i`. The generator matrix is
/// systematic with parity on positions `0..n-k` and message bits on
/// `n-k..n`; `h` is the matching `(n-k) × n` systematic parity-check matrix.
pub fn build_bch_code(m: u32, t: u32) -> Result<CodeSpec> {
    let (g, n) = generator_polynomial(m, t)?;
    let (generator, r) = systematic_generator(&g, n);
    let k = generator.rows();
    let mut h = Gf2Matrix::zeros(r, n);
    for j in 0..r {
        h.set(j, j, 1);
    }
    for i in 0..k {
        for j in 0..r {
            h.set(j, r + i, generator.get(i, j));
        }
    }
    CodeSpec::with_generator(h, generator, Some(BchParams { m, t }))
}

/// The same code as [`build_bch_code`] with a redundant circulant
/// parity-check matrix: row `s` is `x^s · h*(x) mod (x^n − 1)`, where
/// `h*(x)` is the reciprocal of the parity polynomial `(x^n − 1)/g(x)`. All
/// `n` cyclic shifts are kept, so the cyclic shift maps the Tanner graph onto
/// itself.
pub fn build_bch_code_circulant(m: u32, t: u32) -> Result<CodeSpec> {
    let (g, n) = generator_polynomial(m, t)?;
    let (generator, _) = systematic_generator(&g, n);
    let mut modulus = vec![0u8; n + 1];
    modulus[0] = 1;
    modulus[n] = 1;
    let parity = poly_div_exact(&modulus, &g);
    let reciprocal: Vec<u8> = parity.iter().rev().copied().collect();
    let mut h = Gf2Matrix::zeros(n, n);
    for s in 0..n {
        for (d, &c) in reciprocal.iter().enumerate() {
            h.set(s, (s + d) % n, c);
        }
    }
    CodeSpec::with_generator(h, generator, Some(BchParams { m, t }))
}

/// `g(x)`, the product of the distinct minimal polynomials of `α^1 … α^2t`,
/// and the code length.
fn generator_polynomial(m: u32, t: u32) -> Result<(Vec<u8>, usize)> {
    if !(2..=8).contains(&m) {
        return Err(Error::InvalidCode(format!(
            "field exponent m must be in 2..=8, got {m}"
        )));
    }
    if t == 0 {
        return Err(Error::InvalidCode("designed radius t must be >= 1".into()));
    }
    let gf = GaloisField::new(m).expect("primitive polynomial table covers 2..=8");
    let n = gf.order() as usize;

    let mut covered = vec![false; n];
    let mut g: Vec<u8> = vec![1];
    for i in 1..=(2 * t).min(n as u32) {
        if covered[i as usize % n] {
            continue;
        }
        for c in gf.cyclotomic_coset(i) {
            covered[c as usize] = true;
        }
        g = poly_mul(&g, &mask_to_coeffs(gf.minimal_polynomial(i)));
    }
    let r = g.len() - 1;
    if r >= n {
        return Err(Error::InvalidCode(format!(
            "BCH(m={m}, t={t}) is degenerate: generator degree {r} leaves k = 0"
        )));
    }
    Ok((g, n))
}

/// Systematic generator (parity on `0..r`, message on `r..n`) and `r`.
fn systematic_generator(g: &[u8], n: usize) -> (Gf2Matrix, usize) {
    let r = g.len() - 1;
    let k = n - r;
    let mut generator = Gf2Matrix::zeros(k, n);
    for i in 0..k {
        let rem = x_pow_mod(r + i, g);
        generator.set(i, r + i, 1);
        for (j, &bit) in rem.iter().enumerate() {
            generator.set(i, j, bit);
        }
    }
    (generator, r)
}

/// Quotient of `a / b` over GF(2) for an exact division.
fn poly_div_exact(a: &[u8], b: &[u8]) -> Vec<u8> {
    let db = b.len() - 1;
    let mut rem = a.to_vec();
    let mut q = vec![0u8; a.len() - db];
    for d in (0..q.len()).rev() {
        if rem[d + db] == 1 {
            q[d] = 1;
            for (i, &c) in b.iter().enumerate() {
                rem[d + i] ^= c;
            }
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0), "division is not exact");
    q
}

/// Coefficients of `x^e mod g(x)`, length `deg g`.
fn x_pow_mod(e: usize, g: &[u8]) -> Vec<u8> {
    let r = g.len() - 1;
    let mut rem = vec![0u8; r];
    if e < r {
        rem[e] = 1;
        return rem;
    }
    // start from x^(r-1) and multiply by x repeatedly
    rem[r - 1] = 1;
    for _ in (r - 1)..e {
        let carry = rem[r - 1];
        for d in (1..r).rev() {
            rem[d] = rem[d - 1];
        }
        rem[0] = 0;
        if carry == 1 {
            for d in 0..r {
                rem[d] ^= g[d];
            }
        }
    }
    rem
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_dimensions() {
        for (m, t, n, k) in [
            (4, 1, 15, 11),
            (4, 2, 15, 7),
            (5, 3, 31, 16),
            (6, 3, 63, 45),
            (6, 5, 63, 36),
            (7, 1, 127, 120),
            (8, 2, 255, 239),
        ] {
            let code = build_bch_code(m, t).unwrap();
            assert_eq!((code.n(), code.k()), (n, k), "m={m} t={t}");
            assert_eq!(code.h_rows(), n - k);
            assert!(code.generator().mul_transpose(code.h()).is_zero());
        }
    }

    #[test]
    fn circulant_form_describes_the_same_code() {
        for (m, t) in [(4, 1), (5, 3), (6, 3)] {
            let sys = build_bch_code(m, t).unwrap();
            let circ = build_bch_code_circulant(m, t).unwrap();
            assert_eq!((circ.n(), circ.k()), (sys.n(), sys.k()));
            assert_eq!(circ.h_rows(), sys.n());
            assert!(sys.generator().mul_transpose(circ.h()).is_zero());
            assert_eq!(circ.bch_params(), sys.bch_params());
        }
        // BCH(31,16): h*(x) has weight 8, so every row and column has weight 8
        let circ = build_bch_code_circulant(5, 3).unwrap();
        assert_eq!(circ.graph().edge_count(), 31 * 8);
        assert!((0..31).all(|v| circ.graph().var_edges(v).len() == 8));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(build_bch_code(1, 1).is_err());
        assert!(build_bch_code(9, 1).is_err());
        assert!(build_bch_code(4, 0).is_err());
        // t = 7 on n = 15 covers every nonzero exponent: the repetition code
        let rep = build_bch_code(4, 7).unwrap();
        assert_eq!(rep.k(), 1);
        assert!(rep.is_codeword(&[1; 15]));
    }

    #[test]
    fn every_codeword_of_bch15_has_zero_syndrome() {
        let code = build_bch_code(4, 1).unwrap();
        let count = code
            .enumerate_codewords()
            .unwrap()
            .inspect(|w| assert!(code.syndrome(w).unwrap().iter().all(|&b| b == 0)))
            .count();
        assert_eq!(count, 2048);
    }

    #[test]
    fn generator_polynomial_multiples_are_codewords() {
        // BCH(31,16): g(x) has degree 15; x^i g(x) for i < k are codewords
        let code = build_bch_code(5, 3).unwrap();
        let gf = GaloisField::new(5).unwrap();
        let mut g = vec![1u8];
        for i in [1u32, 3, 5] {
            g = poly_mul(&g, &mask_to_coeffs(gf.minimal_polynomial(i)));
        }
        assert_eq!(g.len() - 1, 15);
        for shift in 0..code.k() {
            let mut w = vec![0u8; 31];
            for (d, &c) in g.iter().enumerate() {
                w[d + shift] = c;
            }
            assert!(code.is_codeword(&w));
        }
    }
}
