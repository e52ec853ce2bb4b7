//! GF(2^m) arithmetic for the BCH constructor.
//!
//! Elements are stored in polynomial basis as integers; multiplication goes
//! through log/antilog tables built from a fixed primitive polynomial.

/// Primitive polynomials used for each supported field exponent, bit `i` holding
/// the coefficient of `x^i`.
///
/// | m | polynomial              |
/// |---|-------------------------|
/// | 2 | x^2 + x + 1             |
/// | 3 | x^3 + x + 1             |
/// | 4 | x^4 + x + 1             |
/// | 5 | x^5 + x^2 + 1           |
/// | 6 | x^6 + x + 1             |
/// | 7 | x^7 + x^3 + 1           |
/// | 8 | x^8 + x^4 + x^3 + x^2 + 1 |
pub const PRIMITIVE_POLYNOMIALS: [(u32, u32); 7] = [
    (2, 0b111),
    (3, 0b1011),
    (4, 0b1_0011),
    (5, 0b10_0101),
    (6, 0b100_0011),
    (7, 0b1000_1001),
    (8, 0b1_0001_1101),
];

pub fn primitive_polynomial(m: u32) -> Option<u32> {
    PRIMITIVE_POLYNOMIALS
        .iter()
        .find(|(mm, _)| *mm == m)
        .map(|&(_, p)| p)
}

#[derive(Debug, Clone)]
pub struct GaloisField {
    m: u32,
    /// exp[i] = alpha^i for i in 0..2(q-1)
    exp: Vec<u32>,
    /// log[x] for x != 0
    log: Vec<u32>,
}

impl GaloisField {
    pub fn new(m: u32) -> Option<Self> {
        let poly = primitive_polynomial(m)?;
        let order = (1u32 << m) - 1;
        let mut exp = vec![0u32; 2 * order as usize];
        let mut log = vec![0u32; (order + 1) as usize];
        let mut x = 1u32;
        for i in 0..order {
            exp[i as usize] = x;
            log[x as usize] = i;
            x <<= 1;
            if x & (1 << m) != 0 {
                x ^= poly;
            }
        }
        for i in order..2 * order {
            exp[i as usize] = exp[(i - order) as usize];
        }
        Some(Self { m, exp, log })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Multiplicative order of the field, 2^m - 1.
    pub fn order(&self) -> u32 {
        (1 << self.m) - 1
    }

    pub fn alpha_pow(&self, i: u32) -> u32 {
        self.exp[(i % self.order()) as usize]
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
    }

    /// Minimal polynomial of alpha^i over GF(2), as a coefficient bitmask.
    pub fn minimal_polynomial(&self, i: u32) -> u64 {
        let coset = self.cyclotomic_coset(i);
        // product of (x - alpha^c) with coefficients in GF(2^m)
        let mut poly: Vec<u32> = vec![1];
        for &c in &coset {
            let root = self.alpha_pow(c);
            let mut next = vec![0u32; poly.len() + 1];
            for (d, &coef) in poly.iter().enumerate() {
                next[d + 1] ^= coef;
                next[d] ^= self.mul(coef, root);
            }
            poly = next;
        }
        poly.iter().enumerate().fold(0u64, |acc, (d, &coef)| {
            debug_assert!(coef <= 1, "minimal polynomial must be binary");
            acc | ((coef as u64) << d)
        })
    }

    pub fn cyclotomic_coset(&self, i: u32) -> Vec<u32> {
        let n = self.order();
        let start = i % n;
        let mut coset = vec![start];
        let mut x = (2 * start) % n;
        while x != start {
            coset.push(x);
            x = (2 * x) % n;
        }
        coset
    }
}

/// Product of two binary polynomials given as coefficient vectors (index = degree).
pub fn poly_mul(a: &[u8], b: &[u8]) -> Vec<u8> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u8; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 1 {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] ^= y;
            }
        }
    }
    out
}

pub fn mask_to_coeffs(mask: u64) -> Vec<u8> {
    let deg = 63 - mask.leading_zeros() as usize;
    (0..=deg).map(|d| ((mask >> d) & 1) as u8).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_are_cyclic_of_full_order() {
        for &(m, _) in &PRIMITIVE_POLYNOMIALS {
            let gf = GaloisField::new(m).unwrap();
            let mut seen = vec![false; gf.order() as usize + 1];
            for i in 0..gf.order() {
                let x = gf.alpha_pow(i);
                assert!(!seen[x as usize], "m={m}: alpha not primitive");
                seen[x as usize] = true;
            }
            assert_eq!(gf.alpha_pow(gf.order()), 1);
        }
    }

    #[test]
    fn minimal_polynomial_of_alpha_is_the_primitive_polynomial() {
        for &(m, p) in &PRIMITIVE_POLYNOMIALS {
            let gf = GaloisField::new(m).unwrap();
            assert_eq!(gf.minimal_polynomial(1), p as u64);
        }
    }

    #[test]
    fn cosets_mod_15() {
        let gf = GaloisField::new(4).unwrap();
        assert_eq!(gf.cyclotomic_coset(1), vec![1, 2, 4, 8]);
        assert_eq!(gf.cyclotomic_coset(5), vec![5, 10]);
        // x^4 + x^3 + x^2 + x + 1
        assert_eq!(gf.minimal_polynomial(3), 0b11111);
    }
}
