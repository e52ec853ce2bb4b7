//! Coordinate permutations from the automorphism group of primitive BCH codes,
//! and random sampling of group elements by product replacement.
//!
//! Convention: a permutation acts on vector positions, moving the entry at
//! position `i` to position `map[i]`, i.e. `π(x)[map[i]] = x[i]`. LLRs,
//! marginals and codewords are all permuted this way.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::code::CodeSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct PermutationElement {
    map: Vec<usize>,
}

impl PermutationElement {
    /// Wraps a position map, rejecting anything that is not a bijection on
    /// `0..map.len()`.
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &t in &map {
            if t >= map.len() || seen[t] {
                return Err(Error::InvalidArgument(format!(
                    "permutation map is not a bijection (target {t})"
                )));
            }
            seen[t] = true;
        }
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    /// σ(i) = (i + 1) mod n
    pub fn cyclic_shift(n: usize) -> Self {
        Self {
            map: (0..n).map(|i| (i + 1) % n).collect(),
        }
    }

    /// φ(i) = 2i mod n, for odd n.
    pub fn frobenius(n: usize) -> Self {
        Self {
            map: (0..n).map(|i| (2 * i) % n).collect(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.map.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &t)| i == t)
    }

    /// Returns `π(x)`.
    pub fn apply<T: Copy>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.map.len(), "permutation length mismatch");
        let mut out = x.to_vec();
        for (i, &t) in self.map.iter().enumerate() {
            out[t] = x[i];
        }
        out
    }

    /// Writes `π(x)` into `out`.
    pub fn apply_into<T: Copy>(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.map.len());
        for (i, &t) in self.map.iter().enumerate() {
            out[t] = x[i];
        }
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "permutation length mismatch");
        Self {
            map: other.map.iter().map(|&j| self.map[j]).collect(),
        }
    }

    pub fn inverse(&self) -> Self {
        let mut map = vec![0; self.map.len()];
        for (i, &t) in self.map.iter().enumerate() {
            map[t] = i;
        }
        Self { map }
    }

    /// Whether every codeword is mapped to a codeword, checked on the rows of
    /// the generator matrix (sufficient by linearity).
    pub fn preserves(&self, code: &CodeSpec) -> bool {
        self.len() == code.n()
            && (0..code.k()).all(|r| code.is_codeword(&self.apply(code.generator().row(r))))
    }
}

/// Generators of the automorphism subgroup used for scheduling: the cyclic
/// shift and the Frobenius doubling map. Only defined for codes built as
/// primitive BCH codes, where position `i` is the coefficient of `x^i`.
pub fn generators(code: &CodeSpec) -> Result<Vec<PermutationElement>> {
    if code.bch_params().is_none() {
        return Err(Error::UnknownAutomorphisms(
            "code has no BCH provenance; load it with a BCH declaration to enable permutations"
                .into(),
        ));
    }
    let n = code.n();
    Ok(vec![
        PermutationElement::cyclic_shift(n),
        PermutationElement::frobenius(n),
    ])
}

/// `π₁⁻¹ ∘ π₂⁻¹ ∘ … ∘ πⱼ⁻¹`: undoes the permutations π₁, then π₂, …, then πⱼ
/// applied in that order.
pub fn compose_inverse_chain(perms: &[PermutationElement]) -> Result<PermutationElement> {
    let Some(first) = perms.first() else {
        return Err(Error::InvalidArgument("empty permutation chain".into()));
    };
    let n = first.len();
    let mut acc = PermutationElement::identity(n);
    for p in perms {
        if p.len() != n {
            return Err(Error::Dimension {
                what: "permutation length",
                expected: n,
                got: p.len(),
            });
        }
        acc = acc.compose(&p.inverse());
    }
    Ok(acc)
}

/// Product-replacement state: a tuple of group elements that is randomized
/// in place. Each step picks distinct slots `s ≠ t` and replaces
/// `element[s]` with `element[s] ∘ element[t]` or `element[s] ∘ element[t]⁻¹`
/// on a fair coin.
#[derive(Debug, Clone)]
pub struct PermutationReservoir {
    elements: Vec<PermutationElement>,
    seed: u64,
    k_pr_done: u64,
    rng: ChaCha8Rng,
}

impl PermutationReservoir {
    /// Fills `n_pr` slots by cycling through `gens`, then runs `k_pr`
    /// replacement steps.
    pub fn init(gens: &[PermutationElement], n_pr: usize, k_pr: u64, seed: u64) -> Result<Self> {
        if n_pr < 2 {
            return Err(Error::InvalidArgument(format!(
                "product replacement needs n_pr >= 2, got {n_pr}"
            )));
        }
        let Some(first) = gens.first() else {
            return Err(Error::InvalidArgument("no generators given".into()));
        };
        if gens.iter().any(|g| g.len() != first.len()) {
            return Err(Error::InvalidArgument(
                "generators act on different lengths".into(),
            ));
        }
        let elements = (0..n_pr).map(|i| gens[i % gens.len()].clone()).collect();
        let mut res = Self {
            elements,
            seed,
            k_pr_done: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        for _ in 0..k_pr {
            res.step();
        }
        Ok(res)
    }

    /// Reservoir over the code's automorphism generators.
    pub fn for_code(code: &CodeSpec, n_pr: usize, k_pr: u64, seed: u64) -> Result<Self> {
        Self::init(&generators(code)?, n_pr, k_pr, seed)
    }

    fn step(&mut self) -> usize {
        let len = self.elements.len();
        let s = self.rng.random_range(0..len);
        let mut t = self.rng.random_range(0..len - 1);
        if t >= s {
            t += 1;
        }
        let invert: bool = self.rng.random();
        let rhs = if invert {
            self.elements[t].inverse()
        } else {
            self.elements[t].clone()
        };
        self.elements[s] = self.elements[s].compose(&rhs);
        self.k_pr_done += 1;
        s
    }

    /// Performs one replacement step and returns the replaced element.
    pub fn sample(&mut self) -> PermutationElement {
        let s = self.step();
        self.elements[s].clone()
    }

    pub fn sample_many(&mut self, count: usize) -> Vec<PermutationElement> {
        (0..count).map(|_| self.sample()).collect()
    }

    /// Copy of this reservoir whose future samples come from an independent
    /// random stream. Used to give each Monte-Carlo frame its own
    /// reproducible permutation schedule.
    pub fn fork(&self, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ self.k_pr_done.rotate_left(32));
        rng.set_stream(stream.wrapping_add(1));
        Self {
            elements: self.elements.clone(),
            seed: self.seed,
            k_pr_done: self.k_pr_done,
            rng,
        }
    }

    pub fn elements(&self) -> &[PermutationElement] {
        &self.elements
    }

    pub fn n(&self) -> usize {
        self.elements[0].len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn k_pr_done(&self) -> u64 {
        self.k_pr_done
    }

    /// Text dump: seed, step count, generator state and one line per element.
    /// [`PermutationReservoir::from_dump`] restores a reservoir that continues
    /// the identical sample sequence.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "permutation-reservoir v1");
        let _ = writeln!(out, "n {}", self.n());
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "k_pr_done {}", self.k_pr_done);
        let _ = writeln!(out, "stream {}", self.rng.get_stream());
        let _ = writeln!(out, "word_pos {}", self.rng.get_word_pos());
        let _ = writeln!(out, "elements {}", self.elements.len());
        for e in &self.elements {
            let line: Vec<String> = e.map.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_dump(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidArgument(format!("reservoir dump: {msg}"));
        let mut lines = text.lines();
        if lines.next() != Some("permutation-reservoir v1") {
            return Err(bad("missing header"));
        }
        let mut field = |name: &str| -> Result<u128> {
            let line = lines.next().ok_or_else(|| bad("truncated"))?;
            let rest = line
                .strip_prefix(name)
                .ok_or_else(|| bad(&format!("expected field {name}")))?;
            rest.trim()
                .parse::<u128>()
                .map_err(|_| bad(&format!("bad value for {name}")))
        };
        let n = field("n")? as usize;
        let seed = field("seed")? as u64;
        let k_pr_done = field("k_pr_done")? as u64;
        let stream = field("stream")? as u64;
        let word_pos = field("word_pos")?;
        let count = field("elements")? as usize;
        let mut elements = Vec::with_capacity(count);
        for _ in 0..count {
            let line = lines.next().ok_or_else(|| bad("truncated element list"))?;
            let map = line
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| bad("bad index")))
                .collect::<Result<Vec<_>>>()?;
            if map.len() != n {
                return Err(bad("element length differs from n"));
            }
            elements.push(PermutationElement::new(map)?);
        }
        if elements.len() < 2 {
            return Err(bad("need at least two elements"));
        }
        let mut rng = if stream == 0 {
            ChaCha8Rng::seed_from_u64(seed)
        } else {
            ChaCha8Rng::seed_from_u64(seed ^ k_pr_done.rotate_left(32))
        };
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);
        Ok(Self {
            elements,
            seed,
            k_pr_done,
            rng,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::build_bch_code;

    fn bch15() -> CodeSpec {
        build_bch_code(4, 1).unwrap()
    }

    #[test]
    fn rejects_non_bijection() {
        assert!(PermutationElement::new(vec![0, 0, 1]).is_err());
        assert!(PermutationElement::new(vec![0, 3, 1]).is_err());
        assert!(PermutationElement::new(vec![2, 0, 1]).is_ok());
    }

    #[test]
    fn apply_convention() {
        let p = PermutationElement::new(vec![2, 0, 1]).unwrap();
        // x[0] goes to position 2
        assert_eq!(p.apply(&['a', 'b', 'c']), vec!['b', 'c', 'a']);
        let q = PermutationElement::new(vec![1, 0, 2]).unwrap();
        let x = ['a', 'b', 'c'];
        assert_eq!(p.compose(&q).apply(&x), p.apply(&q.apply(&x)));
        assert!(p.compose(&p.inverse()).is_identity());
    }

    #[test]
    fn frobenius_cycles_on_15() {
        let phi = PermutationElement::frobenius(15);
        let cycle = |start: usize| {
            let mut c = vec![start];
            let mut x = phi.map()[start];
            while x != start {
                c.push(x);
                x = phi.map()[x];
            }
            c
        };
        assert_eq!(cycle(0), vec![0]);
        assert_eq!(cycle(1), vec![1, 2, 4, 8]);
        assert_eq!(cycle(3), vec![3, 6, 12, 9]);
        assert_eq!(cycle(5), vec![5, 10]);
        assert_eq!(cycle(7), vec![7, 14, 13, 11]);
    }

    #[test]
    fn generators_preserve_every_codeword_of_bch15() {
        let code = bch15();
        let gens = generators(&code).unwrap();
        for word in code.enumerate_codewords().unwrap() {
            for g in &gens {
                assert!(code.is_codeword(&g.apply(&word)));
            }
        }
    }

    #[test]
    fn cyclic_shift_has_order_n() {
        let sigma = PermutationElement::cyclic_shift(15);
        let mut acc = PermutationElement::identity(15);
        for i in 1..=15 {
            acc = acc.compose(&sigma);
            assert_eq!(acc.is_identity(), i == 15);
        }
    }

    #[test]
    fn generators_refused_without_bch_provenance() {
        let code = CodeSpec::from_parity_check(bch15().h().clone()).unwrap();
        assert!(matches!(
            generators(&code),
            Err(Error::UnknownAutomorphisms(_))
        ));
        assert!(generators(&code.assume_bch(4, 1).unwrap()).is_ok());
    }

    #[test]
    fn reservoir_rejects_small_n_pr() {
        let gens = generators(&bch15()).unwrap();
        assert!(PermutationReservoir::init(&gens, 1, 10, 0).is_err());
        assert!(PermutationReservoir::init(&[], 5, 10, 0).is_err());
    }

    #[test]
    fn reservoir_elements_preserve_code() {
        let code = build_bch_code(6, 3).unwrap();
        let mut res = PermutationReservoir::for_code(&code, 20, 60, 7).unwrap();
        assert_eq!(res.k_pr_done(), 60);
        assert!(res.elements().iter().all(|e| e.preserves(&code)));
        for _ in 0..50 {
            assert!(res.sample().preserves(&code));
        }
    }

    #[test]
    fn equal_seeds_give_equal_samples() {
        let code = bch15();
        let mut a = PermutationReservoir::for_code(&code, 10, 30, 99).unwrap();
        let mut b = PermutationReservoir::for_code(&code, 10, 30, 99).unwrap();
        assert_eq!(a.sample_many(40), b.sample_many(40));
        let mut c = PermutationReservoir::for_code(&code, 10, 30, 100).unwrap();
        assert_ne!(a.sample_many(40), c.sample_many(40));
    }

    #[test]
    fn dump_restores_the_sample_stream() {
        let code = bch15();
        let mut a = PermutationReservoir::for_code(&code, 8, 25, 5).unwrap();
        a.sample_many(3);
        let mut b = PermutationReservoir::from_dump(&a.dump()).unwrap();
        assert_eq!(a.sample_many(20), b.sample_many(20));

        let mut f = a.fork(17);
        let mut g = PermutationReservoir::from_dump(&f.dump()).unwrap();
        assert_eq!(f.sample_many(10), g.sample_many(10));
    }

    #[test]
    fn forks_are_reproducible_and_distinct() {
        let code = bch15();
        let res = PermutationReservoir::for_code(&code, 8, 25, 5).unwrap();
        assert_eq!(res.fork(3).sample_many(10), res.fork(3).sample_many(10));
        assert_ne!(res.fork(3).sample_many(10), res.fork(4).sample_many(10));
    }

    #[test]
    fn inverse_chain_single_and_identity() {
        let p = PermutationElement::frobenius(15);
        let inv = compose_inverse_chain(std::slice::from_ref(&p)).unwrap();
        assert!(inv.compose(&p).is_identity());
        let ids = vec![PermutationElement::identity(15); 4];
        assert!(compose_inverse_chain(&ids).unwrap().is_identity());
        assert!(compose_inverse_chain(&[]).is_err());
        assert!(compose_inverse_chain(&[p, PermutationElement::identity(7)]).is_err());
    }

    #[test]
    fn inverse_chain_undoes_sequential_application() {
        let code = bch15();
        let mut res = PermutationReservoir::for_code(&code, 10, 40, 1).unwrap();
        let perms = res.sample_many(5);
        let x: Vec<f64> = (0..15).map(|i| i as f64 * 0.37 - 2.0).collect();
        let mut y = x.clone();
        for p in &perms {
            y = p.apply(&y);
        }
        let back = compose_inverse_chain(&perms).unwrap().apply(&y);
        assert_eq!(back, x);
    }
}
