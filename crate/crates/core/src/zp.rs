//! Exact arithmetic over the prime field Z_p and the random linear codes
//! that get lifted to lattices.
//!
//! Residues are plain `u64` values in `[0, p-1]`, never signed, so modular
//! identities can be checked with integer equality. All randomness enters
//! through explicit generator arguments.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A prime modulus validated by deterministic trial division.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrimeModulus(u64);

impl PrimeModulus {
    pub fn new(p: u64) -> Result<Self> {
        if is_prime(p) {
            Ok(PrimeModulus(p))
        } else {
            Err(Error::InvalidConfig(format!("{p} is not prime")))
        }
    }

    pub fn value(&self) -> u64 {
        self.0
    }
}

/// Trial division. Exact for any `u64`, fast at the desk scales used here
/// (p stays far below 10^6 when derived from the dimension rule).
pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p % 2 == 0 {
        return p == 2;
    }
    let mut d = 3u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Largest prime p with n^{3/2}/2 <= p < n^{3/2}.
///
/// Bounds are evaluated in exact integer arithmetic: p < n^{3/2} is p^2 < n^3
/// and p >= n^{3/2}/2 is 4 p^2 >= n^3.
pub fn prime_for_dimension(n: u64) -> Result<PrimeModulus> {
    let n3 = (n as u128).pow(3);
    let mut p = isqrt_u128(n3);
    if (p as u128) * (p as u128) == n3 {
        // n^{3/2} is an integer; the interval is half open on the right.
        p -= 1;
    }
    while 4 * (p as u128) * (p as u128) >= n3 {
        if is_prime(p) {
            return Ok(PrimeModulus(p));
        }
        if p == 0 {
            break;
        }
        p -= 1;
    }
    let hi = (n as f64).powf(1.5);
    Err(Error::DimensionTooSmall { lo: hi / 2.0, hi })
}

fn isqrt_u128(v: u128) -> u64 {
    if v == 0 {
        return 0;
    }
    let mut x = (v as f64).sqrt() as u128;
    while x * x > v {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= v {
        x += 1;
    }
    x as u64
}

/// A k x n generator matrix over Z_p, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearCode {
    p: PrimeModulus,
    n: usize,
    k: usize,
    g: Vec<u64>,
}

/// A length-n vector of residues in `[0, p-1]`.
pub type Codeword = Vec<u64>;

impl LinearCode {
    pub fn new(p: PrimeModulus, n: usize, k: usize, g: Vec<u64>) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidShape { k, n });
        }
        if g.len() != k * n {
            return Err(Error::InvalidConfig(format!(
                "generator has {} entries, expected {}",
                g.len(),
                k * n
            )));
        }
        if g.iter().any(|&e| e >= p.value()) {
            return Err(Error::InvalidConfig(
                "generator entry outside [0, p-1]".into(),
            ));
        }
        Ok(LinearCode { p, n, k, g })
    }

    /// The trivial code {0}: Construction A lifts it to the scaled integer
    /// lattice.
    pub fn trivial(p: PrimeModulus, n: usize) -> Self {
        LinearCode {
            p,
            n,
            k: 0,
            g: Vec::new(),
        }
    }

    pub fn p(&self) -> u64 {
        self.p.value()
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.g[i * self.n..(i + 1) * self.n]
    }

    pub fn generator(&self) -> &[u64] {
        &self.g
    }

    /// Number of codewords p^k.
    pub fn codeword_count(&self) -> u128 {
        (self.p() as u128).pow(self.k as u32)
    }

    /// i.i.d. uniform entries; deterministic given the generator stream.
    pub fn draw(n: usize, k: usize, p: PrimeModulus, rng: &mut impl Rng) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidShape { k, n });
        }
        let g = (0..k * n).map(|_| rng.random_range(0..p.value())).collect();
        Ok(LinearCode { p, n, k, g })
    }

    /// c = w^T G mod p.
    pub fn encode(&self, w: &[u64]) -> Result<Codeword> {
        if w.len() != self.k {
            return Err(Error::LengthMismatch {
                got: w.len(),
                expected: self.k,
            });
        }
        let p = self.p() as u128;
        let mut c = vec![0u128; self.n];
        for (j, &wj) in w.iter().enumerate() {
            if wj >= self.p() {
                return Err(Error::InvalidConfig(format!(
                    "message symbol {wj} outside [0, p-1]"
                )));
            }
            if wj == 0 {
                continue;
            }
            for (ci, &gij) in c.iter_mut().zip(self.row(j)) {
                *ci += wj as u128 * gij as u128;
            }
        }
        Ok(c.into_iter().map(|v| (v % p) as u64).collect())
    }

    /// Rank over Z_p by exact Gaussian elimination.
    pub fn rank_mod_p(&self) -> usize {
        let p = self.p();
        let mut m = self.g.clone();
        let (rows, cols) = (self.k, self.n);
        let mut rank = 0usize;
        for col in 0..cols {
            if rank == rows {
                break;
            }
            let Some(pivot) = (rank..rows).find(|&r| m[r * cols + col] != 0) else {
                continue;
            };
            for j in 0..cols {
                m.swap(rank * cols + j, pivot * cols + j);
            }
            let inv = inv_mod(m[rank * cols + col], p);
            for j in col..cols {
                m[rank * cols + j] = mul_mod(m[rank * cols + j], inv, p);
            }
            for r in 0..rows {
                if r != rank && m[r * cols + col] != 0 {
                    let factor = m[r * cols + col];
                    for j in col..cols {
                        let sub = mul_mod(factor, m[rank * cols + j], p);
                        m[r * cols + j] = (m[r * cols + j] + p - sub) % p;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank_mod_p() == self.k
    }

    /// Rows 1..k1 of this generator, i.e. the coarse code of a nested pair.
    pub fn nested_subcode(&self, k1: usize) -> Result<Self> {
        if k1 == 0 || k1 > self.k {
            return Err(Error::InvalidK1 { k1, k: self.k });
        }
        Ok(LinearCode {
            p: self.p,
            n: self.n,
            k: k1,
            g: self.g[..k1 * self.n].to_vec(),
        })
    }

    /// The code generated by rows `start..end` (used for coset messages of a
    /// nested pair).
    pub fn row_range(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.k {
            return Err(Error::InvalidRowCounts {
                reason: format!("row range {start}..{end} outside 0..{}", self.k),
            });
        }
        Ok(LinearCode {
            p: self.p,
            n: self.n,
            k: end - start,
            g: self.g[start * self.n..end * self.n].to_vec(),
        })
    }

    /// All p^k codewords, message vectors in lexicographic order with the
    /// last coordinate fastest.
    pub fn enumerate_codewords(&self, budget: u64) -> Result<CodewordIter<'_>> {
        let count = self.codeword_count();
        if count > budget as u128 {
            return Err(Error::BudgetExceeded {
                needed: count,
                budget,
            });
        }
        Ok(CodewordIter {
            code: self,
            w: vec![0; self.k],
            c: vec![0; self.n],
            done: false,
        })
    }

    /// Reduced row echelon form of the generator; answers coset-membership
    /// queries exactly.
    pub fn row_space(&self) -> RowSpace {
        let p = self.p();
        let mut m = self.g.clone();
        let cols = self.n;
        let rows = self.k;
        let mut pivots = Vec::new();
        let mut rank = 0usize;
        for col in 0..cols {
            if rank == rows {
                break;
            }
            let Some(pivot) = (rank..rows).find(|&r| m[r * cols + col] != 0) else {
                continue;
            };
            for j in 0..cols {
                m.swap(rank * cols + j, pivot * cols + j);
            }
            let inv = inv_mod(m[rank * cols + col], p);
            for j in col..cols {
                m[rank * cols + j] = mul_mod(m[rank * cols + j], inv, p);
            }
            for r in 0..rows {
                if r != rank && m[r * cols + col] != 0 {
                    let factor = m[r * cols + col];
                    for j in col..cols {
                        let sub = mul_mod(factor, m[rank * cols + j], p);
                        m[r * cols + j] = (m[r * cols + j] + p - sub) % p;
                    }
                }
            }
            pivots.push(col);
            rank += 1;
        }
        m.truncate(rank * cols);
        RowSpace {
            p,
            n: cols,
            rows: m,
            pivots,
        }
    }
}

/// Yields codewords without materializing p^k vectors.
#[derive(Debug)]
pub struct CodewordIter<'a> {
    code: &'a LinearCode,
    w: Vec<u64>,
    c: Vec<u64>,
    done: bool,
}

impl Iterator for CodewordIter<'_> {
    type Item = Codeword;

    fn next(&mut self) -> Option<Codeword> {
        if self.done {
            return None;
        }
        let out = self.c.clone();
        let p = self.code.p();
        // Base-p odometer; each unit increment of w[j] adds row j to c.
        let mut idx = self.code.k;
        loop {
            if idx == 0 {
                self.done = true;
                break;
            }
            idx -= 1;
            add_row_mod(&mut self.c, self.code.row(idx), p);
            self.w[idx] += 1;
            if self.w[idx] < p {
                break;
            }
            self.w[idx] = 0;
        }
        Some(out)
    }
}

pub(crate) fn add_row_mod(c: &mut [u64], row: &[u64], p: u64) {
    for (ci, &ri) in c.iter_mut().zip(row) {
        *ci += ri;
        if *ci >= p {
            *ci -= p;
        }
    }
}

/// RREF rows of a generator; membership in the row space is exactly the
/// "same coset of the coarse lattice" relation used by the decoders.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSpace {
    p: u64,
    n: usize,
    rows: Vec<u64>,
    pivots: Vec<usize>,
}

impl RowSpace {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Canonical representative of `v` modulo the row space: the reduction
    /// residue after eliminating every pivot coordinate. Two vectors share a
    /// coset of the row space exactly when their residues coincide.
    pub fn canonicalize(&self, v: &[u64]) -> Vec<u64> {
        debug_assert_eq!(v.len(), self.n);
        let mut r: Vec<u64> = v.iter().map(|&x| x % self.p).collect();
        for (row_idx, &col) in self.pivots.iter().enumerate() {
            let coeff = r[col];
            if coeff == 0 {
                continue;
            }
            let row = &self.rows[row_idx * self.n..(row_idx + 1) * self.n];
            for j in 0..self.n {
                let sub = mul_mod(coeff, row[j], self.p);
                r[j] = (r[j] + self.p - sub) % self.p;
            }
        }
        r
    }

    /// True when `v` (residues mod p) lies in the span of the generator rows.
    pub fn contains(&self, v: &[u64]) -> bool {
        self.canonicalize(v).iter().all(|&x| x == 0)
    }
}

pub(crate) fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

/// Modular inverse by Fermat: a^(p-2) mod p.
pub(crate) fn inv_mod(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0);
    let mut base = a % p;
    let mut exp = p - 2;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{label, Substream};

    fn p(v: u64) -> PrimeModulus {
        PrimeModulus::new(v).unwrap()
    }

    #[test]
    fn prime_for_dimension_examples() {
        // Sieve of the intervals by hand: [4,8) -> {5,7}, [13.5,27) -> {17,19,23},
        // [32,64) -> {37,41,43,47,53,59,61}.
        assert_eq!(prime_for_dimension(4).unwrap().value(), 7);
        assert_eq!(prime_for_dimension(9).unwrap().value(), 23);
        assert_eq!(prime_for_dimension(16).unwrap().value(), 61);
    }

    #[test]
    fn prime_for_dimension_matches_sieve() {
        for n in 2..=60u64 {
            let got = prime_for_dimension(n).unwrap().value();
            let hi = ((n as f64).powf(1.5)).ceil() as u64 + 1;
            let best = (2..hi)
                .filter(|&q| {
                    is_prime(q)
                        && 4 * (q as u128) * (q as u128) >= (n as u128).pow(3)
                        && (q as u128) * (q as u128) < (n as u128).pow(3)
                })
                .max()
                .unwrap();
            assert_eq!(got, best, "n={n}");
        }
    }

    #[test]
    fn prime_for_dimension_too_small() {
        assert!(matches!(
            prime_for_dimension(1),
            Err(Error::DimensionTooSmall { .. })
        ));
    }

    #[test]
    fn draw_is_deterministic_under_seed() {
        let mut a = Substream::new(11, label::GENERATOR).rng(0);
        let mut b = Substream::new(11, label::GENERATOR).rng(0);
        let ca = LinearCode::draw(4, 2, p(7), &mut a).unwrap();
        let cb = LinearCode::draw(4, 2, p(7), &mut b).unwrap();
        assert_eq!(ca, cb);
    }

    #[test]
    fn draw_rejects_bad_shape() {
        let mut rng = Substream::new(1, label::GENERATOR).rng(0);
        assert!(matches!(
            LinearCode::draw(4, 5, p(7), &mut rng),
            Err(Error::InvalidShape { .. })
        ));
    }

    #[test]
    fn draw_entries_are_uniform_chi_square() {
        // 10^5 entries over Z_7; chi-square statistic with 6 degrees of
        // freedom must stay below the 99% quantile 16.8119.
        let mut rng = Substream::new(99, label::GENERATOR).rng(0);
        let code = LinearCode::draw(1000, 100, p(7), &mut rng).unwrap();
        let mut counts = [0u64; 7];
        for &e in code.generator() {
            counts[e as usize] += 1;
        }
        let total: u64 = counts.iter().sum();
        assert_eq!(total, 100_000);
        let expected = total as f64 / 7.0;
        let stat: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(stat < 16.811_893_829_770_927, "chi-square stat {stat}");
    }

    #[test]
    fn encode_examples() {
        let code = LinearCode::new(p(7), 4, 1, vec![1, 2, 3, 4]).unwrap();
        assert_eq!(code.encode(&[2]).unwrap(), vec![2, 4, 6, 1]);
        assert_eq!(code.encode(&[0]).unwrap(), vec![0, 0, 0, 0]);
        assert!(matches!(
            code.encode(&[1, 2]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn encode_is_homomorphism() {
        let mut rng = Substream::new(5, label::GENERATOR).rng(0);
        let code = LinearCode::draw(6, 3, p(11), &mut rng).unwrap();
        for trial in 0..50u64 {
            let mut r = Substream::new(5, label::MESSAGE).rng(trial);
            let w1: Vec<u64> = (0..3).map(|_| r.random_range(0..11)).collect();
            let w2: Vec<u64> = (0..3).map(|_| r.random_range(0..11)).collect();
            let sum: Vec<u64> = w1.iter().zip(&w2).map(|(a, b)| (a + b) % 11).collect();
            let c1 = code.encode(&w1).unwrap();
            let c2 = code.encode(&w2).unwrap();
            let cs = code.encode(&sum).unwrap();
            let c12: Vec<u64> = c1.iter().zip(&c2).map(|(a, b)| (a + b) % 11).collect();
            assert_eq!(cs, c12);
        }
    }

    #[test]
    fn rank_examples() {
        let zero = LinearCode::new(p(7), 3, 2, vec![0; 6]).unwrap();
        assert_eq!(zero.rank_mod_p(), 0);

        let id = LinearCode::new(p(7), 4, 2, vec![1, 0, 2, 3, 0, 1, 5, 6]).unwrap();
        assert_eq!(id.rank_mod_p(), 2);

        // Row 2 = 3 * row 1 mod 7.
        let dep = LinearCode::new(p(7), 3, 2, vec![1, 2, 3, 3, 6, 2]).unwrap();
        assert_eq!(dep.rank_mod_p(), 1);
    }

    #[test]
    fn nested_subcode_contains_its_codewords() {
        let mut rng = Substream::new(3, label::GENERATOR).rng(0);
        let fine = LinearCode::draw(4, 3, p(7), &mut rng).unwrap();
        let sub = fine.nested_subcode(1).unwrap();
        let all: std::collections::HashSet<Codeword> =
            fine.enumerate_codewords(1 << 20).unwrap().collect();
        assert_eq!(all.len(), 343);
        for c in sub.enumerate_codewords(1 << 20).unwrap() {
            assert!(all.contains(&c));
        }
    }

    #[test]
    fn nested_subcode_identity_and_errors() {
        let mut rng = Substream::new(3, label::GENERATOR).rng(1);
        let fine = LinearCode::draw(4, 3, p(7), &mut rng).unwrap();
        assert_eq!(fine.nested_subcode(3).unwrap(), fine);
        assert!(matches!(
            fine.nested_subcode(0),
            Err(Error::InvalidK1 { .. })
        ));
        assert!(matches!(
            fine.nested_subcode(4),
            Err(Error::InvalidK1 { .. })
        ));
    }

    #[test]
    fn subcode_closure_under_padded_messages() {
        let mut rng = Substream::new(17, label::GENERATOR).rng(0);
        let fine = LinearCode::draw(5, 3, p(5), &mut rng).unwrap();
        let sub = fine.nested_subcode(2).unwrap();
        for trial in 0..30u64 {
            let mut r = Substream::new(17, label::MESSAGE).rng(trial);
            let w1: Vec<u64> = (0..2).map(|_| r.random_range(0..5)).collect();
            let padded = [w1.clone(), vec![0]].concat();
            assert_eq!(fine.encode(&padded).unwrap(), sub.encode(&w1).unwrap());
        }
    }

    #[test]
    fn enumerate_codewords_counts() {
        let trivial = LinearCode::trivial(p(3), 4);
        let words: Vec<_> = trivial.enumerate_codewords(16).unwrap().collect();
        assert_eq!(words, vec![vec![0, 0, 0, 0]]);

        let code = LinearCode::new(p(3), 2, 2, vec![1, 0, 0, 1]).unwrap();
        let words: std::collections::HashSet<_> = code.enumerate_codewords(16).unwrap().collect();
        assert_eq!(words.len(), 9);
    }

    #[test]
    fn enumerate_codewords_budget() {
        let code = LinearCode::new(p(7), 10, 10, vec![0; 100]).unwrap();
        match code.enumerate_codewords(1 << 24) {
            Err(Error::BudgetExceeded { needed, .. }) => assert_eq!(needed, 282_475_249),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn enumeration_order_is_lexicographic_last_fastest() {
        let code = LinearCode::new(p(3), 2, 2, vec![1, 0, 0, 1]).unwrap();
        let words: Vec<_> = code.enumerate_codewords(16).unwrap().collect();
        // Messages (0,0),(0,1),(0,2),(1,0),... map directly to codewords here.
        assert_eq!(words[0], vec![0, 0]);
        assert_eq!(words[1], vec![0, 1]);
        assert_eq!(words[2], vec![0, 2]);
        assert_eq!(words[3], vec![1, 0]);
    }

    #[test]
    fn rank_bound_over_random_draws() {
        // Pr(rank < k) < p^{k-n} = 11^{-2}; allow x3 Monte Carlo slack.
        let stream = Substream::new(123, label::GENERATOR);
        let draws = 10_000u64;
        let mut bad = 0u64;
        for i in 0..draws {
            let mut rng = stream.rng(i);
            let code = LinearCode::draw(8, 6, p(11), &mut rng).unwrap();
            if !code.is_full_rank() {
                bad += 1;
            }
        }
        let bound = 3.0 * 11f64.powi(-2);
        assert!(
            (bad as f64 / draws as f64) <= bound,
            "bad fraction {} > {}",
            bad as f64 / draws as f64,
            bound
        );
    }

    #[test]
    fn row_space_membership() {
        let code = LinearCode::new(p(5), 3, 1, vec![1, 2, 3]).unwrap();
        let space = code.row_space();
        assert!(space.contains(&[2, 4, 1]));
        assert!(space.contains(&[0, 0, 0]));
        assert!(!space.contains(&[1, 0, 0]));
    }
}
