//! Construction A lattices and exact nearest-neighbor quantization.
//!
//! A lattice here is gamma p^{-1} C + gamma Z^n for a linear code C over Z_p
//! (k = 0 gives the scaled integer lattice gamma Z^n). Lattice points are
//! stored as integer coordinate vectors in units of gamma/p, so coset
//! membership, modulo reduction of lattice points, and decoding comparisons
//! are exact integer operations; only distances to arbitrary real vectors go
//! through floating point.
//!
//! Quantization enumerates the p^k code cosets. For each coset the nearest
//! lattice point decomposes per coordinate, so a coset costs O(n) table
//! lookups after an O(n p) setup, and cosets are visited with an odometer
//! that updates the running codeword by single row additions.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball::ln_volume_unit_ball;
use crate::error::{Error, Result};
use crate::rng::Substream;
use crate::stats::MomentEstimate;
use crate::zp::{add_row_mod, LinearCode, PrimeModulus};

/// Enumeration cap used when callers do not pick their own: 2^24 cosets.
pub const DEFAULT_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeKind {
    ConstructionA,
    ScaledInteger,
}

/// gamma p^{-1} C + gamma Z^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeWire", into = "LatticeWire")]
pub struct Lattice {
    gamma: f64,
    code: LinearCode,
    rank: usize,
}

/// A lattice point in exact units of gamma/p.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticePoint {
    pub units: Vec<i64>,
}

impl LatticePoint {
    pub fn zero(n: usize) -> Self {
        LatticePoint { units: vec![0; n] }
    }

    pub fn sub(&self, other: &LatticePoint) -> LatticePoint {
        LatticePoint {
            units: self
                .units
                .iter()
                .zip(&other.units)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Lattice {
    pub fn construction_a(gamma: f64, code: LinearCode) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidConfig(format!("gamma={gamma} must be > 0")));
        }
        let rank = code.rank_mod_p();
        Ok(Lattice { gamma, code, rank })
    }

    /// gamma Z^n with an explicit modulus (shared with a fine lattice when
    /// used as an unshaped coarse lattice, so unit scales line up).
    pub fn scaled_integer_with_p(n: usize, gamma: f64, p: PrimeModulus) -> Result<Self> {
        Lattice::construction_a(gamma, LinearCode::trivial(p, n))
    }

    /// gamma Z^n. The internal modulus is an odd prime so exact point
    /// quantization never hits rounding ties.
    pub fn scaled_integer(n: usize, gamma: f64) -> Result<Self> {
        Lattice::scaled_integer_with_p(n, gamma, PrimeModulus::new(3).unwrap())
    }

    pub fn n(&self) -> usize {
        self.code.n()
    }

    pub fn p(&self) -> u64 {
        self.code.p()
    }

    pub fn k(&self) -> usize {
        self.code.k()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn code(&self) -> &LinearCode {
        &self.code
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.code.k()
    }

    pub fn kind(&self) -> LatticeKind {
        if self.code.k() == 0 {
            LatticeKind::ScaledInteger
        } else {
            LatticeKind::ConstructionA
        }
    }

    /// Same lattice with gamma multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Lattice::construction_a(self.gamma * factor, self.code.clone())
    }

    pub fn coset_count(&self) -> u128 {
        self.code.codeword_count()
    }

    fn check_budget(&self, budget: u64) -> Result<()> {
        let needed = self.coset_count();
        if needed > budget as u128 {
            Err(Error::BudgetExceeded { needed, budget })
        } else {
            Ok(())
        }
    }

    /// Real coordinates of a point: gamma * units / p.
    pub fn point_real(&self, point: &LatticePoint) -> Vec<f64> {
        let scale = self.gamma / self.p() as f64;
        point.units.iter().map(|&u| u as f64 * scale).collect()
    }

    /// Lifts a codeword to the lattice point gamma p^{-1} c.
    pub fn lift_codeword(&self, c: &[u64]) -> LatticePoint {
        LatticePoint {
            units: c.iter().map(|&v| v as i64).collect(),
        }
    }

    /// True when `point` (in this lattice's units) belongs to the lattice.
    pub fn contains_point(&self, point: &LatticePoint) -> bool {
        let p = self.p();
        let residues: Vec<u64> = point
            .units
            .iter()
            .map(|&u| u.rem_euclid(p as i64) as u64)
            .collect();
        self.code.row_space().contains(&residues)
    }

    /// Nearest lattice point to `x`, exact over all p^k cosets. Ties are
    /// broken toward the lexicographically smallest unit vector.
    pub fn quantize_nn(&self, x: &[f64], budget: u64) -> Result<LatticePoint> {
        assert_eq!(x.len(), self.n(), "dimension mismatch");
        self.check_budget(budget)?;
        let n = self.n();
        let p = self.p() as usize;
        let k = self.k();

        // Per-coordinate tables over residues: nearest integer offset and
        // its squared distance contribution.
        let mut cost = vec![0.0f64; n * p];
        let mut offs = vec![0i64; n * p];
        let inv_p = 1.0 / p as f64;
        for i in 0..n {
            let xi = x[i] / self.gamma;
            for v in 0..p {
                let y = xi - v as f64 * inv_p;
                let a = y.round_ties_even();
                let d = self.gamma * (y - a);
                cost[i * p + v] = d * d;
                offs[i * p + v] = a as i64;
            }
        }

        let mut w = vec![0u64; k];
        let mut c = vec![0u64; n];
        let mut best_d2 = f64::INFINITY;
        let mut best_units: Vec<i64> = Vec::new();
        let build_units = |c: &[u64], offs: &[i64]| -> Vec<i64> {
            (0..n)
                .map(|i| c[i] as i64 + p as i64 * offs[i * p + c[i] as usize])
                .collect()
        };
        loop {
            let mut d2 = 0.0;
            for i in 0..n {
                d2 += cost[i * p + c[i] as usize];
            }
            if d2 < best_d2 {
                best_d2 = d2;
                best_units = build_units(&c, &offs);
            } else if d2 == best_d2 {
                let cand = build_units(&c, &offs);
                if cand < best_units {
                    best_units = cand;
                }
            }
            let mut idx = k;
            loop {
                if idx == 0 {
                    return Ok(LatticePoint { units: best_units });
                }
                idx -= 1;
                add_row_mod(&mut c, self.code.row(idx), self.p());
                w[idx] += 1;
                if w[idx] < self.p() {
                    break;
                }
                w[idx] = 0;
            }
        }
    }

    /// Quantization error x - Q(x); lands in the Voronoi region.
    pub fn mod_lattice(&self, x: &[f64], budget: u64) -> Result<Vec<f64>> {
        let q = self.quantize_nn(x, budget)?;
        let q_real = self.point_real(&q);
        Ok(x.iter().zip(&q_real).map(|(a, b)| a - b).collect())
    }

    /// Nearest lattice point to another point given in the same gamma/p
    /// units. Entirely integer arithmetic, so coset reductions of lattice
    /// points are exact and replayable.
    pub fn quantize_point(&self, point: &LatticePoint, budget: u64) -> Result<LatticePoint> {
        assert_eq!(point.units.len(), self.n(), "dimension mismatch");
        self.check_budget(budget)?;
        let n = self.n();
        let p = self.p() as i64;
        let k = self.k();

        let mut w = vec![0u64; k];
        let mut c = vec![0u64; n];
        let mut best_d2 = u128::MAX;
        let mut best_units: Vec<i64> = Vec::new();
        loop {
            let mut d2: u128 = 0;
            for (&ci, &zi) in c.iter().zip(&point.units) {
                let r = zi - ci as i64;
                let a = div_round_ties_even(r, p);
                let resid = r - p * a;
                d2 += (resid * resid) as u128;
            }
            if d2 <= best_d2 {
                let cand: Vec<i64> = (0..n)
                    .map(|i| {
                        let r = point.units[i] - c[i] as i64;
                        c[i] as i64 + p * div_round_ties_even(r, p)
                    })
                    .collect();
                if d2 < best_d2 || cand < best_units {
                    best_d2 = d2;
                    best_units = cand;
                }
            }
            let mut idx = k;
            loop {
                if idx == 0 {
                    return Ok(LatticePoint { units: best_units });
                }
                idx -= 1;
                add_row_mod(&mut c, self.code.row(idx), self.p());
                w[idx] += 1;
                if w[idx] < self.p() {
                    break;
                }
                w[idx] = 0;
            }
        }
    }

    /// Exact modulo reduction of a lattice point (of a finer lattice sharing
    /// gamma and p) into this lattice's Voronoi region.
    pub fn mod_point(&self, point: &LatticePoint, budget: u64) -> Result<LatticePoint> {
        let q = self.quantize_point(point, budget)?;
        Ok(point.sub(&q))
    }

    /// Exactly uniform on the Voronoi region: uniform on the fundamental
    /// domain [0, gamma)^n reduced modulo the lattice.
    pub fn sample_voronoi_uniform(&self, rng: &mut impl Rng, budget: u64) -> Result<Vec<f64>> {
        let x: Vec<f64> = (0..self.n())
            .map(|_| self.gamma * rng.random::<f64>())
            .collect();
        self.mod_lattice(&x, budget)
    }

    /// Monte Carlo estimate of sigma^2(Lambda) = E ||U||^2 / n with per-sample
    /// substreams (bitwise independent of worker count).
    pub fn estimate_second_moment(
        &self,
        samples: u64,
        stream: Substream,
        budget: u64,
    ) -> Result<MomentEstimate> {
        if samples < 100 {
            return Err(Error::InvalidConfig(format!(
                "second-moment estimate needs >= 100 samples, got {samples}"
            )));
        }
        self.check_budget(budget)?;
        let n = self.n() as f64;
        let values: Vec<f64> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream.rng(i);
                let u = self
                    .sample_voronoi_uniform(&mut rng, budget)
                    .expect("budget already checked");
                u.iter().map(|v| v * v).sum::<f64>() / n
            })
            .collect();
        Ok(MomentEstimate::from_samples(&values))
    }

    /// ln V(Lambda) = n ln gamma - k ln p; defined only for full-rank
    /// generators.
    pub fn ln_volume(&self) -> Result<f64> {
        if !self.is_full_rank() {
            return Err(Error::RankDeficient {
                rank: self.rank,
                k: self.code.k(),
            });
        }
        Ok(self.n() as f64 * self.gamma.ln() - self.k() as f64 * (self.p() as f64).ln())
    }

    /// V(Lambda) = gamma^n p^{-k}.
    pub fn lattice_volume(&self) -> Result<f64> {
        Ok(self.ln_volume()?.exp())
    }

    /// V(Lambda)^{2/n}, the normalized cell volume used by VNR and NSM.
    pub fn volume_2n(&self) -> Result<f64> {
        Ok((2.0 * self.ln_volume()? / self.n() as f64).exp())
    }

    /// Effective radius: the ball with the lattice's cell volume.
    pub fn effective_radius(&self) -> Result<f64> {
        Ok(((self.ln_volume()? - ln_volume_unit_ball(self.n())) / self.n() as f64).exp())
    }

    /// G(Lambda) = sigma^2(Lambda) / V(Lambda)^{2/n} with the Monte Carlo
    /// interval propagated through the exact volume.
    pub fn estimate_nsm(
        &self,
        samples: u64,
        stream: Substream,
        budget: u64,
    ) -> Result<MomentEstimate> {
        let v2n = self.volume_2n()?;
        Ok(self
            .estimate_second_moment(samples, stream, budget)?
            .scaled(1.0 / v2n))
    }
}

/// Nearest integer to r/p with ties to even, in exact integer arithmetic.
/// Ties require even p (the rational r/p is a half-integer), so odd moduli
/// never reach the tie branch.
pub(crate) fn div_round_ties_even(r: i64, p: i64) -> i64 {
    let q = r.div_euclid(p);
    let rem = r.rem_euclid(p);
    match (2 * rem).cmp(&p) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => {
            if q % 2 == 0 {
                q
            } else {
                q + 1
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeWire {
    n: usize,
    gamma: f64,
    p: u64,
    k: usize,
    g: Vec<u64>,
}

impl TryFrom<LatticeWire> for Lattice {
    type Error = Error;

    fn try_from(w: LatticeWire) -> Result<Lattice> {
        let p = PrimeModulus::new(w.p)?;
        let code = LinearCode::new(p, w.n, w.k, w.g)?;
        Lattice::construction_a(w.gamma, code)
    }
}

impl From<Lattice> for LatticeWire {
    fn from(l: Lattice) -> LatticeWire {
        LatticeWire {
            n: l.n(),
            gamma: l.gamma,
            p: l.p(),
            k: l.k(),
            g: l.code.generator().to_vec(),
        }
    }
}
