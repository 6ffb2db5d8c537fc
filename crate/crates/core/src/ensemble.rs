//! The random nested-lattice ensemble: one generator matrix drawn over Z_p,
//! prefixes of its rows lifted by Construction A into coarse-in-fine pairs
//! and chains, with the derived rate, volume, and VNR quantities.

use serde::{Deserialize, Serialize};

use crate::ball::ln_volume_unit_ball;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticePoint, DEFAULT_BUDGET};
use crate::rng::{label, Substream};
use crate::stats::MomentEstimate;
use crate::zp::{prime_for_dimension, LinearCode, PrimeModulus, RowSpace};

pub const TWO_PI_E: f64 = 2.0 * std::f64::consts::PI * std::f64::consts::E;

/// Parameters of one ensemble draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n: usize,
    pub snr: f64,
    pub k: usize,
    pub k1: usize,
    #[serde(default)]
    pub epsilon1: f64,
    /// Desk-scale deviation from the p = xi n^{3/2} rule; reported whenever
    /// set.
    #[serde(default)]
    pub p_override: Option<u64>,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.snr.is_finite() && self.snr > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "snr={} must be positive",
                self.snr
            )));
        }
        if !(self.k1 >= 1 && self.k1 < self.k && self.k <= self.n) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < k1 < k <= n, got k1={} k={} n={}",
                self.k1, self.k, self.n
            )));
        }
        if self.epsilon1 < 0.0 {
            return Err(Error::InvalidConfig("epsilon1 must be >= 0".into()));
        }
        Ok(())
    }

    pub fn modulus(&self) -> Result<PrimeModulus> {
        match self.p_override {
            Some(p) => PrimeModulus::new(p),
            None => prime_for_dimension(self.n as u64),
        }
    }
}

/// gamma = 2 sqrt(n SNR): twice the radius of the ball that matters for the
/// covering argument, so that ball embeds injectively modulo gamma Z^n.
pub fn gamma_for(n: usize, snr: f64) -> f64 {
    2.0 * (n as f64 * snr).sqrt()
}

/// Right-hand side of the coarse-rate condition:
/// (k1/n) log2 p >= (1/2) log2(4 / V_n^{2/n}) + epsilon1.
fn k1_target_bits(n: usize, epsilon1: f64) -> f64 {
    let log2_vn = ln_volume_unit_ball(n) / std::f64::consts::LN_2;
    0.5 * (2.0 - (2.0 / n as f64) * log2_vn) + epsilon1
}

/// Smallest integer k1 satisfying the coarse-rate condition (rounding up is
/// harmless for the ensemble).
pub fn k1_for(n: usize, p: PrimeModulus, epsilon1: f64) -> usize {
    let log2_p = (p.value() as f64).log2();
    let target = k1_target_bits(n, epsilon1);
    let mut k1 = (n as f64 * target / log2_p).ceil().max(0.0) as usize;
    while k1 > 0 && (k1 - 1) as f64 / n as f64 * log2_p >= target {
        k1 -= 1;
    }
    while (k1 as f64 / n as f64) * log2_p < target {
        k1 += 1;
    }
    k1
}

/// Slack actually achieved by an integer k1:
/// (k1/n) log2 p - (1/2) log2(4 / V_n^{2/n}).
pub fn effective_epsilon1(n: usize, p: PrimeModulus, k1: usize) -> f64 {
    (k1 as f64 / n as f64) * (p.value() as f64).log2() - k1_target_bits(n, 0.0)
}

/// Volume-to-noise ratio mu = V(Lambda_f)^{2/n} / (2 pi e sigma^2_Z).
pub fn vnr(fine: &Lattice, sigma2_z: f64) -> Result<f64> {
    if !(sigma2_z.is_finite() && sigma2_z > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sigma2_z={sigma2_z} must be positive"
        )));
    }
    Ok(fine.volume_2n()? / (TWO_PI_E * sigma2_z))
}

/// A coarse-in-fine Construction A pair sharing one generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NestedPairWire", into = "NestedPairWire")]
pub struct NestedPair {
    spec: EnsembleSpec,
    fine: Lattice,
    coarse: Lattice,
    k1: usize,
    full_rank: bool,
    rate_bits: f64,
    nesting_ratio: f64,
    seed: u64,
    gamma_rescaled: bool,
    coarse_space: RowSpace,
}

impl NestedPair {
    /// Draws G_f from the generator stream of `seed`, takes G_c as its first
    /// k1 rows, and lifts both with gamma = 2 sqrt(n SNR). Rank-deficient
    /// draws are returned flagged, not rejected.
    pub fn build(spec: &EnsembleSpec, seed: u64) -> Result<NestedPair> {
        spec.validate()?;
        let p = spec.modulus()?;
        let mut rng = Substream::new(seed, label::GENERATOR).rng(0);
        let code = LinearCode::draw(spec.n, spec.k, p, &mut rng)?;
        Self::from_code(spec.clone(), code, spec.k1, seed, false)
    }

    /// Unshaped variant: the coarse lattice is gamma Z^n (the k1 = 0
    /// subcode), sharing the fine lattice's modulus so exact point
    /// arithmetic lines up.
    pub fn build_unshaped(
        n: usize,
        snr: f64,
        k: usize,
        p_override: Option<u64>,
        seed: u64,
    ) -> Result<NestedPair> {
        if !(k >= 1 && k <= n) {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= k <= n, got k={k} n={n}"
            )));
        }
        let spec = EnsembleSpec {
            n,
            snr,
            k,
            k1: 0,
            epsilon1: 0.0,
            p_override,
        };
        let p = spec.modulus()?;
        let mut rng = Substream::new(seed, label::GENERATOR).rng(0);
        let code = LinearCode::draw(n, k, p, &mut rng)?;
        Self::from_code(spec, code, 0, seed, false)
    }

    fn from_code(
        spec: EnsembleSpec,
        code: LinearCode,
        k1: usize,
        seed: u64,
        gamma_rescaled: bool,
    ) -> Result<NestedPair> {
        let gamma = gamma_for(spec.n, spec.snr);
        Self::from_code_with_gamma(spec, code, k1, gamma, seed, gamma_rescaled)
    }

    fn from_code_with_gamma(
        spec: EnsembleSpec,
        code: LinearCode,
        k1: usize,
        gamma: f64,
        seed: u64,
        gamma_rescaled: bool,
    ) -> Result<NestedPair> {
        let p = code.modulus();
        let n = code.n();
        let k = code.k();
        let coarse_code = if k1 == 0 {
            LinearCode::trivial(p, n)
        } else {
            code.nested_subcode(k1)?
        };
        let fine = Lattice::construction_a(gamma, code)?;
        let coarse = Lattice::construction_a(gamma, coarse_code)?;
        let full_rank = fine.is_full_rank();
        let log2_p = (p.value() as f64).log2();
        let rate_bits = (k - k1) as f64 / n as f64 * log2_p;
        let nesting_ratio = (p.value() as f64).powf((k - k1) as f64 / n as f64);
        let coarse_space = coarse.code().row_space();
        let pair = NestedPair {
            spec,
            fine,
            coarse,
            k1,
            full_rank,
            rate_bits,
            nesting_ratio,
            seed,
            gamma_rescaled,
            coarse_space,
        };
        pair.verify_nesting_sample()?;
        Ok(pair)
    }

    /// Spot-checks the nesting invariant: sampled coarse points quantize to
    /// themselves in the fine lattice. Skipped when the fine coset count
    /// exceeds the default budget.
    fn verify_nesting_sample(&self) -> Result<()> {
        if self.fine.coset_count() > DEFAULT_BUDGET as u128 {
            return Ok(());
        }
        let mut rng = Substream::new(self.seed, "nesting-check").rng(0);
        for _ in 0..3 {
            let w: Vec<u64> = (0..self.k1)
                .map(|_| rand::Rng::random_range(&mut rng, 0..self.p()))
                .collect();
            let c = self.coarse.code().encode(&w)?;
            let mut point = self.coarse.lift_codeword(&c);
            for u in point.units.iter_mut() {
                *u += self.p() as i64 * rand::Rng::random_range(&mut rng, -2i64..=2i64);
            }
            let q = self.fine.quantize_point(&point, DEFAULT_BUDGET)?;
            if q != point {
                return Err(Error::InvalidConfig(
                    "nesting check failed: coarse point not fixed by fine quantizer".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    pub fn fine(&self) -> &Lattice {
        &self.fine
    }

    pub fn coarse(&self) -> &Lattice {
        &self.coarse
    }

    pub fn n(&self) -> usize {
        self.fine.n()
    }

    pub fn p(&self) -> u64 {
        self.fine.p()
    }

    pub fn k(&self) -> usize {
        self.fine.k()
    }

    pub fn k1(&self) -> usize {
        self.k1
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn full_rank(&self) -> bool {
        self.full_rank
    }

    pub fn rate_bits(&self) -> f64 {
        self.rate_bits
    }

    pub fn nesting_ratio(&self) -> f64 {
        self.nesting_ratio
    }

    pub fn gamma_rescaled(&self) -> bool {
        self.gamma_rescaled
    }

    pub fn is_unshaped(&self) -> bool {
        self.k1 == 0
    }

    /// Number of messages 2^{nR} = p^{k - k1}.
    pub fn message_count(&self) -> u128 {
        (self.p() as u128).pow((self.k() - self.k1) as u32)
    }

    /// Exact congruence of two lattice points modulo the coarse lattice:
    /// their unit difference reduced mod p must lie in the coarse row space.
    pub fn coset_equal(&self, a: &LatticePoint, b: &LatticePoint) -> bool {
        let p = self.p() as i64;
        let residues: Vec<u64> = a
            .units
            .iter()
            .zip(&b.units)
            .map(|(x, y)| (x - y).rem_euclid(p) as u64)
            .collect();
        self.coarse_space.contains(&residues)
    }

    /// Coset leader of message index `m` (base-p digits, last digit fastest,
    /// applied to the generator rows below the coarse block).
    pub fn leader_for_message(&self, m: u128, budget: u64) -> Result<LatticePoint> {
        let count = self.message_count();
        if m >= count {
            return Err(Error::InvalidConfig(format!(
                "message index {m} out of range {count}"
            )));
        }
        let tail = self.fine.code().row_range(self.k1, self.k())?;
        let digits = self.k() - self.k1;
        let mut w = vec![0u64; digits];
        let mut rem = m;
        for j in (0..digits).rev() {
            w[j] = (rem % self.p() as u128) as u64;
            rem /= self.p() as u128;
        }
        let c = tail.encode(&w)?;
        let point = self.fine.lift_codeword(&c);
        self.coarse.mod_point(&point, budget)
    }

    /// The codebook Lambda_f intersect V_c: one leader per message, all
    /// pairwise non-congruent modulo the coarse lattice.
    pub fn coset_leaders(&self, budget: u64) -> Result<Vec<LatticePoint>> {
        if !self.full_rank {
            return Err(Error::RankDeficient {
                rank: self.fine.rank(),
                k: self.k(),
            });
        }
        let count = self.message_count();
        if count > budget as u128 {
            return Err(Error::BudgetExceeded {
                needed: count,
                budget,
            });
        }
        let tail = self.fine.code().row_range(self.k1, self.k())?;
        let mut leaders = Vec::with_capacity(count as usize);
        for c in tail.enumerate_codewords(budget)? {
            let point = self.fine.lift_codeword(&c);
            leaders.push(self.coarse.mod_point(&point, budget)?);
        }
        Ok(leaders)
    }

    /// Rescales gamma so the coarse second moment matches `target_power`
    /// (spot-estimated by Monte Carlo). Returns the rescaled pair and the
    /// estimate the factor was derived from.
    pub fn rescale_to_power(
        &self,
        target_power: f64,
        samples: u64,
        stream: Substream,
        budget: u64,
    ) -> Result<(NestedPair, MomentEstimate)> {
        let est = self
            .coarse
            .estimate_second_moment(samples, stream, budget)?;
        let factor = (target_power / est.mean).sqrt();
        let pair = NestedPair::from_code_with_gamma(
            self.spec.clone(),
            self.fine.code().clone(),
            self.k1,
            self.fine.gamma() * factor,
            self.seed,
            true,
        )?;
        Ok((pair, est))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NestedPairWire {
    spec: EnsembleSpec,
    fine: Lattice,
    k1: usize,
    seed: u64,
    full_rank: bool,
    rate_bits: f64,
    nesting_ratio: f64,
    gamma_rescaled: bool,
}

impl TryFrom<NestedPairWire> for NestedPair {
    type Error = Error;

    fn try_from(w: NestedPairWire) -> Result<NestedPair> {
        let pair = NestedPair::from_code_with_gamma(
            w.spec,
            w.fine.code().clone(),
            w.k1,
            w.fine.gamma(),
            w.seed,
            w.gamma_rescaled,
        )?;
        Ok(pair)
    }
}

impl From<NestedPair> for NestedPairWire {
    fn from(p: NestedPair) -> NestedPairWire {
        NestedPairWire {
            spec: p.spec,
            fine: p.fine,
            k1: p.k1,
            seed: p.seed,
            full_rank: p.full_rank,
            rate_bits: p.rate_bits,
            nesting_ratio: p.nesting_ratio,
            gamma_rescaled: p.gamma_rescaled,
        }
    }
}

/// Lambda_1 subset ... subset Lambda_L built from prefixes of one generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NestedChainWire", into = "NestedChainWire")]
pub struct NestedChain {
    pub levels: Vec<Lattice>,
    pub row_counts: Vec<usize>,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NestedChainWire {
    levels: Vec<Lattice>,
    row_counts: Vec<usize>,
    seed: u64,
}

impl TryFrom<NestedChainWire> for NestedChain {
    type Error = Error;

    fn try_from(w: NestedChainWire) -> Result<NestedChain> {
        let chain = NestedChain {
            levels: w.levels,
            row_counts: w.row_counts,
            seed: w.seed,
        };
        if chain.levels.len() != chain.row_counts.len()
            || chain
                .levels
                .iter()
                .zip(&chain.row_counts)
                .any(|(lat, &kl)| lat.k() != kl)
        {
            return Err(Error::InvalidRowCounts {
                reason: "levels do not match row counts".into(),
            });
        }
        // Levels must be prefixes of one generator over one (gamma, p).
        if let Some(last) = chain.levels.last() {
            for lat in &chain.levels {
                if lat.gamma() != last.gamma()
                    || lat.p() != last.p()
                    || lat.code().generator() != &last.code().generator()[..lat.k() * lat.n()]
                {
                    return Err(Error::InvalidRowCounts {
                        reason: "levels are not prefixes of one generator".into(),
                    });
                }
            }
        }
        chain.verify_nesting_sample()?;
        Ok(chain)
    }
}

impl From<NestedChain> for NestedChainWire {
    fn from(c: NestedChain) -> NestedChainWire {
        NestedChainWire {
            levels: c.levels,
            row_counts: c.row_counts,
            seed: c.seed,
        }
    }
}

impl NestedChain {
    /// One generator with k_L rows; level l keeps the first k_l rows.
    pub fn build(
        n: usize,
        snr: f64,
        row_counts: &[usize],
        p_override: Option<u64>,
        seed: u64,
    ) -> Result<NestedChain> {
        if row_counts.is_empty() {
            return Err(Error::InvalidRowCounts {
                reason: "empty row counts".into(),
            });
        }
        if row_counts[0] == 0
            || row_counts.windows(2).any(|w| w[0] >= w[1])
            || *row_counts.last().unwrap() > n
        {
            return Err(Error::InvalidRowCounts {
                reason: format!("{row_counts:?} must be strictly ascending in 1..=n"),
            });
        }
        let p = match p_override {
            Some(v) => PrimeModulus::new(v)?,
            None => prime_for_dimension(n as u64)?,
        };
        let gamma = gamma_for(n, snr);
        let k_max = *row_counts.last().unwrap();
        let mut rng = Substream::new(seed, label::GENERATOR).rng(0);
        let code = LinearCode::draw(n, k_max, p, &mut rng)?;
        let mut levels = Vec::with_capacity(row_counts.len());
        for &kl in row_counts {
            let sub = if kl == k_max {
                code.clone()
            } else {
                code.nested_subcode(kl)?
            };
            levels.push(Lattice::construction_a(gamma, sub)?);
        }
        let chain = NestedChain {
            levels,
            row_counts: row_counts.to_vec(),
            seed,
        };
        chain.verify_nesting_sample()?;
        Ok(chain)
    }

    fn verify_nesting_sample(&self) -> Result<()> {
        for win in self.levels.windows(2) {
            let (coarse, fine) = (&win[0], &win[1]);
            if fine.coset_count() > DEFAULT_BUDGET as u128 {
                continue;
            }
            let mut rng = Substream::new(self.seed, "nesting-check").rng(1);
            for _ in 0..3 {
                let w: Vec<u64> = (0..coarse.k())
                    .map(|_| rand::Rng::random_range(&mut rng, 0..coarse.p()))
                    .collect();
                let c = coarse.code().encode(&w)?;
                let mut point = coarse.lift_codeword(&c);
                for u in point.units.iter_mut() {
                    *u += coarse.p() as i64 * rand::Rng::random_range(&mut rng, -2i64..=2i64);
                }
                if fine.quantize_point(&point, DEFAULT_BUDGET)? != point {
                    return Err(Error::InvalidConfig("chain nesting check failed".into()));
                }
            }
        }
        Ok(())
    }
}
