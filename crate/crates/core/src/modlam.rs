//! The mod-Lambda transmission scheme, end to end: dithered encoding over
//! the coarse Voronoi region, an additive noise channel, alpha-scaled
//! dither-removed reception, coset nearest-neighbor decoding, and Monte
//! Carlo error-rate estimation.
//!
//! Error counting never touches floating point: the decoded point and the
//! transmitted coset leader are compared through their exact integer
//! coordinates modulo the coarse lattice.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{NestedPair, TWO_PI_E};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticePoint, DEFAULT_BUDGET};
use crate::noise::NoiseSampler;
use crate::rng::{label, Substream};
use crate::stats::{ErrorRateEstimate, MomentEstimate};

/// Receiver scaling: a number in (0, 1] or the MMSE choice SNR/(1+SNR).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlphaWire", into = "AlphaWire")]
pub enum Alpha {
    Mmse,
    Value(f64),
}

impl Alpha {
    pub fn resolve(&self, snr: f64) -> f64 {
        match self {
            Alpha::Mmse => mmse_alpha(snr),
            Alpha::Value(a) => *a,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AlphaWire {
    Num(f64),
    Token(String),
}

impl TryFrom<AlphaWire> for Alpha {
    type Error = Error;

    fn try_from(w: AlphaWire) -> Result<Alpha> {
        match w {
            AlphaWire::Num(a) => {
                if a.is_finite() && a > 0.0 && a <= 1.0 {
                    Ok(Alpha::Value(a))
                } else {
                    Err(Error::InvalidConfig(format!("alpha={a} must be in (0, 1]")))
                }
            }
            AlphaWire::Token(s) if s == "mmse" => Ok(Alpha::Mmse),
            AlphaWire::Token(s) => Err(Error::InvalidConfig(format!(
                "alpha token must be \"mmse\", got \"{s}\""
            ))),
        }
    }
}

impl From<Alpha> for AlphaWire {
    fn from(a: Alpha) -> AlphaWire {
        match a {
            Alpha::Mmse => AlphaWire::Token("mmse".into()),
            Alpha::Value(v) => AlphaWire::Num(v),
        }
    }
}

/// The linear MMSE coefficient for estimating X from Y: SNR/(1+SNR).
pub fn mmse_alpha(snr: f64) -> f64 {
    snr / (1.0 + snr)
}

/// sigma^2_eff = alpha^2 + (1-alpha)^2 SNR for unit-variance channel noise.
pub fn effective_noise_variance(alpha: f64, snr: f64) -> f64 {
    alpha * alpha + (1.0 - alpha) * (1.0 - alpha) * snr
}

/// Shaping loss of a cubic coarse lattice: (1/2) log2(2 pi e / 12) bits.
pub fn shaping_loss_bits() -> f64 {
    0.5 * (TWO_PI_E / 12.0).log2()
}

/// Channel noise selection for the simulator.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseKind {
    /// N(0, 1) per coordinate, the channel of the power-constrained model.
    #[default]
    Gaussian,
    /// Unit-variance i.i.d. uniform noise.
    UniformIid,
    /// Any calibrated sampler.
    Custom { sampler: NoiseSampler },
}

impl NoiseKind {
    fn to_sampler(&self) -> NoiseSampler {
        match self {
            NoiseKind::Gaussian => NoiseSampler::gaussian_unit(),
            NoiseKind::UniformIid => NoiseSampler::uniform_unit(),
            NoiseKind::Custom { sampler } => sampler.clone(),
        }
    }
}

fn default_trials() -> u64 {
    10_000
}

fn default_sigma_z() -> f64 {
    1.0
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

/// One simulation configuration. Noise-variance sweeps scale `sigma_z`, not
/// the SNR; the SNR fixes the lattice scaling and the MMSE coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModLambdaConfig {
    pub snr: f64,
    pub alpha: Alpha,
    #[serde(default)]
    pub noise: NoiseKind,
    #[serde(default = "default_sigma_z")]
    pub sigma_z: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Stop at a batch boundary once the Clopper-Pearson interval is
    /// narrower than this.
    #[serde(default)]
    pub early_stop_ci_width: Option<f64>,
}

impl ModLambdaConfig {
    pub fn new(snr: f64, alpha: Alpha, trials: u64, seed: u64) -> Self {
        ModLambdaConfig {
            snr,
            alpha,
            noise: NoiseKind::Gaussian,
            sigma_z: 1.0,
            trials,
            seed,
            budget: DEFAULT_BUDGET,
            early_stop_ci_width: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.snr.is_finite() && self.snr > 0.0) {
            return Err(Error::InvalidConfig("snr must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if let Alpha::Value(a) = self.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidConfig(format!("alpha={a} out of (0,1]")));
            }
        }
        if !(self.sigma_z.is_finite() && self.sigma_z >= 0.0) {
            return Err(Error::InvalidConfig("sigma_z must be >= 0".into()));
        }
        Ok(())
    }
}

/// Everything observed in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub message_index: u64,
    pub t: LatticePoint,
    pub decoded: LatticePoint,
    pub error: bool,
    pub z_eff_norm2: f64,
}

/// X = [t - U] mod Lambda_c.
pub fn encode_tx(
    t: &LatticePoint,
    dither: &[f64],
    coarse: &Lattice,
    budget: u64,
) -> Result<Vec<f64>> {
    let t_real = coarse.point_real(t);
    let shifted: Vec<f64> = t_real.iter().zip(dither).map(|(a, b)| a - b).collect();
    coarse.mod_lattice(&shifted, budget)
}

/// Y_eff = [alpha y + U] mod Lambda_c.
pub fn receive(
    y: &[f64],
    dither: &[f64],
    alpha: f64,
    coarse: &Lattice,
    budget: u64,
) -> Result<Vec<f64>> {
    let scaled: Vec<f64> = y
        .iter()
        .zip(dither)
        .map(|(yi, ui)| alpha * yi + ui)
        .collect();
    coarse.mod_lattice(&scaled, budget)
}

/// g(Y) = [Q_{Lambda_f}(Y)] mod Lambda_c: quantize to the fine lattice, then
/// reduce exactly to a coset leader in the coarse Voronoi region.
pub fn coset_decode(y_eff: &[f64], pair: &NestedPair, budget: u64) -> Result<LatticePoint> {
    let q = pair.fine().quantize_nn(y_eff, budget)?;
    pair.coarse().mod_point(&q, budget)
}

/// Full per-trial records; deterministic in `(config.seed, trial index)` and
/// independent of the rayon worker count.
pub fn run_trials(pair: &NestedPair, cfg: &ModLambdaConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    if !pair.full_rank() {
        return Err(Error::RankDeficient {
            rank: pair.fine().rank(),
            k: pair.k(),
        });
    }
    let needed = pair.fine().coset_count();
    if needed > cfg.budget as u128 {
        return Err(Error::BudgetExceeded {
            needed,
            budget: cfg.budget,
        });
    }
    let noise = cfg.noise.to_sampler().calibrate(
        pair.n(),
        20_000,
        Substream::new(cfg.seed, "noise-cal"),
        cfg.budget,
    )?;
    let alpha = cfg.alpha.resolve(cfg.snr);
    let message_count = pair.message_count();

    let msg_stream = Substream::new(cfg.seed, label::MESSAGE);
    let dither_stream = Substream::new(cfg.seed, label::DITHER);
    let noise_stream = Substream::new(cfg.seed, label::NOISE);

    let run_one = |i: u64| -> Result<TrialRecord> {
        let m = (msg_stream.rng(i).random::<u128>() % message_count) as u64;
        let t = pair.leader_for_message(m as u128, cfg.budget)?;
        let u = pair
            .coarse()
            .sample_voronoi_uniform(&mut dither_stream.rng(i), cfg.budget)?;
        let x = encode_tx(&t, &u, pair.coarse(), cfg.budget)?;
        let n_vec = noise.sample(&mut noise_stream.rng(i));
        let y: Vec<f64> = x
            .iter()
            .zip(&n_vec)
            .map(|(xi, ni)| xi + cfg.sigma_z * ni)
            .collect();
        let y_eff = receive(&y, &u, alpha, pair.coarse(), cfg.budget)?;
        let decoded = coset_decode(&y_eff, pair, cfg.budget)?;
        let error = !pair.coset_equal(&decoded, &t);
        let z_eff_norm2 = x
            .iter()
            .zip(&n_vec)
            .map(|(xi, ni)| {
                let z = (alpha - 1.0) * xi + alpha * cfg.sigma_z * ni;
                z * z
            })
            .sum();
        Ok(TrialRecord {
            message_index: m,
            t,
            decoded,
            error,
            z_eff_norm2,
        })
    };

    match cfg.early_stop_ci_width {
        None => (0..cfg.trials).into_par_iter().map(run_one).collect(),
        Some(width) => {
            // Batch boundaries keep early stopping deterministic under any
            // parallel schedule.
            const BATCH: u64 = 1000;
            let mut records = Vec::with_capacity(cfg.trials as usize);
            let mut errors = 0u64;
            let mut start = 0u64;
            while start < cfg.trials {
                let end = (start + BATCH).min(cfg.trials);
                let batch: Result<Vec<TrialRecord>> =
                    (start..end).into_par_iter().map(run_one).collect();
                let batch = batch?;
                errors += batch.iter().filter(|r| r.error).count() as u64;
                records.extend(batch);
                let est = ErrorRateEstimate::from_counts(errors, records.len() as u64);
                if est.ci_hi - est.ci_lo < width {
                    break;
                }
                start = end;
            }
            Ok(records)
        }
    }
}

/// Aggregated outcome of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutcome {
    pub estimate: ErrorRateEstimate,
    /// Mean of ||Z_eff||^2 / n across trials.
    pub z_eff_per_dim: MomentEstimate,
    pub alpha: f64,
    pub sigma2_eff_nominal: f64,
}

pub fn summarize(
    pair: &NestedPair,
    cfg: &ModLambdaConfig,
    records: &[TrialRecord],
) -> SimulationOutcome {
    let n = pair.n() as f64;
    let errors = records.iter().filter(|r| r.error).count() as u64;
    let z: Vec<f64> = records.iter().map(|r| r.z_eff_norm2 / n).collect();
    let alpha = cfg.alpha.resolve(cfg.snr);
    SimulationOutcome {
        estimate: ErrorRateEstimate::from_counts(errors, records.len() as u64),
        z_eff_per_dim: MomentEstimate::from_samples(&z),
        alpha,
        sigma2_eff_nominal: effective_noise_variance(alpha, cfg.snr),
    }
}

/// Dithered transmission, AWGN, reception, coset decoding; Clopper-Pearson
/// interval on the coset error rate.
pub fn run_simulation(pair: &NestedPair, cfg: &ModLambdaConfig) -> Result<SimulationOutcome> {
    let records = run_trials(pair, cfg)?;
    Ok(summarize(pair, cfg, &records))
}

/// Unshaped run (cubic coarse lattice) plus the shaping-loss bookkeeping of
/// the reference rate (1/2) log2(SNR / sigma2_eff) - (1/2) log2(2 pi e / 12).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnshapedReport {
    pub outcome: SimulationOutcome,
    pub shaping_loss_bits: f64,
    pub reference_rate_bits: f64,
}

pub fn run_unshaped_simulation(pair: &NestedPair, cfg: &ModLambdaConfig) -> Result<UnshapedReport> {
    if !pair.is_unshaped() {
        return Err(Error::InvalidConfig(
            "unshaped simulation requires a cubic (k1 = 0) coarse lattice".into(),
        ));
    }
    let outcome = run_simulation(pair, cfg)?;
    let loss = shaping_loss_bits();
    let reference_rate_bits = 0.5 * (cfg.snr / outcome.sigma2_eff_nominal).log2() - loss;
    Ok(UnshapedReport {
        outcome,
        shaping_loss_bits: loss,
        reference_rate_bits,
    })
}
