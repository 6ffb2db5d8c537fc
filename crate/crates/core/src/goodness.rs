//! Empirical checks of the ensemble's goodness properties: semi
//! norm-ergodicity of noise families, Voronoi-dither concentration, covering
//! distance, impersonation events, bounded-distance versus nearest-neighbor
//! coset decoding, and NSM sweeps over ensemble members.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{vnr, EnsembleSpec, NestedPair, TWO_PI_E};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticePoint};
use crate::noise::CalibratedNoise;
use crate::rng::{label, Substream};
use crate::stats::{ErrorRateEstimate, MomentEstimate};

/// Empirical Pr(||Z||^2 > (1+delta) n sigma2_Z) with the threshold recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceEstimate {
    pub delta: f64,
    pub n: usize,
    pub sigma2_z: f64,
    /// sqrt((1+delta) n sigma2_Z).
    pub threshold: f64,
    pub est: ErrorRateEstimate,
}

/// Semi norm-ergodicity probe: the fraction of draws leaving the inflated
/// ball B(0, sqrt((1+delta) n sigma2_Z)).
pub fn exceedance_test(
    noise: &CalibratedNoise,
    delta: f64,
    trials: u64,
    stream: Substream,
) -> ExceedanceEstimate {
    assert!(delta > 0.0, "delta must be positive");
    let n = noise.n();
    let sigma2_z = noise.sigma2();
    let threshold2 = (1.0 + delta) * n as f64 * sigma2_z;
    let exceed: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.rng(i);
            let z = noise.sample(&mut rng);
            let norm2: f64 = z.iter().map(|v| v * v).sum();
            u64::from(norm2 > threshold2)
        })
        .collect::<Vec<u64>>()
        .into_iter()
        .sum();
    ExceedanceEstimate {
        delta,
        n,
        sigma2_z,
        threshold: threshold2.sqrt(),
        est: ErrorRateEstimate::from_counts(exceed, trials),
    }
}

/// The analytic containment radius for a uniform draw from a set with NSM G:
/// r_eps = sqrt((2 pi e G - (n/(n+2)) (1-eps)^{1+2/n}) / eps) * r_eff.
pub fn uniform_containment_radius(g_nsm: f64, n: usize, epsilon: f64, r_eff: f64) -> f64 {
    let nf = n as f64;
    let inner =
        (TWO_PI_E * g_nsm - nf / (nf + 2.0) * (1.0 - epsilon).powf(1.0 + 2.0 / nf)) / epsilon;
    inner.sqrt() * r_eff
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusCheck {
    pub epsilon: f64,
    pub r_eps: f64,
    /// Empirical Pr(||U|| > r_eps); the lemma promises at most epsilon.
    pub exceedance: ErrorRateEstimate,
    /// True when the interval cannot reject Pr <= epsilon.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DitherReport {
    pub nsm: MomentEstimate,
    pub exceedances: Vec<ExceedanceEstimate>,
    pub radius_checks: Vec<RadiusCheck>,
}

/// Norm-ergodicity report for the Voronoi dither of `lat`: exceedance tests
/// at each delta, plus the analytic radius check at each epsilon using the
/// lattice's estimated NSM.
pub fn dither_ergodicity_report(
    lat: &Lattice,
    deltas: &[f64],
    epsilons: &[f64],
    trials: u64,
    nsm_samples: u64,
    stream: Substream,
    budget: u64,
) -> Result<DitherReport> {
    // Separate stream families: the NSM estimate, the sampler calibration,
    // the exceedance draws, and the radius-check draws must not share
    // samples.
    let nsm = lat.estimate_nsm(nsm_samples, stream.child("nsm"), budget)?;
    let r_eff = lat.effective_radius()?;
    let noise = crate::noise::NoiseSampler::VoronoiDither {
        lattice: lat.clone(),
    }
    .calibrate(lat.n(), nsm_samples, stream.child("cal"), budget)?;

    let exceed_stream = stream.child("exceed");
    let exceedances = deltas
        .iter()
        .map(|&d| exceedance_test(&noise, d, trials, exceed_stream))
        .collect();

    let radius_stream = stream.child("radius");
    let norms: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = radius_stream.rng(i);
            let u = noise.sample(&mut rng);
            u.iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .collect();
    let radius_checks = epsilons
        .iter()
        .map(|&eps| {
            let r_eps = uniform_containment_radius(nsm.mean, lat.n(), eps, r_eff);
            let exceed = norms.iter().filter(|&&v| v > r_eps).count() as u64;
            let est = ErrorRateEstimate::from_counts(exceed, trials);
            RadiusCheck {
                epsilon: eps,
                r_eps,
                pass: est.ci_lo <= eps,
                exceedance: est,
            }
        })
        .collect();

    Ok(DitherReport {
        nsm,
        exceedances,
        radius_checks,
    })
}

/// Squared distances from `x` to every coset of the code, via componentwise
/// centered reduction modulo gamma. Entry order matches the codeword
/// enumeration order.
fn coset_distance_scan<F: FnMut(&[u64], f64)>(
    lat: &Lattice,
    x: &[f64],
    budget: u64,
    mut visit: F,
) -> Result<()> {
    let needed = lat.coset_count();
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let n = lat.n();
    let p = lat.p() as usize;
    let gamma = lat.gamma();
    let inv_p = 1.0 / p as f64;
    let mut table = vec![0.0f64; n * p];
    for i in 0..n {
        let xi = x[i] / gamma;
        for v in 0..p {
            let y = xi - v as f64 * inv_p;
            let d = gamma * (y - y.round_ties_even());
            table[i * p + v] = d * d;
        }
    }
    let k = lat.k();
    let mut w = vec![0u64; k];
    let mut c = vec![0u64; n];
    loop {
        let mut d2 = 0.0;
        for i in 0..n {
            d2 += table[i * p + c[i] as usize];
        }
        visit(&c, d2);
        let mut idx = k;
        loop {
            if idx == 0 {
                return Ok(());
            }
            idx -= 1;
            crate::zp::add_row_mod(&mut c, lat.code().row(idx), lat.p());
            w[idx] += 1;
            if w[idx] < lat.p() {
                break;
            }
            w[idx] = 0;
        }
    }
}

/// d(x, Lambda_c) = (1/n) min over cosets of the centered mod-gamma squared
/// distance; never exceeds gamma^2/4.
pub fn covering_distance(coarse: &Lattice, x: &[f64], budget: u64) -> Result<f64> {
    let mut best = f64::INFINITY;
    coset_distance_scan(coarse, x, budget, |_, d2| {
        if d2 < best {
            best = d2;
        }
    })?;
    Ok(best / coarse.n() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub threshold: f64,
    /// Fraction of uniform-in-cube probes with d(x, Lambda_c) <= threshold.
    pub success: ErrorRateEstimate,
    /// The ensemble-average lower bound V_n 2^{-n} / n^2 on the
    /// single-codeword covering event, reported for reference.
    pub single_codeword_lower_bound: f64,
}

/// Empirical covering-success probability over probes uniform on
/// [0, gamma)^n.
pub fn covering_success_probability(
    coarse: &Lattice,
    threshold: f64,
    probes: u64,
    stream: Substream,
    budget: u64,
) -> Result<CoveringReport> {
    let n = coarse.n();
    let gamma = coarse.gamma();
    let successes: u64 = (0..probes)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.rng(i);
            let x: Vec<f64> = (0..n).map(|_| gamma * rng.random::<f64>()).collect();
            let d = covering_distance(coarse, &x, budget)?;
            Ok(u64::from(d <= threshold))
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();
    Ok(CoveringReport {
        threshold,
        success: ErrorRateEstimate::from_counts(successes, probes),
        single_codeword_lower_bound: crate::ball::volume_unit_ball(n) * 2f64.powi(-(n as i32))
            / (n as f64 * n as f64),
    })
}

/// Pr((Lambda_f \ gamma Z^n) intersects B(Z, r_Z)) with
/// r_Z = sqrt((1+rho) n sigma2_Z): some nonzero-codeword coset point falls
/// within r_Z of the noise vector.
pub fn impersonation_probability(
    fine: &Lattice,
    noise: &CalibratedNoise,
    rho: f64,
    trials: u64,
    stream: Substream,
    budget: u64,
) -> Result<ErrorRateEstimate> {
    assert!(rho > 0.0, "rho must be positive");
    let r2 = (1.0 + rho) * fine.n() as f64 * noise.sigma2();
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.rng(i);
            let z = noise.sample(&mut rng);
            let mut hit = false;
            coset_distance_scan(fine, &z, budget, |c, d2| {
                if !hit && d2 <= r2 && c.iter().any(|&v| v != 0) {
                    hit = true;
                }
            })?;
            Ok(u64::from(hit))
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();
    Ok(ErrorRateEstimate::from_counts(hits, trials))
}

/// Result of bounded-distance coset decoding: the lattice points within
/// radius r of y, reduced modulo the coarse lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BdOutcome {
    /// Exactly one coset leader within reach.
    Unique(LatticePoint),
    /// Two or more distinct leaders within reach.
    Ambiguous(u64),
    /// No fine lattice point within radius r.
    Empty,
}

/// [Lambda_f intersect B(y, r)] mod Lambda_c by coset enumeration. All
/// points of one fine coset share a leader (gamma Z^n is inside Lambda_c),
/// so each coset contributes through its minimum distance.
pub fn bounded_distance_decode(
    y: &[f64],
    pair: &NestedPair,
    r: f64,
    budget: u64,
) -> Result<BdOutcome> {
    let r2 = r * r;
    let coarse_space = pair.coarse().code().row_space();
    let mut reached: Vec<Vec<u64>> = Vec::new();
    let mut witness: Option<Vec<u64>> = None;
    coset_distance_scan(pair.fine(), y, budget, |c, d2| {
        if d2 <= r2 {
            let canon = coarse_space.canonicalize(c);
            if !reached.contains(&canon) {
                if reached.is_empty() {
                    witness = Some(c.to_vec());
                }
                reached.push(canon);
            }
        }
    })?;
    match reached.len() {
        0 => Ok(BdOutcome::Empty),
        1 => {
            let c = witness.expect("witness recorded with first leader");
            let point = pair.fine().lift_codeword(&c);
            Ok(BdOutcome::Unique(pair.coarse().mod_point(&point, budget)?))
        }
        m => Ok(BdOutcome::Ambiguous(m as u64)),
    }
}

/// Per-member NSM estimates over independent ensemble draws, with the
/// fraction counted good at each delta1 in the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub members: u64,
    pub full_rank: Vec<bool>,
    /// NSM of each member's coarse lattice; None when the draw lost rank
    /// (volume formula undefined, member counted bad).
    pub nsm: Vec<Option<MomentEstimate>>,
    /// (delta1, fraction of members with G_hat - hw <= (1+delta1)/(2 pi e)).
    pub fraction_good: Vec<(f64, f64)>,
}

pub fn ensemble_nsm_sweep(
    spec: &EnsembleSpec,
    members: u64,
    samples: u64,
    delta_grid: &[f64],
    seed: u64,
    budget: u64,
) -> Result<EnsembleReport> {
    spec.validate()?;
    let member_stream = Substream::new(seed, label::MEMBER);
    let results: Vec<(bool, Option<MomentEstimate>)> = (0..members)
        .into_par_iter()
        .map(|i| {
            let member_seed: u64 = member_stream.rng(i).random();
            let pair = NestedPair::build(spec, member_seed)?;
            let coarse_full = pair.coarse().is_full_rank();
            let nsm = if coarse_full {
                Some(pair.coarse().estimate_nsm(
                    samples,
                    Substream::new(member_seed, label::SAMPLE),
                    budget,
                )?)
            } else {
                None
            };
            Ok((coarse_full, nsm))
        })
        .collect::<Result<Vec<_>>>()?;

    let floor = 1.0 / TWO_PI_E;
    let fraction_good = delta_grid
        .iter()
        .map(|&d1| {
            let good = results
                .iter()
                .filter(|(_, nsm)| {
                    nsm.as_ref()
                        .is_some_and(|g| g.mean - g.half_width_95 <= (1.0 + d1) * floor)
                })
                .count();
            (d1, good as f64 / members as f64)
        })
        .collect();

    Ok(EnsembleReport {
        members,
        full_rank: results.iter().map(|(f, _)| *f).collect(),
        nsm: results.into_iter().map(|(_, g)| g).collect(),
        fraction_good,
    })
}

/// One row of the P_e versus VNR table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeVsVnrRow {
    pub vnr: f64,
    pub sigma2_z: f64,
    pub pe: ErrorRateEstimate,
}

/// Sweeps sigma2_Z so the VNR takes each grid value, decoding t + Z for
/// random coset leaders t under coset nearest-neighbor decoding.
pub fn pe_vs_vnr_sweep(
    pair: &NestedPair,
    noise: &CalibratedNoise,
    vnr_grid: &[f64],
    trials: u64,
    seed: u64,
    budget: u64,
) -> Result<Vec<PeVsVnrRow>> {
    if !pair.full_rank() {
        return Err(Error::RankDeficient {
            rank: pair.fine().rank(),
            k: pair.k(),
        });
    }
    let v2n = pair.fine().volume_2n()?;
    let msg_stream = Substream::new(seed, label::MESSAGE);
    let noise_stream = Substream::new(seed, label::NOISE);
    let mut rows = Vec::with_capacity(vnr_grid.len());
    for (gi, &mu) in vnr_grid.iter().enumerate() {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidConfig(format!("vnr={mu} must be positive")));
        }
        let sigma2_z = v2n / (TWO_PI_E * mu);
        let scaled = noise.scaled_to(sigma2_z);
        let errors: u64 = (0..trials)
            .into_par_iter()
            .map(|t| {
                let idx = gi as u64 * trials + t;
                let m = msg_stream.rng(idx).random::<u128>() % pair.message_count();
                let leader = pair.leader_for_message(m, budget)?;
                let z = scaled.sample(&mut noise_stream.rng(idx));
                let leader_real = pair.coarse().point_real(&leader);
                let y: Vec<f64> = leader_real.iter().zip(&z).map(|(a, b)| a + b).collect();
                let decoded = crate::modlam::coset_decode(&y, pair, budget)?;
                Ok(u64::from(!pair.coset_equal(&decoded, &leader)))
            })
            .collect::<Result<Vec<u64>>>()?
            .into_iter()
            .sum();
        let row_vnr = vnr(pair.fine(), sigma2_z)?;
        rows.push(PeVsVnrRow {
            vnr: row_vnr,
            sigma2_z,
            pe: ErrorRateEstimate::from_counts(errors, trials),
        });
    }
    Ok(rows)
}
