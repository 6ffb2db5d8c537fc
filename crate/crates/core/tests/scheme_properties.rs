//! Scheme-level behavior of the mod-Lambda pipeline: the Crypto-Lemma
//! consequences, the effective-noise variance identity, decoder behavior at
//! small perturbations, supercritical-rate sanity, and nearest-neighbor
//! dominance over bounded-distance decoding.

use latcode::lattice::DEFAULT_BUDGET;
use latcode::rng::{label, Substream};
use latcode::stats::MomentEstimate;
use latcode::{
    bounded_distance_decode, coset_decode, effective_noise_variance, encode_tx, mmse_alpha,
    receive, run_simulation, Alpha, BdOutcome, EnsembleSpec, ModLambdaConfig, NestedPair,
    NoiseSampler,
};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn pair_n8(seed: u64) -> NestedPair {
    let spec = EnsembleSpec {
        n: 8,
        snr: 3.0,
        k: 3,
        k1: 1,
        epsilon1: 0.0,
        p_override: Some(5),
    };
    NestedPair::build(&spec, seed).unwrap()
}

/// Transmit a fixed leader `trials` times and collect (coordinate sum,
/// power, error) statistics.
struct FixedMessageStats {
    coord_mean: MomentEstimate,
    power: MomentEstimate,
    errors: u64,
    trials: u64,
}

fn run_fixed_message(
    pair: &NestedPair,
    message: u128,
    alpha: f64,
    sigma_z: f64,
    trials: u64,
    seed: u64,
) -> FixedMessageStats {
    let n = pair.n();
    let t = pair.leader_for_message(message, DEFAULT_BUDGET).unwrap();
    let dither = Substream::new(seed, label::DITHER);
    let noise = Substream::new(seed, label::NOISE);
    let mut coord_means = Vec::with_capacity(trials as usize);
    let mut powers = Vec::with_capacity(trials as usize);
    let mut errors = 0u64;
    for i in 0..trials {
        let u = pair
            .coarse()
            .sample_voronoi_uniform(&mut dither.rng(i), DEFAULT_BUDGET)
            .unwrap();
        let x = encode_tx(&t, &u, pair.coarse(), DEFAULT_BUDGET).unwrap();
        coord_means.push(x.iter().sum::<f64>() / n as f64);
        powers.push(x.iter().map(|v| v * v).sum::<f64>() / n as f64);
        let mut rng = noise.rng(i);
        let y: Vec<f64> = x
            .iter()
            .map(|&xi| {
                let g: f64 = StandardNormal.sample(&mut rng);
                xi + sigma_z * g
            })
            .collect();
        let y_eff = receive(&y, &u, alpha, pair.coarse(), DEFAULT_BUDGET).unwrap();
        let decoded = coset_decode(&y_eff, pair, DEFAULT_BUDGET).unwrap();
        if !pair.coset_equal(&decoded, &t) {
            errors += 1;
        }
    }
    FixedMessageStats {
        coord_mean: MomentEstimate::from_samples(&coord_means),
        power: MomentEstimate::from_samples(&powers),
        errors,
        trials,
    }
}

#[test]
fn crypto_lemma_transmit_statistics_are_message_independent() {
    let pair = pair_n8(3);
    assert!(pair.full_rank());
    let alpha = mmse_alpha(3.0);
    let a = run_fixed_message(&pair, 0, alpha, 1.0, 10_000, 101);
    let b = run_fixed_message(&pair, 17, alpha, 1.0, 10_000, 202);
    assert!(
        a.coord_mean.overlaps(&b.coord_mean),
        "means {:?} vs {:?}",
        a.coord_mean,
        b.coord_mean
    );
    assert!(a.power.overlaps(&b.power), "powers differ across messages");

    // Per-dimension power matches the coarse second moment.
    let sigma2 = pair
        .coarse()
        .estimate_second_moment(20_000, Substream::new(7, label::SAMPLE), DEFAULT_BUDGET)
        .unwrap();
    assert!(
        a.power.overlaps(&sigma2),
        "power {:?} vs sigma2(coarse) {:?}",
        a.power,
        sigma2
    );
}

#[test]
fn error_rate_is_message_independent() {
    let spec = EnsembleSpec {
        n: 4,
        snr: 1.0,
        k: 3,
        k1: 1,
        epsilon1: 0.0,
        p_override: Some(7),
    };
    let pair = NestedPair::build(&spec, 5).unwrap();
    // sigma_z tuned so errors are common enough for tight intervals.
    let a = run_fixed_message(&pair, 0, 1.0, 0.7, 6000, 11);
    let b = run_fixed_message(&pair, 23, 1.0, 0.7, 6000, 12);
    let ea = latcode::ErrorRateEstimate::from_counts(a.errors, a.trials);
    let eb = latcode::ErrorRateEstimate::from_counts(b.errors, b.trials);
    assert!(
        ea.p_hat > 0.0 && ea.p_hat < 1.0,
        "want an informative regime"
    );
    assert!(ea.overlaps(&eb), "conditional error rates {ea:?} vs {eb:?}");
}

#[test]
fn effective_variance_identity_with_calibrated_power() {
    // Mean of ||Z_eff||^2/n matches alpha^2 + (1-alpha)^2 sigma2(Lambda_c)
    // within combined intervals, for alpha in {0.5, mmse, 1} at snr = 3.
    let pair = pair_n8(9);
    let sigma2_c = pair
        .coarse()
        .estimate_second_moment(30_000, Substream::new(5, label::SAMPLE), DEFAULT_BUDGET)
        .unwrap();
    for alpha in [Alpha::Value(0.5), Alpha::Mmse, Alpha::Value(1.0)] {
        let cfg = ModLambdaConfig {
            trials: 20_000,
            ..ModLambdaConfig::new(3.0, alpha, 20_000, 33)
        };
        let out = run_simulation(&pair, &cfg).unwrap();
        let a = out.alpha;
        let predicted = sigma2_c.scaled((1.0 - a) * (1.0 - a));
        let predicted_mean = a * a + predicted.mean;
        let slack = out.z_eff_per_dim.half_width_95 + predicted.half_width_95;
        assert!(
            (out.z_eff_per_dim.mean - predicted_mean).abs() <= slack,
            "alpha={a}: measured {} vs predicted {predicted_mean} (slack {slack})",
            out.z_eff_per_dim.mean
        );
    }
    // Analytic check at the MMSE point: snr / sigma2_eff = 1 + snr.
    let v = effective_noise_variance(mmse_alpha(3.0), 3.0);
    assert!((3.0 / v - 4.0).abs() < 1e-12);
}

#[test]
fn small_perturbations_decode_to_the_leader() {
    let spec = EnsembleSpec {
        n: 4,
        snr: 1.0,
        k: 3,
        k1: 1,
        epsilon1: 0.0,
        p_override: Some(7),
    };
    let pair = NestedPair::build(&spec, 19).unwrap();
    // Fine minimum distance by enumeration of nonzero points near zero.
    let fine = pair.fine();
    let h = fine.gamma() * 3.0;
    let p = fine.p() as f64;
    let mut dmin2 = f64::INFINITY;
    for c in fine.code().enumerate_codewords(DEFAULT_BUDGET).unwrap() {
        for a0 in -3..=3i64 {
            for a1 in -3..=3i64 {
                for a2 in -3..=3i64 {
                    for a3 in -3..=3i64 {
                        let offs = [a0, a1, a2, a3];
                        let mut norm2 = 0.0;
                        let mut zero = true;
                        for i in 0..4 {
                            let coord = fine.gamma() * (c[i] as f64 / p + offs[i] as f64);
                            if coord != 0.0 {
                                zero = false;
                            }
                            norm2 += coord * coord;
                        }
                        if !zero && norm2 < dmin2 {
                            dmin2 = norm2;
                        }
                    }
                }
            }
        }
    }
    let dmin = dmin2.sqrt();
    assert!(dmin > 0.0 && dmin < h);

    let leaders = pair.coset_leaders(DEFAULT_BUDGET).unwrap();
    let stream = Substream::new(8, label::PROBE);
    for (j, t) in leaders.iter().enumerate().take(20) {
        let mut rng = stream.rng(j as u64);
        let dir: Vec<f64> = (0..4).map(|_| rng.random::<f64>() - 0.5).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let radius = 0.45 * dmin; // strictly inside the packing radius
        let t_real = pair.coarse().point_real(t);
        let y: Vec<f64> = t_real
            .iter()
            .zip(&dir)
            .map(|(a, d)| a + d * radius / norm)
            .collect();
        let decoded = coset_decode(&y, &pair, DEFAULT_BUDGET).unwrap();
        assert!(pair.coset_equal(&decoded, t));
    }
}

#[test]
fn supercritical_rate_fails_often() {
    // Rate 1.19 bits/dim against capacity 0.5: the decoder should be wrong
    // at least half the time.
    let spec = EnsembleSpec {
        n: 8,
        snr: 1.0,
        k: 7,
        k1: 1,
        epsilon1: 0.0,
        p_override: Some(3),
    };
    let pair = NestedPair::build(&spec, 2).unwrap();
    assert!(pair.rate_bits() > 0.5 * 2f64.log2());
    let cfg = ModLambdaConfig::new(1.0, Alpha::Mmse, 2000, 77);
    let out = run_simulation(&pair, &cfg).unwrap();
    assert!(
        out.estimate.p_hat >= 0.5,
        "supercritical run should fail often, got {}",
        out.estimate.p_hat
    );
}

#[test]
fn error_rate_monotone_in_noise_scale() {
    let spec = EnsembleSpec {
        n: 4,
        snr: 1.0,
        k: 3,
        k1: 1,
        epsilon1: 0.0,
        p_override: Some(7),
    };
    let pair = NestedPair::build(&spec, 5).unwrap();
    let mut previous: Option<latcode::ErrorRateEstimate> = None;
    for sigma_z in [0.3, 0.6, 0.9, 1.3] {
        let cfg = ModLambdaConfig {
            sigma_z,
            ..ModLambdaConfig::new(1.0, Alpha::Value(1.0), 4000, 1234)
        };
        let out = run_simulation(&pair, &cfg).unwrap();
        if let Some(prev) = previous {
            let slack = (prev.ci_hi - prev.ci_lo) + (out.estimate.ci_hi - out.estimate.ci_lo);
            assert!(
                out.estimate.p_hat + slack >= prev.p_hat,
                "p_hat must not drop as noise grows: {} -> {}",
                prev.p_hat,
                out.estimate.p_hat
            );
        }
        previous = Some(out.estimate);
    }
}

#[test]
fn nn_decoder_dominates_bounded_distance() {
    // Whenever the bounded-distance decoder returns a unique correct leader,
    // the nearest-neighbor coset decoder is correct on the same input.
    let pair = pair_n8(21);
    let noise = NoiseSampler::gaussian_unit()
        .calibrate(8, 1000, Substream::new(4, label::NOISE), DEFAULT_BUDGET)
        .unwrap();
    let sigma2 = 0.35;
    let scaled = noise.scaled_to(sigma2);
    let msg = Substream::new(6, label::MESSAGE);
    let nz = Substream::new(6, label::NOISE);
    let mut bd_unique = 0u64;
    for i in 0..800u64 {
        let m = msg.rng(i).random::<u128>() % pair.message_count();
        let t = pair.leader_for_message(m, DEFAULT_BUDGET).unwrap();
        let z = scaled.sample(&mut nz.rng(i));
        let t_real = pair.coarse().point_real(&t);
        let y: Vec<f64> = t_real.iter().zip(&z).map(|(a, b)| a + b).collect();
        for factor in [0.8, 1.0, 1.2] {
            let r = factor * (8.0 * sigma2).sqrt();
            if let BdOutcome::Unique(leader) =
                bounded_distance_decode(&y, &pair, r, DEFAULT_BUDGET).unwrap()
            {
                if pair.coset_equal(&leader, &t) {
                    bd_unique += 1;
                    let nn = coset_decode(&y, &pair, DEFAULT_BUDGET).unwrap();
                    assert!(
                        pair.coset_equal(&nn, &t),
                        "trial {i}: BD decoded correctly but NN failed"
                    );
                }
            }
        }
    }
    assert!(bd_unique > 100, "dominance check needs informative trials");
}
