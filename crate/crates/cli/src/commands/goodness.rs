//! `latcode goodness`: dispatches on the config's `check` field to the NSM
//! sweep, norm-ergodicity tests, P_e-vs-VNR sweep, or impersonation
//! probability.

use latcode::rng::{label, Substream};
use latcode::{
    ensemble_nsm_sweep, exceedance_test, impersonation_probability, pe_vs_vnr_sweep, NestedPair,
    NoiseSampler,
};
use serde_json::Value;

use crate::config::{
    GoodnessErgodicityConfig, GoodnessImpersonationConfig, GoodnessNsmConfig, GoodnessPeVsVnrConfig,
};
use crate::csvw::{Cell, CsvTable};
use crate::error::{CliError, CliResult};

/// Output path extracted per check (they share the `out` field).
pub fn out_path(value: &Value) -> CliResult<std::path::PathBuf> {
    value
        .get("out")
        .and_then(|v| v.as_str())
        .map(std::path::PathBuf::from)
        .ok_or_else(|| CliError::Config("missing out path".into()))
}

pub fn run(value: &Value) -> CliResult<Vec<u8>> {
    let check = value
        .get("check")
        .and_then(|v| v.as_str())
        .ok_or_else(|| CliError::Config("missing check field".into()))?
        .to_string();
    let mut body = value.clone();
    body.as_object_mut()
        .expect("config is an object")
        .remove("check");
    match check.as_str() {
        "nsm" => nsm(serde_json::from_value(body)?),
        "ergodicity" => ergodicity(serde_json::from_value(body)?),
        "pe-vs-vnr" => pe_vs_vnr(serde_json::from_value(body)?),
        "impersonation" => impersonation(serde_json::from_value(body)?),
        other => Err(CliError::Config(format!("unknown-check: {other}"))),
    }
}

fn nsm(cfg: GoodnessNsmConfig) -> CliResult<Vec<u8>> {
    let report = ensemble_nsm_sweep(
        &cfg.pair,
        cfg.members,
        cfg.samples,
        &cfg.delta_grid,
        cfg.seed,
        cfg.budget,
    )?;
    let mut table = CsvTable::new(&[
        "kind",
        "member",
        "full_rank",
        "nsm",
        "nsm_half_width",
        "samples",
        "delta1",
        "fraction",
    ]);
    for (i, (full, nsm)) in report.full_rank.iter().zip(&report.nsm).enumerate() {
        table.row(&[
            Cell::Str("member"),
            Cell::U64(i as u64),
            Cell::Bool(*full),
            nsm.as_ref().map_or(Cell::Empty, |g| Cell::F64(g.mean)),
            nsm.as_ref()
                .map_or(Cell::Empty, |g| Cell::F64(g.half_width_95)),
            Cell::U64(cfg.samples),
            Cell::Empty,
            Cell::Empty,
        ]);
    }
    for &(delta1, fraction) in &report.fraction_good {
        table.row(&[
            Cell::Str("fraction_good"),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::U64(cfg.samples),
            Cell::F64(delta1),
            Cell::F64(fraction),
        ]);
    }
    Ok(table.into_bytes())
}

fn ergodicity(cfg: GoodnessErgodicityConfig) -> CliResult<Vec<u8>> {
    let sampler = match (&cfg.sampler, &cfg.dither_of_pair) {
        (Some(s), None) => s.clone(),
        (None, Some(spec)) => {
            let pair = NestedPair::build(spec, cfg.pair_seed.unwrap_or(cfg.seed))?;
            NoiseSampler::VoronoiDither {
                lattice: pair.coarse().clone(),
            }
        }
        _ => {
            return Err(CliError::Config(
                "exactly one of sampler / dither_of_pair is required".into(),
            ))
        }
    };
    let noise = sampler.calibrate(
        cfg.n,
        cfg.calibration_samples,
        Substream::new(cfg.seed, "noise-cal"),
        cfg.budget,
    )?;
    let mut table = CsvTable::new(&[
        "n",
        "delta",
        "sigma2_z",
        "threshold",
        "trials",
        "exceed",
        "p_hat",
        "ci_lo",
        "ci_hi",
        "seed",
    ]);
    for &delta in &cfg.deltas {
        let est = exceedance_test(
            &noise,
            delta,
            cfg.trials,
            Substream::new(cfg.seed, label::SAMPLE),
        );
        table.row(&[
            Cell::U64(cfg.n as u64),
            Cell::F64(delta),
            Cell::F64(est.sigma2_z),
            Cell::F64(est.threshold),
            Cell::U64(est.est.trials),
            Cell::U64(est.est.errors),
            Cell::F64(est.est.p_hat),
            Cell::F64(est.est.ci_lo),
            Cell::F64(est.est.ci_hi),
            Cell::U64(cfg.seed),
        ]);
    }
    Ok(table.into_bytes())
}

fn pe_vs_vnr(cfg: GoodnessPeVsVnrConfig) -> CliResult<Vec<u8>> {
    let pair = NestedPair::build(&cfg.pair, cfg.pair_seed.unwrap_or(cfg.seed))?;
    let noise = NoiseSampler::gaussian_unit().calibrate(
        cfg.pair.n,
        1000,
        Substream::new(cfg.seed, "noise-cal"),
        cfg.budget,
    )?;
    let rows = pe_vs_vnr_sweep(
        &pair,
        &noise,
        &cfg.vnr_grid,
        cfg.trials,
        cfg.seed,
        cfg.budget,
    )?;
    let mut table = CsvTable::new(&[
        "n", "p", "k", "k1", "vnr", "sigma2_z", "trials", "errors", "p_hat", "ci_lo", "ci_hi",
        "seed",
    ]);
    for row in rows {
        table.row(&[
            Cell::U64(pair.n() as u64),
            Cell::U64(pair.p()),
            Cell::U64(pair.k() as u64),
            Cell::U64(pair.k1() as u64),
            Cell::F64(row.vnr),
            Cell::F64(row.sigma2_z),
            Cell::U64(row.pe.trials),
            Cell::U64(row.pe.errors),
            Cell::F64(row.pe.p_hat),
            Cell::F64(row.pe.ci_lo),
            Cell::F64(row.pe.ci_hi),
            Cell::U64(cfg.seed),
        ]);
    }
    Ok(table.into_bytes())
}

fn impersonation(cfg: GoodnessImpersonationConfig) -> CliResult<Vec<u8>> {
    let pair = NestedPair::build(&cfg.pair, cfg.pair_seed.unwrap_or(cfg.seed))?;
    let noise = NoiseSampler::GaussianIid {
        sigma2: cfg.sigma2_z,
    }
    .calibrate(
        cfg.pair.n,
        1000,
        Substream::new(cfg.seed, "noise-cal"),
        cfg.budget,
    )?;
    let est = impersonation_probability(
        pair.fine(),
        &noise,
        cfg.rho,
        cfg.trials,
        Substream::new(cfg.seed, label::SAMPLE),
        cfg.budget,
    )?;
    let r_z = ((1.0 + cfg.rho) * cfg.pair.n as f64 * cfg.sigma2_z).sqrt();
    let mut table = CsvTable::new(&[
        "n", "p", "k", "rho", "sigma2_z", "r_z", "trials", "hits", "p_hat", "ci_lo", "ci_hi",
        "seed",
    ]);
    table.row(&[
        Cell::U64(cfg.pair.n as u64),
        Cell::U64(pair.p()),
        Cell::U64(pair.k() as u64),
        Cell::F64(cfg.rho),
        Cell::F64(cfg.sigma2_z),
        Cell::F64(r_z),
        Cell::U64(est.trials),
        Cell::U64(est.errors),
        Cell::F64(est.p_hat),
        Cell::F64(est.ci_lo),
        Cell::F64(est.ci_hi),
        Cell::U64(cfg.seed),
    ]);
    Ok(table.into_bytes())
}
