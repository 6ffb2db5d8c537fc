//! `latcode simulate`: mod-Lambda error-rate runs over an
//! (snr, rate, alpha) grid, one CSV row per cell in deterministic grid
//! order.

use latcode::rng::Substream;
use latcode::{
    run_simulation, run_unshaped_simulation, EnsembleSpec, ModLambdaConfig, NestedPair, TWO_PI_E,
};
use rand::Rng;

use crate::config::{PowerReference, SimulateConfig};
use crate::csvw::{Cell, CsvTable};
use crate::error::{CliError, CliResult};

const HEADERS: [&str; 20] = [
    "n",
    "p",
    "k",
    "k1",
    "snr",
    "alpha",
    "sigma_z",
    "vnr",
    "rate_bits",
    "trials",
    "errors",
    "p_hat",
    "ci_lo",
    "ci_hi",
    "seed",
    "power",
    "power_reference",
    "gamma_rescaled",
    "shaping_loss_bits",
    "reference_rate_bits",
];

pub fn run(cfg: &SimulateConfig) -> CliResult<Vec<u8>> {
    if cfg.snr_grid.is_empty() || cfg.alpha_grid.is_empty() || cfg.rate_rows.is_empty() {
        return Err(CliError::Config("empty sweep grid".into()));
    }
    for &(k, k1) in &cfg.rate_rows {
        if cfg.unshaped && k1 != 0 {
            return Err(CliError::Config(format!(
                "unshaped sweep requires k1 = 0, got ({k}, {k1})"
            )));
        }
        if !cfg.unshaped && k1 == 0 {
            return Err(CliError::Config(format!(
                "shaped sweep requires k1 >= 1, got ({k}, {k1})"
            )));
        }
    }

    let pair_seeds = Substream::new(cfg.seed, "pair");
    let sim_seeds = Substream::new(cfg.seed, "sim");
    let mut table = CsvTable::new(&HEADERS);
    let mut cell_idx = 0u64;
    let mut pair_idx = 0u64;

    for &snr in &cfg.snr_grid {
        for &(k, k1) in &cfg.rate_rows {
            let pair_seed: u64 = pair_seeds.rng(pair_idx).random();
            pair_idx += 1;
            let pair = if cfg.unshaped {
                NestedPair::build_unshaped(cfg.n, snr, k, cfg.p_override, pair_seed)?
            } else {
                let spec = EnsembleSpec {
                    n: cfg.n,
                    snr,
                    k,
                    k1,
                    epsilon1: 0.0,
                    p_override: cfg.p_override,
                };
                NestedPair::build(&spec, pair_seed)?
            };
            let pair = if cfg.rescale_gamma {
                pair.rescale_to_power(
                    snr,
                    cfg.calibration_samples,
                    Substream::new(pair_seed, "rescale"),
                    cfg.budget,
                )?
                .0
            } else {
                pair
            };
            let power = match cfg.power_reference {
                PowerReference::Nominal => snr,
                PowerReference::Calibrated => {
                    pair.coarse()
                        .estimate_second_moment(
                            cfg.calibration_samples,
                            Substream::new(pair_seed, "power-cal"),
                            cfg.budget,
                        )?
                        .mean
                }
            };

            for &alpha in &cfg.alpha_grid {
                let sim_seed: u64 = sim_seeds.rng(cell_idx).random();
                cell_idx += 1;
                let run_cfg = ModLambdaConfig {
                    snr,
                    alpha,
                    noise: cfg.noise.clone(),
                    sigma_z: cfg.sigma_z,
                    trials: cfg.trials,
                    seed: sim_seed,
                    budget: cfg.budget,
                    early_stop_ci_width: cfg.early_stop_ci_width,
                };
                let (outcome, shaping) = if cfg.unshaped {
                    let report = run_unshaped_simulation(&pair, &run_cfg)?;
                    (
                        report.outcome,
                        Some((report.shaping_loss_bits, report.reference_rate_bits)),
                    )
                } else {
                    (run_simulation(&pair, &run_cfg)?, None)
                };
                let a = outcome.alpha;
                let sigma2_eff = a * a * cfg.sigma_z * cfg.sigma_z + (1.0 - a) * (1.0 - a) * power;
                let vnr = pair.fine().volume_2n()? / (TWO_PI_E * sigma2_eff);
                table.row(&[
                    Cell::U64(cfg.n as u64),
                    Cell::U64(pair.p()),
                    Cell::U64(k as u64),
                    Cell::U64(k1 as u64),
                    Cell::F64(snr),
                    Cell::F64(a),
                    Cell::F64(cfg.sigma_z),
                    Cell::F64(vnr),
                    Cell::F64(pair.rate_bits()),
                    Cell::U64(outcome.estimate.trials),
                    Cell::U64(outcome.estimate.errors),
                    Cell::F64(outcome.estimate.p_hat),
                    Cell::F64(outcome.estimate.ci_lo),
                    Cell::F64(outcome.estimate.ci_hi),
                    Cell::U64(sim_seed),
                    Cell::F64(power),
                    match cfg.power_reference {
                        PowerReference::Calibrated => Cell::Str("calibrated"),
                        PowerReference::Nominal => Cell::Str("nominal"),
                    },
                    Cell::Bool(pair.gamma_rescaled()),
                    shaping.map_or(Cell::Empty, |(l, _)| Cell::F64(l)),
                    shaping.map_or(Cell::Empty, |(_, r)| Cell::F64(r)),
                ]);
            }
        }
    }
    Ok(table.into_bytes())
}
