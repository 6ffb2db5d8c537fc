//! `latcode build`: construct a nested pair or chain and write it as JSON.

use latcode::rng::Substream;
use latcode::{k1_for, EnsembleSpec, NestedChain, NestedPair};

use crate::config::BuildConfig;
use crate::error::{CliError, CliResult};

pub fn run(cfg: &BuildConfig) -> CliResult<Vec<u8>> {
    if let Some(rows) = &cfg.chain_rows {
        if cfg.unshaped {
            return Err(CliError::Config(
                "chain_rows cannot be combined with unshaped".into(),
            ));
        }
        if rows.last() != Some(&cfg.k) {
            return Err(CliError::Config(format!(
                "k={} must equal the last chain row count {rows:?}",
                cfg.k
            )));
        }
        let chain = NestedChain::build(cfg.n, cfg.snr, rows, cfg.p_override, cfg.seed)?;
        let mut bytes = serde_json::to_vec_pretty(&chain)?;
        bytes.push(b'\n');
        return Ok(bytes);
    }

    let pair = if cfg.unshaped {
        if cfg.k1.is_some_and(|k1| k1 != 0) {
            return Err(CliError::Config(
                "unshaped build requires k1 = 0 or omitted".into(),
            ));
        }
        NestedPair::build_unshaped(cfg.n, cfg.snr, cfg.k, cfg.p_override, cfg.seed)?
    } else {
        let spec = EnsembleSpec {
            n: cfg.n,
            snr: cfg.snr,
            k: cfg.k,
            k1: match cfg.k1 {
                Some(k1) => k1,
                None => {
                    let p = match cfg.p_override {
                        Some(v) => latcode::PrimeModulus::new(v)?,
                        None => latcode::prime_for_dimension(cfg.n as u64)?,
                    };
                    k1_for(cfg.n, p, cfg.epsilon1)
                }
            },
            epsilon1: cfg.epsilon1,
            p_override: cfg.p_override,
        };
        NestedPair::build(&spec, cfg.seed)?
    };

    let pair = if cfg.rescale_gamma {
        let (rescaled, _est) = pair.rescale_to_power(
            cfg.snr,
            cfg.rescale_samples,
            Substream::new(cfg.seed, "rescale"),
            cfg.budget,
        )?;
        rescaled
    } else {
        pair
    };

    let mut bytes = serde_json::to_vec_pretty(&pair)?;
    bytes.push(b'\n');
    Ok(bytes)
}
