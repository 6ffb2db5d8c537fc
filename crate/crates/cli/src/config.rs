//! Per-command experiment configurations. One JSON document per run;
//! unknown keys are rejected so a config file cannot silently drift from the
//! schema. The `--seed`, `--out`, and `--budget` flags override the
//! corresponding top-level fields.

use latcode::lattice::DEFAULT_BUDGET;
use latcode::{Alpha, EnsembleSpec, NoiseKind, NoiseSampler};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

fn default_trials() -> u64 {
    10_000
}

fn default_sigma_z() -> f64 {
    1.0
}

fn default_cal_samples() -> u64 {
    50_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildConfig {
    pub n: usize,
    pub snr: f64,
    pub k: usize,
    /// Omitted: derived from the coarse-rate condition via epsilon1.
    #[serde(default)]
    pub k1: Option<usize>,
    #[serde(default)]
    pub epsilon1: f64,
    #[serde(default)]
    pub p_override: Option<u64>,
    /// Build a chain with these row counts instead of a pair.
    #[serde(default)]
    pub chain_rows: Option<Vec<usize>>,
    /// Coarse lattice = gamma Z^n.
    #[serde(default)]
    pub unshaped: bool,
    /// Rescale gamma so the coarse second moment matches the SNR.
    #[serde(default)]
    pub rescale_gamma: bool,
    #[serde(default = "default_cal_samples")]
    pub rescale_samples: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PowerReference {
    #[default]
    Calibrated,
    Nominal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub n: usize,
    #[serde(default)]
    pub p_override: Option<u64>,
    pub snr_grid: Vec<f64>,
    pub alpha_grid: Vec<Alpha>,
    /// (k, k1) per rate point; k1 = 0 only with `unshaped`.
    pub rate_rows: Vec<(usize, usize)>,
    #[serde(default)]
    pub unshaped: bool,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_sigma_z")]
    pub sigma_z: f64,
    #[serde(default)]
    pub noise: NoiseKind,
    #[serde(default)]
    pub rescale_gamma: bool,
    #[serde(default = "default_cal_samples")]
    pub calibration_samples: u64,
    #[serde(default)]
    pub power_reference: PowerReference,
    #[serde(default)]
    pub early_stop_ci_width: Option<f64>,
    #[serde(default = "default_budget")]
    pub budget: u64,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoodnessNsmConfig {
    pub pair: EnsembleSpec,
    pub members: u64,
    #[serde(default = "default_cal_samples")]
    pub samples: u64,
    pub delta_grid: Vec<f64>,
    #[serde(default = "default_budget")]
    pub budget: u64,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoodnessErgodicityConfig {
    pub n: usize,
    /// Explicit sampler; mutually exclusive with `dither_of_pair`.
    #[serde(default)]
    pub sampler: Option<NoiseSampler>,
    /// Build this pair and test the Voronoi dither of its coarse lattice.
    #[serde(default)]
    pub dither_of_pair: Option<EnsembleSpec>,
    #[serde(default)]
    pub pair_seed: Option<u64>,
    pub deltas: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_cal_samples")]
    pub calibration_samples: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoodnessPeVsVnrConfig {
    pub pair: EnsembleSpec,
    #[serde(default)]
    pub pair_seed: Option<u64>,
    pub vnr_grid: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoodnessImpersonationConfig {
    pub pair: EnsembleSpec,
    #[serde(default)]
    pub pair_seed: Option<u64>,
    pub rho: f64,
    pub sigma2_z: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountPointsConfig {
    /// Random probe mode: dimensions, centers per dimension, center box.
    #[serde(default)]
    pub dims: Vec<usize>,
    #[serde(default)]
    pub num_centers: u64,
    #[serde(default = "default_center_half_width")]
    pub center_half_width: f64,
    /// Explicit probe mode: full center vectors.
    #[serde(default)]
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    #[serde(default = "default_budget")]
    pub budget: u64,
    pub seed: u64,
    pub out: PathBuf,
}

fn default_center_half_width() -> f64 {
    3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_config_round_trips_bit_exactly() {
        let doc = r#"{"n":4,"snr":1.5,"k":3,"k1":1,"seed":7,"out":"pair.json"}"#;
        let cfg: BuildConfig = serde_json::from_str(doc).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: BuildConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn unknown_keys_rejected() {
        let doc = r#"{"n":4,"snr":1.5,"k":3,"seed":7,"out":"p.json","bogus":1}"#;
        assert!(serde_json::from_str::<BuildConfig>(doc).is_err());
    }

    fn round_trips<T: serde::Serialize + serde::de::DeserializeOwned>(doc: &str) {
        let cfg: T = serde_json::from_str(doc).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: T = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn every_command_config_round_trips() {
        round_trips::<SimulateConfig>(
            r#"{"n":8,"p_override":5,"snr_grid":[1.0,2.5],"alpha_grid":["mmse",0.5],
                "rate_rows":[[3,1]],"trials":100,"sigma_z":0.75,"seed":7,"out":"s.csv"}"#,
        );
        round_trips::<GoodnessNsmConfig>(
            r#"{"pair":{"n":4,"snr":1.0,"k":2,"k1":1,"p_override":7},"members":5,
                "delta_grid":[0.5],"seed":1,"out":"n.csv"}"#,
        );
        round_trips::<GoodnessErgodicityConfig>(
            r#"{"n":100,"sampler":{"kind":"gaussian-iid","sigma2":1.0},"deltas":[0.1],
                "trials":100,"seed":1,"out":"e.csv"}"#,
        );
        round_trips::<GoodnessPeVsVnrConfig>(
            r#"{"pair":{"n":8,"snr":1.0,"k":4,"k1":1,"p_override":3},"vnr_grid":[1.0],
                "trials":10,"seed":1,"out":"p.csv"}"#,
        );
        round_trips::<GoodnessImpersonationConfig>(
            r#"{"pair":{"n":8,"snr":1.0,"k":4,"k1":1,"p_override":3},"rho":0.3,
                "sigma2_z":0.1,"trials":10,"seed":1,"out":"i.csv"}"#,
        );
        round_trips::<CountPointsConfig>(
            r#"{"centers":[[0.5,-1.25]],"radii":[1.0,2.0],"seed":1,"out":"c.csv"}"#,
        );
    }
}
