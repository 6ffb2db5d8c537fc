//! Random Construction A nested lattice codes and the mod-Lambda
//! transmission scheme over additive noise channels.
//!
//! The crate builds the ensemble (a random linear code over Z_p, prefixes of
//! its generator rows lifted to coarse-in-fine lattice pairs and chains),
//! runs exact nearest-neighbor coset decoding by coset enumeration, and
//! provides the Monte Carlo harness that checks the ensemble's quantization
//! and coding goodness empirically: NSM estimates, semi norm-ergodicity of
//! dithers and mixtures, covering distance, impersonation events, and error
//! rates against the volume-to-noise ratio.
//!
//! All randomness flows from a single 64-bit seed through named substreams
//! (see [`rng`]), so every experiment replays bit-exactly at any worker
//! count.

pub mod ball;
pub mod ensemble;
pub mod error;
pub mod goodness;
pub mod lattice;
pub mod modlam;
pub mod noise;
pub mod rng;
pub mod stats;
pub mod zp;

pub use ball::{
    ball_second_moment, count_integer_points_in_ball, effective_radius, grid_sphere_bounds,
    volume_unit_ball,
};
pub use ensemble::{gamma_for, k1_for, vnr, EnsembleSpec, NestedChain, NestedPair, TWO_PI_E};
pub use error::{Error, Result};
pub use goodness::{
    bounded_distance_decode, covering_distance, covering_success_probability,
    dither_ergodicity_report, ensemble_nsm_sweep, exceedance_test, impersonation_probability,
    pe_vs_vnr_sweep, BdOutcome, DitherReport, EnsembleReport, ExceedanceEstimate, PeVsVnrRow,
};
pub use lattice::{Lattice, LatticeKind, LatticePoint, DEFAULT_BUDGET};
pub use modlam::{
    coset_decode, effective_noise_variance, encode_tx, mmse_alpha, receive, run_simulation,
    run_trials, run_unshaped_simulation, shaping_loss_bits, Alpha, ModLambdaConfig, NoiseKind,
    SimulationOutcome, TrialRecord, UnshapedReport,
};
pub use noise::{CalibratedNoise, MixtureDither, NoiseSampler};
pub use rng::Substream;
pub use stats::{clopper_pearson, ErrorRateEstimate, MomentEstimate};
pub use zp::{is_prime, prime_for_dimension, Codeword, LinearCode, PrimeModulus};
