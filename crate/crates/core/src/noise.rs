//! Noise families used by the ergodicity and decoding experiments: i.i.d.
//! Gaussian, i.i.d. uniform, Voronoi dithers, and linear mixtures of a noise
//! term with one or more independent dithers.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::rng::Substream;

/// Sampler description as it appears in configs. Voronoi second moments have
/// no closed form, so samplers are calibrated once into a [`CalibratedNoise`]
/// that caches the Monte Carlo estimate per lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseSampler {
    /// i.i.d. N(0, sigma2) per coordinate.
    GaussianIid { sigma2: f64 },
    /// i.i.d. uniform on [-width/2, width/2) per coordinate.
    UniformIid { width: f64 },
    /// Uniform over the Voronoi region of a lattice.
    VoronoiDither { lattice: Lattice },
    /// alpha N + sum_k beta_k U_k with independent dithers.
    Mixture {
        alpha: f64,
        noise: Box<NoiseSampler>,
        dithers: Vec<MixtureDither>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureDither {
    pub beta: f64,
    pub lattice: Lattice,
}

impl NoiseSampler {
    pub fn gaussian_unit() -> Self {
        NoiseSampler::GaussianIid { sigma2: 1.0 }
    }

    /// Unit-variance uniform noise: width sqrt(12).
    pub fn uniform_unit() -> Self {
        NoiseSampler::UniformIid {
            width: 12f64.sqrt(),
        }
    }

    /// Resolves every Voronoi second moment by Monte Carlo (`samples` draws
    /// per lattice from `stream`) and freezes the nominal per-dimension
    /// variance. For mixtures of independent terms the nominal variance is
    /// alpha^2 sigma2_N + sum beta_k^2 sigma2_{U_k}.
    pub fn calibrate(
        &self,
        n: usize,
        samples: u64,
        stream: Substream,
        budget: u64,
    ) -> Result<CalibratedNoise> {
        self.calibrate_inner(n, samples, stream, budget, &mut 0)
    }

    fn calibrate_inner(
        &self,
        n: usize,
        samples: u64,
        stream: Substream,
        budget: u64,
        lattice_counter: &mut u64,
    ) -> Result<CalibratedNoise> {
        match self {
            NoiseSampler::GaussianIid { sigma2 } => {
                if !(sigma2.is_finite() && *sigma2 >= 0.0) {
                    return Err(Error::InvalidConfig("gaussian sigma2 must be >= 0".into()));
                }
                Ok(CalibratedNoise {
                    n,
                    amp: 1.0,
                    base_sigma2: *sigma2,
                    kind: CalKind::Gaussian { sd: sigma2.sqrt() },
                })
            }
            NoiseSampler::UniformIid { width } => {
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::InvalidConfig("uniform width must be > 0".into()));
                }
                Ok(CalibratedNoise {
                    n,
                    amp: 1.0,
                    base_sigma2: width * width / 12.0,
                    kind: CalKind::Uniform { width: *width },
                })
            }
            NoiseSampler::VoronoiDither { lattice } => {
                if lattice.n() != n {
                    return Err(Error::InvalidConfig(format!(
                        "dither lattice dimension {} != {n}",
                        lattice.n()
                    )));
                }
                let idx = *lattice_counter;
                *lattice_counter += 1;
                let est = lattice.estimate_second_moment(
                    samples,
                    stream.child(&format!("dither-cal-{idx}")),
                    budget,
                )?;
                Ok(CalibratedNoise {
                    n,
                    amp: 1.0,
                    base_sigma2: est.mean,
                    kind: CalKind::Dither {
                        lattice: lattice.clone(),
                        budget,
                    },
                })
            }
            NoiseSampler::Mixture {
                alpha,
                noise,
                dithers,
            } => {
                let base = noise.calibrate_inner(n, samples, stream, budget, lattice_counter)?;
                let mut cal_dithers = Vec::with_capacity(dithers.len());
                let mut sigma2 = alpha * alpha * base.sigma2();
                for d in dithers {
                    let cal = NoiseSampler::VoronoiDither {
                        lattice: d.lattice.clone(),
                    }
                    .calibrate_inner(
                        n,
                        samples,
                        stream,
                        budget,
                        lattice_counter,
                    )?;
                    sigma2 += d.beta * d.beta * cal.sigma2();
                    cal_dithers.push((d.beta, cal));
                }
                Ok(CalibratedNoise {
                    n,
                    amp: 1.0,
                    base_sigma2: sigma2,
                    kind: CalKind::Mixture {
                        alpha: *alpha,
                        noise: Box::new(base),
                        dithers: cal_dithers,
                    },
                })
            }
        }
    }
}

/// A sampler with every component variance pinned down; `sigma2()` is the
/// nominal per-dimension second moment used for norm-ergodicity thresholds.
#[derive(Debug, Clone)]
pub struct CalibratedNoise {
    n: usize,
    amp: f64,
    base_sigma2: f64,
    kind: CalKind,
}

#[derive(Debug, Clone)]
enum CalKind {
    Gaussian {
        sd: f64,
    },
    Uniform {
        width: f64,
    },
    Dither {
        lattice: Lattice,
        budget: u64,
    },
    Mixture {
        alpha: f64,
        noise: Box<CalibratedNoise>,
        dithers: Vec<(f64, CalibratedNoise)>,
    },
}

impl CalibratedNoise {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Nominal per-dimension variance (1/n) E||Z||^2.
    pub fn sigma2(&self) -> f64 {
        self.amp * self.amp * self.base_sigma2
    }

    /// Same family, amplitude-scaled so the nominal variance becomes
    /// `target_sigma2`.
    pub fn scaled_to(&self, target_sigma2: f64) -> CalibratedNoise {
        let mut out = self.clone();
        out.amp = (target_sigma2 / self.base_sigma2).sqrt();
        out
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.add_scaled(rng, self.amp, &mut out);
        out
    }

    fn add_scaled(&self, rng: &mut impl Rng, scale: f64, out: &mut [f64]) {
        match &self.kind {
            CalKind::Gaussian { sd } => {
                for o in out.iter_mut() {
                    let g: f64 = StandardNormal.sample(rng);
                    *o += scale * sd * g;
                }
            }
            CalKind::Uniform { width } => {
                for o in out.iter_mut() {
                    *o += scale * width * (rng.random::<f64>() - 0.5);
                }
            }
            CalKind::Dither { lattice, budget } => {
                let u = lattice
                    .sample_voronoi_uniform(rng, *budget)
                    .expect("budget checked at calibration");
                for (o, ui) in out.iter_mut().zip(u) {
                    *o += scale * ui;
                }
            }
            CalKind::Mixture {
                alpha,
                noise,
                dithers,
            } => {
                noise.add_scaled(rng, scale * alpha * noise.amp, out);
                for (beta, d) in dithers {
                    d.add_scaled(rng, scale * beta * d.amp, out);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::label;

    #[test]
    fn gaussian_nominal_variance() {
        let cal = NoiseSampler::GaussianIid { sigma2: 2.5 }
            .calibrate(10, 1000, Substream::new(1, label::NOISE), 1 << 20)
            .unwrap();
        assert_eq!(cal.sigma2(), 2.5);
        let scaled = cal.scaled_to(0.4);
        assert!((scaled.sigma2() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn empirical_variance_matches_nominal() {
        let stream = Substream::new(5, label::NOISE);
        for sampler in [
            NoiseSampler::gaussian_unit(),
            NoiseSampler::uniform_unit(),
            NoiseSampler::VoronoiDither {
                lattice: Lattice::scaled_integer(16, 2.0).unwrap(),
            },
        ] {
            let cal = sampler.calibrate(16, 20_000, stream, 1 << 20).unwrap();
            let mut acc = 0.0;
            let trials = 4000u64;
            for i in 0..trials {
                let mut rng = stream.rng(i);
                let z = cal.sample(&mut rng);
                acc += z.iter().map(|v| v * v).sum::<f64>() / 16.0;
            }
            let emp = acc / trials as f64;
            assert!(
                (emp - cal.sigma2()).abs() < 0.05 * cal.sigma2(),
                "{sampler:?}: empirical {emp} vs nominal {}",
                cal.sigma2()
            );
        }
    }

    #[test]
    fn mixture_variance_is_additive() {
        // sigma2_Z = alpha^2 sigma2_N + beta^2 sigma2_U for independent terms.
        let lat = Lattice::scaled_integer(8, 1.0).unwrap();
        let sampler = NoiseSampler::Mixture {
            alpha: 0.6,
            noise: Box::new(NoiseSampler::gaussian_unit()),
            dithers: vec![MixtureDither {
                beta: 2.0,
                lattice: lat,
            }],
        };
        let stream = Substream::new(9, label::NOISE);
        let cal = sampler.calibrate(8, 50_000, stream, 1 << 20).unwrap();
        let expected = 0.36 * 1.0 + 4.0 * (1.0 / 12.0);
        assert!(
            (cal.sigma2() - expected).abs() < 0.01 * expected,
            "nominal {} vs {expected}",
            cal.sigma2()
        );

        let mut acc = 0.0;
        let trials = 20_000u64;
        for i in 0..trials {
            let mut rng = stream.rng(i);
            let z = cal.sample(&mut rng);
            acc += z.iter().map(|v| v * v).sum::<f64>() / 8.0;
        }
        let emp = acc / trials as f64;
        assert!(
            (emp - expected).abs() < 0.05 * expected,
            "empirical {emp} vs {expected}"
        );
    }

    #[test]
    fn sampler_serde_round_trip() {
        let sampler = NoiseSampler::Mixture {
            alpha: 0.5,
            noise: Box::new(NoiseSampler::gaussian_unit()),
            dithers: vec![MixtureDither {
                beta: 1.0,
                lattice: Lattice::scaled_integer(4, 1.0).unwrap(),
            }],
        };
        let json = serde_json::to_string(&sampler).unwrap();
        let back: NoiseSampler = serde_json::from_str(&json).unwrap();
        assert_eq!(sampler, back);
    }
}
