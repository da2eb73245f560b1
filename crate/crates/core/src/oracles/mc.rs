//! Monte Carlo photon counting for the unamplified twin-beam protocol.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit_interval, Error, Result};

/// Samples per independently seeded block.
pub const BLOCK: u64 = 1 << 16;
pub const MIN_SAMPLES: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Mean photons per beam before any loss.
    pub mean_photons: f64,
    pub absorption: f64,
    pub eta_p: f64,
    pub eta_d: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_photons.is_finite() && self.mean_photons > 0.0) {
            return Err(Error::InvalidParameter {
                name: "mean_photons",
                value: self.mean_photons,
                reason: "must be positive",
            });
        }
        if !(0.0..1.0).contains(&self.absorption) {
            return Err(Error::InvalidParameter {
                name: "absorption",
                value: self.absorption,
                reason: "must lie in [0, 1)",
            });
        }
        check_unit_interval("eta_p", self.eta_p)?;
        check_unit_interval("eta_d", self.eta_d)?;
        if self.samples < MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                samples: self.samples,
                min: MIN_SAMPLES,
            });
        }
        Ok(())
    }

    /// Transfer function `G = −η_d·η_p·N̄`.
    pub fn transfer(&self) -> f64 {
        -self.eta_d * self.eta_p * self.mean_photons
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub delta_a_simple: f64,
    pub delta_a_opt: f64,
    /// Standard errors of the two ΔA estimates.
    pub stderr_simple: f64,
    pub stderr_opt: f64,
    /// Sample mean of the simple estimator and its standard error.
    pub mean_simple: f64,
    pub stderr_mean: f64,
    pub k_opt: f64,
}

fn thin<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if p >= 1.0 || n == 0 {
        n
    } else {
        Binomial::new(n, p)
            .expect("probability in (0, 1)")
            .sample(rng)
    }
}

fn sample_block(cfg: &McConfig, block: u64, count: u64) -> Vec<(u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(block);
    let thermal = Geometric::new(1.0 / (cfg.mean_photons + 1.0)).expect("valid probability");
    (0..count)
        .map(|_| {
            let n = thermal.sample(&mut rng);
            let b1 = thin(&mut rng, n, cfg.eta_p);
            let b2 = thin(&mut rng, n, cfg.eta_p);
            let b1 = thin(&mut rng, b1, 1.0 - cfg.absorption);
            (thin(&mut rng, b1, cfg.eta_d), thin(&mut rng, b2, cfg.eta_d))
        })
        .collect()
}

/// Detected twin-beam counts; block `b` uses stream `b` of a ChaCha8 generator
/// seeded with `seed`, so the output does not depend on the thread count.
pub fn sample_counts(cfg: &McConfig) -> Result<Vec<(u64, u64)>> {
    cfg.validate()?;
    let blocks = cfg.samples.div_ceil(BLOCK);
    let parts: Vec<Vec<(u64, u64)>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = BLOCK.min(cfg.samples - b * BLOCK);
            sample_block(cfg, b, count)
        })
        .collect();
    Ok(parts.concat())
}

/// Standard deviation of `xs` and the standard error of that estimate, `√((m₄ − s⁴)/n)/(2s)`.
fn std_with_error(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in xs {
        let d2 = (x - mean).powi(2);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    let s = m2.sqrt();
    let se = if s > 0.0 {
        ((m4 - m2 * m2).max(0.0) / n).sqrt() / (2.0 * s)
    } else {
        0.0
    };
    (mean, s, se)
}

/// Empirical ΔA of the difference estimator and of the optimized-`k` estimator.
pub fn mc_twin_beam(cfg: &McConfig) -> Result<McResult> {
    let counts = sample_counts(cfg)?;
    let g = cfg.transfer();
    let n = counts.len() as f64;
    let m1 = counts.iter().map(|c| c.0 as f64).sum::<f64>() / n;
    let m2 = counts.iter().map(|c| c.1 as f64).sum::<f64>() / n;
    let (mut v2, mut c12) = (0.0, 0.0);
    for &(a, b) in &counts {
        let (da, db) = (a as f64 - m1, b as f64 - m2);
        v2 += db * db;
        c12 += da * db;
    }
    let k = if v2 > 0.0 { c12 / v2 } else { 1.0 };

    let simple: Vec<f64> = counts
        .iter()
        .map(|&(a, b)| (a as f64 - b as f64) / g)
        .collect();
    let opt: Vec<f64> = counts
        .iter()
        .map(|&(a, b)| (a as f64 - k * b as f64) / g)
        .collect();
    let (mean_simple, delta_a_simple, stderr_simple) = std_with_error(&simple);
    let (_, delta_a_opt, stderr_opt) = std_with_error(&opt);
    Ok(McResult {
        delta_a_simple,
        delta_a_opt,
        stderr_simple,
        stderr_opt,
        mean_simple,
        stderr_mean: delta_a_simple / n.sqrt(),
        k_opt: k,
    })
}
