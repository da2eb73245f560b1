//! Oracle and property suites run by `subshot validate`.

use std::f64::consts::FRAC_PI_4;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gaussian::PhotonStats;
use crate::oracles::{
    amplifier_equivalence_distance, mc_twin_beam, select_cutoff, FockState, Generator, McConfig,
};
use crate::schemes::{
    asymptotic_squeezed, asymptotic_twin, evaluate, optimal_squeeze_no_amp,
    optimal_squeeze_strong_amp, squeezed_state, twin_state, SchemeConfig, SchemeKind,
    SqueezedAsymptotic, TwinAsymptotic,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Fock,
    Mc,
    Asymptotics,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }

    fn at_least(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            passed: measured > tolerance,
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Check>> {
    Ok(match suite {
        Suite::Fock => fock_suite(seed)?,
        Suite::Mc => mc_suite(seed)?,
        Suite::Asymptotics => asymptotics_suite()?,
        Suite::All => {
            let mut all = fock_suite(seed)?;
            all.extend(mc_suite(seed)?);
            all.extend(asymptotics_suite()?);
            all
        }
    })
}

/// Largest relative deviation over the five fields.
pub fn stats_deviation(a: &PhotonStats, b: &PhotonStats) -> f64 {
    let pairs = [
        (a.mean1, b.mean1),
        (a.mean2, b.mean2),
        (a.var1, b.var1),
        (a.var2, b.var2),
        (a.cov12, b.cov12),
    ];
    pairs
        .iter()
        .map(|&(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-300))
        .fold(0.0, f64::max)
}

/// Twin-beam chain on the Fock simulator, detectors included as losses.
pub fn fock_twin_stats(cfg: &SchemeConfig, cutoff: usize) -> Result<PhotonStats> {
    let r = cfg.input_gain();
    let st = FockState::vacuum(2, cutoff)?
        .apply_two_mode_squeezer(r)?
        .apply_loss(0, cfg.eta_p)?
        .apply_loss(1, cfg.eta_p)?
        .apply_loss(0, 1.0 - cfg.absorption)?
        .apply_unitary(
            &Generator::new()
                .squeezer(0, cfg.gain, 0.0)
                .squeezer(1, cfg.gain, 0.0),
        )?
        .apply_loss(0, cfg.eta_d)?
        .apply_loss(1, cfg.eta_d)?;
    Ok(st.photon_moments())
}

/// Squeezed-coherent chain on the Fock simulator.
pub fn fock_squeezed_stats(cfg: &SchemeConfig, cutoff: usize) -> Result<PhotonStats> {
    let alpha = cfg.coherent_amplitude_sq().max(0.0).sqrt();
    let st = FockState::vacuum(1, cutoff)?
        .apply_single_mode_squeezer(0, -cfg.r)?
        .apply_loss(0, cfg.eta_p)?
        .apply_displacement(0, alpha)?
        .apply_loss(0, 1.0 - cfg.absorption)?
        .apply_single_mode_squeezer(0, cfg.gain)?
        .apply_loss(0, cfg.eta_d)?;
    Ok(st.photon_moments())
}

/// Random small configurations for the cross-engine comparison: half twin, half squeezed.
pub fn small_configs(count: usize, seed: u64) -> Vec<SchemeConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let absorption = rng.random_range(0.0..0.5);
            let eta_p = rng.random_range(0.5..=1.0);
            let eta_d = rng.random_range(0.5..=1.0);
            if i % 2 == 0 {
                let r: f64 = rng.random_range(0.1..0.35);
                let gain = rng.random_range(0.0..0.25);
                SchemeConfig::twin(
                    SchemeKind::TwinOptimizedK,
                    eta_p * r.sinh().powi(2),
                    absorption,
                    eta_p,
                    eta_d,
                    gain,
                )
            } else {
                let n: f64 = rng.random_range(0.5..2.0);
                let r_max = (n / eta_p).sqrt().asinh();
                let r = rng.random_range(0.0..r_max.min(0.6));
                let gain = rng.random_range(0.0..0.3);
                SchemeConfig::squeezed(n, absorption, eta_p, eta_d, r, gain)
            }
            .expect("sampled inside the valid ranges")
        })
        .collect()
}

/// Truncation for a configuration, from the largest single-mode mean photon number
/// the chain reaches (after amplification, before detection). Twin beams carry photons
/// in pairs, so their total-photon cutoff is doubled like an amplified one.
pub fn cutoff_for(cfg: &SchemeConfig) -> Result<usize> {
    let peak = if cfg.kind.is_twin() {
        let m = twin_state(cfg)?.photon_moments(0, 1)?;
        m.mean1.max(m.mean2)
    } else {
        squeezed_state(cfg)?.photon_moments(0, 0)?.mean1
    };
    Ok(select_cutoff(peak, cfg.gain > 0.0 || cfg.kind.is_twin()))
}

/// Gaussian-engine and Fock-simulator statistics for one configuration.
pub fn cross_check(cfg: &SchemeConfig) -> Result<(PhotonStats, PhotonStats)> {
    let cutoff = cutoff_for(cfg)?;
    if cfg.kind.is_twin() {
        let g = twin_state(cfg)?.photon_moments(0, 1)?.detected(cfg.eta_d)?;
        Ok((g, fock_twin_stats(cfg, cutoff)?))
    } else {
        let g = squeezed_state(cfg)?
            .photon_moments(0, 0)?
            .detected_single(cfg.eta_d)?;
        Ok((g, fock_squeezed_stats(cfg, cutoff)?))
    }
}

pub const AMPLIFIER_GAINS: [f64; 3] = [0.1, 0.3, 0.5];
pub const AMPLIFIER_CUTOFF: usize = 48;

fn fock_suite(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (i, cfg) in small_configs(20, seed).iter().enumerate() {
        let (g, f) = cross_check(cfg)?;
        checks.push(Check::at_most(
            format!("fock moments #{i:02} ({})", cfg.kind),
            stats_deviation(&g, &f),
            1e-6,
        ));
    }
    for gain in AMPLIFIER_GAINS {
        checks.push(Check::at_most(
            format!("amplifier equivalence, gain {gain}"),
            amplifier_equivalence_distance(gain, AMPLIFIER_CUTOFF, 0.0)?,
            1e-9,
        ));
    }
    checks.push(Check::at_least(
        "amplifier equivalence control, pi/4 offset",
        amplifier_equivalence_distance(0.5, AMPLIFIER_CUTOFF, FRAC_PI_4)?,
        1e-3,
    ));
    Ok(checks)
}

pub fn reference_mc_config(seed: u64) -> McConfig {
    McConfig {
        mean_photons: 5.0,
        absorption: 0.1,
        eta_p: 0.9,
        eta_d: 0.9,
        samples: 1_000_000,
        seed,
    }
}

fn mc_suite(seed: u64) -> Result<Vec<Check>> {
    let mc = reference_mc_config(seed);
    let res = mc_twin_beam(&mc)?;
    let n = mc.eta_p * mc.mean_photons;
    let exact = |kind| -> Result<f64> {
        Ok(evaluate(&SchemeConfig::twin(
            kind,
            n,
            mc.absorption,
            mc.eta_p,
            mc.eta_d,
            0.0,
        )?)?
        .delta_a)
    };
    let simple = exact(SchemeKind::TwinSimple)?;
    let opt = exact(SchemeKind::TwinOptimizedK)?;
    Ok(vec![
        Check::at_most(
            "mc simple estimator, standard errors from exact",
            (res.delta_a_simple - simple).abs() / res.stderr_simple,
            3.0,
        ),
        Check::at_most(
            "mc optimized estimator, standard errors from exact",
            (res.delta_a_opt - opt).abs() / res.stderr_opt,
            3.0,
        ),
        Check::at_most(
            "mc simple estimator bias, standard errors",
            (res.mean_simple - mc.absorption).abs() / res.stderr_mean,
            3.0,
        ),
    ])
}

/// Grid over which the closed forms are compared with the exact evaluation.
pub struct RegimeGrid {
    pub absorption: Vec<f64>,
    pub n: Vec<f64>,
    /// `(ε_p², ε_d²)` pairs.
    pub inefficiency: Vec<(f64, f64)>,
}

impl Default for RegimeGrid {
    fn default() -> Self {
        Self {
            absorption: vec![1e-6, 1e-5, 1e-4],
            n: vec![1e6, 1e7, 1e8],
            inefficiency: vec![
                (0.0, 0.0),
                (1e-3, 0.0),
                (0.0, 1e-3),
                (5e-3, 5e-3),
                (1e-2, 0.0),
                (0.0, 1e-2),
            ],
        }
    }
}

/// Gains for the twin strong-amplification forms, `e^{2R} ≥ 100`.
pub fn twin_strong_gains() -> Vec<f64> {
    vec![100f64.ln() / 2.0, 3.0, 4.0, 6.0]
}

/// Gains for the squeezed strong-amplification forms, `100 ≤ e^{2R}` and `e^{4R} ≤ 4N/100`.
pub fn squeezed_strong_gains(n: f64) -> Vec<f64> {
    let lo = 100f64.ln() / 2.0;
    let hi = (4.0 * n / 100.0).ln() / 4.0;
    (0..3).map(|i| lo + (hi - lo) * i as f64 / 2.0).collect()
}

fn rel(exact: f64, approx: f64) -> f64 {
    (exact / approx - 1.0).abs()
}

/// Worst relative deviation of each closed form on the regime grid, keyed by formula name.
pub fn asymptotic_deviations(grid: &RegimeGrid) -> Result<Vec<(&'static str, f64)>> {
    let mut worst = [
        ("twin simple, R = 0", 0.0),
        ("twin simple, strong R", 0.0),
        ("twin optimized, R = 0", 0.0),
        ("twin optimized, strong R", 0.0),
        ("squeezed, R = 0, optimal r", 0.0),
        ("squeezed, strong R", 0.0),
        ("squeezed, strong R, optimal r", 0.0),
    ];
    let mut bump = |slot: usize, v: f64| worst[slot].1 = f64::max(worst[slot].1, v);
    for &a in &grid.absorption {
        for &n in &grid.n {
            for &(ep2, ed2) in &grid.inefficiency {
                let (eta_p, eta_d) = (1.0 / (1.0 + ep2), 1.0 / (1.0 + ed2));
                let twin = |kind, gain| SchemeConfig::twin(kind, n, a, eta_p, eta_d, gain);

                for (slot, kind, variant) in [
                    (0, SchemeKind::TwinSimple, TwinAsymptotic::Simple0),
                    (2, SchemeKind::TwinOptimizedK, TwinAsymptotic::Opt0),
                ] {
                    let cfg = twin(kind, 0.0)?;
                    bump(
                        slot,
                        rel(
                            evaluate(&cfg)?.delta_a.powi(2),
                            asymptotic_twin(&cfg, variant).delta_a2,
                        ),
                    );
                }
                for gain in twin_strong_gains() {
                    for (slot, kind, variant) in [
                        (1, SchemeKind::TwinSimple, TwinAsymptotic::SimpleR),
                        (3, SchemeKind::TwinOptimizedK, TwinAsymptotic::OptR),
                    ] {
                        let cfg = twin(kind, gain)?;
                        bump(
                            slot,
                            rel(
                                evaluate(&cfg)?.delta_a.powi(2),
                                asymptotic_twin(&cfg, variant).delta_a2,
                            ),
                        );
                    }
                }

                let cfg =
                    SchemeConfig::squeezed(n, a, eta_p, eta_d, optimal_squeeze_no_amp(n), 0.0)?;
                let exact = evaluate(&cfg)?.delta_a.powi(2);
                bump(
                    4,
                    rel(
                        exact,
                        asymptotic_squeezed(&cfg, SqueezedAsymptotic::OptNoAmp)?.delta_a2,
                    ),
                );

                for gain in squeezed_strong_gains(n) {
                    let r = optimal_squeeze_strong_amp(n, gain);
                    let cfg = SchemeConfig::squeezed(n, a, eta_p, eta_d, r, gain)?;
                    let exact = evaluate(&cfg)?.delta_a.powi(2);
                    bump(
                        5,
                        rel(
                            exact,
                            asymptotic_squeezed(&cfg, SqueezedAsymptotic::StrongAmp)?.delta_a2,
                        ),
                    );
                    bump(
                        6,
                        rel(
                            exact,
                            asymptotic_squeezed(&cfg, SqueezedAsymptotic::OptStrongAmp)?.delta_a2,
                        ),
                    );
                }
            }
        }
    }
    Ok(worst.to_vec())
}

fn asymptotics_suite() -> Result<Vec<Check>> {
    Ok(asymptotic_deviations(&RegimeGrid::default())?
        .into_iter()
        .map(|(name, dev)| Check::at_most(format!("asymptotic {name}"), dev, 0.05))
        .collect())
}
