//! Absorption-measurement protocols: twin beams with two linear estimators and
//! a squeezed coherent probe, both optionally followed by phase-sensitive
//! amplification before detection.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bounds::{cr_coherent, EfficiencyBudget};
use crate::error::{check_unit_interval, Error, Result};
use crate::gaussian::{number_ordering_offset, GaussianChannel, GaussianState, PhotonStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Twin beams, estimator `(n₁ − n₂)/G`.
    TwinSimple,
    /// Twin beams, estimator `(n₁ − k·n₂)/G` with the variance-minimizing `k`.
    TwinOptimizedK,
    /// Amplitude-squeezed coherent probe against a strong reference.
    SqueezedCoherent,
}

impl SchemeKind {
    pub fn is_twin(self) -> bool {
        matches!(self, SchemeKind::TwinSimple | SchemeKind::TwinOptimizedK)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::TwinSimple => "twin-simple",
            SchemeKind::TwinOptimizedK => "twin-opt",
            SchemeKind::SqueezedCoherent => "squeezed",
        })
    }
}

/// Relative rounding allowance on `α² ≥ 0` at the edge of the feasible squeeze range.
const ALPHA_SLACK: f64 = 1e-12;

/// Parameters of one measurement.
///
/// `n` is the mean photon number at the object. For twin schemes the input
/// gain follows from it, `η_p·sinh²r = N`, and the `r` field is ignored.
/// For the squeezed scheme `r ≥ 0` is the amplitude-squeezing magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub n: f64,
    pub absorption: f64,
    pub eta_p: f64,
    pub eta_d: f64,
    pub r: f64,
    pub gain: f64,
}

impl SchemeConfig {
    pub fn twin(
        kind: SchemeKind,
        n: f64,
        absorption: f64,
        eta_p: f64,
        eta_d: f64,
        gain: f64,
    ) -> Result<Self> {
        let cfg = Self {
            kind,
            n,
            absorption,
            eta_p,
            eta_d,
            r: 0.0,
            gain,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn squeezed(
        n: f64,
        absorption: f64,
        eta_p: f64,
        eta_d: f64,
        r: f64,
        gain: f64,
    ) -> Result<Self> {
        let cfg = Self {
            kind: SchemeKind::SqueezedCoherent,
            n,
            absorption,
            eta_p,
            eta_d,
            r,
            gain,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n.is_finite() && self.n > 0.0) {
            return Err(Error::InvalidParameter {
                name: "N",
                value: self.n,
                reason: "mean photon number must be positive",
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
        if !(self.gain.is_finite() && self.gain >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "R",
                value: self.gain,
                reason: "amplification gain must be finite and non-negative",
            });
        }
        if self.kind == SchemeKind::SqueezedCoherent {
            if !(self.r.is_finite() && self.r >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "r",
                    value: self.r,
                    reason: "squeeze gain must be finite and non-negative",
                });
            }
            if self.coherent_amplitude_sq() < -ALPHA_SLACK * self.n {
                return Err(Error::InfeasibleConfig(format!(
                    "eta_p*sinh^2(r) = {:e} exceeds N = {:e}",
                    self.eta_p * self.r.sinh().powi(2),
                    self.n
                )));
            }
        }
        Ok(())
    }

    pub fn budget(&self) -> EfficiencyBudget {
        EfficiencyBudget {
            eta_p: self.eta_p,
            eta_d: self.eta_d,
        }
    }

    /// Input gain: derived from `N` for twin beams, the free parameter otherwise.
    pub fn input_gain(&self) -> f64 {
        if self.kind.is_twin() {
            twin_gain(self.n, self.eta_p)
        } else {
            self.r
        }
    }

    /// `α² = N − η_p·sinh²r` for the squeezed scheme.
    pub fn coherent_amplitude_sq(&self) -> f64 {
        self.n - self.eta_p * self.r.sinh().powi(2)
    }

    pub fn with_absorption(&self, absorption: f64) -> Self {
        Self {
            absorption,
            ..*self
        }
    }
}

/// `r = asinh(√(N/η_p))`.
pub fn twin_gain(n: f64, eta_p: f64) -> f64 {
    (n / eta_p).sqrt().asinh()
}

/// Largest squeeze gain that leaves a non-negative coherent amplitude.
pub fn max_squeeze(n: f64, eta_p: f64) -> f64 {
    (n / eta_p).sqrt().asinh()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub kind: SchemeKind,
    pub delta_a: f64,
    pub q: f64,
    pub transfer_g: f64,
    pub k_opt: Option<f64>,
    /// Input gain actually used.
    pub squeeze: f64,
    /// Detected photon-number statistics (mode 1 = object beam).
    pub detected: PhotonStats,
    /// Variance of the detected-count combination the estimator is built on.
    pub estimator_variance: f64,
}

impl UncertaintyReport {
    /// ΔA from the embedded estimator variance.
    pub fn recomputed_delta_a(&self) -> f64 {
        self.estimator_variance.max(0.0).sqrt() / self.transfer_g.abs()
    }

    /// ΔA recomputed from the embedded photon-number statistics. Loses accuracy
    /// when the two beams are almost perfectly correlated.
    pub fn delta_a_from_stats(&self) -> f64 {
        let s = &self.detected;
        let num = match self.kind {
            SchemeKind::TwinSimple => s.var1 + s.var2 - 2.0 * s.cov12,
            SchemeKind::TwinOptimizedK => s.var1 - s.cov12 * s.cov12 / s.var2,
            SchemeKind::SqueezedCoherent => s.var1,
        };
        (num.max(0.0) / (self.transfer_g * self.transfer_g)).sqrt()
    }
}

fn chain(
    state: GaussianState,
    channel: &GaussianChannel,
    modes: &[usize],
    phase: f64,
) -> Result<GaussianState> {
    if phase == 0.0 {
        state.apply(channel, modes)
    } else {
        state.apply(&channel.rotated(phase), modes)
    }
}

/// Twin-beam state just before detection, every element conjugated by a common rotation.
#[cfg(test)]
fn twin_state_rotated(cfg: &SchemeConfig, phase: f64) -> Result<GaussianState> {
    let r = twin_gain(cfg.n, cfg.eta_p);
    let prep = GaussianChannel::loss(cfg.eta_p)?;
    let amp = GaussianChannel::single_mode_squeezer(cfg.gain);
    let mut st = GaussianState::vacuum(2)?;
    st = chain(st, &GaussianChannel::two_mode_squeezer(r), &[0, 1], phase)?;
    st = chain(st, &prep, &[0], phase)?;
    st = chain(st, &prep, &[1], phase)?;
    st = chain(
        st,
        &GaussianChannel::loss(1.0 - cfg.absorption)?,
        &[0],
        phase,
    )?;
    st = chain(st, &amp, &[0], phase)?;
    chain(st, &amp, &[1], phase)
}

/// Orthogonal change to sum and difference modes, `x± = (x₁ ± x₂)/√2`; its own inverse.
fn sum_difference_basis() -> Result<GaussianChannel> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let x = DMatrix::from_fn(4, 4, |i, j| match (i % 2 == j % 2, i >= 2 && j >= 2) {
        (false, _) => 0.0,
        (true, true) => -h,
        (true, false) => h,
    });
    GaussianChannel::new(x, DMatrix::zeros(4, 4), DVector::zeros(4))
}

/// Loss of power transmissivity `1 − a` on beam 1 only, written in the sum/difference basis.
fn object_loss_in_sum_difference(a: f64) -> Result<GaussianChannel> {
    let t = (1.0 - a).sqrt();
    let (same, cross) = ((t + 1.0) / 2.0, -a / (1.0 + t) / 2.0);
    let x = DMatrix::from_fn(4, 4, |i, j| match (i % 2 == j % 2, i / 2 == j / 2) {
        (false, _) => 0.0,
        (true, true) => same,
        (true, false) => cross,
    });
    let y = DMatrix::from_fn(4, 4, |i, j| if i % 2 == j % 2 { a / 4.0 } else { 0.0 });
    GaussianChannel::new(x, y, DVector::zeros(4))
}

/// Twin chain in the sum/difference basis. The NOPA factorizes there into two opposite
/// single-mode squeezers, so the near-cancelling difference mode is carried without
/// subtracting large covariance entries.
fn twin_state_sum_difference(cfg: &SchemeConfig) -> Result<GaussianState> {
    let r = twin_gain(cfg.n, cfg.eta_p);
    let prep = GaussianChannel::loss(cfg.eta_p)?;
    let amp = GaussianChannel::single_mode_squeezer(cfg.gain);
    let mut st = GaussianState::vacuum(2)?;
    st = st.apply(&GaussianChannel::single_mode_squeezer(r), &[0])?;
    st = st.apply(&GaussianChannel::single_mode_squeezer(-r), &[1])?;
    st = st.apply(&prep, &[0])?.apply(&prep, &[1])?;
    st = st.apply(&object_loss_in_sum_difference(cfg.absorption)?, &[0, 1])?;
    st.apply(&amp, &[0])?.apply(&amp, &[1])
}

/// Twin beams from a NOPA, preparation loss on both, the object on beam 1, amplification on both.
pub fn twin_state(cfg: &SchemeConfig) -> Result<GaussianState> {
    twin_state_sum_difference(cfg)?.apply(&sum_difference_basis()?, &[0, 1])
}

/// Squeezed coherent probe after the object and the output amplifier.
pub(crate) fn squeezed_state_rotated(cfg: &SchemeConfig, phase: f64) -> Result<GaussianState> {
    let alpha = cfg.coherent_amplitude_sq().max(0.0).sqrt();
    let mut st = GaussianState::vacuum(1)?;
    st = chain(
        st,
        &GaussianChannel::single_mode_squeezer(-cfg.r),
        &[0],
        phase,
    )?;
    st = chain(st, &GaussianChannel::loss(cfg.eta_p)?, &[0], phase)?;
    if phase == 0.0 {
        st = st.displace(0, alpha)?;
    } else {
        st = st.apply(&GaussianChannel::phase_shift(-phase), &[0])?;
        st = st.displace(0, alpha)?;
        st = st.apply(&GaussianChannel::phase_shift(phase), &[0])?;
    }
    st = chain(
        st,
        &GaussianChannel::loss(1.0 - cfg.absorption)?,
        &[0],
        phase,
    )?;
    chain(
        st,
        &GaussianChannel::single_mode_squeezer(cfg.gain),
        &[0],
        phase,
    )
}

pub fn squeezed_state(cfg: &SchemeConfig) -> Result<GaussianState> {
    squeezed_state_rotated(cfg, 0.0)
}

/// Detected mean photon number of the object beam.
pub fn detected_mean(cfg: &SchemeConfig) -> Result<f64> {
    cfg.validate()?;
    let stats = if cfg.kind.is_twin() {
        twin_state(cfg)?.photon_moments(0, 1)?
    } else {
        squeezed_state(cfg)?.photon_moments(0, 0)?
    };
    Ok(cfg.eta_d * stats.mean1)
}

/// Analytic transfer function `G = ∂⟨n_d1⟩/∂𝒜`.
pub fn transfer_function(cfg: &SchemeConfig) -> f64 {
    let big_r = cfg.gain;
    if cfg.kind.is_twin() {
        -cfg.eta_d * cfg.n * (2.0 * big_r).cosh()
    } else {
        let alpha2 = cfg.coherent_amplitude_sq();
        cfg.eta_d
            * (-alpha2 * (2.0 * big_r).exp() - cfg.eta_p * (big_r - cfg.r).sinh().powi(2)
                + cfg.eta_p * big_r.sinh().powi(2))
    }
}

fn finish(
    cfg: &SchemeConfig,
    variance: f64,
    g: f64,
    k_opt: Option<f64>,
    detected: PhotonStats,
) -> Result<UncertaintyReport> {
    let delta_a = variance.max(0.0).sqrt() / g.abs();
    let q = if delta_a > 0.0 {
        cr_coherent(cfg.n, cfg.absorption, &cfg.budget())? / delta_a
    } else {
        f64::INFINITY
    };
    Ok(UncertaintyReport {
        kind: cfg.kind,
        delta_a,
        q,
        transfer_g: g,
        k_opt,
        squeeze: cfg.input_gain(),
        detected,
        estimator_variance: variance,
    })
}

/// Detected statistics and `Var(n_d1 − k·n_d2)` for the twin chain.
fn twin_detected(cfg: &SchemeConfig, k: Option<f64>) -> Result<(PhotonStats, f64, f64)> {
    let pm = twin_state_sum_difference(cfg)?;
    let raw = pm
        .apply(&sum_difference_basis()?, &[0, 1])?
        .photon_moments(0, 1)?;
    let s = raw.detected(cfg.eta_d)?;
    let k = match k {
        Some(k) => k,
        None if s.var2 > 0.0 => s.cov12 / s.var2,
        None => {
            return Err(Error::DegenerateEstimator(
                "reference-beam variance vanishes",
            ))
        }
    };
    let eta = cfg.eta_d;
    let var = eta * eta * difference_variance_from_sum_difference(&pm, k)?
        + eta * (1.0 - eta) * (raw.mean1 + k * k * raw.mean2);
    Ok((s, k, var))
}

/// `Var(n₁ − k·n₂)` of a two-mode state given in the sum/difference basis.
fn difference_variance_from_sum_difference(pm: &GaussianState, k: f64) -> Result<f64> {
    if k <= 0.0 {
        return pm
            .apply(&sum_difference_basis()?, &[0, 1])?
            .number_difference_variance(0, 1, k);
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s = k.sqrt();
    let (small, large) = ((1.0 - k) / (1.0 + s) * h, (1.0 + s) * h);
    let factors: Vec<_> = (0..2)
        .map(|q| {
            let mut u = DVector::zeros(4);
            let mut v = DVector::zeros(4);
            u[q] = small;
            u[2 + q] = large;
            v[q] = large;
            v[2 + q] = small;
            (u, v)
        })
        .collect();
    Ok(pm.product_sum_variance(&factors)? - number_ordering_offset(k))
}

fn expect_kind(cfg: &SchemeConfig, kind: SchemeKind) -> Result<()> {
    if cfg.kind == kind {
        Ok(())
    } else {
        Err(Error::InfeasibleConfig(format!(
            "expected a {kind} configuration, got {}",
            cfg.kind
        )))
    }
}

/// Twin beams with the difference estimator.
pub fn twin_uncertainty_simple(cfg: &SchemeConfig) -> Result<UncertaintyReport> {
    expect_kind(cfg, SchemeKind::TwinSimple)?;
    cfg.validate()?;
    let (s, _, var) = twin_detected(cfg, Some(1.0))?;
    finish(cfg, var, transfer_function(cfg), None, s)
}

/// Twin beams with `k = cov(n_d1, n_d2)/var(n_d2)`.
pub fn twin_uncertainty_optimized(cfg: &SchemeConfig) -> Result<UncertaintyReport> {
    expect_kind(cfg, SchemeKind::TwinOptimizedK)?;
    cfg.validate()?;
    let (s, k, var) = twin_detected(cfg, None)?;
    finish(cfg, var, transfer_function(cfg), Some(k), s)
}

/// Squeezed coherent probe; only the signal beam's noise is counted.
pub fn squeezed_coherent_uncertainty(cfg: &SchemeConfig) -> Result<UncertaintyReport> {
    expect_kind(cfg, SchemeKind::SqueezedCoherent)?;
    cfg.validate()?;
    let g = transfer_function(cfg);
    if g == 0.0 {
        return Err(Error::DegenerateTransfer);
    }
    let s = squeezed_state(cfg)?
        .photon_moments(0, 0)?
        .detected_single(cfg.eta_d)?;
    finish(cfg, s.var1, g, None, s)
}

/// Dispatch on `cfg.kind`.
pub fn evaluate(cfg: &SchemeConfig) -> Result<UncertaintyReport> {
    match cfg.kind {
        SchemeKind::TwinSimple => twin_uncertainty_simple(cfg),
        SchemeKind::TwinOptimizedK => twin_uncertainty_optimized(cfg),
        SchemeKind::SqueezedCoherent => squeezed_coherent_uncertainty(cfg),
    }
}

/// Relative deviation between the analytic `G` and a finite difference of the detected mean.
///
/// Central difference when `𝒜 ≥ h`, forward difference otherwise.
pub fn transfer_function_check(cfg: &SchemeConfig, h: f64) -> Result<f64> {
    cfg.validate()?;
    if !(h > 0.0 && cfg.absorption + h < 1.0) {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            reason: "step must be positive and keep the absorption below 1",
        });
    }
    let a = cfg.absorption;
    let numeric = if a >= h {
        (detected_mean(&cfg.with_absorption(a + h))? - detected_mean(&cfg.with_absorption(a - h))?)
            / (2.0 * h)
    } else {
        (detected_mean(&cfg.with_absorption(a + h))? - detected_mean(cfg)?) / h
    };
    let g = transfer_function(cfg);
    Ok(((numeric - g) / g).abs())
}

/// Conditions under which a closed-form approximation is expected to hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeWarning {
    /// `𝒜 ≪ 1` is not satisfied.
    LargeAbsorption,
    /// `ε² ≪ 1` is not satisfied.
    LowEfficiency,
    /// `N ≫ 1` is not satisfied.
    FewPhotons,
    /// A no-amplification formula used with `R > 0`.
    AmplifierPresent,
    /// A strong-amplification formula used without `e^{2R} ≫ 1`.
    WeakAmplification,
    /// `e^{2r} ≫ 1` is not satisfied.
    WeakSqueezing,
    /// `e^{2r} ≪ 4N` (equivalently `e^{4R} ≪ 4N` at the optimum) is not satisfied.
    StrongSqueezing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Asymptotic {
    /// `(ΔA)²`.
    pub delta_a2: f64,
    pub warnings: Vec<RegimeWarning>,
}

impl Asymptotic {
    pub fn delta_a(&self) -> f64 {
        self.delta_a2.sqrt()
    }

    /// `Q` in the same approximation, with the shot-noise baseline `1/√N`.
    pub fn q(&self, n: f64) -> f64 {
        1.0 / (n * self.delta_a2).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwinAsymptotic {
    Simple0,
    SimpleR,
    Opt0,
    OptR,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SqueezedAsymptotic {
    /// `R = 0` at the configured `r`.
    NoAmp,
    /// `R = 0` at the optimal `r`.
    OptNoAmp,
    /// Strong amplification at the configured `r`.
    StrongAmp,
    /// Strong amplification at the optimal `r`.
    OptStrongAmp,
}

const MUCH: f64 = 10.0;

fn common_warnings(cfg: &SchemeConfig) -> Vec<RegimeWarning> {
    let mut w = Vec::new();
    if cfg.absorption * MUCH > 1.0 {
        w.push(RegimeWarning::LargeAbsorption);
    }
    if cfg.budget().eps2() * MUCH > 1.0 {
        w.push(RegimeWarning::LowEfficiency);
    }
    if cfg.n < MUCH {
        w.push(RegimeWarning::FewPhotons);
    }
    w
}

fn amplification_warning(cfg: &SchemeConfig, strong: bool, w: &mut Vec<RegimeWarning>) {
    if strong {
        if (2.0 * cfg.gain).exp() < MUCH {
            w.push(RegimeWarning::WeakAmplification);
        }
    } else if cfg.gain > 0.0 {
        w.push(RegimeWarning::AmplifierPresent);
    }
}

/// Closed-form twin-beam `(ΔA)²` for small absorption, good efficiency and large `N`.
pub fn asymptotic_twin(cfg: &SchemeConfig, variant: TwinAsymptotic) -> Asymptotic {
    let b = cfg.budget();
    let (a, n) = (cfg.absorption, cfg.n);
    let eps2_r = b.eps_p2() + b.eps_d2() * (-2.0 * cfg.gain).exp();
    let mut warnings = common_warnings(cfg);
    let delta_a2 = match variant {
        TwinAsymptotic::Simple0 => a * a + (a + 2.0 * b.eps2()) / n,
        TwinAsymptotic::SimpleR => 2.0 * (a * a + (a + 2.0 * eps2_r) / n) + 1.0 / (n * n),
        TwinAsymptotic::Opt0 => (a + 2.0 * b.eps2()) / n,
        TwinAsymptotic::OptR => 2.0 * (a + 2.0 * eps2_r) / n + 1.0 / (n * n),
    };
    let strong = matches!(variant, TwinAsymptotic::SimpleR | TwinAsymptotic::OptR);
    amplification_warning(cfg, strong, &mut warnings);
    Asymptotic { delta_a2, warnings }
}

/// `e^{2r} = (4N)^{1/3}`: optimal squeezing without amplification.
pub fn optimal_squeeze_no_amp(n: f64) -> f64 {
    (4.0 * n).ln() / 6.0
}

/// `e^{2r} = (4N)^{1/3}·e^{8R/3}`: optimal squeezing under strong amplification.
pub fn optimal_squeeze_strong_amp(n: f64, gain: f64) -> f64 {
    optimal_squeeze_no_amp(n) + 4.0 * gain / 3.0
}

/// Closed-form squeezed-coherent `(ΔA)²`.
///
/// Fails only at the pole `N ≤ e^{2r}/4` of the strong-amplification form.
pub fn asymptotic_squeezed(cfg: &SchemeConfig, variant: SqueezedAsymptotic) -> Result<Asymptotic> {
    let b = cfg.budget();
    let (a, n, big_r) = (cfg.absorption, cfg.n, cfg.gain);
    let mut warnings = common_warnings(cfg);
    let strong = matches!(
        variant,
        SqueezedAsymptotic::StrongAmp | SqueezedAsymptotic::OptStrongAmp
    );
    amplification_warning(cfg, strong, &mut warnings);

    let r = match variant {
        SqueezedAsymptotic::NoAmp | SqueezedAsymptotic::StrongAmp => cfg.r,
        SqueezedAsymptotic::OptNoAmp => optimal_squeeze_no_amp(n),
        SqueezedAsymptotic::OptStrongAmp => optimal_squeeze_strong_amp(n, big_r),
    };
    let e2r = (2.0 * r).exp();
    if e2r < MUCH {
        warnings.push(RegimeWarning::WeakSqueezing);
    }
    if e2r * MUCH > 4.0 * n {
        warnings.push(RegimeWarning::StrongSqueezing);
    }

    let eps2_r = b.eps_p2() + b.eps_d2() * (-2.0 * big_r).exp();
    let delta_a2 = match variant {
        SqueezedAsymptotic::NoAmp => (1.0 / e2r + a + b.eps2()) / n + e2r * e2r / (8.0 * n * n),
        SqueezedAsymptotic::OptNoAmp => {
            (a + b.eps2()) / n + 3.0 / (2f64.powf(5.0 / 3.0) * n.powf(4.0 / 3.0))
        }
        SqueezedAsymptotic::StrongAmp => {
            let denom = n - e2r / 4.0;
            if denom <= 0.0 {
                return Err(Error::RegimePole { denominator: denom });
            }
            (1.0 / e2r + a + eps2_r) / denom
                + e2r * e2r * (-8.0 * big_r).exp() / (8.0 * denom * denom)
        }
        SqueezedAsymptotic::OptStrongAmp => {
            (a + eps2_r) / n
                + 3.0 * (-8.0 * big_r / 3.0).exp() / (2f64.powf(5.0 / 3.0) * n.powf(4.0 / 3.0))
        }
    };
    Ok(Asymptotic { delta_a2, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn twin(kind: SchemeKind, n: f64, a: f64, ep: f64, ed: f64, big_r: f64) -> SchemeConfig {
        SchemeConfig::twin(kind, n, a, ep, ed, big_r).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SchemeConfig::twin(SchemeKind::TwinSimple, 0.0, 0.0, 1.0, 1.0, 0.0).is_err());
        assert!(SchemeConfig::twin(SchemeKind::TwinSimple, 10.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(SchemeConfig::twin(SchemeKind::TwinSimple, 10.0, 0.1, 0.0, 1.0, 0.0).is_err());
        assert!(SchemeConfig::twin(SchemeKind::TwinSimple, 10.0, 0.1, 1.0, 1.0, -1.0).is_err());
        assert!(SchemeConfig::squeezed(10.0, 0.1, 1.0, 1.0, -0.1, 0.0).is_err());
        // sinh²(2) ≈ 13.15 > 10.
        assert!(matches!(
            SchemeConfig::squeezed(10.0, 0.1, 1.0, 1.0, 2.0, 0.0),
            Err(Error::InfeasibleConfig(_))
        ));
        let c = SchemeConfig::squeezed(10.0, 0.1, 1.0, 1.0, max_squeeze(10.0, 1.0), 0.0).unwrap();
        assert!(c.coherent_amplitude_sq().abs() < 1e-9);
    }

    #[test]
    fn twin_gain_reproduces_photon_number() {
        let c = twin(SchemeKind::TwinSimple, 1e7, 0.0, 0.9, 1.0, 0.0);
        let st = twin_state(&c).unwrap();
        let m = st.photon_moments(0, 1).unwrap();
        assert_relative_eq!(m.mean1, 1e7, max_relative = 1e-10);
        assert_relative_eq!(m.mean2, 1e7, max_relative = 1e-10);
        assert_relative_eq!(
            c.eta_p * c.input_gain().sinh().powi(2),
            1e7,
            max_relative = 1e-12
        );
    }

    #[test]
    fn perfect_twins_are_noiseless() {
        let c = twin(SchemeKind::TwinSimple, 1e4, 0.0, 1.0, 1.0, 0.0);
        let rep = twin_uncertainty_simple(&c).unwrap();
        assert!(rep.delta_a < 1e-8, "ΔA = {}", rep.delta_a);
    }

    #[test]
    fn simple_estimator_small_loss_limit() {
        let c = twin(SchemeKind::TwinSimple, 1e7, 1e-5, 1.0, 1.0, 0.0);
        let rep = twin_uncertainty_simple(&c).unwrap();
        assert_relative_eq!(rep.delta_a.powi(2), 1.01e-10, max_relative = 0.02);
    }

    #[test]
    fn optimized_estimator_small_loss_limit() {
        let c = twin(SchemeKind::TwinOptimizedK, 1e7, 1e-5, 1.0, 1.0, 0.0);
        let rep = twin_uncertainty_optimized(&c).unwrap();
        assert_relative_eq!(rep.delta_a.powi(2), 1e-12, max_relative = 0.02);
        // Ideal twins: var(n_d1) − cov²/var(n_d2) = 𝒯𝒜N and G = −N, so Q = 1/√𝒜 exactly.
        assert_relative_eq!(rep.q, 1.0 / 1e-5f64.sqrt(), max_relative = 1e-3);
        assert_relative_eq!(rep.q, 1.0 / (1e-5f64 + 1e-7).sqrt(), max_relative = 1e-2);
        assert!(rep.k_opt.unwrap() > 0.99 && rep.k_opt.unwrap() < 1.0);
    }

    #[test]
    fn report_is_self_consistent() {
        let configs = [
            twin(SchemeKind::TwinSimple, 1e7, 1e-5, 0.99, 0.5, 3.0),
            twin(SchemeKind::TwinOptimizedK, 1e6, 1e-4, 0.9, 0.1, 6.0),
            SchemeConfig::squeezed(1e7, 1e-5, 0.99, 0.5, 4.0, 2.0).unwrap(),
        ];
        for c in configs {
            let rep = evaluate(&c).unwrap();
            assert_relative_eq!(rep.recomputed_delta_a(), rep.delta_a, max_relative = 1e-12);
            assert_relative_eq!(rep.delta_a_from_stats(), rep.delta_a, max_relative = 1e-3);
        }
    }

    #[test]
    fn twin_advantage_is_smooth_at_large_gain() {
        // var(n_d1) − cov²/var(n_d2) is ~1e-12 of var(n_d1) here; formed naively it jitters at 1e-4.
        let qs: Vec<f64> = (0..=40)
            .map(|i| {
                let c = twin(
                    SchemeKind::TwinOptimizedK,
                    1e7,
                    1e-5,
                    1.0,
                    0.99,
                    6.0 + 0.05 * i as f64,
                );
                evaluate(&c).unwrap().q
            })
            .collect();
        for w in qs.windows(2) {
            assert!(w[1] >= w[0], "{} -> {}", w[0], w[1]);
        }
        for w in qs.windows(4) {
            let third = w[3] - 3.0 * w[2] + 3.0 * w[1] - w[0];
            assert!(third.abs() < 1e-5 * w[1], "{w:?}");
        }
    }

    #[test]
    fn squeezed_without_squeezing_is_shot_noise_limited() {
        for (a, ep, ed) in [(0.0, 1.0, 1.0), (1e-3, 0.9, 0.5), (0.3, 0.5, 0.2)] {
            let c = SchemeConfig::squeezed(1e6, a, ep, ed, 0.0, 0.0).unwrap();
            let rep = squeezed_coherent_uncertainty(&c).unwrap();
            assert_relative_eq!(
                rep.delta_a,
                ((1.0 - a) / (ed * 1e6)).sqrt(),
                max_relative = 1e-9
            );
            assert_relative_eq!(rep.q, 1.0, max_relative = 1e-9);
            assert_relative_eq!(rep.transfer_g, -ed * 1e6, max_relative = 1e-15);
        }
    }

    #[test]
    fn squeezed_at_optimal_squeezing_without_amplification() {
        let n = 1e7;
        let c = SchemeConfig::squeezed(n, 1e-5, 1.0, 1.0, optimal_squeeze_no_amp(n), 0.0).unwrap();
        let rep = squeezed_coherent_uncertainty(&c).unwrap();
        let expected = 1e-5 / n + 3.0 / (2f64.powf(5.0 / 3.0) * n.powf(4.0 / 3.0));
        assert_relative_eq!(rep.delta_a.powi(2), expected, max_relative = 0.05);
    }

    #[test]
    fn transfer_functions_match_finite_differences() {
        let configs = [
            twin(SchemeKind::TwinSimple, 1e7, 1e-5, 0.9, 0.5, 3.0),
            twin(SchemeKind::TwinOptimizedK, 1e3, 0.0, 1.0, 1.0, 0.0),
            SchemeConfig::squeezed(1e7, 1e-5, 0.95, 0.5, 3.0, 2.0).unwrap(),
            SchemeConfig::squeezed(1e5, 0.2, 1.0, 0.7, 1.0, 0.5).unwrap(),
        ];
        for c in configs {
            let h = 1e-6 * c.absorption.max(1e-3);
            let dev = transfer_function_check(&c, h).unwrap();
            assert!(dev <= 1e-6, "{c:?}: deviation {dev:e}");
        }
    }

    #[test]
    fn degenerate_transfer_is_rejected() {
        // G = 0 needs -α²e^{2R} - sinh²(R - r) + sinh²R = 0, reachable with α = 0.
        let n = 1.0;
        let r = max_squeeze(n, 1.0);
        let big_r = r / 2.0;
        let c = SchemeConfig::squeezed(n, 0.0, 1.0, 1.0, r, big_r).unwrap();
        assert!(transfer_function(&c).abs() < 1e-12);
        let forced = SchemeConfig {
            r,
            gain: big_r,
            ..c
        };
        let g = transfer_function(&forced);
        if g == 0.0 {
            assert_eq!(
                squeezed_coherent_uncertainty(&forced),
                Err(Error::DegenerateTransfer)
            );
        }
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let c = twin(SchemeKind::TwinSimple, 1e3, 0.0, 1.0, 1.0, 0.0);
        assert!(twin_uncertainty_optimized(&c).is_err());
        assert!(squeezed_coherent_uncertainty(&c).is_err());
    }

    #[test]
    fn phase_rotation_leaves_twin_statistics_unchanged() {
        let c = twin(SchemeKind::TwinOptimizedK, 1e4, 1e-3, 0.9, 0.8, 1.5);
        let base = twin_state(&c).unwrap().photon_moments(0, 1).unwrap();
        for phase in [0.0, 0.3, 1.0, 2.5] {
            let rot = twin_state_rotated(&c, phase)
                .unwrap()
                .photon_moments(0, 1)
                .unwrap();
            assert_relative_eq!(rot.mean1, base.mean1, max_relative = 1e-10);
            assert_relative_eq!(rot.var1, base.var1, max_relative = 1e-10);
            assert_relative_eq!(rot.var2, base.var2, max_relative = 1e-10);
            assert_relative_eq!(rot.cov12, base.cov12, max_relative = 1e-10);
        }
    }

    #[test]
    fn sum_difference_variance_matches_physical_basis() {
        let c = twin(SchemeKind::TwinOptimizedK, 1e3, 1e-2, 0.8, 0.7, 0.7);
        let pm = twin_state_sum_difference(&c).unwrap();
        let phys = twin_state_rotated(&c, 0.0).unwrap();
        for k in [-0.5, 0.0, 0.3, 0.97, 1.4] {
            assert_relative_eq!(
                difference_variance_from_sum_difference(&pm, k).unwrap(),
                phys.number_difference_variance(0, 1, k).unwrap(),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn phase_rotation_leaves_squeezed_statistics_unchanged() {
        let c = SchemeConfig::squeezed(1e4, 1e-3, 0.9, 0.8, 2.0, 1.5).unwrap();
        let base = squeezed_state(&c).unwrap().photon_moments(0, 0).unwrap();
        for phase in [0.3, 1.0, 2.5] {
            let rot = squeezed_state_rotated(&c, phase)
                .unwrap()
                .photon_moments(0, 0)
                .unwrap();
            assert_relative_eq!(rot.mean1, base.mean1, max_relative = 1e-10);
            assert_relative_eq!(rot.var1, base.var1, max_relative = 1e-10);
        }
    }

    #[test]
    fn asymptotic_twin_printed_forms() {
        let c = twin(SchemeKind::TwinOptimizedK, 1e7, 1e-5, 1.0, 1.0, 0.0);
        let opt0 = asymptotic_twin(&c, TwinAsymptotic::Opt0);
        assert_relative_eq!(opt0.delta_a2, 1e-12, max_relative = 1e-12);
        assert!(opt0.warnings.is_empty());

        let c = twin(SchemeKind::TwinOptimizedK, 1e7, 1e-5, 1.0, 0.5, 40.0);
        let opt_r = asymptotic_twin(&c, TwinAsymptotic::OptR);
        assert_relative_eq!(opt_r.delta_a2, 2e-12 + 1e-14, max_relative = 1e-9);
        assert_relative_eq!(
            opt_r.q(1e7),
            1.0 / (2e-5f64 + 1e-7).sqrt(),
            max_relative = 1e-9
        );

        let r0 = asymptotic_twin(&c, TwinAsymptotic::Simple0);
        assert!(r0.warnings.contains(&RegimeWarning::AmplifierPresent));
        assert!(r0.warnings.contains(&RegimeWarning::LowEfficiency));
    }

    #[test]
    fn asymptotic_squeezed_printed_forms() {
        let n = 1e7;
        let c = SchemeConfig::squeezed(n, 1e-5, 1.0, 1.0, optimal_squeeze_no_amp(n), 0.0).unwrap();
        let opt = asymptotic_squeezed(&c, SqueezedAsymptotic::OptNoAmp).unwrap();
        let plain = asymptotic_squeezed(&c, SqueezedAsymptotic::NoAmp).unwrap();
        assert_relative_eq!(opt.delta_a2, plain.delta_a2, max_relative = 1e-12);
        assert_relative_eq!(
            (2.0 * optimal_squeeze_strong_amp(n, 1.5)).exp(),
            (4.0 * n).powf(1.0 / 3.0) * 4f64.exp(),
            max_relative = 1e-12
        );

        let too_much = SchemeConfig { r: 9.0, ..c };
        assert!(matches!(
            asymptotic_squeezed(&too_much, SqueezedAsymptotic::StrongAmp),
            Err(Error::RegimePole { .. })
        ));
    }
}
