//! Cramér-Rao bounds on absorption estimation from photon counting.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{check_unit_interval, Error, Result};
use crate::tolerances::Tolerances;

/// Preparation and detection efficiencies of a setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBudget {
    pub eta_p: f64,
    pub eta_d: f64,
}

impl EfficiencyBudget {
    pub fn new(eta_p: f64, eta_d: f64) -> Result<Self> {
        check_unit_interval("eta_p", eta_p)?;
        check_unit_interval("eta_d", eta_d)?;
        Ok(Self { eta_p, eta_d })
    }

    pub fn ideal() -> Self {
        Self {
            eta_p: 1.0,
            eta_d: 1.0,
        }
    }

    /// Total efficiency `η = η_p·η_d`.
    pub fn eta(&self) -> f64 {
        self.eta_p * self.eta_d
    }

    pub fn eps_p2(&self) -> f64 {
        (1.0 - self.eta_p) / self.eta_p
    }

    pub fn eps_d2(&self) -> f64 {
        (1.0 - self.eta_d) / self.eta_d
    }

    /// Total inefficiency `ε² = ε_p² + ε_d²`.
    pub fn eps2(&self) -> f64 {
        self.eps_p2() + self.eps_d2()
    }

    /// Effective absorption `𝒜_η` with `1 − 𝒜_η = η(1 − 𝒜)`.
    pub fn effective_absorption(&self, absorption: f64) -> f64 {
        1.0 - self.eta() * (1.0 - absorption)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    /// Counts `0..=max`.
    Finite(u64),
    /// Summed until the tail is negligible.
    Unbounded,
}

/// A photon-count distribution `W(n | 𝒜_η)` parameterized by the effective absorption.
#[derive(Clone)]
pub struct CountDistribution {
    pmf: Arc<dyn Fn(u64, f64) -> f64 + Send + Sync>,
    support: Support,
}

impl fmt::Debug for CountDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CountDistribution")
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

fn poisson_pmf(n: u64, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (n as f64 * lambda.ln() - lambda - ln_factorial(n)).exp()
}

fn binomial_pmf(n: u64, trials: u64, p: f64) -> f64 {
    if n > trials {
        return 0.0;
    }
    if p <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if n == trials { 1.0 } else { 0.0 };
    }
    let ln_c = ln_factorial(trials) - ln_factorial(n) - ln_factorial(trials - n);
    (ln_c + n as f64 * p.ln() + (trials - n) as f64 * (1.0 - p).ln()).exp()
}

impl CountDistribution {
    pub fn from_fn(
        support: Support,
        pmf: impl Fn(u64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            pmf: Arc::new(pmf),
            support,
        }
    }

    /// Coherent light of mean `n0` before all losses: Poisson with mean `(1 − 𝒜_η)·n0`.
    pub fn poisson(n0: f64) -> Self {
        Self::from_fn(Support::Unbounded, move |n, a| {
            poisson_pmf(n, (1.0 - a) * n0)
        })
    }

    /// Fock state `|n0⟩`: binomial with `n0` trials and success probability `1 − 𝒜_η`.
    pub fn binomial(n0: u64) -> Self {
        Self::from_fn(Support::Finite(n0), move |n, a| {
            binomial_pmf(n, n0, 1.0 - a)
        })
    }

    pub fn pmf(&self, n: u64, effective_absorption: f64) -> f64 {
        (self.pmf)(n, effective_absorption)
    }

    pub fn support(&self) -> Support {
        self.support
    }
}

const TAIL_MASS: f64 = 1e-13;
const TAIL_TERMS: usize = 10;
const TAIL_RELATIVE: f64 = 1e-12;
const MAX_TERMS: u64 = 100_000_000;

/// Derivative of `W(n | ·)` at `a`, by Richardson-extrapolated differences.
///
/// Central differences when `a ± h` stays inside `[0, 1]`, one-sided otherwise.
fn pmf_derivative(dist: &CountDistribution, n: u64, a: f64, h: f64) -> f64 {
    let w = |x: f64| dist.pmf(n, x);
    if a - h >= 0.0 && a + h <= 1.0 {
        let central = |s: f64| (w(a + s) - w(a - s)) / (2.0 * s);
        (4.0 * central(h / 2.0) - central(h)) / 3.0
    } else {
        let dir = if a - h < 0.0 { 1.0 } else { -1.0 };
        let one_sided = |s: f64| dir * (w(a + dir * s) - w(a)) / s;
        2.0 * one_sided(h / 2.0) - one_sided(h)
    }
}

/// Numerical Cramér-Rao bound `ΔA_CR = (1/η)·[Σ_n (∂W/∂𝒜_η)²/W]^{−1/2}`.
///
/// Returns `0.0` when the Fisher sum diverges (some count with zero probability
/// has a non-zero derivative, i.e. the distribution pins 𝒜 exactly) and
/// `f64::INFINITY` when it vanishes (the counts carry no information).
pub fn fisher_cr_bound(
    dist: &CountDistribution,
    absorption: f64,
    budget: &EfficiencyBudget,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&absorption) {
        return Err(Error::InvalidParameter {
            name: "absorption",
            value: absorption,
            reason: "must lie in [0, 1]",
        });
    }
    let a = budget.effective_absorption(absorption);
    let h = (1e-3 * a).max(1e-6);

    let mut fisher = 0.0_f64;
    let mut total = 0.0_f64;
    let mut recent = [0.0_f64; TAIL_TERMS];
    let mut recent_mass = [0.0_f64; TAIL_TERMS];
    let upper = match dist.support {
        Support::Finite(max) => max,
        Support::Unbounded => MAX_TERMS,
    };
    let mut finished = false;
    for n in 0..=upper {
        let w = dist.pmf(n, a);
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "probability",
                value: w,
                reason: "pmf must be finite and non-negative",
            });
        }
        let d = pmf_derivative(dist, n, a, h);
        let term = if w > 0.0 {
            d * d / w
        } else if d.abs() > 1e-12 {
            return Ok(0.0);
        } else {
            0.0
        };
        fisher += term;
        total += w;
        recent[n as usize % TAIL_TERMS] = term;
        recent_mass[n as usize % TAIL_TERMS] = w;

        if dist.support == Support::Unbounded
            && n as usize >= TAIL_TERMS
            && (total - 1.0).abs() <= Tolerances::DEFAULT.normalization
            && recent_mass.iter().sum::<f64>() < TAIL_MASS
            && recent.iter().sum::<f64>() <= TAIL_RELATIVE * fisher
        {
            finished = true;
            break;
        }
    }
    if dist.support == Support::Unbounded && !finished {
        return Err(Error::NotNormalized { total });
    }
    if (total - 1.0).abs() > Tolerances::DEFAULT.normalization {
        return Err(Error::NotNormalized { total });
    }
    if fisher == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (budget.eta() * fisher.sqrt()))
}

fn check_photons(n: f64) -> Result<()> {
    if n.is_finite() && n > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "N",
            value: n,
            reason: "mean photon number must be positive",
        })
    }
}

/// Shot-noise bound `√(𝒯/(η_d·N))` for coherent light with `N` photons at the object.
pub fn cr_coherent(n: f64, absorption: f64, budget: &EfficiencyBudget) -> Result<f64> {
    check_photons(n)?;
    if !(0.0..1.0).contains(&absorption) {
        return Err(Error::InvalidParameter {
            name: "absorption",
            value: absorption,
            reason: "must lie in [0, 1)",
        });
    }
    Ok(((1.0 - absorption) / (budget.eta_d * n)).sqrt())
}

/// Fock-state bound `√([𝒜 + (1−η)𝒯]·𝒯/(η_d·N))`; exactly zero for a lossless transparent object.
pub fn cr_fock(n: f64, absorption: f64, budget: &EfficiencyBudget) -> Result<f64> {
    check_photons(n)?;
    if !(0.0..=1.0).contains(&absorption) {
        return Err(Error::InvalidParameter {
            name: "absorption",
            value: absorption,
            reason: "must lie in [0, 1]",
        });
    }
    let t = 1.0 - absorption;
    if budget.effective_absorption(absorption) == 0.0 {
        return Ok(0.0);
    }
    Ok(((absorption + (1.0 - budget.eta()) * t) * t / (budget.eta_d * n)).sqrt())
}

/// Quantum advantage `Q = ΔA_CR,coh / ΔA` at equal photon number and efficiencies.
pub fn quantum_advantage(
    delta_a: f64,
    n: f64,
    absorption: f64,
    budget: &EfficiencyBudget,
) -> Result<f64> {
    if !(delta_a.is_finite() && delta_a > 0.0) {
        return Err(Error::InvalidParameter {
            name: "delta_A",
            value: delta_a,
            reason: "uncertainty must be positive",
        });
    }
    Ok(cr_coherent(n, absorption, budget)? / delta_a)
}
