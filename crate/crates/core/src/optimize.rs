//! Input-squeezing optimization and parameter sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schemes::{
    evaluate, squeezed_coherent_uncertainty, SchemeConfig, SchemeKind, UncertaintyReport,
};
use crate::tolerances::Tolerances;

const PRESCAN_POINTS: usize = 50;
/// Keeps `α² ≥ 1e-9·N` at the top of the squeeze range.
const ALPHA_FLOOR: f64 = 1e-9;

/// Feasible squeeze interval `[0, asinh(√(N(1 − 1e-9)/η_p))]`.
pub fn feasible_squeeze_range(n: f64, eta_p: f64) -> (f64, f64) {
    (0.0, (n * (1.0 - ALPHA_FLOOR) / eta_p).sqrt().asinh())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeOptimum {
    pub r_opt: f64,
    pub report: UncertaintyReport,
    /// The coarse pre-scan saw more than one local minimum.
    pub multimodal: bool,
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        c
    } else {
        d
    }
}

/// Minimizes the squeezed-coherent ΔA over the input squeeze gain within `bracket`.
///
/// A 50-point scan picks the best cell (ties go to the smaller `r`), then
/// golden-section search refines it to `Tolerances::squeeze`.
pub fn optimize_input_squeezing(cfg: &SchemeConfig, bracket: (f64, f64)) -> Result<SqueezeOptimum> {
    if cfg.kind != SchemeKind::SqueezedCoherent {
        return Err(Error::InfeasibleConfig(format!(
            "input squeezing is only free for the squeezed scheme, got {}",
            cfg.kind
        )));
    }
    let (_, r_max) = feasible_squeeze_range(cfg.n, cfg.eta_p);
    let lo = bracket.0.max(0.0);
    let hi = bracket.1.min(r_max);
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::EmptyBracket { lo, hi });
    }

    let objective = |r: f64| {
        squeezed_coherent_uncertainty(&SchemeConfig { r, ..*cfg })
            .map(|rep| rep.delta_a)
            .unwrap_or(f64::INFINITY)
    };

    let xs: Vec<f64> = (0..PRESCAN_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (PRESCAN_POINTS - 1) as f64)
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| objective(x)).collect();
    let mut best = 0;
    for i in 1..fs.len() {
        if fs[i] < fs[best] {
            best = i;
        }
    }
    if !fs[best].is_finite() {
        return Err(Error::EmptyBracket { lo, hi });
    }
    let last = fs.len() - 1;
    let local_minima = (0..=last)
        .filter(|&i| {
            let left = i == 0 || fs[i] < fs[i - 1];
            let right = i == last || fs[i] <= fs[i + 1];
            left && right
        })
        .count();
    let multimodal = local_minima > 1;
    if multimodal {
        log::warn!("{local_minima} local minima in the squeeze pre-scan; returning the best");
    }

    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(last)];
    let refined = golden_section(objective, a, b, Tolerances::DEFAULT.squeeze);
    let r_opt = if objective(refined) <= fs[best] {
        refined
    } else {
        xs[best]
    };
    let report = squeezed_coherent_uncertainty(&SchemeConfig { r: r_opt, ..*cfg })?;
    Ok(SqueezeOptimum {
        r_opt,
        report,
        multimodal,
    })
}

/// Optimizes over the whole feasible range.
pub fn optimize_squeezing_full(cfg: &SchemeConfig) -> Result<SqueezeOptimum> {
    optimize_input_squeezing(cfg, feasible_squeeze_range(cfg.n, cfg.eta_p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    EtaD,
    GainR,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::EtaD => "eta_d",
            Axis::GainR => "R",
        }
    }

    fn apply(self, base: &SchemeConfig, value: f64) -> SchemeConfig {
        match self {
            Axis::EtaD => SchemeConfig {
                eta_d: value,
                ..*base
            },
            Axis::GainR => SchemeConfig {
                gain: value,
                ..*base
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: SchemeConfig,
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub optimize_r: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        if let Some(v) = self.grid.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite grid value {v}")));
        }
        if let Some(w) = self.grid.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "grid not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub delta_a: f64,
    pub q: f64,
    pub r_opt: Option<f64>,
    pub k_opt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: Axis,
    pub rows: Vec<SweepRow>,
}

fn sweep_point(spec: &SweepSpec, value: f64) -> Result<SweepRow> {
    let cfg = spec.axis.apply(&spec.base, value);
    cfg.validate()?;
    let (report, r_opt) = if spec.optimize_r && cfg.kind == SchemeKind::SqueezedCoherent {
        let opt = optimize_squeezing_full(&cfg)?;
        (opt.report, Some(opt.r_opt))
    } else {
        (evaluate(&cfg)?, None)
    };
    Ok(SweepRow {
        value,
        delta_a: report.delta_a,
        q: report.q,
        r_opt,
        k_opt: report.k_opt,
    })
}

/// Evaluates every grid point, in parallel, returning rows in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let rows: Vec<Result<SweepRow>> = spec
        .grid
        .par_iter()
        .map(|&v| {
            sweep_point(spec, v).map_err(|e| Error::SweepPoint {
                value: v,
                source: Box::new(e),
            })
        })
        .collect();
    Ok(SweepResult {
        axis: spec.axis,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

/// `n` points from `lo` to `hi` inclusive, evenly spaced.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `n` points from `lo` to `hi` inclusive, evenly spaced in `ln`.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n)
        .into_iter()
        .map(f64::exp)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{optimal_squeeze_no_amp, optimal_squeeze_strong_amp};
    use approx::assert_relative_eq;

    fn sqz(eta_d: f64, gain: f64) -> SchemeConfig {
        SchemeConfig::squeezed(1e7, 1e-5, 1.0, eta_d, 0.0, gain).unwrap()
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let x = golden_section(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn optimum_without_amplification() {
        let opt = optimize_squeezing_full(&sqz(1.0, 0.0)).unwrap();
        assert_relative_eq!(opt.r_opt, optimal_squeeze_no_amp(1e7), max_relative = 0.02);
        assert_relative_eq!(optimal_squeeze_no_amp(1e7), 2.917, max_relative = 1e-3);
        assert!(!opt.multimodal);
    }

    #[test]
    fn optimum_tracks_amplification() {
        for gain in [0.5, 1.0] {
            let opt = optimize_squeezing_full(&sqz(0.99, gain)).unwrap();
            assert_relative_eq!(
                opt.r_opt,
                optimal_squeeze_strong_amp(1e7, gain),
                max_relative = 0.02
            );
        }
    }

    #[test]
    fn optimum_matches_dense_scan() {
        let cfg = sqz(0.1, 0.0);
        let opt = optimize_squeezing_full(&cfg).unwrap();
        let (lo, hi) = feasible_squeeze_range(cfg.n, cfg.eta_p);
        let steps = ((hi - lo) / 1e-3) as usize;
        let (mut best_r, mut best) = (0.0, f64::INFINITY);
        for i in 0..=steps {
            let r = lo + i as f64 * 1e-3;
            let d = squeezed_coherent_uncertainty(&SchemeConfig { r, ..cfg })
                .unwrap()
                .delta_a;
            if d < best {
                best = d;
                best_r = r;
            }
        }
        assert!(
            (opt.r_opt - best_r).abs() < 2e-3,
            "{} vs {}",
            opt.r_opt,
            best_r
        );
        assert!(opt.report.delta_a <= best * (1.0 + 1e-12));
    }

    #[test]
    fn bracket_errors() {
        let cfg = sqz(1.0, 0.0);
        assert!(matches!(
            optimize_input_squeezing(&cfg, (2.0, 1.0)),
            Err(Error::EmptyBracket { .. })
        ));
        assert!(matches!(
            optimize_input_squeezing(&cfg, (20.0, 30.0)),
            Err(Error::EmptyBracket { .. })
        ));
        let twin = SchemeConfig::twin(SchemeKind::TwinSimple, 1e3, 0.0, 1.0, 1.0, 0.0).unwrap();
        assert!(optimize_squeezing_full(&twin).is_err());
    }

    #[test]
    fn grid_validation() {
        let base = sqz(1.0, 0.0);
        for grid in [vec![], vec![0.1, 0.1], vec![0.5, 0.2], vec![f64::NAN]] {
            let spec = SweepSpec {
                base,
                axis: Axis::EtaD,
                grid,
                optimize_r: false,
            };
            assert!(matches!(run_sweep(&spec), Err(Error::InvalidGrid(_))));
        }
    }

    #[test]
    fn sweep_reports_offending_point() {
        let spec = SweepSpec {
            base: sqz(1.0, 0.0),
            axis: Axis::EtaD,
            grid: vec![0.5, 1.5],
            optimize_r: false,
        };
        match run_sweep(&spec) {
            Err(Error::SweepPoint { value, .. }) => assert_eq!(value, 1.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_point_sweep_equals_direct_evaluation() {
        let base =
            SchemeConfig::twin(SchemeKind::TwinOptimizedK, 1e7, 1e-5, 1.0, 0.5, 0.0).unwrap();
        let spec = SweepSpec {
            base,
            axis: Axis::GainR,
            grid: vec![2.0],
            optimize_r: false,
        };
        let res = run_sweep(&spec).unwrap();
        let direct = evaluate(&SchemeConfig { gain: 2.0, ..base }).unwrap();
        assert_eq!(res.rows.len(), 1);
        assert_eq!(res.rows[0].q, direct.q);
        assert_eq!(res.rows[0].k_opt, direct.k_opt);
    }

    #[test]
    fn spacing_helpers() {
        assert_eq!(linspace(0.0, 8.0, 5), vec![0.0, 2.0, 4.0, 6.0, 8.0]);
        let g = logspace(1e-2, 1.0, 3);
        assert_relative_eq!(g[1], 0.1, max_relative = 1e-12);
        assert_relative_eq!(g[2], 1.0, max_relative = 1e-12);
    }
}
