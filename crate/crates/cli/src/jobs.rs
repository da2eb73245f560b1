//! Fully resolved units of work and their tabular results.

use serde::{Deserialize, Serialize};
use subshot_core::optimize::{
    linspace, logspace, optimize_squeezing_full, run_sweep, Axis, SweepResult, SweepSpec,
};
use subshot_core::schemes::{evaluate, SchemeConfig, SchemeKind};
use subshot_core::validation::{run_suite, Check, Suite};

use crate::table::{Cell, Table};

pub const N_DEFAULT: f64 = 1e7;
pub const A_DEFAULT: f64 = 1e-5;
pub const ETA_D_POINTS: usize = 200;
pub const GAIN_POINTS: usize = 160;
pub const GAIN_MAX: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }
}

/// User-facing knobs of a figure; anything left `None` takes the figure default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FigureOverrides {
    pub n: Option<f64>,
    pub absorption: Option<f64>,
    pub eps_p2: Option<f64>,
    pub eta_d: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    pub spec: SweepSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Job {
    Eval {
        config: SchemeConfig,
        optimize_r: bool,
    },
    Figure {
        figure: Figure,
        curves: Vec<Curve>,
    },
    Sweep {
        spec: SweepSpec,
    },
    Validate {
        suite: Suite,
        seed: u64,
    },
}

impl Job {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Job::Validate { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Job::Eval { .. } => "eval",
            Job::Figure { .. } => "figure",
            Job::Sweep { .. } => "sweep",
            Job::Validate { .. } => "validate",
        }
    }
}

fn eta_from_eps2(eps2: f64) -> f64 {
    1.0 / (1.0 + eps2)
}

fn label_num(x: f64) -> String {
    format!("{x:e}")
}

/// Resolves a figure name and overrides into concrete sweeps, one per curve.
pub fn figure_job(figure: Figure, o: &FigureOverrides) -> subshot_core::Result<Job> {
    let n = o.n.unwrap_or(N_DEFAULT);
    let absorption = o.absorption.unwrap_or(A_DEFAULT);
    let (kind, optimize_r) = match figure {
        Figure::Fig2 | Figure::Fig3 => (SchemeKind::TwinOptimizedK, false),
        Figure::Fig4 | Figure::Fig5 => (SchemeKind::SqueezedCoherent, true),
    };
    let base = |eta_p: f64, eta_d: f64| SchemeConfig {
        kind,
        n,
        absorption,
        eta_p,
        eta_d,
        r: 0.0,
        gain: 0.0,
    };
    let curves = match figure {
        Figure::Fig2 | Figure::Fig4 => {
            let sets: &[f64] = if figure == Figure::Fig2 {
                &[0.0, 1e-5, 1e-4, 1e-3, 1e-2]
            } else {
                &[0.0, 1e-3, 1e-2]
            };
            let eps = o.eps_p2.map_or_else(|| sets.to_vec(), |e| vec![e]);
            let grid = logspace(1e-2, 1.0, o.points.unwrap_or(ETA_D_POINTS));
            eps.into_iter()
                .map(|e| Curve {
                    label: format!("eps_p2_{}", label_num(e)),
                    spec: SweepSpec {
                        base: base(eta_from_eps2(e), 1.0),
                        axis: Axis::EtaD,
                        grid: grid.clone(),
                        optimize_r,
                    },
                })
                .collect::<Vec<_>>()
        }
        Figure::Fig3 | Figure::Fig5 => {
            let etas = o
                .eta_d
                .map_or_else(|| vec![0.99, 0.9, 0.5, 0.1], |e| vec![e]);
            let eta_p = eta_from_eps2(o.eps_p2.unwrap_or(0.0));
            let grid = linspace(0.0, GAIN_MAX, o.points.unwrap_or(GAIN_POINTS));
            etas.into_iter()
                .map(|eta_d| Curve {
                    label: format!("eta_d_{}", label_num(eta_d)),
                    spec: SweepSpec {
                        base: base(eta_p, eta_d),
                        axis: Axis::GainR,
                        grid: grid.clone(),
                        optimize_r,
                    },
                })
                .collect()
        }
    };
    for c in &curves {
        c.spec.validate()?;
        c.spec.base.validate()?;
    }
    Ok(Job::Figure { figure, curves })
}

fn opt(x: Option<f64>) -> Cell {
    x.map_or(Cell::Empty, Cell::Num)
}

fn sweep_table(name: String, spec: &SweepSpec, result: &SweepResult) -> Table {
    let b = &spec.base;
    let mut t = Table::new(name, [spec.axis.name(), "delta_A", "Q", "r_opt", "k_opt"]);
    t.comment(format!(
        "scheme={} N={:e} A={:e} eta_p={:e} eta_d={:e} r={:e} R={:e} optimize_r={}",
        b.kind, b.n, b.absorption, b.eta_p, b.eta_d, b.r, b.gain, spec.optimize_r
    ));
    t.comment(format!(
        "columns: {} (swept), delta_A (absorption uncertainty), Q (quantum advantage), r_opt (optimized input squeeze gain), k_opt (optimal reference weight)",
        spec.axis.name()
    ));
    for row in &result.rows {
        t.push(vec![
            Cell::Num(row.value),
            Cell::Num(row.delta_a),
            Cell::Num(row.q),
            opt(row.r_opt),
            opt(row.k_opt),
        ]);
    }
    t
}

fn checks_table(suite: Suite, seed: u64, checks: &[Check]) -> Table {
    let mut t = Table::new(
        format!("validate_{}", suite_name(suite)),
        ["check", "measured", "tolerance", "passed"],
    );
    t.comment(format!("suite={} seed={seed}", suite_name(suite)));
    for c in checks {
        t.push(vec![
            Cell::Text(c.name.clone()),
            Cell::Num(c.measured),
            Cell::Num(c.tolerance),
            Cell::Text(c.passed.to_string()),
        ]);
    }
    t
}

pub fn suite_name(suite: Suite) -> &'static str {
    match suite {
        Suite::Fock => "fock",
        Suite::Mc => "mc",
        Suite::Asymptotics => "asymptotics",
        Suite::All => "all",
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub tables: Vec<Table>,
    /// Name of the first failing validation check, if any.
    pub failed: Option<String>,
}

pub fn execute(job: &Job) -> subshot_core::Result<Outcome> {
    let mut failed = None;
    let tables = match job {
        Job::Eval { config, optimize_r } => {
            let (report, r_opt) = if *optimize_r && config.kind == SchemeKind::SqueezedCoherent {
                let o = optimize_squeezing_full(config)?;
                (o.report, Some(o.r_opt))
            } else {
                (evaluate(config)?, None)
            };
            let mut t = Table::new(
                "eval".into(),
                ["scheme", "delta_A", "Q", "G", "k_opt", "r_opt"],
            );
            t.comment(format!(
                "N={:e} A={:e} eta_p={:e} eta_d={:e} r={:e} R={:e}",
                config.n,
                config.absorption,
                config.eta_p,
                config.eta_d,
                report.squeeze,
                config.gain
            ));
            t.push(vec![
                Cell::Text(config.kind.to_string()),
                Cell::Num(report.delta_a),
                Cell::Num(report.q),
                Cell::Num(report.transfer_g),
                opt(report.k_opt),
                opt(r_opt),
            ]);
            vec![t]
        }
        Job::Figure { figure, curves } => curves
            .iter()
            .map(|c| {
                let res = run_sweep(&c.spec)?;
                Ok(sweep_table(
                    format!("{}_{}", figure.name(), c.label),
                    &c.spec,
                    &res,
                ))
            })
            .collect::<subshot_core::Result<_>>()?,
        Job::Sweep { spec } => vec![sweep_table("sweep".into(), spec, &run_sweep(spec)?)],
        Job::Validate { suite, seed } => {
            let checks = run_suite(*suite, *seed)?;
            failed = checks.iter().find(|c| !c.passed).map(|c| c.name.clone());
            vec![checks_table(*suite, *seed, &checks)]
        }
    };
    Ok(Outcome { tables, failed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_defaults() {
        let Job::Figure { curves, .. } =
            figure_job(Figure::Fig3, &FigureOverrides::default()).unwrap()
        else {
            panic!("not a figure job")
        };
        assert_eq!(curves.len(), 4);
        assert_eq!(curves[0].spec.grid.len(), GAIN_POINTS);
        assert_eq!(curves[0].spec.grid[GAIN_POINTS - 1], GAIN_MAX);
        assert_eq!(curves[3].spec.base.eta_d, 0.1);

        let Job::Figure { curves, .. } =
            figure_job(Figure::Fig2, &FigureOverrides::default()).unwrap()
        else {
            panic!("not a figure job")
        };
        assert_eq!(curves.len(), 5);
        assert_eq!(curves[0].spec.grid.len(), ETA_D_POINTS);
        assert!((curves[0].spec.grid[0] - 1e-2).abs() < 1e-15);
        assert!((curves[0].spec.grid[ETA_D_POINTS - 1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eps_override_selects_one_curve() {
        let o = FigureOverrides {
            eps_p2: Some(0.0),
            ..Default::default()
        };
        let Job::Figure { curves, .. } = figure_job(Figure::Fig2, &o).unwrap() else {
            panic!("not a figure job")
        };
        assert_eq!(curves.len(), 1);
        assert_eq!(curves[0].spec.base.eta_p, 1.0);
        assert_eq!(curves[0].label, "eps_p2_0e0");
    }

    #[test]
    fn invalid_override_is_rejected() {
        let o = FigureOverrides {
            n: Some(-1.0),
            ..Default::default()
        };
        assert!(figure_job(Figure::Fig5, &o).is_err());
    }

    #[test]
    fn job_round_trips_through_json() {
        let job = figure_job(
            Figure::Fig4,
            &FigureOverrides {
                points: Some(3),
                ..Default::default()
            },
        )
        .unwrap();
        let text = serde_json::to_string(&job).unwrap();
        assert_eq!(serde_json::from_str::<Job>(&text).unwrap(), job);
    }

    #[test]
    fn eval_shot_noise() {
        let config = SchemeConfig::squeezed(1e7, 1e-5, 1.0, 1.0, 0.0, 0.0).unwrap();
        let out = execute(&Job::Eval {
            config,
            optimize_r: false,
        })
        .unwrap();
        let Cell::Num(da) = out.tables[0].rows[0][1] else {
            panic!()
        };
        assert!((da / ((1.0 - 1e-5f64) / 1e7).sqrt() - 1.0).abs() < 1e-9);
    }
}
