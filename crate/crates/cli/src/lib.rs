//! Command-line front end: single evaluations, figure data, generic sweeps and
//! oracle validation, each written as CSV with a JSON mirror and a manifest.

pub mod jobs;
pub mod kv;
pub mod manifest;
pub mod table;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use subshot_core::optimize::{linspace, logspace, Axis, SweepSpec};
use subshot_core::schemes::{SchemeConfig, SchemeKind};
use subshot_core::validation::Suite;

use jobs::{execute, figure_job, Figure, FigureOverrides, Job};
use kv::KvFile;
use manifest::{write_outputs, Manifest};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SUBSHOT_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "subshot",
    version,
    about = "Sub-shot-noise absorption sensitivity calculator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one configuration.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        /// Minimize ΔA over the input squeeze gain (squeezed scheme only).
        #[arg(long)]
        optimize_r: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the data sets of one of the standard figures.
    Figure {
        #[arg(value_enum)]
        name: Figure,
        #[arg(long = "N")]
        n: Option<f64>,
        #[arg(long = "A")]
        absorption: Option<f64>,
        /// Preparation inefficiency; restricts the η_d-axis figures to one curve.
        #[arg(long = "eps-p2")]
        eps_p2: Option<f64>,
        /// Restricts the R-axis figures to one detection efficiency.
        #[arg(long = "eta-d")]
        eta_d: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Sweep η_d or R from flags and/or a `key = value` file (flags win).
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "config")]
        file: Option<PathBuf>,
        #[arg(long, value_enum)]
        axis: Option<AxisArg>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Logarithmic spacing.
        #[arg(long)]
        log: bool,
        #[arg(long)]
        optimize_r: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run an oracle suite; exits 1 if any check fails.
    Validate {
        #[arg(value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a previously written manifest.
    Rerun {
        manifest: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SchemeArg {
    TwinSimple,
    TwinOpt,
    Squeezed,
}

impl From<SchemeArg> for SchemeKind {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::TwinSimple => SchemeKind::TwinSimple,
            SchemeArg::TwinOpt => SchemeKind::TwinOptimizedK,
            SchemeArg::Squeezed => SchemeKind::SqueezedCoherent,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AxisArg {
    EtaD,
    R,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    Fock,
    Mc,
    Asymptotics,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Fock => Suite::Fock,
            SuiteArg::Mc => Suite::Mc,
            SuiteArg::Asymptotics => Suite::Asymptotics,
            SuiteArg::All => Suite::All,
        }
    }
}

/// Scheme parameters. For twin schemes `--r` is ignored: the input gain follows from `--N`.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// Mean photon number at the object.
    #[arg(long = "N")]
    pub n: Option<f64>,
    /// Absorption of the object.
    #[arg(long = "A")]
    pub absorption: Option<f64>,
    #[arg(long = "eta-p", conflicts_with = "eps_p2")]
    pub eta_p: Option<f64>,
    /// Preparation inefficiency (1−η_p)/η_p, an alternative to --eta-p.
    #[arg(long = "eps-p2")]
    pub eps_p2: Option<f64>,
    #[arg(long = "eta-d")]
    pub eta_d: Option<f64>,
    /// Input squeeze gain (squeezed scheme).
    #[arg(long = "r")]
    pub r: Option<f64>,
    /// Pre-detection amplification gain.
    #[arg(long = "R")]
    pub gain: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad or missing arguments; exit code 2.
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(#[from] subshot_core::Error),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn kv_usage(e: kv::KvError) -> CliError {
    CliError::Usage(e.to_string())
}

fn scheme_from_str(s: &str) -> Result<SchemeKind, CliError> {
    SchemeArg::from_str(s, true)
        .map(Into::into)
        .map_err(|_| CliError::Usage(format!("unknown scheme `{s}`")))
}

fn resolve_config(args: &ConfigArgs, file: &KvFile) -> Result<SchemeConfig, CliError> {
    let kind = match (args.scheme, file.str("scheme")) {
        (Some(s), _) => s.into(),
        (None, Some(s)) => scheme_from_str(s)?,
        (None, None) => SchemeKind::TwinOptimizedK,
    };
    let pick = |flag: Option<f64>, key: &str| -> Result<Option<f64>, CliError> {
        Ok(match flag {
            Some(v) => Some(v),
            None => file.get(key).map_err(kv_usage)?,
        })
    };
    let n = pick(args.n, "N")?.ok_or_else(|| {
        CliError::Usage("the following required argument was not provided: --N <N>".into())
    })?;
    let eta_p = match (args.eta_p, args.eps_p2) {
        (Some(e), _) => e,
        (None, Some(eps)) => 1.0 / (1.0 + eps),
        (None, None) => match (
            file.get::<f64>("eta_p").map_err(kv_usage)?,
            file.get::<f64>("eps_p2").map_err(kv_usage)?,
        ) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage("give only one of eta_p and eps_p2".into()))
            }
            (Some(e), None) => e,
            (None, Some(eps)) => 1.0 / (1.0 + eps),
            (None, None) => 1.0,
        },
    };
    let cfg = SchemeConfig {
        kind,
        n,
        absorption: pick(args.absorption, "A")?.unwrap_or(0.0),
        eta_p,
        eta_d: pick(args.eta_d, "eta_d")?.unwrap_or(1.0),
        r: if kind.is_twin() {
            0.0
        } else {
            pick(args.r, "r")?.unwrap_or(0.0)
        },
        gain: pick(args.gain, "R")?.unwrap_or(0.0),
    };
    cfg.validate()?;
    Ok(cfg)
}

#[allow(clippy::too_many_arguments)]
fn sweep_job(
    config: &ConfigArgs,
    file: Option<&PathBuf>,
    axis: Option<AxisArg>,
    from: Option<f64>,
    to: Option<f64>,
    points: Option<usize>,
    log: bool,
    optimize_r: bool,
) -> Result<Job, CliError> {
    let kv = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            KvFile::parse(&text).map_err(kv_usage)?
        }
        None => KvFile::default(),
    };
    let mut base_args = config.clone();
    if base_args.n.is_none() && kv.str("N").is_none() {
        return Err(CliError::Usage(
            "the following required argument was not provided: --N <N>".into(),
        ));
    }
    let axis = match (axis, kv.str("axis")) {
        (Some(a), _) => a,
        (None, Some(s)) => AxisArg::from_str(&s.replace('_', "-"), true)
            .map_err(|_| CliError::Usage(format!("unknown axis `{s}`")))?,
        (None, None) => {
            return Err(CliError::Usage(
                "the following required argument was not provided: --axis".into(),
            ))
        }
    };
    let axis = match axis {
        AxisArg::EtaD => Axis::EtaD,
        AxisArg::R => Axis::GainR,
    };
    // The swept quantity only needs a valid placeholder in the base configuration.
    match axis {
        Axis::EtaD => base_args.eta_d = Some(1.0),
        Axis::GainR => base_args.gain = Some(0.0),
    }
    let base = resolve_config(&base_args, &kv)?;
    let get = |flag: Option<f64>, key: &str| -> Result<Option<f64>, CliError> {
        Ok(flag.or(kv.get(key).map_err(kv_usage)?))
    };
    let (lo, hi) = match axis {
        Axis::EtaD => (
            get(from, "from")?.unwrap_or(1e-2),
            get(to, "to")?.unwrap_or(1.0),
        ),
        Axis::GainR => (
            get(from, "from")?.unwrap_or(0.0),
            get(to, "to")?.unwrap_or(jobs::GAIN_MAX),
        ),
    };
    let default_points = match axis {
        Axis::EtaD => jobs::ETA_D_POINTS,
        Axis::GainR => jobs::GAIN_POINTS,
    };
    let points = match points {
        Some(p) => p,
        None => kv
            .get("points")
            .map_err(kv_usage)?
            .unwrap_or(default_points),
    };
    let log = log
        || match kv.str("spacing") {
            None | Some("linear") => false,
            Some("log") => true,
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "spacing must be `linear` or `log`, got `{other}`"
                )))
            }
        };
    if log && lo <= 0.0 {
        return Err(CliError::Usage(
            "log spacing needs a positive lower end".into(),
        ));
    }
    let grid = if log {
        logspace(lo, hi, points)
    } else {
        linspace(lo, hi, points)
    };
    let optimize_r = optimize_r
        || kv
            .get::<bool>("optimize_r")
            .map_err(kv_usage)?
            .unwrap_or(false);
    let spec = SweepSpec {
        base,
        axis,
        grid,
        optimize_r,
    };
    spec.validate()?;
    Ok(Job::Sweep { spec })
}

/// What a finished command wants from the process.
#[derive(Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    ValidationFailed(String),
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    match stdout
        .write_all(text.as_bytes())
        .and_then(|()| stdout.flush())
    {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Runtime(e.into())),
        _ => Ok(()),
    }
}

fn run_job(job: Job, out: Option<&PathBuf>) -> Result<Status, CliError> {
    let manifest = Manifest::new(job);
    let outcome = execute(&manifest.job)?;
    let mut text = String::new();
    match &manifest.job {
        Job::Eval { .. } => text.push_str(&outcome.tables[0].to_csv(&[])),
        Job::Validate { .. } => {
            for row in &outcome.tables[0].rows {
                if let [table::Cell::Text(name), table::Cell::Num(m), table::Cell::Num(t), table::Cell::Text(p)] =
                    row.as_slice()
                {
                    let tag = if p == "true" { "PASS" } else { "FAIL" };
                    text.push_str(&format!("{tag} {name}: measured {m:e}, tolerance {t:e}\n"));
                }
            }
        }
        _ => {}
    }
    if let Some(dir) = out {
        for p in write_outputs(dir, &manifest, &outcome.tables)? {
            text.push_str(&format!("wrote {}\n", p.display()));
        }
    }
    emit(&text)?;
    Ok(match outcome.failed {
        Some(name) => Status::ValidationFailed(name),
        None => Status::Ok,
    })
}

pub fn run(cli: Cli) -> Result<Status, CliError> {
    match cli.command {
        Command::Eval {
            config,
            optimize_r,
            out,
        } => {
            let config = resolve_config(&config, &KvFile::default())?;
            run_job(Job::Eval { config, optimize_r }, out.as_ref())
        }
        Command::Figure {
            name,
            n,
            absorption,
            eps_p2,
            eta_d,
            points,
            out,
        } => {
            let o = FigureOverrides {
                n,
                absorption,
                eps_p2,
                eta_d,
                points,
            };
            run_job(figure_job(name, &o)?, Some(&out))
        }
        Command::Sweep {
            config,
            file,
            axis,
            from,
            to,
            points,
            log,
            optimize_r,
            out,
        } => {
            let job = sweep_job(
                &config,
                file.as_ref(),
                axis,
                from,
                to,
                points,
                log,
                optimize_r,
            )?;
            run_job(job, Some(&out))
        }
        Command::Validate { suite, seed, out } => run_job(
            Job::Validate {
                suite: suite.into(),
                seed,
            },
            out.as_ref(),
        ),
        Command::Rerun { manifest, out } => {
            let m = Manifest::load(&manifest)
                .map_err(|e| CliError::Usage(format!("cannot load {}: {e}", manifest.display())))?;
            run_job(m.job, Some(&out))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("subshot").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn symbol_style_flags() {
        let cli = parse(&[
            "eval", "--scheme", "squeezed", "--N", "1e7", "--A", "1e-5", "--r", "0.5", "--R", "2",
            "--eta-d", "0.9",
        ]);
        let Command::Eval { config, .. } = cli.command else {
            panic!()
        };
        let cfg = resolve_config(&config, &KvFile::default()).unwrap();
        assert_eq!(cfg.kind, SchemeKind::SqueezedCoherent);
        assert_eq!(
            (cfg.n, cfg.absorption, cfg.r, cfg.gain, cfg.eta_d, cfg.eta_p),
            (1e7, 1e-5, 0.5, 2.0, 0.9, 1.0)
        );
    }

    #[test]
    fn eps_p2_sets_preparation_efficiency() {
        let cli = parse(&["eval", "--N", "10", "--eps-p2", "0.25"]);
        let Command::Eval { config, .. } = cli.command else {
            panic!()
        };
        assert_eq!(
            resolve_config(&config, &KvFile::default()).unwrap().eta_p,
            0.8
        );
        assert!(Cli::try_parse_from([
            "subshot", "eval", "--N", "1", "--eps-p2", "0.1", "--eta-p", "0.9"
        ])
        .is_err());
    }

    #[test]
    fn missing_n_is_a_usage_error() {
        let cli = parse(&["eval", "--A", "0.1"]);
        let Command::Eval { config, .. } = cli.command else {
            panic!()
        };
        let err = resolve_config(&config, &KvFile::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn infeasible_squeezing_names_the_invariant() {
        let cli = parse(&["eval", "--scheme", "squeezed", "--N", "10", "--r", "3"]);
        let Command::Eval { config, .. } = cli.command else {
            panic!()
        };
        let err = resolve_config(&config, &KvFile::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("exceeds N"), "{err}");
    }

    #[test]
    fn sweep_from_file_with_flag_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.kv");
        std::fs::write(&path, "scheme = squeezed\nN = 1e6\nA = 1e-4\naxis = R\nfrom = 0\nto = 2\npoints = 5\noptimize_r = true\n").unwrap();
        let cfg = ConfigArgs {
            n: Some(2e6),
            ..Default::default()
        };
        let Job::Sweep { spec } =
            sweep_job(&cfg, Some(&path), None, None, None, None, false, false).unwrap()
        else {
            panic!()
        };
        assert_eq!(spec.base.n, 2e6);
        assert_eq!(spec.base.kind, SchemeKind::SqueezedCoherent);
        assert_eq!(spec.axis, Axis::GainR);
        assert_eq!(spec.grid, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(spec.optimize_r);
    }

    #[test]
    fn sweep_requires_axis() {
        let cfg = ConfigArgs {
            n: Some(10.0),
            ..Default::default()
        };
        let err = sweep_job(&cfg, None, None, None, None, None, false, false).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn sweep_file_spellings() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.kv");
        let cfg = ConfigArgs::default();
        std::fs::write(
            &path,
            "N = 1e7\nA = 1e-5\naxis = eta_d\nfrom = 1e-2\nto = 1\npoints = 3\nspacing = log\n",
        )
        .unwrap();
        let Job::Sweep { spec } =
            sweep_job(&cfg, Some(&path), None, None, None, None, false, false).unwrap()
        else {
            panic!()
        };
        assert_eq!(spec.axis, Axis::EtaD);
        assert!((spec.grid[1] - 0.1).abs() < 1e-12);
        std::fs::write(
            &path,
            "N = 1e7\nA = 1e-5\naxis = eta-d\nspacing = logarithmic\n",
        )
        .unwrap();
        let err = sweep_job(&cfg, Some(&path), None, None, None, None, false, false).unwrap_err();
        assert!(err.to_string().contains("spacing"), "{err}");
    }
}
