mod cache;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use splitlab_core::CoreError;
use splitlab_extprec::PrecisionMode;

use crate::config::{Format, Resolver, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Invariant(String),
    Precision(String),
    NoConvergence(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Invariant(_) => 2,
            CliError::Precision(_) => 3,
            CliError::NoConvergence(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Invariant(m) | CliError::Precision(m) | CliError::NoConvergence(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let m = e.to_string();
        match e {
            CoreError::Domain { .. } | CoreError::SeedTooClose { .. } | CoreError::InnerTooClose { .. } => {
                CliError::Usage(m)
            }
            CoreError::PrecisionInadequate { .. } => CliError::Precision(m),
            CoreError::NoCrossing { .. }
            | CoreError::Bracket { .. }
            | CoreError::BoundaryAccuracy { .. }
            | CoreError::TooFewRecords { .. } => CliError::NoConvergence(m),
            CoreError::BlowUp { .. } | CoreError::Invariant(_) | CoreError::ExtPrec(_) => CliError::Invariant(m),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "splitlab", version, about = "Homoclinic splitting for the fourth-order solitary-wave equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eps_min: Option<f64>,
    #[arg(long)]
    eps_max: Option<f64>,
    #[arg(long)]
    eps_steps: Option<usize>,
    #[arg(long)]
    n_min: Option<u32>,
    #[arg(long)]
    n_max: Option<u32>,
    /// std, dd or qd
    #[arg(long)]
    precision: Option<PrecisionMode>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    format: Option<Format>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// File of `key = value` lines; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Planar phase portrait: ring orbits and separatrices.
    Portrait {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        orbits: Option<usize>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Closed-form soliton samples and singularity geometry.
    Soliton {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        x_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        x_max: Option<f64>,
        #[arg(long)]
        x_steps: Option<usize>,
    },
    /// One shot: S(eps).
    Shoot {
        #[command(flatten)]
        common: Common,
        /// Continue past the section and record the closest return.
        #[arg(long)]
        return_test: bool,
    },
    /// S on a uniform eps grid, with amplitude fits.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Homoclinic values eps_n for n in [n-min, n-max].
    Roots {
        #[command(flatten)]
        common: Common,
        /// Relative bracket half-width around alpha/(n pi).
        #[arg(long)]
        half_width: Option<f64>,
    },
    /// Exact coefficients of the inner-equation series.
    InnerSeries {
        #[command(flatten)]
        common: Common,
        /// Highest coefficient index.
        #[arg(long = "n", short = 'N')]
        order: Option<usize>,
    },
    /// Stokes constant from the inner equation.
    Stokes {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        y: Option<f64>,
        #[arg(long)]
        l: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
    },
    /// Runs the invariant suite; nonzero exit on any failure.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Portrait { common, .. }
            | Command::Soliton { common, .. }
            | Command::Shoot { common, .. }
            | Command::Sweep { common }
            | Command::Roots { common, .. }
            | Command::InnerSeries { common, .. }
            | Command::Stokes { common, .. }
            | Command::Verify { common } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Portrait { .. } => "portrait",
            Command::Soliton { .. } => "soliton",
            Command::Shoot { .. } => "shoot",
            Command::Sweep { .. } => "sweep",
            Command::Roots { .. } => "roots",
            Command::InnerSeries { .. } => "inner-series",
            Command::Stokes { .. } => "stokes",
            Command::Verify { .. } => "verify",
        }
    }
}

/// Fills and validates the config before anything is computed.
fn resolve(cmd: &Command) -> Result<RunConfig, CliError> {
    let c = cmd.common();
    let file = match &c.config {
        Some(p) => config::read_config_file(p)?,
        None => Default::default(),
    };
    let r = Resolver::new(file);
    let mut cfg = RunConfig {
        command: cmd.name().to_string(),
        format: Some(r.or(c.format, "format", Format::Json)?),
        ..Default::default()
    };
    let gamma = |default: f64| r.or(c.gamma, "gamma", default);
    match cmd {
        Command::Portrait { orbits, radius, t_max, dt, .. } => {
            let g = gamma(-0.1)?;
            if !(g > -1.0 / 9.0) {
                return Err(CliError::Usage(format!("--gamma must exceed -1/9, got {g}")));
            }
            cfg.gamma = Some(g);
            cfg.orbits = Some(r.or(*orbits, "orbits", 12)?);
            cfg.radius = Some(config::positive("radius", r.or(*radius, "radius", 0.5)?)?);
            cfg.t_max = Some(config::positive("t-max", r.or(*t_max, "t-max", 16.0)?)?);
            cfg.dt = Some(config::positive("dt", r.or(*dt, "dt", 0.05)?)?);
        }
        Command::Soliton { x_min, x_max, x_steps, .. } => {
            let g = gamma(-0.1)?;
            if !(g > -1.0 / 9.0) {
                return Err(CliError::Usage(format!("--gamma must exceed -1/9, got {g}")));
            }
            cfg.gamma = Some(g);
            let (lo, hi) = (r.or(*x_min, "x-min", -10.0)?, r.or(*x_max, "x-max", 10.0)?);
            let steps = r.or(*x_steps, "x-steps", 201)?;
            if !(lo < hi) || steps < 2 {
                return Err(CliError::Usage("need x-min < x-max and x-steps >= 2".into()));
            }
            (cfg.x_min, cfg.x_max, cfg.x_steps) = (Some(lo), Some(hi), Some(steps));
        }
        Command::Shoot { return_test, .. } => {
            let g = config::splitting_gamma(gamma(-0.1)?)?;
            let e = config::positive("eps", r.need(c.eps, "eps")?)?;
            cfg.gamma = Some(g);
            cfg.eps = Some(e);
            let default = splitlab_core::splitting::required_mode(g, e).unwrap_or(PrecisionMode::Qd);
            cfg.precision = Some(r.or(c.precision, "precision", default)?);
            cfg.return_test = Some(*return_test || r.or(None, "return-test", false)?);
        }
        Command::Sweep { .. } => {
            cfg.gamma = Some(config::splitting_gamma(gamma(-0.1)?)?);
            let lo = config::positive("eps-min", r.need(c.eps_min, "eps-min")?)?;
            let hi = config::positive("eps-max", r.need(c.eps_max, "eps-max")?)?;
            let steps = r.or(c.eps_steps, "eps-steps", 60)?;
            if !(lo <= hi) || steps < 1 {
                return Err(CliError::Usage("need eps-min <= eps-max and eps-steps >= 1".into()));
            }
            (cfg.eps_min, cfg.eps_max, cfg.eps_steps) = (Some(lo), Some(hi), Some(steps));
            cfg.precision = Some(r.or(c.precision, "precision", PrecisionMode::Dd)?);
        }
        Command::Roots { half_width, .. } => {
            cfg.gamma = Some(config::splitting_gamma(gamma(-0.1)?)?);
            let (lo, hi) = (r.need(c.n_min, "n-min")?, r.need(c.n_max, "n-max")?);
            if lo < 1 || lo > hi {
                return Err(CliError::Usage("need 1 <= n-min <= n-max".into()));
            }
            (cfg.n_min, cfg.n_max) = (Some(lo), Some(hi));
            let w = config::positive("half-width", r.or(*half_width, "half-width", 0.1)?)?;
            if w >= 0.5 {
                return Err(CliError::Usage(format!("--half-width must be below 0.5, got {w}")));
            }
            cfg.half_width = Some(w);
            cfg.precision = Some(r.or(c.precision, "precision", PrecisionMode::Dd)?);
        }
        Command::InnerSeries { order, .. } => {
            let n = r.or(*order, "n", 20)?;
            if n < 1 {
                return Err(CliError::Usage("--n must be at least 1".into()));
            }
            cfg.order = Some(n);
        }
        Command::Stokes { y, l, h, .. } => {
            let yv = r.or(*y, "y", 20.0)?;
            if !(yv >= 20.0) {
                return Err(CliError::Usage(format!("--y must be at least 20, got {yv}")));
            }
            let lv = r.or(*l, "l", 2.0 * yv)?;
            if !(lv >= 2.0 * yv) {
                return Err(CliError::Usage(format!("--l must be at least 2y, got {lv}")));
            }
            (cfg.y, cfg.l) = (Some(yv), Some(lv));
            cfg.h = Some(config::positive("h", r.or(*h, "h", 0.5)?)?);
            cfg.precision = Some(r.or(c.precision, "precision", PrecisionMode::Dd)?);
        }
        Command::Verify { .. } => {}
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve(&cli.command)?;
    let common = cli.command.common();
    if let Some(j) = common.jobs {
        if j < 1 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let cache = match cli.command {
        Command::Verify { .. } => None,
        _ => cache::Cache::from_env(),
    };
    let key = cache::key(&cfg);
    let cached = cache.as_ref().and_then(|c| c.load(&key));
    let (text, status) = match cached {
        Some(t) => (t, Ok(())),
        None => {
            let (text, status) = commands::execute(&cfg)?;
            if let (Some(c), Ok(())) = (&cache, &status) {
                if let Err(e) = c.store(&key, &text) {
                    eprintln!("warning: cannot write cache in {}: {e}", c.dir().display());
                }
            }
            (text, status)
        }
    };
    match &common.out {
        Some(p) => std::fs::write(p, &text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    status
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
