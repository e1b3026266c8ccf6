//! `qgeom`: run verification suites, classify points of ℍ^{n+1} and
//! compute Chern pairings from the command line.
//!
//! Exit status is 0 when every check passes, 1 when any fails and 2 on
//! usage or configuration errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use qgeom::config::{EngineMode, SuiteConfig};
use qgeom::quotient::Pairing;
use qgeom::report::{all_pass, emit, ReportFormat};
use qgeom::swann::{classify, SpherePoint, ThetaConvention};
use qgeom::tensor::Grid;
use std::path::PathBuf;
use std::process::ExitCode;
use thiserror::Error;

#[derive(Parser)]
#[command(name = "qgeom", version, about = "Numerical checks of quaternionic geometry on ℍPⁿ")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite, or `all`.
    Verify(VerifyArgs),
    /// Locate `u + j v` relative to the zero set of the lifted twistor map.
    Classify(ClassifyArgs),
    /// Pair c₁(F) and ι*c₁(M) with the fixed projective line.
    Chern(ChernArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name: algebra, connection, weyl-flat, fixed-points, twistor,
    /// mu-connection, chern, swann, pontecorvo, grassmann, tcpn or all.
    suite: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    #[arg(long)]
    fd_step: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, value_enum)]
    pairing: Option<PairingArg>,
    #[arg(long, value_enum)]
    theta: Option<ThetaArg>,
    #[arg(long, value_enum, default_value = "json")]
    report: FormatArg,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file with `SuiteConfig` fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Record wall-clock milliseconds per check.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Comma-separated complex entries of `u`, e.g. `1,0` or `1+2i,0`.
    u: String,
    /// Comma-separated complex entries of `v`.
    v: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Print the full witness as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ChernArgs {
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    grid: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Fd,
    Dual,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairingArg {
    Bilinear,
    Hermitian,
}

#[derive(Clone, Copy, ValueEnum)]
enum ThetaArg {
    Connection,
    Reversed,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Md,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error(transparent)]
    Suite(#[from] qgeom::suites::SuiteError),
    #[error(transparent)]
    Config(#[from] qgeom::config::ConfigError),
    #[error(transparent)]
    Geom(#[from] qgeom::GeomError),
    #[error("cannot parse {0:?} as a complex number")]
    Complex(String),
    #[error("u and v need the same nonzero length")]
    Length,
    #[error("QGEOM_THREADS must be a positive integer")]
    Threads,
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Pass,
    Fail,
}

fn load_config(args: &VerifyArgs) -> Result<SuiteConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.clone(), source })?;
            toml::from_str(&text).map_err(|source| CliError::Toml { path: path.clone(), source })?
        }
        None => SuiteConfig::default(),
    };
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if args.samples.is_some() {
        cfg.samples = args.samples;
    }
    if let Some(v) = args.engine {
        cfg.engine = match v {
            EngineArg::Fd => EngineMode::Fd,
            EngineArg::Dual => EngineMode::Dual,
        };
    }
    if let Some(v) = args.fd_step {
        cfg.fd_step = v;
    }
    if let Some(v) = args.grid {
        cfg.grid = v;
    }
    if let Some(v) = args.pairing {
        cfg.pairing = match v {
            PairingArg::Bilinear => Pairing::Bilinear,
            PairingArg::Hermitian => Pairing::Hermitian,
        };
    }
    if let Some(v) = args.theta {
        cfg.theta = match v {
            ThetaArg::Connection => ThetaConvention::Connection,
            ThetaArg::Reversed => ThetaConvention::Reversed,
        };
    }
    cfg.timing |= args.timing;
    cfg.validate()?;
    Ok(cfg)
}

fn write_output(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Write { path: path.clone(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verify(args: &VerifyArgs) -> Result<Outcome, CliError> {
    let cfg = load_config(args)?;
    let reports = qgeom::suites::run_named(&args.suite, &cfg)?;
    let format = match args.report {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Md => ReportFormat::Md,
    };
    write_output(&emit(&reports, format), args.out.as_ref())?;
    Ok(if all_pass(&reports) { Outcome::Pass } else { Outcome::Fail })
}

fn parse_complex_list(s: &str) -> Result<Vec<Complex64>, CliError> {
    s.split(',').map(|t| t.trim().parse::<Complex64>().map_err(|_| CliError::Complex(t.to_string()))).collect()
}

fn classify_cmd(args: &ClassifyArgs) -> Result<Outcome, CliError> {
    let (u, v) = (parse_complex_list(&args.u)?, parse_complex_list(&args.v)?);
    if u.is_empty() || u.len() != v.len() {
        return Err(CliError::Length);
    }
    let z = SpherePoint::new(u, v);
    if z.r2 == 0.0 {
        return Err(qgeom::GeomError::ZeroTwistor { norm: 0.0 }.into());
    }
    let w = classify(&z, args.tol);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&w).expect("witness serializes"));
    } else {
        println!("{}", serde_json::to_value(w.label).expect("label serializes").as_str().unwrap_or_default());
    }
    Ok(Outcome::Pass)
}

fn chern_cmd(args: &ChernArgs) -> Result<Outcome, CliError> {
    let cfg = SuiteConfig { n: args.n, grid: args.grid, ..Default::default() };
    cfg.validate()?;
    let report = qgeom::chern::restriction_check(args.n, Grid::square(args.grid))?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(if report.defect < 0.01 { Outcome::Pass } else { Outcome::Fail })
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("QGEOM_THREADS") {
        let k: usize = v.trim().parse().map_err(|_| CliError::Threads)?;
        if k == 0 {
            return Err(CliError::Threads);
        }
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Verify(a) => verify(a),
        Command::Classify(a) => classify_cmd(a),
        Command::Chern(a) => chern_cmd(a),
    });
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("qgeom: {e}");
            ExitCode::from(2)
        }
    }
}
