//! `rpde`: sample rough drivers, solve the parabolic evolution they drive,
//! and verify the library's guarantees from the command line.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure (including failed
//! checks), 2 invalid configuration, 3 blow-up detected, 4 convergence-rate
//! floor violated.

mod config;

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rpde_core::calculus::{compose_diffusion, sewing_error_probe};
use rpde_core::io;
use rpde_core::solver::{cocycle_check, global_solve, mild_residual};
use rpde_core::suite;

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(std::io::Error),
    Core(rpde_core::Error),
    RateFloor { beta: f64, rate: f64, floor: f64 },
    BoundExceeded { value: f64, bound: f64 },
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::RateFloor { beta, rate, floor } => write!(
                f,
                "fitted convergence rate {rate:.3} at level gain {beta:.2} falls below the floor {floor:.3}"
            ),
            CliError::BoundExceeded { value, bound } => {
                write!(f, "discrepancy {value:.3e} exceeds the requested bound {bound:.3e}")
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<rpde_core::Error> for CliError {
    fn from(e: rpde_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use rpde_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::RateFloor { .. } => 4,
            CliError::BoundExceeded { .. } => 1,
            CliError::Core(e) => match e {
                E::BlowUp { .. } => 3,
                E::InvalidConfig { .. }
                | E::InvalidAlpha { .. }
                | E::InvalidHurst { .. }
                | E::InvalidRegularity { .. } => 2,
                _ => 1,
            },
        }
    }
}

#[derive(Parser)]
#[command(
    name = "rpde",
    about = "Rough-path driven semilinear parabolic PDE solver",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON configuration file; omit to use built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (falls back to $RPDE_OUT, then the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the driver seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of driver grid steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Override the time horizon.
    #[arg(long)]
    horizon: Option<f64>,
    /// Override the Hurst index of the sampled driver.
    #[arg(long)]
    hurst: Option<f64>,
    /// Override the diffusion strength.
    #[arg(long)]
    lambda: Option<f64>,
    /// Override the fixed-point tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a driver and write it as driver.csv.
    Lift(CommonArgs),
    /// Solve the evolution; writes driver.csv, solution.csv, windows.csv,
    /// norms.csv, and constants.json.
    Solve(CommonArgs),
    /// Measure compensated-integration convergence rates; writes rates.csv.
    Converge {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of window halvings to probe.
        #[arg(long, default_value_t = 6)]
        halvings: u32,
    },
    /// Compare restarting mid-horizon against solving in one sweep.
    Cocycle {
        #[command(flatten)]
        common: CommonArgs,
        /// Split index (defaults to the middle of the grid).
        #[arg(long)]
        tau: Option<usize>,
        /// Fail (exit 1) if the discrepancy exceeds this bound.
        #[arg(long)]
        bound: Option<f64>,
    },
    /// Run the built-in verification suite.
    Check,
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.driver.seed = seed;
    }
    if let Some(steps) = common.steps {
        cfg.driver.steps = steps;
    }
    if let Some(horizon) = common.horizon {
        cfg.driver.horizon = horizon;
    }
    if let Some(hurst) = common.hurst {
        cfg.driver.hurst = hurst;
    }
    if let Some(lambda) = common.lambda {
        cfg.coefficients.lambda = lambda;
    }
    if let Some(tol) = common.tol {
        cfg.solver.picard_tol = tol;
    }
    Ok(cfg)
}

fn out_dir(common: &CommonArgs) -> Result<PathBuf, CliError> {
    let dir = common
        .out
        .clone()
        .or_else(|| std::env::var_os("RPDE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_file(
    dir: &Path,
    name: &str,
    write: impl FnOnce(&mut BufWriter<fs::File>) -> Result<(), CliError>,
) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut w = BufWriter::new(fs::File::create(&path)?);
    write(&mut w)?;
    w.flush()?;
    Ok(path)
}

fn cmd_lift(common: &CommonArgs) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let dir = out_dir(common)?;
    let driver = cfg.build_driver()?;
    let meta = cfg.driver_metadata(driver.generator);
    let path = write_file(&dir, "driver.csv", |w| {
        io::write_rough_path(w, &driver.path, &meta)?;
        Ok(())
    })?;
    println!(
        "driver: {} steps over [0, {}], alpha {}, level-1 seminorm {:.4}, level-2 seminorm {:.4}, additivity defect {:.2e}",
        driver.path.grid().len() - 1,
        driver.path.grid().span(),
        driver.path.alpha(),
        driver.path.alpha_norm(),
        driver.path.second_level_norm(),
        driver.path.chen_defect(),
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_solve(common: &CommonArgs) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let dir = out_dir(common)?;
    let driver = cfg.build_driver()?;
    let scale = cfg.build_scale()?;
    let y0 = cfg.build_initial()?;
    let coeffs = cfg.build_coefficients()?;
    let solver_cfg = cfg.build_solver_config()?;

    let record = global_solve(&y0, &coeffs, &driver.path, &scale, &solver_cfg)?;
    // Full-resolution residual: recomputes every mild-equation term through
    // an independent summation path; depth-limited quadrature comparisons
    // belong to the converge command.
    let residuals = mild_residual(&record.path, &coeffs, &driver.path, &scale, None)?;
    let norms = record.path.controlled_norm(&driver.path)?;

    let meta = cfg.driver_metadata(driver.generator);
    write_file(&dir, "driver.csv", |w| {
        io::write_rough_path(w, &driver.path, &meta)?;
        Ok(())
    })?;
    write_file(&dir, "solution.csv", |w| {
        io::write_solution_csv(w, &record, &residuals)?;
        Ok(())
    })?;
    write_file(&dir, "windows.csv", |w| {
        io::write_windows_csv(w, &record.windows)?;
        Ok(())
    })?;
    write_file(&dir, "norms.csv", |w| {
        io::write_norm_breakdown(w, &norms)?;
        Ok(())
    })?;
    write_file(&dir, "constants.json", |w| {
        io::write_constants_json(w, &record.constants)?;
        Ok(())
    })?;

    let max_residual = residuals.iter().cloned().fold(0.0f64, f64::max);
    println!(
        "solved over {} windows; controlled norm {:.4}, max mild residual {:.2e}, window constant {:.3}",
        record.windows.len(),
        norms.total,
        max_residual,
        record.constants.c,
    );
    println!(
        "wrote driver.csv, solution.csv, windows.csv, norms.csv, constants.json in {}",
        dir.display()
    );
    Ok(())
}

fn cmd_converge(common: &CommonArgs, halvings: u32) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let dir = out_dir(common)?;
    let driver = cfg.build_driver()?;
    let scale = cfg.build_scale()?;
    let y0 = cfg.build_initial()?;
    let coeffs = cfg.build_coefficients()?;
    let solver_cfg = cfg.build_solver_config()?;

    let record = global_solve(&y0, &coeffs, &driver.path, &scale, &solver_cfg)?;
    let composed = compose_diffusion(&record.path, coeffs.diffusion.as_ref())?;

    let alpha = solver_cfg.alpha;
    let end = driver.path.grid().len() - 1;
    let mut blocks = Vec::new();
    let mut violation: Option<CliError> = None;
    for beta in [0.0, alpha, 2.0 * alpha] {
        let probe = sewing_error_probe(&composed, &driver.path, &scale, 0, end, beta, halvings)?;
        let floor = 3.0 * alpha - beta - 0.1;
        println!(
            "level gain {beta:.2}: fitted rate {:.3} over {} windows (floor {floor:.3})",
            probe.fitted_rate,
            probe.windows.len()
        );
        if probe.fitted_rate < floor && violation.is_none() {
            violation = Some(CliError::RateFloor {
                beta,
                rate: probe.fitted_rate,
                floor,
            });
        }
        blocks.push((beta, probe));
    }
    let path = write_file(&dir, "rates.csv", |w| {
        io::write_rates_csv(w, &blocks)?;
        Ok(())
    })?;
    println!("wrote {}", path.display());
    match violation {
        Some(v) => Err(v),
        None => Ok(()),
    }
}

fn cmd_cocycle(
    common: &CommonArgs,
    tau: Option<usize>,
    bound: Option<f64>,
) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let driver = cfg.build_driver()?;
    let scale = cfg.build_scale()?;
    let y0 = cfg.build_initial()?;
    let coeffs = cfg.build_coefficients()?;
    let solver_cfg = cfg.build_solver_config()?;

    let n = driver.path.grid().len() - 1;
    let tau = tau.unwrap_or(n / 2);
    if tau > n {
        return Err(CliError::Config(format!(
            "tau {tau} outside the driver grid (0..={n})"
        )));
    }
    let discrepancy = cocycle_check(&y0, &coeffs, &driver.path, &scale, &solver_cfg, tau)?;
    println!(
        "restart discrepancy at split index {tau} (t = {}): {discrepancy:.3e}",
        driver.path.grid().t(tau)
    );
    if let Some(b) = bound {
        if discrepancy > b {
            return Err(CliError::BoundExceeded {
                value: discrepancy,
                bound: b,
            });
        }
    }
    Ok(())
}

fn cmd_check() -> Result<(), CliError> {
    let outcomes = suite::run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let failures = outcomes.iter().filter(|o| !o.passed).count();
    if failures > 0 {
        return Err(CliError::Io(std::io::Error::other(format!(
            "{failures} of {} checks failed",
            outcomes.len()
        ))));
    }
    println!("all {} checks passed", outcomes.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Lift(common) => cmd_lift(common),
        Command::Solve(common) => cmd_solve(common),
        Command::Converge { common, halvings } => cmd_converge(common, *halvings),
        Command::Cocycle { common, tau, bound } => cmd_cocycle(common, *tau, *bound),
        Command::Check => cmd_check(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
