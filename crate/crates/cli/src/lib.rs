//! Command-line front end for `twomode-core`.
//!
//! Every subcommand produces one table, written as CSV (default) or JSON to
//! `--output` or stdout. Exit status: 0 success, 2 usage, 3 divergent or
//! unconverged, 4 I/O.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use twomode_core::scaling::fit_series;
use twomode_core::spectrum::eigensystem;
use twomode_core::{
    asymptotics, build_hamiltonian, divergence_coefficient, eigenvalues, gs_energy_density,
    lambda_d_of_mu, minimize_theta, mu_of_lambda_d, observables, sweep, xi12_quadrature,
    xi_coefficient, xi_divergent_form, Branch, DirectSource, EnsembleResult, Error, FitTarget,
    GridSpec, ModelParams, SpectrumCache, SpectrumSource, SumControl, SweepSeries,
};

mod table;

pub use table::{Cell, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUN: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Help or version text requested; not a failure.
    #[error("{0}")]
    Display(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Display(_) => EXIT_OK,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Run(e) => match e {
                Error::Io { .. } | Error::CacheCorrupt { .. } => EXIT_IO,
                Error::InvalidParameter(_)
                | Error::Domain(_)
                | Error::InsufficientPoints { .. }
                | Error::NonPositiveData { .. } => EXIT_USAGE,
                _ => EXIT_RUN,
            },
        }
    }
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parsed command line.
#[derive(Debug, Clone, PartialEq, Parser)]
#[command(name = "twomode", version, about = "Two-mode attractive boson thermodynamics")]
#[command(args_override_self = true)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Eigenvalues of one particle-number sector.
    Spectrum(SpectrumArgs),
    /// Grand-canonical averages at one (lambda, beta, mu).
    Ensemble(EnsembleArgs),
    /// Ensemble averages along lambda = lambda_D - d on a geometric grid.
    Sweep(SweepArgs),
    /// Power-law fit of Xi over a sweep.
    Fit(FitArgs),
    /// Variational ground state of one sector.
    Groundstate(GroundStateArgs),
    /// Mean-field closed forms near the divergence.
    Meanfield(MeanFieldArgs),
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct OutputArgs {
    /// Output file (stdout if absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Directory for persisted spectra.
    #[arg(long, env = "TWOMODE_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct SolverArgs {
    /// Relative tail tolerance of the sector sum.
    #[arg(long, default_value_t = 1e-7, value_parser = parse_tol)]
    pub tol: f64,
    /// Largest sector the sum may reach.
    #[arg(long, default_value_t = 50_000)]
    pub m_cap: usize,
    /// Also compute the eigenvector-based <F>.
    #[arg(long)]
    pub with_f: bool,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_parser = parse_finite)]
    pub lambda: f64,
    /// Label states by swap parity (needs eigenvectors).
    #[arg(long)]
    pub vectors: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct EnsembleArgs {
    #[arg(long, value_parser = parse_finite)]
    pub lambda: f64,
    #[arg(long, value_parser = parse_finite, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_finite)]
    pub beta: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct GridArgs {
    #[arg(long = "lambda-d", value_parser = parse_finite)]
    pub lambda_d: f64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_finite)]
    pub beta: f64,
    #[arg(long, default_value_t = 1e-2, value_parser = parse_finite)]
    pub dmin: f64,
    #[arg(long, default_value_t = 1e-1, value_parser = parse_finite)]
    pub dmax: f64,
    #[arg(long, default_value_t = 8)]
    pub points: usize,
}

impl GridArgs {
    pub fn grid(&self) -> GridSpec {
        GridSpec::new(self.dmin, self.dmax, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Xi,
    XiMinusOne,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, default_value_t = Target::Xi)]
    pub target: Target,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct GroundStateArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_parser = parse_finite)]
    pub lambda: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct MeanFieldArgs {
    #[arg(long = "lambda-d", value_parser = parse_finite, required_unless_present = "mu", conflicts_with = "mu")]
    pub lambda_d: Option<f64>,
    #[arg(long, value_parser = parse_finite, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Coupling at which to evaluate the near-divergence forms.
    #[arg(long, value_parser = parse_finite)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1.0, value_parser = parse_finite)]
    pub beta: f64,
    /// Also evaluate the Xi_1, Xi_2 double integrals.
    #[arg(long)]
    pub quadrature: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn parse_finite(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let v = parse_finite(s)?;
    if v > 0.0 && v <= 1e-2 {
        Ok(v)
    } else {
        Err(format!("tolerance must lie in (0, 1e-2], got {s}"))
    }
}

impl Command {
    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::Spectrum(a) => &a.out,
            Command::Ensemble(a) => &a.out,
            Command::Sweep(a) => &a.out,
            Command::Fit(a) => &a.out,
            Command::Groundstate(a) => &a.out,
            Command::Meanfield(a) => &a.out,
        }
    }
}

/// Flat `key = value` lines, one flag per line. `#` starts a comment.
/// Boolean flags take `true` or `false`.
pub fn config_file_args(text: &str, origin: &Path) -> Result<Vec<String>, CliError> {
    let mut args = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "--config {}: line {} is not `key = value`",
                origin.display(),
                no + 1
            ))
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim().trim_matches('"');
        match value {
            "true" => args.push(format!("--{key}")),
            "false" => {}
            _ => args.push(format!("--{key}={value}")),
        }
    }
    Ok(args)
}

/// Parse argv, splicing in `--config FILE` entries right after the
/// subcommand so explicit flags override them.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let mut args: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let mut config_path = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy().into_owned();
        if a == "--config" {
            let path = args
                .get(i + 1)
                .ok_or_else(|| CliError::Usage("--config needs a file argument".into()))?;
            config_path = Some(PathBuf::from(path));
            args.drain(i..i + 2);
        } else if let Some(p) = a.strip_prefix("--config=") {
            config_path = Some(PathBuf::from(p));
            args.remove(i);
        } else {
            i += 1;
        }
    }
    if let Some(path) = config_path {
        let text = fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
        let extra = config_file_args(&text, &path)?;
        let at = args
            .iter()
            .skip(1)
            .position(|a| !a.to_string_lossy().starts_with('-'))
            .map_or(args.len(), |p| p + 2);
        args.splice(at..at, extra.into_iter().map(OsString::from));
    }
    RunConfig::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Display(e.to_string())
        }
        _ => CliError::Usage(e.render().to_string()),
    })
}

const RESULT_COLUMNS: [&str; 12] = [
    "lambda",
    "lambda_d",
    "beta",
    "mu",
    "log_xi",
    "xi",
    "mean_m",
    "energy",
    "mean_f",
    "sigma_m",
    "m_max_used",
    "converged",
];

fn result_row(r: &EnsembleResult) -> Vec<Cell> {
    let lambda_d = lambda_d_of_mu(r.params.mu).map(|p| p.lambda_d).ok();
    vec![
        Cell::Num(r.params.lambda),
        lambda_d.map_or(Cell::Null, Cell::Num),
        Cell::Num(r.params.beta),
        Cell::Num(r.params.mu),
        Cell::Num(r.log_xi),
        r.xi.map_or(Cell::Null, Cell::Num),
        Cell::Num(r.mean_m),
        Cell::Num(r.energy),
        r.mean_f.map_or(Cell::Null, Cell::Num),
        Cell::Num(r.sigma_m),
        Cell::Int(r.m_max_used as i64),
        Cell::Bool(r.converged),
    ]
}

/// Standard result table, one row per ensemble point.
pub fn results_table<'a>(results: impl IntoIterator<Item = &'a EnsembleResult>) -> Table {
    let mut t = Table::new(&RESULT_COLUMNS);
    for r in results {
        t.push(result_row(r));
    }
    t
}

fn source(out: &OutputArgs) -> Result<Box<dyn SpectrumSource>, CliError> {
    Ok(match &out.cache_dir {
        Some(dir) => Box::new(SpectrumCache::with_dir(dir)?),
        None => Box::new(DirectSource),
    })
}

fn control(s: &SolverArgs) -> SumControl {
    SumControl::new(s.tol, s.m_cap)
}

fn run_sweep(grid: &GridArgs, solver: &SolverArgs, out: &OutputArgs) -> Result<SweepSeries, CliError> {
    let src = source(out)?;
    Ok(sweep(
        grid.lambda_d,
        grid.beta,
        &grid.grid(),
        &control(solver),
        src.as_ref(),
        solver.with_f,
    )?)
}

/// Outcome of a command: the table to emit, and an error to report after
/// emitting (unconverged sweep points still produce output).
pub struct Outcome {
    pub table: Table,
    pub deferred: Option<CliError>,
}

fn done(table: Table) -> Result<Outcome, CliError> {
    Ok(Outcome {
        table,
        deferred: None,
    })
}

pub fn execute(config: &RunConfig) -> Result<Outcome, CliError> {
    match &config.command {
        Command::Spectrum(a) => {
            let h = build_hamiltonian(a.m, a.lambda);
            let spec = if a.vectors {
                eigensystem(&h)?
            } else {
                eigenvalues(&h)?
            };
            let mut t = Table::new(&["m", "lambda", "index", "energy", "parity"]);
            for (k, e) in spec.eigenvalues.iter().enumerate() {
                let parity = spec
                    .parities
                    .as_ref()
                    .map_or(Cell::Null, |p| Cell::Int(p[k] as i64));
                t.push(vec![
                    Cell::Int(a.m as i64),
                    Cell::Num(a.lambda),
                    Cell::Int(k as i64),
                    Cell::Num(*e),
                    parity,
                ]);
            }
            done(t)
        }
        Command::Ensemble(a) => {
            let src = source(&a.out)?;
            let params = ModelParams::new(a.lambda, a.beta, a.mu);
            match observables(&params, &control(&a.solver), src.as_ref(), a.solver.with_f) {
                Ok(r) => done(results_table([&r])),
                Err(Error::NotConverged { partial }) => Ok(Outcome {
                    table: results_table([partial.as_ref()]),
                    deferred: Some(CliError::Run(Error::NotConverged { partial })),
                }),
                Err(e) => Err(e.into()),
            }
        }
        Command::Sweep(a) => {
            let series = run_sweep(&a.grid, &a.solver, &a.out)?;
            let table = results_table(series.points.iter().map(|p| &p.result));
            let deferred = series
                .points
                .iter()
                .find(|p| !p.result.converged)
                .map(|p| {
                    CliError::Run(Error::NotConverged {
                        partial: Box::new(p.result.clone()),
                    })
                });
            Ok(Outcome { table, deferred })
        }
        Command::Fit(a) => {
            let series = run_sweep(&a.grid, &a.solver, &a.out)?;
            let target = match a.target {
                Target::Xi => FitTarget::Xi,
                Target::XiMinusOne => FitTarget::XiMinusOne,
            };
            let fit = fit_series(&series, target)?;
            let coefficient = divergence_coefficient(&series).ok();
            let mut t = Table::new(&[
                "lambda_d",
                "beta",
                "exponent",
                "amplitude",
                "r_squared",
                "window_min",
                "window_max",
                "n_points",
                "coefficient",
            ]);
            t.push(vec![
                Cell::Num(series.lambda_d),
                Cell::Num(series.beta),
                Cell::Num(fit.exponent),
                Cell::Num(fit.amplitude),
                Cell::Num(fit.r_squared),
                Cell::Num(fit.window.0),
                Cell::Num(fit.window.1),
                Cell::Int(fit.n_points as i64),
                coefficient.map_or(Cell::Null, Cell::Num),
            ]);
            done(t)
        }
        Command::Groundstate(a) => {
            if a.m == 0 {
                return Err(CliError::Usage("--m must be at least 1".into()));
            }
            if a.lambda < 0.0 {
                return Err(CliError::Usage("--lambda must be non-negative".into()));
            }
            let g = minimize_theta(a.m, a.lambda);
            let mut t = Table::new(&[
                "m",
                "lambda",
                "theta_1",
                "theta_2",
                "energy",
                "energy_density",
                "e_g",
            ]);
            t.push(vec![
                Cell::Int(a.m as i64),
                Cell::Num(a.lambda),
                Cell::Num(g.theta_stars[0]),
                g.theta_stars.get(1).map_or(Cell::Null, |&x| Cell::Num(x)),
                Cell::Num(g.energy),
                Cell::Num(g.energy_density),
                Cell::Num(gs_energy_density(a.lambda)),
            ]);
            done(t)
        }
        Command::Meanfield(a) => meanfield_table(a).map(|table| Outcome {
            table,
            deferred: None,
        }),
    }
}

fn meanfield_table(a: &MeanFieldArgs) -> Result<Table, CliError> {
    let point = match (a.lambda_d, a.mu) {
        (Some(ld), _) => mu_of_lambda_d(ld)?,
        (None, Some(mu)) => lambda_d_of_mu(mu)?,
        (None, None) => return Err(CliError::Usage("meanfield needs --lambda-d or --mu".into())),
    };
    let mut columns = vec!["lambda_d", "mu", "branch"];
    let mut row = vec![
        Cell::Num(point.lambda_d),
        Cell::Num(point.mu),
        Cell::Str(match point.branch {
            Branch::Le1 => "le1".into(),
            Branch::Gt1 => "gt1".into(),
        }),
    ];
    if let Some(lambda) = a.lambda {
        let pred = asymptotics(lambda, point.lambda_d, a.beta)?;
        let xi = xi_coefficient(lambda, point.lambda_d, a.beta).ok();
        let form = xi_divergent_form(lambda, point.lambda_d, a.beta).ok();
        columns.extend([
            "lambda",
            "beta",
            "coefficient",
            "mean_m",
            "mean_f",
            "energy",
            "sigma_m",
            "xi_coefficient",
            "xi_divergent",
        ]);
        row.extend([
            Cell::Num(lambda),
            Cell::Num(a.beta),
            Cell::Num(pred.coefficient),
            Cell::Num(pred.mean_m),
            Cell::Num(pred.mean_f),
            Cell::Num(pred.energy),
            Cell::Num(pred.sigma_m),
            xi.map_or(Cell::Null, Cell::Num),
            form.map_or(Cell::Null, Cell::Num),
        ]);
        if a.quadrature {
            let q = xi12_quadrature(lambda, a.beta, point.mu)?;
            columns.extend(["xi1", "xi2", "quadrature_rel_error"]);
            row.extend([Cell::Num(q.xi1), Cell::Num(q.xi2), Cell::Num(q.rel_error)]);
        }
    }
    let mut t = Table::new(&columns);
    t.push(row);
    Ok(t)
}

/// Write `table` to `path` (stdout if `None`).
pub fn emit_table(table: &Table, format: Format, path: Option<&Path>) -> Result<(), CliError> {
    let text = match format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    };
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_error(p, e)),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())
                .and_then(|_| lock.flush())
                .map_err(|e| io_error(Path::new("<stdout>"), e))
        }
    }
}

fn run_config(config: &RunConfig) -> Result<(), CliError> {
    let out = config.command.output();
    if out.threads > 0 {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(out.threads)
            .build_global();
    }
    let outcome = execute(config)?;
    emit_table(&outcome.table, out.format, out.output.as_deref())?;
    match outcome.deferred {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Full program: parse, run, emit. Returns the process exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let config = match parse_config(argv) {
        Ok(c) => c,
        Err(CliError::Display(text)) => {
            print!("{text}");
            return EXIT_OK;
        }
        Err(e) => {
            eprint!("{e}");
            if !e.to_string().ends_with('\n') {
                eprintln!();
            }
            return e.exit_code();
        }
    };
    match run_config(&config) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("twomode: {e}");
            e.exit_code()
        }
    }
}
