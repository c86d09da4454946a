//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 numeric failure, 4 verification
//! failure.

pub mod figure;
pub mod prior_file;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::Rational;

use crate::error::Error;
use crate::estimator::{check_summability, default_kappa_grid, PrescribedEstimator, DEFAULT_TRUNCATION};
use crate::gamma_baseline::GammaPrior;
use crate::moment_solver::{
    check_tail_bounds, solve_direct, solve_direct_escalating, solve_recursive, tilt_to_prior,
    MomentSolution, Method,
};
use crate::numerics::decimal::{parse_float, parse_rational};
use crate::numerics::{BigFloat, ExactRational, PrecisionConfig, Real};
use crate::posterior::{moment_condition_check, verify_median_property, TiltedPrior};

use figure::{cdf_table, gap_table, medians_table, Levels};
use prior_file::PriorFile;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// Environment variable overriding the default float precision.
pub const BITS_ENV: &str = "MEDIAN_PRIOR_BITS";

#[derive(Debug, Parser)]
#[command(name = "median-prior", version, about = "Priors with a prescribed Poisson posterior median")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the level-M prior and write it as JSON.
    Construct(ConstructArgs),
    /// Re-check a prior file: normalization, moment balance, medians, tail bounds.
    Verify(VerifyArgs),
    /// Emit figure data as CSV.
    Figure(FigureArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Rational,
    Bigfloat,
}

#[derive(Debug, Args)]
pub struct PrecisionArgs {
    #[arg(long, value_enum, default_value_t = Backend::Rational)]
    pub backend: Backend,
    /// Float mantissa bits (default 256, or $MEDIAN_PRIOR_BITS).
    #[arg(long)]
    pub bits: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    /// Saturation point; f is constant from here on.
    #[arg(long)]
    pub c0: Option<u64>,
    #[arg(long = "M")]
    pub m: usize,
    #[command(flatten)]
    pub precision: PrecisionArgs,
    #[arg(short = 'o', long = "output", default_value = "-")]
    pub output: String,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Prior file written by `construct` ('-' for stdin).
    pub input: String,
    /// Largest observation checked (default M - 1).
    #[arg(long)]
    pub ymax: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FigureKind {
    /// Gamma-prior median minus mean.
    Gap,
    /// Tilted-prior cdfs against the gamma cdf.
    Cdf,
    /// Posterior medians of tilted priors.
    Medians,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    pub which: FigureKind,
    #[arg(long)]
    pub a: Option<String>,
    #[arg(long)]
    pub b: Option<String>,
    /// Comma-separated truncation levels.
    #[arg(long = "M", value_delimiter = ',')]
    pub m: Vec<usize>,
    #[arg(long)]
    pub ymax: Option<u64>,
    /// Gamma cdf samples for `cdf`.
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    #[command(flatten)]
    pub precision: PrecisionArgs,
    #[arg(short = 'o', long = "output", default_value = "-")]
    pub output: String,
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }

    fn numeric(message: impl Into<String>) -> Self {
        CliError { code: EXIT_NUMERIC, message: message.into() }
    }

    fn verify(message: impl Into<String>) -> Self {
        CliError { code: EXIT_VERIFY, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Precondition(_) | Error::Parse(_) => CliError::usage(e.to_string()),
            _ => CliError::numeric(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            if code == 0 {
                let _ = stdout.write_all(text.as_bytes());
            } else {
                let _ = stderr.write_all(text.as_bytes());
            }
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let result = match &cli.command {
        Command::Construct(args) => cmd_construct(args, stdout, stderr),
        Command::Verify(args) => cmd_verify(args, stdout),
        Command::Figure(args) => cmd_figure(args, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

fn precision_config(bits: Option<u32>) -> CliResult<PrecisionConfig> {
    let bits = match bits {
        Some(b) => b,
        None => match std::env::var(BITS_ENV) {
            Ok(text) => text
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("{BITS_ENV}={text:?} is not a bit count")))?,
            Err(_) => PrecisionConfig::DEFAULT_BITS,
        },
    };
    Ok(PrecisionConfig::new(bits)?)
}

fn estimator_from_flags(a: &str, b: &str, c0: Option<u64>) -> CliResult<PrescribedEstimator> {
    let a = parse_rational(a)?;
    let b = parse_rational(b)?;
    Ok(match c0 {
        Some(c0) => PrescribedEstimator::saturating_affine(a, b, c0)?,
        None => PrescribedEstimator::affine(a, b)?,
    })
}

/// Writes `bytes` to stdout for `-`, otherwise atomically replaces `path`.
fn write_output(path: &str, bytes: &[u8], stdout: &mut dyn Write) -> CliResult<()> {
    if path == "-" {
        return stdout
            .write_all(bytes)
            .map_err(|e| CliError::usage(format!("cannot write to stdout: {e}")));
    }
    let target = PathBuf::from(path);
    let dir = match target.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let io_err = |e: std::io::Error| CliError::usage(format!("cannot write {path}: {e}"));
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.persist(&target).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn read_input(path: &str) -> CliResult<String> {
    if path == "-" {
        let mut text = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut text)
            .map_err(|e| CliError::usage(format!("cannot read stdin: {e}")))?;
        return Ok(text);
    }
    std::fs::read_to_string(Path::new(path)).map_err(|e| CliError::usage(format!("cannot read {path}: {e}")))
}

pub fn cmd_construct(args: &ConstructArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let f = estimator_from_flags(&args.a, &args.b, args.c0)?;
    let config = precision_config(args.precision.bits)?;
    // shape errors (M = 0, M > c0) are usage errors
    f.support_points(args.m)?;

    let report = check_summability(&f, &default_kappa_grid(), DEFAULT_TRUNCATION)?;
    if !report.admissible {
        let _ = writeln!(
            stderr,
            "warning: summability check failed: a ≥ 1/e; finite-M construction only"
        );
    }

    let file = match args.precision.backend {
        Backend::Rational => {
            let direct = solve_direct::<ExactRational>(&f, args.m, &(), &config).map_err(numeric)?;
            let recursive = solve_recursive::<ExactRational>(&f, args.m, &(), &config).map_err(numeric)?;
            if direct.weights() != recursive.weights() {
                return Err(CliError::numeric("direct and recursive solutions disagree"));
            }
            let tilted = tilt_to_prior(&direct, config.bits).map_err(numeric)?;
            PriorFile::build(&f, &direct, &tilted, config.bits)
        }
        Backend::Bigfloat => {
            let (direct, used) = solve_direct_escalating(&f, args.m, &config).map_err(numeric)?;
            if used.bits != config.bits {
                let _ = writeln!(stderr, "note: precision raised to {} bits", used.bits);
            }
            let recursive = solve_recursive::<BigFloat>(&f, args.m, &used.bits, &used).map_err(numeric)?;
            let tol = BigFloat::from_f64(used.tolerance, &used.bits);
            if direct
                .weights()
                .iter()
                .zip(recursive.weights())
                .any(|(p, q)| (p.clone() - q).abs() > tol)
            {
                return Err(CliError::numeric("direct and recursive solutions disagree beyond tolerance"));
            }
            let tilted = tilt_to_prior(&direct, used.bits).map_err(numeric)?;
            PriorFile::build(&f, &direct, &tilted, used.bits)
        }
    };
    write_output(&args.output, file.to_json().as_bytes(), stdout)
}

fn numeric(e: Error) -> CliError {
    CliError::numeric(e.to_string())
}

/// Text report and the first failure, if any.
struct Verification {
    report: String,
    failure: Option<String>,
}

impl Verification {
    fn fail(&mut self, message: String) {
        let _ = writeln!(self.report, "FAIL: {message}");
        if self.failure.is_none() {
            self.failure = Some(message);
        }
    }
}

fn parse_all<T>(values: &[String], parse: impl Fn(&str) -> crate::Result<T>) -> CliResult<Vec<T>> {
    values
        .iter()
        .map(|v| parse(v))
        .collect::<crate::Result<Vec<T>>>()
        .map_err(|e| CliError::verify(e.to_string()))
}

pub fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let text = read_input(&args.input)?;
    let file = PriorFile::from_json(&text).map_err(|e| CliError::verify(e.to_string()))?;
    let f = file.estimator.to_estimator().map_err(|e| CliError::verify(e.to_string()))?;
    let m = file.m;
    let mut v = Verification { report: String::new(), failure: None };
    let _ = writeln!(v.report, "prior: {f}, M = {m}, backend {} ({} bits)", file.backend.kind, file.backend.bits);

    let lengths_ok = file.support.len() == m + 1
        && file.weights_pw.len() == m + 1
        && file.weights_px.len() == m + 1
        && file.residuals.len() == m;
    if !lengths_ok {
        v.fail(format!("array lengths do not match M = {m}"));
    } else {
        let config = PrecisionConfig::new(file.backend.bits).map_err(|e| CliError::verify(e.to_string()))?;
        let y_max = args.ymax.unwrap_or(m.saturating_sub(1) as u64);
        // the decimal weights are what a reader of the file sees; check them first
        let decimals = parse_all(&file.weights_pw, |s| parse_float(s, config.bits))?;
        let sum = decimals.iter().fold(rug::Float::with_val(config.bits, 0), |acc, w| acc + w);
        if (sum.clone() - 1u32).abs() > config.tolerance {
            v.fail(format!(
                "weights do not normalize: sum P_W = {}",
                crate::numerics::decimal::format_significant(&sum, 20)
            ));
        }
        match file.backend.kind.as_str() {
            _ if v.failure.is_some() => {}
            "rational" => {
                let (support, weights) = match &file.exact {
                    Some(ex) if ex.support.len() == m + 1 && ex.weights_pw.len() == m + 1 => {
                        let support = parse_all(&ex.support, parse_rational)?;
                        let weights = parse_all(&ex.weights_pw, parse_rational)?;
                        let tol = config.tolerance;
                        if weights
                            .iter()
                            .zip(&decimals)
                            .any(|(w, d)| (w.to_f64() - d.to_f64()).abs() > tol.max(1e-15))
                        {
                            v.fail("decimal weights_pw disagree with the exact weights".into());
                        }
                        (support, weights)
                    }
                    _ => (
                        parse_all(&file.support, parse_rational)?,
                        parse_all(&file.weights_pw, parse_rational)?,
                    ),
                };
                let wrap = |v: Vec<Rational>| v.into_iter().map(ExactRational).collect::<Vec<_>>();
                verify_solution(&file, &f, wrap(support), wrap(weights), &(), &config, y_max, &mut v)?;
            }
            "bigfloat" => {
                let bits = config.bits;
                let support = parse_all(&file.support, |s| parse_float(s, bits).map(BigFloat))?;
                let weights = parse_all(&file.weights_pw, |s| parse_float(s, bits).map(BigFloat))?;
                verify_solution(&file, &f, support, weights, &bits, &config, y_max, &mut v)?;
            }
            other => v.fail(format!("unknown backend {other:?}")),
        }
    }

    match &v.failure {
        None => {
            let _ = writeln!(v.report, "result: PASS");
            stdout.write_all(v.report.as_bytes()).map_err(|e| CliError::usage(e.to_string()))?;
            Ok(())
        }
        Some(first) => {
            let _ = writeln!(v.report, "result: FAIL");
            let _ = stdout.write_all(v.report.as_bytes());
            Err(CliError::verify(first.clone()))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn verify_solution<T: Real>(
    file: &PriorFile,
    f: &PrescribedEstimator,
    support: Vec<T>,
    weights: Vec<T>,
    ctx: &T::Context,
    config: &PrecisionConfig,
    y_max: u64,
    v: &mut Verification,
) -> CliResult<()> {
    let m = file.m;
    let tol = config.tolerance_as::<T>(ctx);

    let expected: Vec<T> = match f.support_points_as(m, ctx) {
        Ok(s) => s,
        Err(e) => {
            v.fail(e.to_string());
            return Ok(());
        }
    };
    if support.iter().zip(&expected).any(|(s, e)| (s.clone() - e).abs() > tol) {
        v.fail("support does not equal f(0), ..., f(M)".into());
        return Ok(());
    }
    let solution = match MomentSolution::new(expected, weights, Method::DirectSolve) {
        Ok(s) => s,
        Err(e) => {
            v.fail(e.to_string());
            return Ok(());
        }
    };
    match solution.check_probability_vector(config) {
        Ok(()) => {
            let _ = writeln!(v.report, "normalization: PASS (sum P_W = {})", solution.weight_sum().to_decimal(20));
        }
        Err(e) => {
            let msg = e.to_string();
            let msg = msg.strip_prefix("numeric failure: ").unwrap_or(&msg).to_string();
            v.fail(msg);
            return Ok(());
        }
    }

    // tilted weights as stored against the recomputed tilt
    let stored_px = parse_all(&file.weights_px, |s| parse_float(s, config.bits).map(BigFloat))?;
    let px_tol = BigFloat::from_f64(config.tolerance, &config.bits);
    let total = stored_px.iter().fold(BigFloat::with_val(config.bits, 0), |a, b| a + b);
    if (total.clone() - BigFloat::with_val(config.bits, 1)).abs() > px_tol {
        v.fail(format!("weights_px do not normalize: sum = {}", total.to_decimal(20)));
    }
    let tilted = tilt_to_prior(&solution, config.bits).map_err(numeric)?;
    if tilted.weights().iter().zip(&stored_px).any(|(a, b)| (a.clone() - b).abs() > px_tol) {
        v.fail("weights_px are not the exponential tilt of weights_pw".into());
    }

    let balance = moment_condition_check(solution.support(), solution.weights(), f, m as u64 - 1);
    let worst = balance.iter().map(|r| r.abs()).fold(T::zero(ctx), |a, r| if r > a { r } else { a });
    if worst > tol {
        let y = balance.iter().position(|r| r.abs() > tol).unwrap_or(0);
        v.fail(format!("moment condition violated at y = {y}: residual {}", balance[y]));
    } else {
        let _ = writeln!(v.report, "moment residuals (y = 0..{}): PASS, max |r| = {:.3e}", m - 1, worst.to_f64());
    }
    let stored = parse_all(&file.residuals, |s| parse_float(s, config.bits).map(BigFloat))?;
    if stored.iter().any(|r| r.clone().abs() > px_tol) {
        v.fail("stored residuals exceed tolerance".into());
    }

    let prior = TiltedPrior::new(solution, config);
    let medians = verify_median_property(&prior, f, y_max).map_err(numeric)?;
    let _ = writeln!(v.report, "y,median,f(y),status");
    for c in &medians.checks {
        let status = match (c.guaranteed, c.matches) {
            (true, true) => "PASS",
            (true, false) => "FAIL",
            (false, true) => "match (outside guarantee)",
            (false, false) => "differs (outside guarantee)",
        };
        let _ = writeln!(
            v.report,
            "{},{},{},{status}",
            c.y,
            c.median.to_decimal(15),
            crate::numerics::decimal::rational_to_string(&c.target)
        );
    }
    if let Some(c) = medians.first_guaranteed_failure() {
        v.fail(format!(
            "median differs from f(y) at y = {}: {} vs {}",
            c.y,
            c.median.to_decimal(15),
            c.target
        ));
    }

    let kappas = [1.0, 2.0, std::f64::consts::E];
    let tails = check_tail_bounds(prior.solution(), f, &kappas, config).map_err(numeric)?;
    match tails.iter().find(|t| !t.holds) {
        None => {
            let _ = writeln!(v.report, "tail bounds: PASS ({} checks)", tails.len());
        }
        Some(t) => v.fail(format!("tail bound violated at i = {}, kappa = {:.4}", t.i, t.kappa)),
    }
    Ok(())
}

pub fn cmd_figure(args: &FigureArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let config = precision_config(args.precision.bits)?;
    let exact = args.precision.backend == Backend::Rational;
    let table = match args.which {
        FigureKind::Gap => {
            let a = parse_rational(args.a.as_deref().unwrap_or("0.5"))?;
            let b = parse_rational(args.b.as_deref().unwrap_or("0.5"))?;
            let gamma = GammaPrior::from_affine(a, b)?;
            gap_table(&gamma, args.ymax.unwrap_or(50), &config).map_err(numeric)?
        }
        FigureKind::Medians | FigureKind::Cdf => {
            let a = args.a.as_deref().unwrap_or("0.3");
            let b = args.b.as_deref().unwrap_or("0.3");
            let f = estimator_from_flags(a, b, None)?;
            let ms = if args.m.is_empty() { vec![2, 4, 8] } else { args.m.clone() };
            if ms.contains(&0) {
                return Err(CliError::usage("truncation levels must be at least 1"));
            }
            let levels = Levels::build(&f, &ms, exact, &config).map_err(numeric)?;
            if args.which == FigureKind::Medians {
                medians_table(&levels, args.ymax.unwrap_or(10)).map_err(numeric)?
            } else {
                let gamma = GammaPrior::from_affine(parse_rational(a)?, parse_rational(b)?)?;
                cdf_table(&levels, &gamma, args.points, &config).map_err(numeric)?
            }
        }
    };
    write_output(&args.output, table.to_csv_string().as_bytes(), stdout)
}
