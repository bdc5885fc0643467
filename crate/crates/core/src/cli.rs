//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 on usage or I/O errors, 2 when the mathematics
//! fails (set not poised, relaxation assumption violated, a bound violated in
//! a verification campaign).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::ball::{self, DEFAULT_TOL};
use crate::bounds::{self, BoundInputs, BoundKind};
use crate::error::{Error, Result};
use crate::geometry::{self, PoisednessKind};
use crate::io;
use crate::models::{self, FitKind, RelaxationSpec};
use crate::par::Execution;
use crate::poly::{quad_q, QuadraticPolynomial};
use crate::verify;

#[derive(Debug, Parser)]
#[command(
    name = "dfo-bounds",
    version,
    about = "Interpolation models, poisedness certificates and error bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify the Λ-poisedness of a sample set.
    Poisedness(PoisednessArgs),
    /// Fit an interpolation model to points with values.
    Fit(FitArgs),
    /// Evaluate the error-bound constants.
    Bounds(BoundsArgs),
    /// Run a verification campaign from a config file.
    Verify(VerifyArgs),
    /// Brute-force max |m| of a quadratic over a ball.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct SetArgs {
    /// CSV with header y1,...,yn[,f]; the first row is y0.
    pub points: PathBuf,
    /// Ball radius; defaults to the `delta` in the JSON sidecar.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Sidecar with {"delta": ...}; defaults to the points path with a .json extension.
    #[arg(long, conflicts_with = "delta")]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Linear,
    Quadratic,
    Mfn,
}

impl From<KindArg> for PoisednessKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Linear => PoisednessKind::Linear,
            KindArg::Quadratic => PoisednessKind::Quadratic,
            KindArg::Mfn => PoisednessKind::Mfn,
        }
    }
}

#[derive(Debug, Args)]
pub struct PoisednessArgs {
    #[command(flatten)]
    pub set: SetArgs,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub set: SetArgs,
    /// lin-det, quad-det or mfn.
    #[arg(long)]
    pub kind: FitKind,
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,
    /// CSV with a single `gamma` column.
    #[arg(long)]
    pub gamma_file: Option<PathBuf>,
    /// Seed for sampled relaxed values when kappa > 0 and no gamma file.
    #[arg(long, conflicts_with = "gamma_file")]
    pub noise_seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// lin-det, quad-det, under or mfn.
    #[arg(long)]
    pub kind: BoundKind,
    #[arg(short = 'L', long = "lipschitz")]
    pub lipschitz: f64,
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,
    /// Measured or assumed Λ; needed unless every geometry constant is given.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub kappa_h: Option<f64>,
    #[arg(long)]
    pub kappa_s: Option<f64>,
    #[arg(long)]
    pub kappa_l: Option<f64>,
    #[arg(long)]
    pub kappa_q: Option<f64>,
    #[arg(long)]
    pub n: usize,
    /// Defaults to n (lin-det) or q (quad-det); required otherwise.
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long)]
    pub delta_max: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// JSON trial config: an object whose fields may hold arrays to sweep, or a list of objects.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_csv: PathBuf,
    /// Summary JSON; printed to stdout when omitted.
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Model JSON {"n", "c", "g", "H"} or a fit output containing "model".
    #[arg(long)]
    pub poly: PathBuf,
    /// Comma-separated coordinates.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub center: Vec<f64>,
    #[arg(long)]
    pub radius: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub resolution: f64,
    #[arg(long)]
    pub sequential: bool,
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
            w.flush()?;
        }
        None => {
            serde_json::to_writer_pretty(&mut *stdout, value)?;
            writeln!(stdout)?;
        }
    }
    Ok(())
}

fn load_set(args: &SetArgs) -> Result<(geometry::SampleSet, Option<Vec<f64>>)> {
    let delta = io::resolve_delta(&args.points, args.delta, args.meta.as_deref())?;
    io::read_sample_set(&args.points, delta)
}

fn cmd_poisedness(args: &PoisednessArgs, stdout: &mut dyn Write) -> Result<()> {
    let (set, _) = load_set(&args.set)?;
    let cert = geometry::lambda_poisedness_with(execution(args.sequential), &set, args.kind.into())?;
    emit(&cert, args.out.as_deref(), stdout)
}

fn cmd_fit(args: &FitArgs, stdout: &mut dyn Write) -> Result<()> {
    let (set, values) = load_set(&args.set)?;
    let values = values.ok_or_else(|| Error::InvalidInput("point file has no `f` column".into()))?;
    let gamma = args.gamma_file.as_deref().map(io::read_gamma).transpose()?;
    let fit = if args.kappa == 0.0 && gamma.is_none() {
        models::fit_model(args.kind, &set, &values)?
    } else {
        let spec = RelaxationSpec {
            kappa: args.kappa,
            gamma,
            noise_seed: args.noise_seed,
        };
        models::fit_relaxed(args.kind, &set, &values, &spec)?
    };
    emit(&fit, args.out.as_deref(), stdout)
}

fn cmd_bounds(args: &BoundsArgs, stdout: &mut dyn Write) -> Result<()> {
    let p = match (args.p, args.kind) {
        (Some(p), _) => p,
        (None, BoundKind::LinDet) => args.n,
        (None, BoundKind::QuadDet) => args.q.unwrap_or_else(|| quad_q(args.n)),
        (None, _) => return Err(Error::InvalidInput("--p is required for under and mfn".into())),
    };
    let mut inputs = BoundInputs::new(
        args.lipschitz,
        args.kappa,
        args.lambda.unwrap_or(0.0),
        args.n,
        p,
        args.delta,
    );
    inputs.kappa_h = args.kappa_h;
    inputs.kappa_s = args.kappa_s;
    inputs.kappa_l = args.kappa_l;
    inputs.kappa_q = args.kappa_q;
    inputs.q = args.q;
    inputs.delta_max = args.delta_max;
    let report = bounds::error_bounds(args.kind, &inputs)?;
    emit(&report, args.out.as_deref(), stdout)
}

/// Returns true when every trial ran and satisfied its bounds.
fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write, stderr: &mut (dyn Write + Send)) -> Result<bool> {
    let configs = verify::parse_campaign_config(&std::fs::read_to_string(&args.config)?)?;
    let total = configs.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let log = std::sync::Mutex::new(stderr);
    let report = verify::run_campaign_with_progress(&configs, execution(args.sequential), |o| {
        let k = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
        let status = match &o.result {
            Ok(r) if r.pass => "pass".to_string(),
            Ok(_) => "BOUND VIOLATED".to_string(),
            Err(e) => format!("error: {e}"),
        };
        if let Ok(mut w) = log.lock() {
            let _ = writeln!(w, "[{k}/{total}] trial {}: {status}", o.trial_id);
        }
    });
    report.write_csv(BufWriter::new(File::create(&args.out_csv)?))?;
    let summary = report.summary();
    emit(&summary, args.out_json.as_deref(), stdout)?;
    Ok(summary.failed_bounds == 0)
}

#[derive(Debug, Serialize)]
struct OracleOutput {
    grid_max: f64,
    grid_argmax: Vec<f64>,
    exact_max: f64,
    exact_argmax: Vec<f64>,
    resolution: f64,
}

fn read_poly(path: &Path) -> Result<QuadraticPolynomial> {
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let value = match value.get("model") {
        Some(m) => m.clone(),
        None => value,
    };
    Ok(serde_json::from_value(value)?)
}

fn cmd_oracle(args: &OracleArgs, stdout: &mut dyn Write) -> Result<()> {
    let m = read_poly(&args.poly)?;
    let (grid_max, grid_argmax) = ball::grid_oracle_with(
        execution(args.sequential),
        &m,
        &args.center,
        args.radius,
        args.resolution,
    )?;
    let (exact_max, exact_argmax) = ball::max_abs_on_ball(&m, &args.center, args.radius, DEFAULT_TOL)?;
    let out = OracleOutput {
        grid_max,
        grid_argmax,
        exact_max,
        exact_argmax,
        resolution: args.resolution,
    };
    emit(&out, None, stdout)
}

fn exit_code(e: &Error) -> i32 {
    if e.is_mathematical() {
        2
    } else {
        1
    }
}

/// Parses `args` and runs the command, writing results to `stdout` and
/// diagnostics to `stderr`. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Poisedness(a) => cmd_poisedness(a, stdout),
        Command::Fit(a) => cmd_fit(a, stdout),
        Command::Bounds(a) => cmd_bounds(a, stdout),
        Command::Verify(a) => match cmd_verify(a, stdout, stderr) {
            Ok(true) => Ok(()),
            Ok(false) => {
                let _ = writeln!(stderr, "error: at least one trial violated its bounds");
                return 2;
            }
            Err(e) => Err(e),
        },
        Command::Oracle(a) => cmd_oracle(a, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn bounds_lin_det() {
        let (code, out, _) = run_str(&[
            "dfo-bounds",
            "bounds",
            "--kind",
            "lin-det",
            "-L",
            "2",
            "--lambda",
            "1",
            "--n",
            "4",
        ]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["C_g"].as_f64().unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(v["C_H"].as_f64().unwrap(), 0.0);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_str(&["dfo-bounds", "bounds"]).0, 1);
        assert_eq!(run_str(&["dfo-bounds", "--help"]).0, 0);
        let (code, _, err) = run_str(&["dfo-bounds", "bounds", "--kind", "under", "-L", "1", "--n", "2"]);
        assert_eq!(code, 1, "{err}");
    }
}
