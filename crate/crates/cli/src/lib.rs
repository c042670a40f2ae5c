//! Argument parsing and dispatch for the `rho-radii` binary.
//!
//! Exit codes: 0 success, 1 a reproduction had failing claims, 2 bad input or
//! parameters, 3 a capacity limit was hit. Errors go to stderr as one JSON object.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use rho_core::dilation::{verify_rho_dilation, verify_uniform_rho_dilation};
use rho_core::membership::{
    membership_tuple_with, numerical_radius, w_rho_tuple_with, GridSpec, DEFAULT_BUDGET, DEFAULT_TOL, DEFAULT_WIDTH,
};
use rho_core::parallel::{par_map, threads_from_env};
use rho_core::repro::{
    radius_property_suite, repro_class_monotonicity, repro_non_similarity, repro_scalar_boundary,
    repro_strict_inclusion, repro_von_neumann, ExperimentReport,
};
use rho_core::{ComplexMatrix, Embedding, Error, OperatorTuple};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED_CLAIMS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "rho-radii", version, about = "Operator radii and class tests for rho-contractions")]
struct Cli {
    /// Seed for every sampled quantity.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bracket w_ρ of a matrix or tuple.
    Radius {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WIDTH)]
        width: f64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Decide membership in the ρ-class.
    Membership {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Numerical radius of a matrix.
    Numrad {
        #[arg(long)]
        input: PathBuf,
    },
    /// Check compression identities of a candidate ρ-dilation.
    VerifyDilation {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        small: PathBuf,
        #[arg(long)]
        big: PathBuf,
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        nmax: usize,
    },
    /// Run a named reproduction.
    Repro(ReproArgs),
    /// w_ρ over an evenly spaced range of ρ.
    Sweep {
        #[arg(long)]
        rho_from: f64,
        #[arg(long)]
        rho_to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long, default_value_t = 1e-5)]
        width: f64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Sym,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ReproName {
    ScalarBoundary,
    #[value(alias = "thm51")]
    NonSimilarity,
    #[value(alias = "thm53")]
    StrictInclusion,
    VonNeumann,
    RadiusProperties,
    Monotonicity,
}

#[derive(Args, Debug)]
struct ReproArgs {
    #[arg(long, value_enum)]
    name: ReproName,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Number of consecutive seeds, starting at --seed.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    rhos: Option<Vec<f64>>,
    #[arg(long)]
    n_vars: Option<usize>,
}

const DEFAULT_RHOS: [f64; 6] = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0];

enum Outcome {
    Report(Value),
    Text(String),
    Repro(ExperimentReport),
}

/// Runs the CLI with stdout and stderr of the process.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_io(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

pub fn run_with_io<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or_default().trim_start_matches("error: ");
            emit_error(err, "usage", first);
            return EXIT_INPUT;
        }
    };
    let result = dispatch(&cli).and_then(|outcome| {
        let (body, code) = match outcome {
            Outcome::Report(v) => (pretty(&v), EXIT_OK),
            Outcome::Text(s) => (s, EXIT_OK),
            Outcome::Repro(r) => {
                let code = if r.passed { EXIT_OK } else { EXIT_FAILED_CLAIMS };
                (pretty(&serde_json::to_value(&r).map_err(internal)?), code)
            }
        };
        write_output(cli.output.as_deref(), &body, out)?;
        Ok(code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            emit_error(err, e.kind(), &e.to_string());
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Capacity(_) => EXIT_CAPACITY,
        _ => EXIT_INPUT,
    }
}

fn emit_error(err: &mut dyn Write, kind: &str, message: &str) {
    let _ = writeln!(err, "{}", json!({ "error": kind, "message": message }));
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s
}

fn internal(e: impl std::fmt::Display) -> Error {
    Error::internal(e.to_string())
}

/// Atomic when writing to a file: a sibling temp file is renamed into place.
fn write_output(path: Option<&Path>, body: &str, out: &mut dyn Write) -> rho_core::Result<()> {
    let Some(path) = path else {
        return out.write_all(body.as_bytes()).map_err(internal);
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Error::input(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(body.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn read_json(path: &Path) -> rho_core::Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::input(format!("{}: {e}", path.display())))
}

fn parse<T: serde::de::DeserializeOwned>(v: Value, path: &Path) -> rho_core::Result<T> {
    serde_json::from_value(v).map_err(|e| Error::input(format!("{}: {e}", path.display())))
}

/// Accepts a tuple {"n_vars", "mats"} or a bare matrix, read as a 1-tuple.
fn read_tuple(path: &Path) -> rho_core::Result<OperatorTuple> {
    let v = read_json(path)?;
    if v.get("mats").is_some() {
        parse(v, path)
    } else {
        OperatorTuple::single(parse::<ComplexMatrix>(v, path)?)
    }
}

fn read_matrix(path: &Path) -> rho_core::Result<ComplexMatrix> {
    let t = read_tuple(path)?;
    if t.n_vars() != 1 {
        return Err(Error::input(format!("{}: expected a single matrix", path.display())));
    }
    Ok(t.into_mats().remove(0))
}

fn grid(seed: u64) -> GridSpec {
    GridSpec { seed, ..GridSpec::default() }
}

fn to_value<T: serde::Serialize>(x: &T) -> rho_core::Result<Value> {
    serde_json::to_value(x).map_err(internal)
}

fn dispatch(cli: &Cli) -> rho_core::Result<Outcome> {
    let seed = cli.seed;
    match &cli.command {
        Command::Radius { rho, input, width, budget } => {
            let a = read_tuple(input)?;
            let r = w_rho_tuple_with(&a, *rho, *width, DEFAULT_TOL, *budget, &grid(seed))?;
            Ok(Outcome::Report(to_value(&r)?))
        }
        Command::Membership { rho, input, tol, budget } => {
            let a = read_tuple(input)?;
            let v = membership_tuple_with(&a, *rho, *tol, *budget, &grid(seed))?;
            Ok(Outcome::Report(to_value(&v)?))
        }
        Command::Numrad { input } => {
            let a = read_matrix(input)?;
            Ok(Outcome::Report(json!({ "numerical_radius": numerical_radius(&a)? })))
        }
        Command::VerifyDilation { mode, small, big, embedding, rho, nmax } => {
            let small = read_tuple(small)?;
            let big = read_tuple(big)?;
            let e: Embedding = parse(read_json(embedding)?, embedding)?;
            let w = match mode {
                Mode::Sym => verify_rho_dilation(&small, &big, &e, *rho, *nmax)?,
                Mode::Uniform => verify_uniform_rho_dilation(&small, &big, &e, *rho, *nmax)?,
            };
            Ok(Outcome::Report(to_value(&w)?))
        }
        Command::Repro(args) => repro(args, seed).map(Outcome::Repro),
        Command::Sweep { rho_from, rho_to, steps, input, format, width, budget } => {
            sweep(*rho_from, *rho_to, *steps, input, *format, *width, *budget, seed)
        }
    }
}

fn repro(args: &ReproArgs, seed: u64) -> rho_core::Result<ExperimentReport> {
    let given: Vec<&str> = [
        ("--rho", args.rho.is_some()),
        ("--eps", args.eps.is_some()),
        ("--trials", args.trials.is_some()),
        ("--seeds", args.seeds.is_some()),
        ("--dims", args.dims.is_some()),
        ("--rhos", args.rhos.is_some()),
        ("--n-vars", args.n_vars.is_some()),
    ]
    .iter()
    .filter(|p| p.1)
    .map(|p| p.0)
    .collect();
    let allowed: &[&str] = match args.name {
        ReproName::ScalarBoundary => &["--rho", "--eps"],
        ReproName::NonSimilarity => &["--rho", "--eps"],
        ReproName::StrictInclusion => &["--rho"],
        ReproName::VonNeumann => &["--rho", "--trials"],
        ReproName::RadiusProperties => &["--seeds", "--dims", "--rhos"],
        ReproName::Monotonicity => &["--n-vars", "--rhos", "--trials"],
    };
    if let Some(bad) = given.iter().find(|f| !allowed.contains(f)) {
        return Err(Error::parameter(format!(
            "{bad} does not apply to this reproduction (accepted: {})",
            allowed.join(", ")
        )));
    }
    match args.name {
        ReproName::ScalarBoundary => repro_scalar_boundary(args.rho.unwrap_or(0.5), args.eps.unwrap_or(0.25)),
        ReproName::NonSimilarity => repro_non_similarity(args.rho.unwrap_or(2.0), args.eps),
        ReproName::StrictInclusion => repro_strict_inclusion(args.rho.unwrap_or(1.0)),
        ReproName::VonNeumann => repro_von_neumann(args.rho.unwrap_or(1.0), args.trials.unwrap_or(200), seed),
        ReproName::RadiusProperties => {
            let count = args.seeds.unwrap_or(10) as u64;
            let seeds: Vec<u64> = (seed..seed.saturating_add(count)).collect();
            let dims = args.dims.clone().unwrap_or_else(|| vec![2, 3, 4]);
            let rhos = args.rhos.clone().unwrap_or_else(|| DEFAULT_RHOS.to_vec());
            radius_property_suite(&seeds, &dims, &rhos, threads_from_env()?)
        }
        ReproName::Monotonicity => {
            let rhos = args.rhos.clone().unwrap_or_else(|| DEFAULT_RHOS.to_vec());
            repro_class_monotonicity(args.n_vars.unwrap_or(1), &rhos, args.trials.unwrap_or(20), seed)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    from: f64,
    to: f64,
    steps: usize,
    input: &Path,
    format: Format,
    width: f64,
    budget: usize,
    seed: u64,
) -> rho_core::Result<Outcome> {
    if steps < 2 {
        return Err(Error::parameter(format!("steps must be at least 2, got {steps}")));
    }
    if !(from > 0.0 && to > 0.0 && from.is_finite() && to.is_finite()) {
        return Err(Error::parameter(format!("rho range must be positive, got {from}..{to}")));
    }
    let a = read_tuple(input)?;
    let rhos: Vec<f64> = (0..steps)
        .map(|k| from + (to - from) * k as f64 / (steps - 1) as f64)
        .collect();
    let g = grid(seed);
    let rows = par_map(&rhos, threads_from_env()?, |&rho| {
        w_rho_tuple_with(&a, rho, width, DEFAULT_TOL, budget, &g)
    })
    .into_iter()
    .collect::<rho_core::Result<Vec<_>>>()?;
    Ok(match format {
        Format::Csv => {
            let mut s = String::from("rho,w_lo,w_hi\n");
            for r in &rows {
                s.push_str(&format!("{},{},{}\n", r.rho, r.lo, r.hi));
            }
            Outcome::Text(s)
        }
        Format::Json => Outcome::Report(Value::Array(
            rows.iter()
                .map(|r| json!({ "rho": r.rho, "lo": r.lo, "hi": r.hi }))
                .collect(),
        )),
    })
}
