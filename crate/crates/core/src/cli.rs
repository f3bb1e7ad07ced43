//! Command-line front end. Exit codes: 0 success, 1 input error,
//! 2 mathematical rejection, 3 runtime instability.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::boundary::{classify, sample_bicontraction, sample_unitary, BoundaryOperator, Builtin};
use crate::discretization::{build_fourier_loop, build_generator, DiscreteSystem, DEFAULT_DEGREE};
use crate::error::{Error, Result};
use crate::evolution::{run_nodal, EvolutionConfig, Integrator};
use crate::graph::MetricGraph;
use crate::init::InitialCondition;
use crate::krein::DEFAULT_TOL;
use crate::linalg::{max_abs, CMatrix};
use crate::verification::{check_greens_identity, convergence_study, random_lift};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_REJECTED: i32 = 2;
pub const EXIT_UNSTABLE: i32 = 3;

/// Residual bound for `verify-form`.
pub const GREENS_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "airy-graph", version, about = "Airy-type evolution on metric graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a boundary condition vertex by vertex.
    Check(CheckArgs),
    /// Write a random unitary or bi-contractive boundary condition.
    Generate(GenerateArgs),
    /// Run a time evolution and write CSV and JSON records.
    Simulate(SimulateArgs),
    /// Check the boundary identity on random lifted functions.
    VerifyForm(VerifyArgs),
    /// Spatial and temporal convergence tables for the loop plane wave.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Args)]
pub struct Inputs {
    /// Graph JSON file.
    #[arg(long, conflicts_with = "builtin")]
    pub graph: Option<PathBuf>,
    /// Boundary-condition JSON file.
    #[arg(long, conflicts_with = "builtin")]
    pub bc: Option<PathBuf>,
    /// Built-in example: two_halflines_unitary[(len)], star(n_in,n_out),
    /// loop_periodic, loop_diag(a,b).
    #[arg(long)]
    pub builtin: Option<String>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    Unitary,
    Bicontractive,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Graph JSON file.
    #[arg(long, conflicts_with = "builtin")]
    pub graph: Option<PathBuf>,
    /// Take the graph of a built-in example.
    #[arg(long)]
    pub builtin: Option<String>,
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Contraction strength in [0, 1] for bi-contractive samples.
    #[arg(long, default_value_t = 0.5)]
    pub strictness: f64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Grid {
    Chebyshev,
    Fourier,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Chebyshev degree per edge, or number of Fourier points.
    #[arg(long, default_value_t = DEFAULT_DEGREE)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "chebyshev")]
    pub grid: Grid,
    /// crank_nicolson (cn) or matrix_exponential (expm).
    #[arg(long, default_value = "cn")]
    pub scheme: String,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.1)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1)]
    pub sample_every: usize,
    /// plane_wave(k), gaussian(center,width), lifted(side,t0,t1,t2), zero, or
    /// @file.json with nodal values per edge.
    #[arg(long, default_value = "plane_wave(1)")]
    pub init: String,
    /// Writes PREFIX.csv and PREFIX.json.
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
    /// Also dump the discrete matrices (matrix-market arrays) into this
    /// directory.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Graph JSON file.
    #[arg(long, conflicts_with = "builtin")]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub builtin: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 32)]
    pub quad_order: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long, default_value = "loop_periodic")]
    pub builtin: String,
    /// Wave number of the plane wave.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    #[arg(long, value_delimiter = ',', default_value = "8,12,16")]
    pub degrees: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "4e-4,2e-4,1e-4")]
    pub dts: Vec<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub t_end: f64,
    /// Writes PREFIX_spatial.csv and PREFIX_temporal.csv; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Maps an error to its exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::UnbalancedVertex { .. } | Error::NearSingularForm { .. } | Error::RankDeficient { .. } => {
            EXIT_REJECTED
        }
        Error::SingularSolve { .. } | Error::NonFinite { .. } | Error::DimensionCap { .. } => EXIT_UNSTABLE,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Check(a) => cmd_check(&a, out),
        Command::Generate(a) => cmd_generate(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out, err),
        Command::VerifyForm(a) => cmd_verify_form(&a, out),
        Command::Convergence(a) => cmd_convergence(&a, out),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Json(j) => Error::InvalidParameter(format!("{}: {j}", path.display())),
        other => other,
    })
}

fn load_graph(path: &Path) -> Result<MetricGraph> {
    with_path(path, MetricGraph::from_json(&read(path)?))
}

fn load_bc(path: &Path) -> Result<BoundaryOperator> {
    with_path(path, BoundaryOperator::from_json(&read(path)?))
}

fn graph_only(graph: &Option<PathBuf>, builtin: &Option<String>) -> Result<MetricGraph> {
    match (graph, builtin) {
        (Some(p), None) => load_graph(p),
        (None, Some(name)) => Ok(Builtin::parse(name)?.build()?.0),
        _ => Err(Error::InvalidParameter("give exactly one of --graph or --builtin".into())),
    }
}

fn load_inputs(inputs: &Inputs, for_simulation: bool) -> Result<(MetricGraph, BoundaryOperator)> {
    match (&inputs.graph, &inputs.bc, &inputs.builtin) {
        (None, None, Some(name)) => {
            let b = Builtin::parse(name)?;
            if for_simulation {
                b.for_simulation().build()
            } else {
                b.build()
            }
        }
        (Some(g), Some(bc), None) => Ok((load_graph(g)?, load_bc(bc)?)),
        _ => Err(Error::InvalidParameter("give --graph and --bc, or --builtin".into())),
    }
}

pub fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<i32> {
    let (g, bc) = load_inputs(&a.inputs, false)?;
    let c = classify(&g, &bc, a.tol)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&c)?)?;
    Ok(if c.global.is_admissible() { EXIT_OK } else { EXIT_REJECTED })
}

/// Seed for the `index`-th vertex derived from the user seed.
fn vertex_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64)
}

pub fn generate(g: &MetricGraph, kind: Kind, seed: u64, strictness: f64) -> Result<BoundaryOperator> {
    let mut bc = BoundaryOperator::new();
    for (i, v) in g.vertices().iter().enumerate() {
        let inc = g.incidence(v)?;
        if inc.left.is_empty() && inc.right.is_empty() {
            bc.insert(v, CMatrix::zeros(0, 0));
            continue;
        }
        let s = vertex_seed(seed, i);
        let block = match kind {
            Kind::Unitary => sample_unitary(g, v, s)?,
            Kind::Bicontractive => sample_bicontraction(g, v, s, strictness)?,
        };
        bc.insert(v, block);
    }
    Ok(bc)
}

pub fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<i32> {
    let g = graph_only(&a.graph, &a.builtin)?;
    let text = generate(&g, a.kind, a.seed, a.strictness)?.to_json();
    match &a.out {
        Some(p) => fs::write(p, text + "\n")?,
        None => writeln!(out, "{text}")?,
    }
    Ok(EXIT_OK)
}

fn is_periodic_loop(g: &MetricGraph, bc: &BoundaryOperator) -> bool {
    g.edges().len() == 1
        && g.edges()[0].is_finite()
        && g.edges()[0].from.is_some()
        && g.edges()[0].from == g.edges()[0].to
        && crate::boundary::assemble_global(g, bc)
            .map(|l| max_abs(&(l - CMatrix::identity(3, 3))) == 0.0)
            .unwrap_or(false)
}

pub fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let (g, bc) = load_inputs(&a.inputs, true)?;
    let scheme: Integrator = a.scheme.parse()?;
    let init = match a.init.strip_prefix('@') {
        Some(path) => with_path(Path::new(path), InitialCondition::from_json(&read(Path::new(path))?))?,
        None => a.init.parse()?,
    };
    let verdict = classify(&g, &bc, DEFAULT_TOL)?.global;
    if !verdict.is_admissible() {
        writeln!(err, "warning: boundary condition is {verdict}; the evolution need not be contractive")?;
    }
    let sys: DiscreteSystem = match a.grid {
        Grid::Chebyshev => build_generator(&g, &bc, a.n)?,
        Grid::Fourier => build_fourier_loop(&g, &bc, a.n)?,
    };
    if let Some(dir) = &a.dump {
        fs::create_dir_all(dir)?;
        for name in ["generator", "free", "mass", "basis", "constraint", "trace_right", "trace_left"] {
            let mut f = fs::File::create(dir.join(format!("{name}.mtx")))?;
            sys.write_matrix_market(name, &mut f)?;
        }
    }
    let u0 = init.nodal(&sys)?;
    let mut cfg = EvolutionConfig::new(a.dt, a.t_end, scheme);
    cfg.sample_every = a.sample_every;
    let run = run_nodal(&sys, &bc, &u0, &cfg)?;
    let r = &run.record;
    fs::write(a.out.with_extension("csv"), r.to_csv())?;
    fs::write(a.out.with_extension("json"), r.to_json() + "\n")?;
    let (pred, meas) = r.mean_dissipation();
    let summary = json!({
        "verdict": verdict,
        "grid": match a.grid { Grid::Chebyshev => "chebyshev", Grid::Fourier => "fourier" },
        "periodic_loop": is_periodic_loop(&g, &bc),
        "dimension": sys.dimension(),
        "steps": cfg.steps()?,
        "final_norm_ratio": r.final_norm_ratio(),
        "max_norm2_increase": r.max_norm2_increase(),
        "max_constraint_residual": r.max_constraint_residual,
        "projection_residual": r.projection_residual,
        "mean_dissipation_predicted": pred,
        "mean_dissipation_measured": meas,
        "dissipation_agreement": r.dissipation_agreement(),
        "energy_balance_error": r.energy_balance_error(),
        "csv": a.out.with_extension("csv"),
        "json": a.out.with_extension("json"),
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
    Ok(EXIT_OK)
}

pub fn cmd_verify_form(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let g = graph_only(&a.graph, &a.builtin)?;
    if a.quad_order < 4 {
        return Err(Error::QuadratureOrder(a.quad_order));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..a.samples {
        let u = random_lift(&g, &mut rng);
        let v = random_lift(&g, &mut rng);
        worst = worst.max(check_greens_identity(&g, &u, &v, a.quad_order)?.residual);
    }
    let passed = worst <= GREENS_TOL;
    let report = json!({
        "samples": a.samples,
        "quad_order": a.quad_order,
        "seed": a.seed,
        "max_residual": worst,
        "tolerance": GREENS_TOL,
        "passed": passed,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(if passed { EXIT_OK } else { EXIT_REJECTED })
}

pub fn cmd_convergence(a: &ConvergenceArgs, out: &mut dyn Write) -> Result<i32> {
    let (g, bc) = Builtin::parse(&a.builtin)?.build()?;
    if !is_periodic_loop(&g, &bc) {
        return Err(Error::NotPeriodicLoop(format!(
            "the plane-wave oracle needs `loop_periodic`, got `{}`",
            a.builtin
        )));
    }
    let (spatial, temporal) = convergence_study(&g, &bc, a.k, &a.degrees, &a.dts, a.t_end)?;
    match &a.out {
        Some(prefix) => {
            let stem = prefix.to_string_lossy();
            fs::write(format!("{stem}_spatial.csv"), spatial.to_csv())?;
            fs::write(format!("{stem}_temporal.csv"), temporal.to_csv())?;
        }
        None => write!(out, "{}{}", spatial.to_csv(), temporal.to_csv())?,
    }
    Ok(EXIT_OK)
}
