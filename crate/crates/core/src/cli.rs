//! Command-line front end. `sabha <adjust|simulate|bounds|weights> ...`
//!
//! Exit codes: 0 success, 2 invalid input or usage, 3 solver non-convergence.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::complexity::complexity_report;
use crate::error::{Error, Result};
use crate::io::{
    build_spec, execute, read_edges, read_grouping, read_weights, write_file, write_rejections,
    write_weights, AdjustMethod, Dataset, RunConfig, RunRecord, WeightSource,
};
use crate::optim::AdmmConfig;
use crate::simulation::{run_trials, Experiment, Method};
use crate::structure::{Graph, Grouping, StructureSpec};
use crate::svg::summary_charts;
use crate::weights::estimate_weights;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

/// Environment variable that overrides `--seed`.
pub const SEED_ENV: &str = "SABHA_SEED";

#[derive(Debug, Parser)]
#[command(name = "sabha", version, about = "Structure-adaptive FDR control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run BH, Storey-BH or SABHA on a p-value file.
    Adjust(AdjustArgs),
    /// Run the 15x15 grid experiment.
    Simulate(SimulateArgs),
    /// Estimate the complexity of a weight class and its analytic bound.
    Bounds(BoundsArgs),
    /// Fit weights and write them as CSV.
    Weights(WeightsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Bh,
    Storey,
    Sabha,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StructureArg {
    #[value(alias = "ordered")]
    OrderedStep,
    OrderedMle,
    Grouped,
    TvL1,
    Constant,
    SignSplit,
}

impl StructureArg {
    fn name(self) -> &'static str {
        match self {
            StructureArg::OrderedStep => "ordered-step",
            StructureArg::OrderedMle => "ordered-mle",
            StructureArg::Grouped => "grouped",
            StructureArg::TvL1 => "tv-l1",
            StructureArg::Constant => "constant",
            StructureArg::SignSplit => "sign-split",
        }
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    /// p-value CSV (`index,pvalue` or one column).
    #[arg(long)]
    pvalues: PathBuf,
    /// Grouping CSV (`index,group`).
    #[arg(long)]
    groups: Option<PathBuf>,
    /// Edge list CSV (`i,j`).
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Test statistics CSV (`index,statistic`) for sign-split.
    #[arg(long)]
    statistics: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        Dataset::load(
            &self.pvalues,
            self.groups.as_deref(),
            self.edges.as_deref(),
            self.statistics.as_deref(),
        )
    }
}

#[derive(Debug, Args)]
struct AdjustArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "sabha")]
    method: MethodArg,
    #[arg(long, value_enum)]
    structure: Option<StructureArg>,
    /// Precomputed weights CSV (`index,weight`), used instead of --structure.
    #[arg(long, conflicts_with = "structure")]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Total-variation budget for tv-l1.
    #[arg(long)]
    m: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the JSON run record.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Where to write the rejections CSV (default: stdout).
    #[arg(long)]
    rejections: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Signal strengths, comma separated.
    #[arg(long = "mu-sig", value_delimiter = ',', default_values_t = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5])]
    mu_sig: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    /// Methods: bh, storey, oracle, sabha-m<budget>.
    #[arg(long, value_delimiter = ',', default_values_t = ["bh".to_string(), "storey".into(), "oracle".into(), "sabha-m10".into(), "sabha-m15".into(), "sabha-m20".into()])]
    methods: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Summary CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the summary as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Directory for power.svg and fdp.svg.
    #[arg(long)]
    svg_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long, value_enum)]
    structure: StructureArg,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long)]
    m: Option<f64>,
    /// Grouping CSV (`index,group`).
    #[arg(long, conflicts_with = "group_sizes")]
    groups: Option<PathBuf>,
    /// Contiguous group sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    group_sizes: Option<Vec<usize>>,
    /// Edge list CSV (`i,j`); defaults to a chain for tv-l1.
    #[arg(long)]
    edges: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct WeightsArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    structure: StructureArg,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long)]
    m: Option<f64>,
    /// Weights CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn seed_override(seed: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(seed),
    }
}

fn emit(path: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_file(p, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn adjust(a: AdjustArgs) -> Result<()> {
    let ds = a.data.load()?;
    let file_weights = a.weights.as_ref().map(read_weights).transpose()?;
    let weights = match (&a.weights, a.structure) {
        (Some(path), _) => Some(WeightSource::File { path: path.clone() }),
        (None, Some(s)) => Some(WeightSource::Estimate {
            structure: s.name().to_string(),
        }),
        (None, None) => None,
    };
    let cfg = RunConfig {
        method: match a.method {
            MethodArg::Bh => AdjustMethod::Bh,
            MethodArg::Storey => AdjustMethod::Storey,
            MethodArg::Sabha => AdjustMethod::Sabha,
        },
        alpha: a.alpha,
        tau: a.tau,
        epsilon: a.epsilon,
        m: a.m,
        weights,
        seed: seed_override(a.seed)?,
    };
    let start = Instant::now();
    let out = execute(&cfg, &ds, file_weights.as_ref(), &AdmmConfig::default())?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let mut csv = Vec::new();
    write_rejections(&mut csv, &out.result, &ds.pvalues)?;
    if let Some(path) = &a.record {
        let rec = RunRecord::new(cfg, &out, elapsed);
        write_file(path, rec.to_json()?.as_bytes())?;
    }
    emit(a.rejections.as_ref(), &csv)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let methods = a
        .methods
        .iter()
        .map(|s| s.parse::<Method>())
        .collect::<Result<Vec<_>>>()?;
    let exp = Experiment {
        mu_sig: a.mu_sig,
        methods,
        n_trials: a.trials,
        alpha: a.alpha,
        tau: a.tau,
        epsilon: a.epsilon,
        seed: seed_override(a.seed)?,
        admm: AdmmConfig::default(),
    };
    let table = run_trials(&exp, a.workers)?;
    if let Some(path) = &a.json {
        write_file(path, table.to_json()?.as_bytes())?;
    }
    if let Some(dir) = &a.svg_dir {
        let (power, fdp) = summary_charts(&table);
        write_file(dir.join("power.svg"), power.as_bytes())?;
        write_file(dir.join("fdp.svg"), fdp.as_bytes())?;
    }
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    emit(a.out.as_ref(), &csv)
}

fn bounds(a: BoundsArgs) -> Result<()> {
    let eps = a.epsilon;
    let spec = match a.structure {
        StructureArg::OrderedStep => StructureSpec::ordered_step(eps)?,
        StructureArg::OrderedMle => StructureSpec::ordered_mle(eps)?,
        StructureArg::Constant => StructureSpec::constant(eps)?,
        StructureArg::Grouped => {
            let g = match (&a.groups, &a.group_sizes) {
                (Some(path), _) => read_grouping(path, a.n)?,
                (None, Some(sizes)) => Grouping::contiguous(sizes)?,
                (None, None) => {
                    return Err(Error::invalid("grouped needs --groups or --group-sizes"))
                }
            };
            StructureSpec::grouped(eps, g)?
        }
        StructureArg::TvL1 => {
            let graph = match &a.edges {
                Some(path) => read_edges(path, a.n)?,
                None => Graph::chain(a.n)?,
            };
            let m = a.m.ok_or_else(|| Error::invalid("tv-l1 needs --m"))?;
            StructureSpec::tv_graph(eps, graph, m)?
        }
        StructureArg::SignSplit => {
            return Err(Error::invalid(
                "sign-split groups depend on the data; use --structure grouped",
            ))
        }
    };
    let report = complexity_report(&spec, a.n, a.samples, seed_override(a.seed)?)?;
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    emit(a.out.as_ref(), json.as_bytes())
}

fn weights(a: WeightsArgs) -> Result<()> {
    let ds = a.data.load()?;
    let spec = build_spec(a.structure.name(), a.epsilon, a.m, &ds)?;
    let q = estimate_weights(&ds.pvalues, a.tau, &spec, &AdmmConfig::default())?;
    let mut csv = Vec::new();
    write_weights(&mut csv, &q)?;
    emit(a.out.as_ref(), &csv)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Convergence { .. } => EXIT_NO_CONVERGENCE,
        _ => EXIT_INVALID,
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let res = match cli.command {
        Command::Adjust(a) => adjust(a),
        Command::Simulate(a) => simulate(a),
        Command::Bounds(a) => bounds(a),
        Command::Weights(a) => weights(a),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
