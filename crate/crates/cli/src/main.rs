//! `dnaexp`: exponent tables, occupancy convergence, codebook construction and channel
//! simulation from the command line.
//!
//! Exit codes: 0 success, 1 I/O or file-format failure, 2 domain or hypothesis error
//! (including invalid configuration), 3 codebook shortfall, 4 capacity guard.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{
    CodebookSpec, Construction, DecoderKind, ExponentSpec, FileConfig, Format, ModelKind, OccupancySpec,
    SimulateSpec,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] dnaexp::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Core(dnaexp::Error::Domain(_)) | Self::Config(_) => 2,
            Self::Core(dnaexp::Error::Shortfall { .. }) => 3,
            Self::Core(dnaexp::Error::Capacity { .. }) => 4,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dnaexp", version, about = "Error exponents and channel simulation for DNA storage codes")]
struct Cli {
    /// TOML experiment file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed recorded in every output.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte-Carlo runs (0 = all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Multinomial and Poisson exponents over a (c, delta) grid.
    Exponent(ExponentArgs),
    /// Exact occupancy probabilities and finite-M exponents.
    Occupancy(OccupancyArgs),
    /// Build a codebook, save it, and report its separation.
    Codebook(CodebookArgs),
    /// Monte-Carlo error probability with the matching bound pair.
    Simulate(SimulateArgs),
    /// Simulation over a grid of read counts and error probabilities.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct ExponentArgs {
    /// Coverage depth; repeat for several.
    #[arg(long = "c")]
    coverages: Vec<f64>,
    /// Distinct fraction; repeat for several (default: reference grid).
    #[arg(long = "delta")]
    deltas: Vec<f64>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
struct OccupancyArgs {
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Molecules per codeword in the schedule; repeat for several.
    #[arg(long = "m")]
    m_grid: Vec<u32>,
    /// Explicit query `N,M,K`; repeat for several.
    #[arg(long = "query", value_parser = parse_query)]
    queries: Vec<[u32; 3]>,
    #[arg(long)]
    cell_cap: Option<u64>,
}

#[derive(Debug, Args)]
struct CodebookArgs {
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    inner_size: Option<u64>,
    #[arg(long)]
    n: Option<u32>,
    /// Target number of codewords.
    #[arg(long)]
    j: Option<usize>,
    #[arg(long, value_enum)]
    construction: Option<Construction>,
    #[arg(long)]
    cap: Option<u32>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    c_prime: Option<f64>,
    #[arg(long)]
    codebook_seed: Option<u64>,
    /// Write the codebook file here.
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    build: CodebookArgs,
    /// Load a saved codebook instead of building one.
    #[arg(long)]
    codebook_file: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    #[arg(long)]
    p: Option<f64>,
    /// Attack pair `I,J`.
    #[arg(long, value_parser = parse_pair)]
    pair: Option<(usize, usize)>,
    #[arg(long, value_enum)]
    decoder: Option<DecoderKind>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Run the paired attack with the message uniform over the pair.
    #[arg(long)]
    attack: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    sim: SimulateArgs,
    /// Read counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    ns: Vec<u32>,
    /// Error probabilities, comma separated.
    #[arg(long, value_delimiter = ',')]
    ps: Vec<f64>,
}

fn parse_query(s: &str) -> Result<[u32; 3], String> {
    let v: Vec<u32> = s
        .split(',')
        .map(|x| x.trim().parse().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    <[u32; 3]>::try_from(v).map_err(|_| "expected N,M,K".to_string())
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected I,J")?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

fn set<T: Clone>(slot: &mut T, flag: &Option<T>) {
    if let Some(v) = flag {
        *slot = v.clone();
    }
}

fn set_list<T: Clone>(slot: &mut Vec<T>, flag: &[T]) {
    if !flag.is_empty() {
        *slot = flag.to_vec();
    }
}

impl ExponentArgs {
    fn apply(&self, s: &mut ExponentSpec) {
        set_list(&mut s.coverages, &self.coverages);
        set_list(&mut s.deltas, &self.deltas);
        set(&mut s.tol, &self.tol);
    }
}

impl OccupancyArgs {
    fn apply(&self, s: &mut OccupancySpec) {
        set(&mut s.c, &self.c);
        set(&mut s.delta, &self.delta);
        set_list(&mut s.m_grid, &self.m_grid);
        set_list(&mut s.queries, &self.queries);
        set(&mut s.cell_cap, &self.cell_cap);
    }
}

impl CodebookArgs {
    fn apply(&self, s: &mut CodebookSpec) {
        set(&mut s.m, &self.m);
        set(&mut s.inner_size, &self.inner_size);
        set(&mut s.n, &self.n);
        set(&mut s.j, &self.j);
        set(&mut s.construction, &self.construction);
        set(&mut s.cap, &self.cap);
        set(&mut s.t, &self.t);
        set(&mut s.budget, &self.budget);
        set(&mut s.c_prime, &self.c_prime);
        set(&mut s.seed, &self.codebook_seed);
        if self.save.is_some() {
            s.save = self.save.clone();
        }
    }
}

impl SimulateArgs {
    fn apply(&self, s: &mut SimulateSpec, cb: &mut CodebookSpec) {
        self.build.apply(cb);
        if self.codebook_file.is_some() {
            s.codebook_file = self.codebook_file.clone();
        }
        set(&mut s.model, &self.model);
        set(&mut s.p, &self.p);
        if self.pair.is_some() {
            s.pair = self.pair;
        }
        set(&mut s.decoder, &self.decoder);
        set(&mut s.epsilon, &self.epsilon);
        set(&mut s.eta, &self.eta);
        set(&mut s.r0, &self.r0);
        set(&mut s.trials, &self.trials);
        s.attack |= self.attack;
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(1);
    let workers = cli.workers.or(cfg.workers).unwrap_or(0);
    let format = cli.format.or(cfg.format).unwrap_or_default();
    let out = cli.out.clone().or(cfg.out.clone());

    let start = Instant::now();
    let (output, pending) = match &cli.command {
        Command::Exponent(a) => {
            a.apply(&mut cfg.exponent);
            commands::exponent(&cfg.exponent, seed)
        }
        Command::Occupancy(a) => {
            a.apply(&mut cfg.occupancy);
            commands::occupancy(&cfg.occupancy, seed)
        }
        Command::Codebook(a) => {
            a.apply(&mut cfg.codebook);
            commands::codebook(&cfg.codebook, seed)
        }
        Command::Simulate(a) => {
            a.apply(&mut cfg.simulate, &mut cfg.codebook);
            commands::simulate(&cfg.simulate, &cfg.codebook, seed, workers)
        }
        Command::Sweep(a) => {
            a.sim.apply(&mut cfg.simulate, &mut cfg.codebook);
            set_list(&mut cfg.sweep.ns, &a.ns);
            set_list(&mut cfg.sweep.ps, &a.ps);
            commands::sweep(&cfg.sweep, &cfg.simulate, &cfg.codebook, seed, workers)
        }
    }?;
    output.write(format, out.as_deref(), workers, start.elapsed().as_secs_f64())?;
    match pending {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dnaexp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
