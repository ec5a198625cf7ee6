//! `trotterlab`: command-line front end.
//!
//! Every run prints (or writes with `--output`) one JSON document holding the
//! tool version, the fully resolved configuration and the result. Failures
//! print a JSON error record instead: exit code 2 for configuration problems,
//! 1 for failures inside a computation.

mod cache;
mod commands;
mod config;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use trotterlab::pauli::SpinOrdering;

use config::{ConfigError, CostChoice, NormChoice, PowerLawConfig, RunConfig, SchemeChoice};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Compute(String),
    Core(trotterlab::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config(ConfigError::new(field, message))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }

    fn record(&self) -> Value {
        let (kind, field, message) = match self {
            CliError::Config(e) => ("config", Some(e.field.clone()), e.message.clone()),
            CliError::Compute(m) => ("computation", None, m.clone()),
            CliError::Core(e) => {
                let field = match e {
                    trotterlab::Error::InvalidArgument { field, .. } => Some(field.to_string()),
                    _ => None,
                };
                ("computation", field, e.to_string())
            }
            CliError::Io(e) => ("io", None, e.to_string()),
        };
        json!({ "error": { "kind": kind, "field": field, "message": message } })
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<trotterlab::Error> for CliError {
    fn from(e: trotterlab::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "trotterlab", version, about = "Trotter error and phase-estimation cost analysis of PPP nanographene models")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Directory for CSV exports.
    #[arg(long, global = true)]
    csv_dir: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Allow runs that take hours or tens of GB of memory.
    #[arg(long, global = true)]
    slow: bool,
    /// Molecule such as acene3, rhombene2 or triangulene5.
    #[arg(long, short, global = true)]
    molecule: Option<String>,
    /// Hopping integral, eV.
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// On-site repulsion, eV.
    #[arg(long, global = true)]
    u: Option<f64>,
    /// Ohno screening, 1/Angstrom^2.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Spin-orbital ordering of the qubits.
    #[arg(long, global = true, value_parser = parse_ordering)]
    ordering: Option<SpinOrdering>,
    #[arg(long, global = true)]
    electrons: Option<usize>,
    /// Twice the S_z quantum number.
    #[arg(long, global = true, allow_negative_numbers = true)]
    sz_twice: Option<i32>,
    /// Sample count of Monte Carlo estimates.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Seed of the commutator-norm sampler.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tiling file for tile schemes and costs.
    #[arg(long, global = true)]
    tiling: Option<PathBuf>,
    /// Target energy accuracy, eV.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
}

fn parse_ordering(s: &str) -> Result<SpinOrdering, String> {
    serde_json::from_value(json!(s)).map_err(|_| format!("unknown ordering `{s}`, expected interleaved or blocked"))
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Site coordinates and bonds.
    Lattice,
    /// Pauli term counts and potential shift.
    Hamiltonian {
        /// Write every Pauli term to <csv-dir>/<molecule>_terms.csv and <molecule>_<part>.pauli.
        #[arg(long)]
        dump_terms: bool,
    },
    /// Nested commutator norms and split-operator error constants.
    Norms {
        #[arg(long, value_enum, value_delimiter = ',')]
        kind: Vec<NormChoice>,
    },
    /// Tile gate counts and kinetic error constants.
    Freefermion {
        /// Time grid of the cubic fit, 1/eV.
        #[arg(long, value_delimiter = ',')]
        t_grid: Vec<f64>,
        /// Exhaustive average instead of sampling.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        kinetic_seed: Option<u64>,
    },
    /// Effective energies and gap errors from time series.
    Spectral {
        #[arg(long, value_enum)]
        scheme: Option<SchemeChoice>,
        /// Comma-separated state labels: S0, S1, T1.
        #[arg(long, value_delimiter = ',')]
        states: Vec<String>,
        /// Trotter time steps, 1/eV, increasing.
        #[arg(long, value_delimiter = ',')]
        time_steps: Vec<f64>,
        /// Gaussian filter width.
        #[arg(long)]
        filter_width: Option<f64>,
        /// Dense study of every eigenstate of the sector.
        #[arg(long)]
        correlation: bool,
    },
    /// Trotter steps, gate counts and qubits of phase estimation.
    Resources {
        #[arg(long, value_enum)]
        mode: Option<CostChoice>,
        /// Time step of the fixed-timestep mode, 1/eV.
        #[arg(long)]
        t: Option<f64>,
        /// Error constant of the fixed-error mode, eV^3.
        #[arg(long)]
        g: Option<f64>,
        /// `prefactor,exponent` of g = prefactor * N^exponent.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        power_law: Vec<f64>,
        /// Phase-estimation share of the error budget.
        #[arg(long)]
        x: Option<f64>,
        /// Cost two runs, one per energy of a gap.
        #[arg(long)]
        gap: bool,
        /// Add the Hamming-weight-phasing estimate.
        #[arg(long)]
        hwp: bool,
    },
    /// Compare computed values with published tables and figures.
    Reproduce {
        #[arg(value_enum)]
        target: reproduce::Target,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Lattice => "lattice",
            Command::Hamiltonian { .. } => "hamiltonian",
            Command::Norms { .. } => "norms",
            Command::Freefermion { .. } => "freefermion",
            Command::Spectral { .. } => "spectral",
            Command::Resources { .. } => "resources",
            Command::Reproduce { .. } => "reproduce",
        }
    }
}

/// File values first, then every flag that was given.
fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let g = &cli.global;
    let mut c = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($dst:expr, $src:expr) => {
            if let Some(v) = $src.clone() {
                $dst = v;
            }
        };
    }
    set!(c.molecule, g.molecule);
    set!(c.params.tau, g.tau);
    set!(c.params.u, g.u);
    set!(c.params.alpha, g.alpha);
    set!(c.sector.ordering, g.ordering);
    set!(c.analysis.samples, g.samples);
    set!(c.seeds.norms, g.seed);
    set!(c.analysis.epsilon, g.epsilon);
    if g.electrons.is_some() {
        c.sector.electrons = g.electrons;
    }
    if g.sz_twice.is_some() {
        c.sector.sz_twice = g.sz_twice;
    }
    if g.tiling.is_some() {
        c.scheme.tiling = g.tiling.clone();
    }
    if g.output.is_some() {
        c.output.json = g.output.clone();
    }
    if g.csv_dir.is_some() {
        c.output.csv_dir = g.csv_dir.clone();
    }
    if g.jobs.is_some() {
        c.jobs = g.jobs;
    }
    c.slow |= g.slow;
    match &cli.command {
        Command::Norms { kind } if !kind.is_empty() => c.analysis.norms = kind.clone(),
        Command::Freefermion { t_grid, exact, kinetic_seed } => {
            if !t_grid.is_empty() {
                c.analysis.t_grid = t_grid.clone();
            }
            c.analysis.exact_kinetic |= exact;
            set!(c.seeds.kinetic, kinetic_seed);
        }
        Command::Spectral { scheme, states, time_steps, filter_width, correlation } => {
            set!(c.scheme.kind, scheme);
            if !states.is_empty() {
                c.analysis.states = states.clone();
            }
            if !time_steps.is_empty() {
                c.scheme.time_steps = time_steps.clone();
            }
            set!(c.analysis.filter_width, filter_width);
            c.analysis.correlation |= correlation;
        }
        Command::Resources { mode, t, g: gc, power_law, x, gap, hwp } => {
            set!(c.analysis.cost_mode, mode);
            set!(c.analysis.gap_time_step, t);
            set!(c.analysis.x, x);
            if gc.is_some() {
                c.analysis.g = *gc;
            }
            if let [prefactor, exponent] = power_law[..] {
                c.analysis.power_law = Some(PowerLawConfig { prefactor, exponent });
            }
            c.analysis.gap |= gap;
            c.analysis.hwp |= hwp;
        }
        _ => {}
    }
    c.validate()?;
    Ok(c)
}

fn execute(cli: &Cli, cfg: &RunConfig) -> Result<Value, CliError> {
    match &cli.command {
        Command::Lattice => commands::lattice(cfg),
        Command::Hamiltonian { dump_terms } => commands::hamiltonian(cfg, *dump_terms),
        Command::Norms { .. } => commands::norms(cfg),
        Command::Freefermion { .. } => commands::freefermion(cfg),
        Command::Spectral { .. } => commands::spectral(cfg),
        Command::Resources { .. } => commands::resources(cfg),
        Command::Reproduce { target } => reproduce::run(*target, cfg),
    }
}

fn run(cli: &Cli) -> Result<Value, CliError> {
    let cfg = resolve(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| CliError::Compute(e.to_string()))?;
    let result = pool.install(|| execute(cli, &cfg))?;
    let generated_at = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let report = json!({
        "tool": "trotterlab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.name(),
        "config": cfg,
        "result": result,
        "generated_at": generated_at,
    });
    if let Some(path) = &cfg.output.json {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::{ContextKind, ContextValue, ErrorKind};
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let field = match e.get(ContextKind::InvalidArg) {
                Some(ContextValue::String(s)) => Some(s.trim_start_matches('-').split([' ', '=']).next().unwrap_or_default().trim_matches(['<', '>']).to_lowercase().replace('-', "_")),
                _ => None,
            };
            let record = json!({ "error": { "kind": "config", "field": field, "message": e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ") } });
            println!("{record}");
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(report) => {
            if cli.global.output.is_none() && !output_in_config(&report) {
                println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("{}", e.record());
            eprintln!("trotterlab: {}", e.record()["error"]["message"].as_str().unwrap_or_default());
            ExitCode::from(e.exit_code())
        }
    }
}

fn output_in_config(report: &Value) -> bool {
    !report["config"]["output"]["json"].is_null()
}
