mod files;
mod recipes;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use corrcs::experiments::SignalPower;
use corrcs::quantizer::QuantizerDesign;

/// Compressed sensing under signal-correlated measurement noise.
#[derive(Parser, Debug)]
#[command(name = "corrcs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a stored experiment recipe and write CSV, manifest and plot script.
    Reproduce(ReproduceArgs),
    /// Reconstruct one signal from a matrix and measurement file.
    Solve(SolveArgs),
    /// Design a quantizer and fit its gain model.
    Quantizer(QuantizerArgs),
    /// Sweep the (delta, rho) phase space with bpdn-scale and BIHT.
    PhaseSweep(PhaseSweepArgs),
    /// Search the scaling factor and radius minimizing mean NMSE at one grid point.
    OptimizeBetaEpsilon(OptimizeArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Trials per grid point; defaults depend on the recipe and scale.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Source of the measurement power used for noise, quantizer scaling and epsilon.
    #[arg(long, value_enum, default_value_t = PowerArg::Measured)]
    power: PowerArg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum PowerArg {
    Measured,
    Ensemble,
}

impl PowerArg {
    fn name(self) -> &'static str {
        match self {
            PowerArg::Measured => "measured",
            PowerArg::Ensemble => "ensemble",
        }
    }
}

impl From<PowerArg> for SignalPower {
    fn from(p: PowerArg) -> Self {
        match p {
            PowerArg::Measured => SignalPower::Measured,
            PowerArg::Ensemble => SignalPower::Ensemble,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Table1,
    Tables,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Scale {
    Desk,
    Paper,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum DesignArg {
    LloydMax,
    Uniform,
}

impl From<DesignArg> for QuantizerDesign {
    fn from(d: DesignArg) -> Self {
        match d {
            DesignArg::LloydMax => QuantizerDesign::LloydMax,
            DesignArg::Uniform => QuantizerDesign::Uniform,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SolveMethod {
    Bpdn,
    BpdnScale,
    Biht,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SweepMethod {
    BpdnScale,
    Biht,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    #[arg(long, value_enum)]
    figure: Figure,
    #[arg(long, value_enum, default_value_t = Scale::Desk)]
    scale: Scale,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Dense matrix as CSV, one row per line.
    #[arg(long)]
    matrix: PathBuf,
    /// Measurement vector as CSV, one value per line or a single row.
    #[arg(long)]
    y: PathBuf,
    #[arg(long, value_enum)]
    method: SolveMethod,
    /// Gain used by bpdn-scale.
    #[arg(long)]
    alpha: Option<f64>,
    /// Constraint radius, or `auto` for the noise-level rule.
    #[arg(long, default_value = "auto")]
    epsilon: String,
    /// Per-measurement noise deviation used by `--epsilon auto`.
    #[arg(long)]
    sigma: Option<f64>,
    /// Resolution of the Lloyd-Max quantizer behind `y`; lets `--epsilon auto`
    /// derive the noise deviation from the measurement power.
    #[arg(long)]
    bits: Option<u32>,
    /// Sparsity for BIHT.
    #[arg(long)]
    k: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct QuantizerArgs {
    #[arg(long, value_enum)]
    design: DesignArg,
    #[arg(long)]
    bits: u32,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PhaseSweepArgs {
    #[arg(long, value_enum, default_value_t = Scale::Desk)]
    scale: Scale,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    delta_step: Option<f64>,
    #[arg(long)]
    rho_step: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    cutoff: f64,
    /// Restrict the sweep to these delta columns.
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [SweepMethod::BpdnScale, SweepMethod::Biht])]
    methods: Vec<SweepMethod>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k: usize,
    /// Noise equivalent to this Lloyd-Max resolution.
    #[arg(long, default_value_t = 1)]
    bits: u32,
    #[arg(long, default_value_t = 200)]
    max_evals: usize,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Reproduce(a) => recipes::reproduce(&a),
        Command::Solve(a) => recipes::solve(&a),
        Command::Quantizer(a) => recipes::quantizer(&a),
        Command::PhaseSweep(a) => recipes::phase_sweep(&a),
        Command::OptimizeBetaEpsilon(a) => recipes::optimize(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
