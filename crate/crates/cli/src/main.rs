mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "limitset", version, about = "Limit-set estimation and extremal dependence measures")]
struct Cli {
    /// Root seed for simulation and resampling.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a sample from one of the study copulas on exponential margins.
    Simulate(SimulateArgs),
    /// Estimate the boundary set from a two-column CSV.
    Fit(FitArgs),
    /// Dependence measures from a boundary CSV.
    Measures(MeasuresArgs),
    /// Replicated simulation study.
    Study(StudyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Gaussian,
    Logistic,
    InvertedLogistic,
    AsymmetricLogistic,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    theta1: Option<f64>,
    #[arg(long)]
    theta2: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Output CSV; defaults to `sample.csv` in the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "LIMITSET_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Local,
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Margins {
    /// Rank-transform each column to standard exponential.
    Rank,
    /// Data are already on standard exponential margins.
    Exponential,
}

#[derive(Debug, Args)]
struct TuningArgs {
    /// Number of angles in the local grid.
    #[arg(long)]
    k: Option<usize>,
    /// Angular neighbourhood size.
    #[arg(long)]
    m: Option<usize>,
    /// Threshold quantile level.
    #[arg(long)]
    q_u: Option<f64>,
    /// Radial quantile level.
    #[arg(long)]
    q: Option<f64>,
    /// Spline breakpoints.
    #[arg(long)]
    kappa: Option<usize>,
    /// Candidate spline degrees, comma separated.
    #[arg(long, value_delimiter = ',')]
    degrees: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Two-column CSV, header optional.
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Smooth)]
    method: Method,
    #[arg(long, value_enum, default_value_t = Margins::Rank)]
    margins: Margins,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Also write one boundary CSV per fitted spline degree.
    #[arg(long)]
    per_degree: bool,
    /// Stationary bootstrap replicates.
    #[arg(long, default_value_t = 0)]
    bootstrap: usize,
    #[arg(long, default_value_t = 16.0)]
    block_mean: f64,
    #[arg(long, default_value = "0.01:0.99:0.01")]
    omega_grid: String,
    #[arg(long, default_value = "0.01:0.99:0.01")]
    delta_grid: String,
    #[arg(long, default_value_t = 0.9)]
    beta_level: f64,
    #[arg(long, env = "LIMITSET_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct MeasuresArgs {
    /// Boundary CSV with columns w, x1, x2.
    boundary: PathBuf,
    /// Sample CSV, needed for beta and the baselines.
    #[arg(long)]
    sample: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Margins::Rank)]
    margins: Margins,
    /// `all`, `none`, or a comma list of hill-eta, peng, draisma, hill-lambda, hill-tau.
    #[arg(long, default_value = "none")]
    baselines: String,
    #[arg(long, default_value = "0.01:0.99:0.01")]
    omega_grid: String,
    #[arg(long, default_value = "0.01:0.99:0.01")]
    delta_grid: String,
    #[arg(long, default_value_t = 0.9)]
    beta_level: f64,
    #[arg(long, env = "LIMITSET_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct StudyArgs {
    /// TOML study configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model as family:params, e.g. logistic:0.5 or asymmetric-logistic:0.5,0.25,0.75. Repeatable.
    #[arg(long = "model")]
    models: Vec<String>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Knot counts to compare, comma separated (overrides --kappa).
    #[arg(long, value_delimiter = ',')]
    kappas: Option<Vec<usize>>,
    #[arg(long)]
    omega_grid: Option<String>,
    #[arg(long)]
    delta_grid: Option<String>,
    #[arg(long)]
    beta_level: Option<f64>,
    #[arg(long)]
    no_baselines: bool,
    #[arg(long, env = "LIMITSET_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.command {
        Command::Simulate(a) => commands::simulate(a, cli.seed),
        Command::Fit(a) => commands::fit(a, cli.seed),
        Command::Measures(a) => commands::measures(a),
        Command::Study(a) => commands::study(a, cli.seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
