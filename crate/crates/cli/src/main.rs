use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Sliced inner-product Gromov-Wasserstein distances between point clouds.
#[derive(Debug, Parser)]
#[command(name = "sigw", version)]
struct Cli {
    /// Log progress notes to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact IGW between two one-column files.
    Igw1d {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sliced IGW estimate between two sample files.
    Sliced {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 500)]
        m: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        opt: OptimizerArgs,
        /// 0-based column holding non-numeric row labels.
        #[arg(long)]
        label_column: Option<usize>,
        /// Also write the per-iteration trace to this CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo error of the Gaussian sliced objective over a grid of `m`.
    ValidateMc {
        #[arg(long, value_delimiter = ',', default_values_t = commands::powers_of_two(5, 13))]
        m_grid: Vec<usize>,
        #[arg(long, default_value_t = 25)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        pair: PairArgs,
        /// Evaluate at the population aligner instead of re-optimizing.
        #[arg(long)]
        fixed_aligner: bool,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error of the fully empirical estimate over a grid of sample sizes.
    ValidateRate {
        #[arg(long, value_delimiter = ',', default_values_t = commands::powers_of_two(5, 12))]
        n_grid: Vec<usize>,
        #[arg(long, default_value_t = 3000)]
        m: usize,
        #[arg(long, default_value_t = 25)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance matrix between all pairs of sample files.
    Pairwise {
        #[arg(required = true, num_args = 2..)]
        files: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = MethodArg::Sliced)]
        method: MethodArg,
        #[arg(long, default_value_t = 500)]
        m: usize,
        /// Required by the sliced method.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[arg(long)]
        label_column: Option<usize>,
        /// Distance CSV; the per-pair summary goes next to it as `.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral clustering and 2-d MDS of a distance matrix.
    Cluster {
        distances: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: u64,
        /// Ground-truth classes, one label per item or `item,label` rows.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Report JSON; the MDS coordinates go next to it as `.mds.csv`.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OptimizerArg {
    Cd,
    Riemannian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InitArg {
    Identity,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Sliced,
    GaussianSliced,
    GaussianIgw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CovarianceArg {
    /// The fixed 5×5 and 10×10 factors.
    Fixed,
    /// Factors with i.i.d. uniform entries, drawn from the seed.
    Random,
}

#[derive(Debug, Clone, Args)]
struct OptimizerArgs {
    #[arg(long, value_enum, default_value_t = OptimizerArg::Riemannian)]
    optimizer: OptimizerArg,
    #[arg(long, value_enum, default_value_t = InitArg::Gaussian)]
    init: InitArg,
    /// Penalty weight of the dissolving method.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Debug, Clone, Args)]
struct PairArgs {
    #[arg(long, value_enum, default_value_t = CovarianceArg::Fixed)]
    covariance: CovarianceArg,
    /// Source dimension for random factors.
    #[arg(long, default_value_t = 5)]
    dx: usize,
    /// Target dimension for random factors.
    #[arg(long, default_value_t = 10)]
    dy: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .format_timestamp(None)
        .init();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
