//! `magmetric` command-line front end.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 numerical
//! failure, 4 shape mismatch.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "magmetric", version, about = "Magnitude and magnitude distance of finite point sets")]
pub struct Cli {
    /// Seed for every random draw (echoed in the output).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Magnitude of a point set at one or more scales.
    Magnitude(MagnitudeArgs),
    /// Magnitude distance between two point sets.
    Distance(DistanceArgs),
    /// Cross-polytope triangle-inequality counterexample.
    Counterexample(CounterexampleArgs),
    /// Run one of the seeded studies and write CSV + JSON summary.
    Experiment(ExperimentArgs),
    /// Train or sample the toy push-forward generator.
    Maggn {
        #[command(subcommand)]
        action: MaggnAction,
    },
}

#[derive(Debug, Args)]
pub struct MagnitudeArgs {
    /// CSV file, one point per row.
    #[arg(long)]
    pub input: String,
    /// Scale parameter; repeat for several.
    #[arg(long = "t", required = true)]
    pub t: Vec<f64>,
    /// Also report the first-order Neumann estimate.
    #[arg(long)]
    pub neumann: bool,
    #[arg(long)]
    pub json: bool,
    /// The CSV has a header row.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    #[arg(long = "t", required = true)]
    pub t: Vec<f64>,
    /// Report the normalized distance as the primary value.
    #[arg(long)]
    pub normalized: bool,
    /// Check 0 ≤ d ≤ 2|X∪Y| and whether it is guaranteed at this scale.
    #[arg(long)]
    pub bound_check: bool,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long = "t")]
    pub t: f64,
    /// Also run the dense solves (dim ≤ 1000) and compare.
    #[arg(long)]
    pub full_verify: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StudyName {
    Tsweep,
    Highdim,
    Outlier2d,
    Huber,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub study: StudyName,
    /// JSON file whose keys override the study defaults.
    #[arg(long)]
    pub config: Option<String>,
    /// Output CSV path; the JSON summary goes next to it. Stdout if omitted.
    #[arg(long)]
    pub out: Option<String>,
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    pub n_per_set: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated fixed scales.
    #[arg(long, value_delimiter = ',')]
    pub scales: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub normalized_scales: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub mu_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    #[arg(long)]
    pub n_proj: Option<usize>,
    /// Mean shift of this Euclidean norm along the first axis.
    #[arg(long, conflicts_with = "shift_per_coordinate")]
    pub shift_norm: Option<f64>,
    /// Mean shift of this size on every coordinate.
    #[arg(long)]
    pub shift_per_coordinate: Option<f64>,
    /// Run trials on the calling thread only.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Subcommand)]
pub enum MaggnAction {
    /// Train a generator; writes generator.json and train_log.csv to --out.
    Train(TrainArgs),
    /// Draw samples from a saved generator.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training data CSV.
    #[arg(long)]
    pub data: String,
    #[arg(long)]
    pub header: bool,
    /// Scale schedule `t1@e1,t2@e2,...`: scale t_i joins the loss at epoch
    /// e_i (1-based, strictly increasing); scales should be nondecreasing.
    #[arg(long, default_value = "0.5@1,1.5@100,3.0@200")]
    pub schedule: String,
    #[arg(long, default_value_t = 300)]
    pub epochs: u32,
    /// Output directory.
    #[arg(long)]
    pub out: String,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "32,32")]
    pub hidden: Vec<usize>,
    /// Dimension of the standard-normal input (defaults to the data dimension).
    #[arg(long)]
    pub z_dim: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch_real: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_gen: usize,
    /// Sum the active scale terms instead of averaging them.
    #[arg(long)]
    pub sum_scales: bool,
    /// Also write this many samples to samples.csv in --out.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Checkpoint file, or a directory containing generator.json.
    #[arg(long)]
    pub checkpoint: String,
    #[arg(long)]
    pub n: usize,
    /// Output CSV; stdout if omitted.
    #[arg(long)]
    pub out: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = commands::configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
