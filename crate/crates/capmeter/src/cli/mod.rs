//! The `capmeter` command-line front end.
//!
//! Five subcommands wire the library together: `run` (protocol → records),
//! `fit` (records or curve → capacity report), `oracle` (closed forms for a
//! Hessian spectrum), `compare` (model selection across fit reports) and
//! `sgld` (Langevin route to the same quantities).
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 training or
//! chain failure, 4 fit failure.

mod compare;
mod data;
mod fit;
mod manifest;
mod oracle_cmd;
mod plot;
mod run;
mod sgld_cmd;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use fit::{FitPoint, FitReport};
pub use manifest::RunManifest;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_TRAINING: i32 = 3;
pub const EXIT_FIT: i32 = 4;

/// A failed command: the process exit code and a diagnostic for stderr.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn training(message: impl Into<String>) -> Self {
        Self { code: EXIT_TRAINING, message: message.into() }
    }

    pub fn fit(message: impl Into<String>) -> Self {
        Self { code: EXIT_FIT, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(name = "capmeter", version, about = "Learning-capacity estimation from held-out loss curves")]
pub struct Cli {
    /// Worker threads for training jobs and chains (0 = all cores).
    #[arg(long, global = true, env = "CAPMETER_JOBS", default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the bootstrap × fold × seed protocol and write held-out energy records.
    Run(RunArgs),
    /// Fit the polynomial and sigmoid capacity estimators to a record or curve file.
    Fit(FitArgs),
    /// Evaluate the quadratic and PAC-Bayes oracles for a Hessian spectrum.
    Oracle(OracleArgs),
    /// Rank models from two or more fit reports by capacity and test loss.
    Compare(CompareArgs),
    /// Estimate the energy curve and capacities with Langevin chains.
    Sgld(SgldArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LearnerKind {
    Knn,
    Logistic,
    Mlp,
    Ridge,
    /// Data-free quadratic test energy (sgld only).
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelKindArg {
    Auto,
    Classes,
    Regression,
}

/// Where the data comes from.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Synthetic teacher–student data: `d=20,kappa=1[,teacher_hidden=1000,classes=2,rows=R,seed=S]`.
    #[arg(long, conflicts_with = "data")]
    pub synthetic: Option<String>,

    /// Tabular CSV file, label in the last column, `#` lines ignored.
    #[arg(long)]
    pub data: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = LabelKindArg::Auto)]
    pub label_kind: LabelKindArg,

    /// Identifier written into every record (defaults to `synthetic` or the file stem).
    #[arg(long)]
    pub dataset_id: Option<String>,
}

/// Learner hyperparameters; each applies only to the learners that use it.
#[derive(Debug, Clone, Args)]
pub struct LearnerArgs {
    /// Neighbours for knn.
    #[arg(long, default_value_t = 5)]
    pub neighbours: usize,
    /// Additive smoothing for knn.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// L2 penalty for logistic and ridge.
    #[arg(long)]
    pub l2: Option<f64>,
    /// Training epochs for logistic and mlp.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Learning rate (logistic) or peak learning rate (mlp).
    #[arg(long)]
    pub lr: Option<f64>,
    /// Hidden units for mlp.
    #[arg(long, default_value_t = 16)]
    pub hidden: usize,
    /// Mini-batch size for mlp training.
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    /// Weight decay for mlp.
    #[arg(long, default_value_t = 0.0)]
    pub weight_decay: f64,
    /// Gaussian likelihood scale for regression targets.
    #[arg(long, default_value_t = crate::learners::DEFAULT_SIGMA)]
    pub sigma: f64,
    /// Feed raw features to logistic and mlp instead of standardising them.
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long, value_enum)]
    pub learner: LearnerKind,

    #[command(flatten)]
    pub hyper: LearnerArgs,

    /// Sample sizes: `lo:hi:Klog` or a comma-separated list.
    #[arg(long, default_value = "50:5000:12log")]
    pub n_grid: String,
    /// Bootstrap samples per N.
    #[arg(long, default_value_t = 4)]
    pub boots: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Training seeds per fold.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Record file to write; the manifest and curve go next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMethod {
    Both,
    Polynomial,
    Sigmoid,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Record file produced by `run` or `sgld`.
    #[arg(long, required_unless_present = "curve", conflicts_with = "curve")]
    pub records: Option<PathBuf>,
    /// Energy-curve file (`n,u_mean,u_stderr,record_count`).
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Dataset to fit when the record file holds several.
    #[arg(long)]
    pub dataset_id: Option<String>,

    #[arg(long, value_enum, default_value_t = FitMethod::Both)]
    pub method: FitMethod,
    /// Polynomial degree.
    #[arg(long, default_value_t = crate::estimators::DEFAULT_DEGREE)]
    pub degree: usize,
    /// Parameter count, to report C(N_max)/p.
    #[arg(long)]
    pub params: Option<u64>,
    /// Model name used by `compare` (defaults to the input file stem).
    #[arg(long)]
    pub label: Option<String>,

    /// Report path; a JSON twin is written with the same basename.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SVG chart of Ū and C against N.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Inline eigenvalues, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "spectrum")]
    pub lambda: Option<Vec<f64>>,
    /// Prior precision for inline eigenvalues.
    #[arg(long, requires = "lambda")]
    pub eps: Option<f64>,
    /// Spectrum file with an `# epsilon=` header.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,

    /// Sample sizes for capacities and bounds.
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    pub n: Vec<u64>,
    /// Print the exact quadratic capacity at each N.
    #[arg(long)]
    pub exact: bool,
    /// Print the harmonic-mean approximation.
    #[arg(long)]
    pub hm: bool,
    /// Print the PAC-Bayes effective dimension at these N.
    #[arg(long, value_delimiter = ',')]
    pub dim_at: Vec<u64>,
    /// Confidence parameter for the PAC-Bayes bound.
    #[arg(long, requires = "dist_sq")]
    pub kappa: Option<f64>,
    /// Squared distance from the prior mean for the PAC-Bayes bound.
    #[arg(long, requires = "kappa")]
    pub dist_sq: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// JSON fit reports (at least two).
    #[arg(required = true, num_args = 2..)]
    pub reports: Vec<PathBuf>,
    /// Also write the comparison to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SgldArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long, value_enum)]
    pub learner: LearnerKind,

    /// Hidden units for mlp.
    #[arg(long, default_value_t = 16)]
    pub hidden: usize,
    /// Eigenvalues of the quadratic test energy.
    #[arg(long, value_delimiter = ',', default_value = "1,1")]
    pub lambda: Vec<f64>,

    /// Increasing sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
    pub schedule: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub chains: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Epochs discarded after each growth step.
    #[arg(long, default_value_t = 20)]
    pub equilibration: usize,
    /// Samples kept per chain at each N, one per epoch.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    /// Lower bound on Langevin steps per epoch.
    #[arg(long, default_value_t = 1)]
    pub min_steps: usize,
    /// Gaussian prior precision.
    #[arg(long, default_value_t = 1.0)]
    pub prior_eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Record file to write; capacities and manifest go next to it.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
///
/// Help and version requests print to stdout and return `Ok`.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if e.exit_code() == 0 => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let text = e.render().to_string();
            let text = text.trim_end().strip_prefix("error: ").unwrap_or(text.trim_end());
            return Err(CliError::config(text));
        }
    };
    let command_line: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match &cli.command {
        Command::Run(a) => run::cmd_run(a, cli.jobs, &command_line),
        Command::Fit(a) => fit::cmd_fit(a),
        Command::Oracle(a) => oracle_cmd::cmd_oracle(a),
        Command::Compare(a) => compare::cmd_compare(a),
        Command::Sgld(a) => sgld_cmd::cmd_sgld(a, cli.jobs, &command_line),
    }
}

/// Runs `f` on a pool of `threads` workers (0 = rayon's default).
fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn write_file(path: &std::path::Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

/// `path` with `suffix` appended to its file name (`a.records` → `a.records.manifest.json`).
fn sibling(path: &std::path::Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}
