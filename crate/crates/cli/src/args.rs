use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use kscc::KernelSpec;

use crate::settings::Settings;

/// Kernel spectral curvature clustering of points sampled from unions of
/// surfaces.
#[derive(Debug, Parser)]
#[command(name = "kscc", version)]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// TOML file of settings; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a labelled synthetic dataset.
    Generate(GenerateArgs),
    /// Cluster a point or correspondence file.
    Cluster(ClusterArgs),
    /// Print the misclassification rate of predicted labels.
    Evaluate(EvaluateArgs),
    /// Repeat seeded runs on a labelled dataset and tabulate the errors.
    Bench(BenchArgs),
}

/// Flags shared by the commands that run the clustering.
#[derive(Debug, Clone, Args)]
pub struct RunFlags {
    #[arg(long)]
    pub kernel: Option<KernelSpec>,
    /// Flat dimension in feature space (default: the kernel's own).
    #[arg(long)]
    pub ell: Option<usize>,
    /// Number of clusters.
    #[arg(long)]
    pub k: Option<usize>,
    /// Sampled tuples per iteration (default 100 k).
    #[arg(long)]
    pub c: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl RunFlags {
    pub fn settings(&self) -> Settings {
        Settings {
            kernel: self.kernel,
            ell: self.ell,
            k: self.k,
            c: self.c,
            seed: self.seed,
            ..Settings::default()
        }
    }
}

/// Where a synthetic dataset comes from.
#[derive(Debug, Clone, Args)]
pub struct DataSource {
    /// circles, lines_and_circles, spheres, spheres_and_plane, conics,
    /// lissajous or two_view.
    #[arg(long)]
    pub family: Option<String>,
    /// TOML dataset manifest.
    #[arg(long, value_name = "PATH", conflicts_with = "family")]
    pub manifest: Option<PathBuf>,
    /// Points per surface (or per motion).
    #[arg(long)]
    pub n: Option<usize>,
    /// Gaussian noise standard deviation.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Number of motions for two_view data.
    #[arg(long, default_value_t = 2)]
    pub motions: usize,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub source: DataSource,
    /// Dataset seed (default: the manifest's).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Point file; a trailing `label` column is ignored for clustering.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[command(flatten)]
    pub run: RunFlags,
    /// Predicted labels, one per row.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Run report (TOML); defaults to the labels path with `.report.toml`.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predicted labels.
    pub pred: PathBuf,
    /// True labels; a point file with a `label` column also works.
    pub truth: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Labelled point file; otherwise the data is generated.
    #[arg(long = "in", value_name = "PATH", conflicts_with_all = ["family", "manifest"])]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub source: DataSource,
    #[command(flatten)]
    pub run: RunFlags,
    /// Number of seeded runs (seeds seed, seed + 1, ...).
    #[arg(long)]
    pub runs: Option<usize>,
    /// Summary CSV.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Per-run CSV.
    #[arg(long, value_name = "PATH")]
    pub runs_out: Option<PathBuf>,
    /// Row name in the report.
    #[arg(long)]
    pub name: Option<String>,
}
