//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "umato", version, about = "Hub-anchored two-phase dimensionality reduction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset as CSV.
    Generate(GenerateArgs),
    /// Embed a CSV dataset.
    Project(ProjectArgs),
    /// Score a projection against its data.
    Evaluate(EvaluateArgs),
    /// Procrustes stability under subsampling or re-initialization.
    Stability(StabilityArgs),
    /// Run umato over a grid of hub counts.
    SweepHubs(SweepArgs),
    /// Render a projection CSV as an SVG scatterplot.
    Plot(PlotArgs),
    /// Render a class-pair matrix CSV as an SVG heatmap.
    Heatmap(HeatmapArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetKind {
    SwissRoll,
    SCurve,
    Spheres,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    pub kind: DatasetKind,
    #[arg(long)]
    pub out: PathBuf,
    /// Points for swiss-roll and s-curve.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_inner: Option<usize>,
    #[arg(long)]
    pub n_per_inner: Option<usize>,
    #[arg(long)]
    pub n_outer: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Flat key=value file; flags win over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Umato,
    UmapLike,
    Pca,
}

/// Embedding hyperparameters shared by several subcommands.
#[derive(Debug, Args, Default)]
pub struct EmbedArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub hub_num: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub global_epochs: Option<usize>,
    #[arg(long)]
    pub local_epochs: Option<usize>,
    #[arg(long)]
    pub min_dist: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub negative_samples: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub hub_attract_penalty: Option<f64>,
    #[arg(long)]
    pub repulse_penalty: Option<f64>,
    #[arg(long)]
    pub m_init: Option<usize>,
    #[arg(long)]
    pub lr_global: Option<f64>,
    #[arg(long)]
    pub lr_local: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// auto, exact, descent or descent:<iterations>.
    #[arg(long)]
    pub knn: Option<String>,
    #[arg(long)]
    pub no_init_noise: bool,
}

/// Input options shared by commands that read a dataset.
#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Column holding class labels.
    #[arg(long)]
    pub label_column: Option<String>,
    /// Use the features as given instead of z-scoring them.
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch loss CSV.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    /// Stage timing CSV.
    #[arg(long)]
    pub timing_out: Option<PathBuf>,
    /// Hub/eNN/DCP assignment CSV (umato only).
    #[arg(long)]
    pub partition_out: Option<PathBuf>,
    #[command(flatten)]
    pub embed: EmbedArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub projection: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated metric ids; all by default.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<String>>,
    #[arg(long = "k", value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    #[arg(long = "sigma", value_delimiter = ',')]
    pub sigmas: Option<Vec<f64>>,
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long)]
    pub no_standardize: bool,
    /// Write one wide row instead of metric,parameter,value rows.
    #[arg(long)]
    pub wide: bool,
    /// Also write the class-pairwise KL matrix here.
    #[arg(long)]
    pub class_kl_out: Option<PathBuf>,
    #[arg(long)]
    pub class_kl_sigma: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StabilityMode {
    Subsample,
    Init,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub mode: StabilityMode,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Random initializations per trial in init mode.
    #[arg(long)]
    pub inits: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub embed: EmbedArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// `start:stop:step` (inclusive) or a comma-separated list.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub embed: EmbedArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub color_by_label: bool,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}
