use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use srm_core::basis::{BasisKind, PlaneMode};
use srm_core::srm::Variant;

#[derive(Debug, Parser)]
#[command(name = "srm", version, about = "Spotlight-resonance analysis of latent representations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a privileged basis and write it as CSV.
    GenBasis(GenBasisArgs),
    /// Train an autoencoder on MNIST and save checkpoints.
    Train(TrainArgs),
    /// Run a spotlight-resonance ensemble.
    Srm(SrmArgs),
    /// Print the uniform-distribution baseline with a Monte Carlo check.
    Expected(ExpectedArgs),
    /// Chain gen-basis, train and srm for the before/after/self comparison.
    ReproFig1(ReproArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Standard,
    Elementwise,
    Simplex,
    Thompson,
    Random,
}

impl From<KindArg> for BasisKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Standard => BasisKind::Standard,
            KindArg::Elementwise => BasisKind::Elementwise,
            KindArg::Simplex => BasisKind::Simplex,
            KindArg::Thompson => BasisKind::Thompson,
            KindArg::Random => BasisKind::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Plain,
    Signed,
    #[value(name = "self")]
    SelfSrm,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Plain => Variant::Plain,
            VariantArg::Signed => Variant::Signed,
            VariantArg::SelfSrm => Variant::SelfSrm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Combination,
    Permutation,
}

impl From<ModeArg> for PlaneMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Combination => PlaneMode::Combination,
            ModeArg::Permutation => PlaneMode::Permutation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArchArg {
    Small,
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
}

#[derive(Debug, Args)]
pub struct GenBasisArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Ambient dimension.
    #[arg(long)]
    pub n: usize,
    /// Number of vectors. Implied for standard (n), elementwise (2n) and
    /// simplex (n+1); required for thompson and random.
    #[arg(long)]
    pub m: Option<usize>,
    /// RNG seed. For elementwise and simplex it draws a random rotation;
    /// without it the canonical orientation is used.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Maximum Thompson descent steps.
    #[arg(long, default_value_t = 5000)]
    pub iterations: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory holding the MNIST IDX files.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Privileged basis CSV for the latent activation.
    #[arg(long)]
    pub basis: PathBuf,
    /// Output directory for checkpoints and the loss trace.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ArchArg::Small)]
    pub arch: ArchArg,
    /// Hidden width of the large model.
    #[arg(long, default_value_t = 128)]
    pub hidden: usize,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 24)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.08)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use only the first `limit` training images.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SrmArgs {
    /// Model checkpoint; latents are extracted from `--dataset`.
    #[arg(long, conflicts_with = "activations")]
    pub checkpoint: Option<PathBuf>,
    /// Raw activation CSV, one sample per row.
    #[arg(long)]
    pub activations: Option<PathBuf>,
    /// Directory holding the MNIST IDX files (with `--checkpoint`).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    /// Privileged basis CSV. Defaults to the checkpoint's latent basis.
    #[arg(long)]
    pub basis: Option<PathBuf>,
    #[arg(long, default_value_t = 0.9, allow_negative_numbers = true)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 360)]
    pub theta_samples: usize,
    #[arg(long, value_enum, default_value_t = VariantArg::Plain)]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Combination)]
    pub mode: ModeArg,
    /// Digit subsets, one run each: `0..9` (inclusive) or `3,5,8`.
    #[arg(long)]
    pub labels: Option<String>,
    /// Use only the first `limit` dataset images.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Also write an SVG ensemble plot.
    #[arg(long)]
    pub svg: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExpectedArgs {
    /// Dimensions, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Cone thresholds, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0,0.5,0.8,0.9")]
    pub epsilon: Vec<f64>,
    /// Monte Carlo samples per entry.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optional CSV copy of the table.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    /// Directory holding the MNIST IDX files.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 20)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.9, allow_negative_numbers = true)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 360)]
    pub theta_samples: usize,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 24)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.08)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    /// Training subset size.
    #[arg(long, default_value_t = 10_000)]
    pub limit: usize,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
}
