use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isexplore_core::diversity::DEFAULT_ENTROPY_CLUSTERS;
use isexplore_core::select::{
    DEFAULT_EPSILON, DEFAULT_LIP_WEIGHT, DEFAULT_POSE_WEIGHT, DEFAULT_SEGMENT_LEN_S, DEFAULT_STRIDE_S, DEFAULT_TOP_M,
};
use isexplore_core::spectral::DEFAULT_HF_THRESHOLD;
use isexplore_core::{DiversityMetricKind, SelectionConfig, SpectralConfig, StrategyKind};

#[derive(Debug, Parser)]
#[command(name = "isexplore", version, about = "Pick the most informative segment of a long talking-face recording")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every candidate window and write a report plus a cut manifest.
    Select(SelectArgs),
    /// Run several strategies over a range of seeds and write a CSV table.
    Ablate(AblateArgs),
    /// Generate a synthetic track pair from a JSON spec.
    Synth(SynthArgs),
    /// Print a track's header and per-column statistics as JSON.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    PairwiseEuclidean,
    PcaTop1,
    PcaCumulative,
    SemanticEntropy,
}

/// Flags shared by `select` and `ablate`.
#[derive(Debug, Args)]
pub struct ScoringFlags {
    /// Segment length in seconds.
    #[arg(long, default_value_t = DEFAULT_SEGMENT_LEN_S)]
    pub segment_len: f64,
    /// Stride between candidate starts in seconds.
    #[arg(long, default_value_t = DEFAULT_STRIDE_S)]
    pub stride: f64,
    /// Number of highest-diversity candidates kept for motion scoring.
    #[arg(long, default_value_t = DEFAULT_TOP_M)]
    pub top_m: usize,
    /// High-frequency cutoff as a fraction of Nyquist.
    #[arg(long, default_value_t = DEFAULT_HF_THRESHOLD)]
    pub hf_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_LIP_WEIGHT)]
    pub w_lip: f64,
    #[arg(long, default_value_t = DEFAULT_POSE_WEIGHT)]
    pub w_pose: f64,
    /// Audio diversity metric.
    #[arg(long, value_enum, default_value_t = MetricArg::PairwiseEuclidean)]
    pub metric: MetricArg,
    /// Components summed by `--metric pca-cumulative`.
    #[arg(long, default_value_t = 2)]
    pub pca_k: usize,
    /// Clusters used by `--metric semantic-entropy`.
    #[arg(long, default_value_t = DEFAULT_ENTROPY_CLUSTERS)]
    pub clusters: usize,
    /// Worker threads; 0 or omitted uses every core.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl ScoringFlags {
    pub fn metric(&self) -> DiversityMetricKind {
        match self.metric {
            MetricArg::PairwiseEuclidean => DiversityMetricKind::MeanPairwiseEuclidean,
            MetricArg::PcaTop1 => DiversityMetricKind::PcaTop1ExplainedVariance,
            MetricArg::PcaCumulative => DiversityMetricKind::PcaCumulativeVariance { k: self.pca_k },
            MetricArg::SemanticEntropy => DiversityMetricKind::SemanticEntropy { k: self.clusters },
        }
    }

    pub fn config(&self, strategy: StrategyKind, seed: u64) -> SelectionConfig {
        SelectionConfig {
            segment_len_s: self.segment_len,
            stride_s: self.stride,
            top_m: self.top_m,
            diversity_metric: self.metric(),
            spectral: SpectralConfig {
                hf_threshold: self.hf_threshold,
            },
            w_lip: self.w_lip,
            w_pose: self.w_pose,
            epsilon: DEFAULT_EPSILON,
            strategy,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Audio feature track (FTRK).
    pub audio: PathBuf,
    /// Landmark track (FTRK).
    pub landmarks: PathBuf,
    #[command(flatten)]
    pub scoring: ScoringFlags,
    /// isexplore, random, audio, lip, camera or lip-camera.
    #[arg(long, default_value = "isexplore", value_parser = parse_strategy)]
    pub strategy: StrategyKind,
    /// Seed for the random strategy.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "isexplore_report.json")]
    pub out: PathBuf,
    #[arg(long, default_value = "segment.json")]
    pub manifest: PathBuf,
    /// Record per-stage wall-clock times in the report (makes it
    /// run-dependent).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    pub audio: PathBuf,
    pub landmarks: PathBuf,
    #[command(flatten)]
    pub scoring: ScoringFlags,
    /// Comma-separated strategy names, run in the order given.
    #[arg(long)]
    pub strategies: String,
    /// Number of seeds for seeded strategies.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// First seed; seeds run from here upward.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Start (s) of a known planted region, to fill the overlap columns.
    #[arg(long)]
    pub plant_start: Option<u32>,
    /// Length (s) of the planted region.
    #[arg(long, default_value_t = 5, requires = "plant_start")]
    pub plant_len: u32,
    #[arg(long, default_value = "ablation.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Synthetic spec (JSON).
    pub spec: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Output file stem; defaults to the spec's file stem.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub track: PathBuf,
}

fn parse_strategy(s: &str) -> Result<StrategyKind, String> {
    s.parse()
}
