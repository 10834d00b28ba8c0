//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "cpcc", version, about = "Competition-aware weekly CPC forecasting pipeline")]
pub struct Cli {
    /// Worker threads for intra-stage parallelism (0 = all cores).
    /// Falls back to CPCC_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Flat `key = value` file supplying defaults for flags not given on the
    /// command line. For `synth`, other keys become `--set` overrides.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Parse raw events, canonicalize keywords and apply relevance and domain filters.
    Ingest(IngestArgs),
    /// Aggregate events to a keyword x ISO-week panel.
    Aggregate(AggregateArgs),
    /// Build the semantic graph, DTW neighborhoods and geographic tags.
    BuildProxies(ProxyArgs),
    /// Assemble the feature tensor.
    Featurize(FeaturizeArgs),
    /// Fit a forecaster.
    Train(TrainArgs),
    /// Produce forecasts from a trained model.
    Forecast(ForecastArgs),
    /// Score forecasts on the test range.
    Evaluate(EvaluateArgs),
    /// Segment keywords into level/volatility quadrants.
    Frontier(FrontierArgs),
    /// Train and score one model per feature configuration.
    Ablate(AblateArgs),
    /// Generate a seeded synthetic market.
    Synth(SynthArgs),
    /// Run the whole pipeline on a synthetic market.
    Demo(DemoArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Aggregate(_) => "aggregate",
            Command::BuildProxies(_) => "build-proxies",
            Command::Featurize(_) => "featurize",
            Command::Train(_) => "train",
            Command::Forecast(_) => "forecast",
            Command::Evaluate(_) => "evaluate",
            Command::Frontier(_) => "frontier",
            Command::Ablate(_) => "ablate",
            Command::Synth(_) => "synth",
            Command::Demo(_) => "demo",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// Line-delimited raw event records.
    #[arg(long)]
    pub input: PathBuf,
    /// Cleaned events; rejections and domain audit are written beside it.
    #[arg(long)]
    pub output: PathBuf,
    /// Largest number of uncovered calendar days a domain may have.
    #[arg(long, default_value_t = cpcc_core::ingest::DEFAULT_MAX_MISSING)]
    pub max_missing: u64,
    /// Fewest events a domain needs to be kept.
    #[arg(long, default_value_t = cpcc_core::ingest::DEFAULT_MIN_MENTIONS)]
    pub min_mentions: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct AggregateArgs {
    /// Cleaned events from `ingest`.
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Observed weeks a keyword needs inside the window.
    #[arg(long, default_value_t = 110)]
    pub min_weeks: usize,
    /// Trailing window length in weeks.
    #[arg(long, default_value_t = 127)]
    pub window: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ProxyArgs {
    #[arg(long)]
    pub panel: PathBuf,
    /// Embedding file, or `fallback` for hashed embeddings.
    #[arg(long, default_value = "fallback")]
    pub embeddings: String,
    /// Dimension of fallback embeddings.
    #[arg(long, default_value_t = 384)]
    pub embedding_dim: usize,
    /// Semantic neighbors per keyword.
    #[arg(long, default_value_t = cpcc_core::proxies::DEFAULT_K)]
    pub k: usize,
    /// DTW neighbors per keyword.
    #[arg(long, default_value_t = cpcc_core::proxies::DEFAULT_NEIGHBORS)]
    pub dtw_m: usize,
    /// Sakoe-Chiba band half-width.
    #[arg(long, default_value_t = cpcc_core::proxies::DEFAULT_BAND)]
    pub dtw_band: usize,
    /// Directory of extra gazetteer CSV tables.
    #[arg(long)]
    pub gazetteer: Option<PathBuf>,
    /// Last training week (inclusive), e.g. 2023-W14. Defaults to the end of
    /// the chronological training range.
    #[arg(long)]
    pub train_end: Option<String>,
    #[arg(long, default_value_t = cpcc_core::eval::DEFAULT_TEST_FRACTION)]
    pub test_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub panel: PathBuf,
    /// Output of `build-proxies`; needed by the geo, sem_cpc and dtw_cpc families.
    #[arg(long)]
    pub proxies: Option<PathBuf>,
    /// Comma-separated families: core, geo, sem_cpc, dtw_cpc, calendar, mix, noise.
    #[arg(long, default_value = "core")]
    pub families: String,
    /// continent, country or city.
    #[arg(long, default_value = "continent")]
    pub geo_res: String,
    #[arg(long, default_value = "1,2,4,8,12")]
    pub own_lags: String,
    #[arg(long, default_value = "1,2,4")]
    pub neighbor_lags: String,
    /// Neighbor aggregate: mean or median.
    #[arg(long, default_value = "mean")]
    pub aggregate: String,
    /// Columns in the noise family.
    #[arg(long, default_value_t = 64)]
    pub noise_dim: usize,
    /// Seed of the noise family.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = cpcc_core::eval::DEFAULT_TEST_FRACTION)]
    pub test_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Snaive,
    Ridge,
    Dcrnn,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Output of `featurize`; not needed by snaive.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Panel directory; defaults to the one the features were built from.
    #[arg(long)]
    pub panel: Option<PathBuf>,
    /// Graph for dcrnn: edge-list CSV, proxies directory, or `identity`.
    #[arg(long)]
    pub graph: Option<String>,
    #[arg(long, default_value = "1,6,12")]
    pub horizons: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Name recorded in forecasts and reports; defaults to the model kind.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value_t = cpcc_core::eval::DEFAULT_TEST_FRACTION)]
    pub test_fraction: f64,
    /// Seasonal period of snaive.
    #[arg(long, default_value_t = cpcc_core::models::DEFAULT_PERIOD)]
    pub period: usize,
    /// Ridge penalty.
    #[arg(long, default_value_t = cpcc_core::models::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Diffusion order.
    #[arg(long, default_value_t = 2)]
    pub diffusion_k: usize,
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    /// Input window in weeks.
    #[arg(long, default_value_t = 12)]
    pub window: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub step_size: f64,
    #[arg(long, default_value_t = 8)]
    pub batch: usize,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 10)]
    pub patience: usize,
    #[arg(long, default_value_t = 0.1)]
    pub validation_fraction: f64,
    /// Gradient-norm clip; 0 disables clipping.
    #[arg(long, default_value_t = 5.0)]
    pub clip: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ForecastArgs {
    #[arg(long)]
    pub model_dir: PathBuf,
    /// `test`, or comma-separated ISO weeks.
    #[arg(long, default_value = "test")]
    pub origins: String,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub panel: Option<PathBuf>,
    #[arg(long, default_value_t = cpcc_core::eval::DEFAULT_TEST_FRACTION)]
    pub test_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Forecast CSV (repeatable).
    #[arg(long, required = true)]
    pub forecasts: Vec<PathBuf>,
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long, default_value_t = cpcc_core::eval::DEFAULT_TEST_FRACTION)]
    pub test_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FrontierArgs {
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long, default_value_t = cpcc_core::eval::DEFAULT_TEST_FRACTION)]
    pub test_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AblateArgs {
    /// Flat `key = value` grid file with one `config = <families>` line per
    /// configuration.
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Generator field override `name=value` (repeatable); nested fields
    /// use dots, e.g. `volatile.level=2`.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Keywords in the synthetic market.
    #[arg(long)]
    pub keywords: Option<usize>,
    /// Epoch cap of the graph forecaster.
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    /// Skip the ridge ablation grid.
    #[arg(long)]
    pub no_ablation: bool,
}
