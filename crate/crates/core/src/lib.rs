//! Competition-aware weekly CPC forecasting.
//!
//! The pipeline runs from raw ad events to an evaluation report:
//!
//! ```text
//! ingest -> panel -> proxies (semantic kNN graph, DTW neighborhoods, geo tags)
//!        -> features -> models (seasonal naive, ridge, diffusion-recurrent graph net)
//!        -> eval (chronological split, sMAPE / RMSE, frontier quadrants, ablation)
//! ```
//!
//! `synth` generates a seeded market with known cluster, geographic and
//! seasonal structure so every stage can be checked against ground truth.

pub mod error;
pub mod eval;
pub mod ingest;
pub mod features;
pub mod models;
pub mod panel;
pub mod proxies;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
pub use panel::{IsoWeek, WeeklyPanel};
pub use eval::{evaluate, EvalReport, FrontierSegmentation};
pub use features::{build_features, FeatureConfig, FeatureTensor, Proxies};
pub use models::{ForecastSet, Model};
pub use proxies::{Adjacency, DtwNeighborhood, EmbeddingMatrix, GeoTag, ProxyBundle, SemanticGraph};
pub use synth::{SynthConfig, SynthMarket};
