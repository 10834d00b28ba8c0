//! Forecasters: seasonal naive, ridge with exogenous covariates, and a
//! diffusion-convolution recurrent graph network. All produce direct
//! multi-horizon point forecasts clamped at zero.

mod checkpoint;
mod dcrnn;
mod diffusion;
mod forecast;
mod ridge;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTensor;
use crate::panel::WeeklyPanel;

pub use checkpoint::{load_model, save_model, Model, MODEL_BLOB, MODEL_MANIFEST};
pub use dcrnn::{
    fit_graph_forecaster, loss, loss_and_gradient, Dims, GraphForecaster, GraphHyper, InputScaling, Optimizer,
    Params, TrainingLog, Window, WindowBatch,
};
pub use diffusion::{diffusion_conv, Supports};
pub use forecast::{ForecastEntry, ForecastSet};
pub use ridge::{fit_ridge, RidgeModel, DEFAULT_LAMBDA};

pub const DEFAULT_HORIZONS: [usize; 3] = [1, 6, 12];
pub const DEFAULT_PERIOD: usize = 52;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForecastTask {
    pub horizons: Vec<usize>,
    /// Input window length in weeks.
    pub window: usize,
}

impl Default for ForecastTask {
    fn default() -> Self {
        Self {
            horizons: DEFAULT_HORIZONS.to_vec(),
            window: 12,
        }
    }
}

impl ForecastTask {
    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::Config("horizons must be a non-empty set of positive weeks".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("input window must be positive".into()));
        }
        Ok(())
    }

    pub fn max_horizon(&self) -> usize {
        self.horizons.iter().copied().max().unwrap_or(0)
    }
}

/// Parse `1,6,12`.
pub fn parse_horizons(s: &str) -> Result<Vec<usize>> {
    let h: Vec<usize> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| Error::Parse(format!("bad horizon {p:?}"))))
        .collect::<Result<_>>()?;
    ForecastTask {
        horizons: h.clone(),
        window: 1,
    }
    .validate()?;
    Ok(h)
}

/// Seasonal naive: `cpc(k, t + h - period)` when that week exists and is
/// not after the origin, otherwise the last value `cpc(k, t)`.
pub fn seasonal_naive(panel: &WeeklyPanel, origins: &[usize], horizons: &[usize], period: usize) -> Result<ForecastSet> {
    if period == 0 {
        return Err(Error::Config("seasonal period must be positive".into()));
    }
    let mut entries = Vec::with_capacity(panel.n_keywords() * origins.len() * horizons.len());
    for &t in origins {
        if t >= panel.n_weeks() {
            return Err(Error::Config(format!("origin {t} outside a panel of {} weeks", panel.n_weeks())));
        }
        for k in 0..panel.n_keywords() {
            for &h in horizons {
                let src = (t + h).checked_sub(period).filter(|&s| s <= t).unwrap_or(t);
                let v = panel.cpc_value(k, src).ok_or_else(|| {
                    Error::Data(format!("keyword {} has no CPC at week {src}", panel.keywords[k]))
                })?;
                entries.push(ForecastEntry::new(k, t, h, v));
            }
        }
    }
    Ok(ForecastSet::new(format!("snaive{period}"), String::new(), entries))
}

/// Origins whose `h`-week target lies before `train_end`.
pub fn training_origins(origins: &[usize], h: usize, train_end: usize) -> Vec<usize> {
    origins.iter().copied().filter(|&t| t + h < train_end).collect()
}

/// Check a feature tensor and a panel describe the same keywords and weeks.
pub(crate) fn check_alignment(x: &FeatureTensor, panel: &WeeklyPanel) -> Result<()> {
    if x.keywords != panel.keywords || x.n_weeks != panel.n_weeks() {
        return Err(Error::Shape(format!(
            "feature tensor ({} keywords x {} weeks) does not match the panel ({} x {})",
            x.n_keywords(),
            x.n_weeks,
            panel.n_keywords(),
            panel.n_weeks()
        )));
    }
    Ok(())
}
