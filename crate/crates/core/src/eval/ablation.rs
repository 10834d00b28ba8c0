use std::io::Write;

use serde::{Deserialize, Serialize};

use super::frontier::{FrontierSegmentation, Quadrant};
use super::metrics::Aggregate;
use super::report::evaluate;
use super::SplitSpec;
use crate::error::{Error, Result};
use crate::features::{build_features, FeatureConfig, Proxies};
use crate::models::{fit_graph_forecaster, fit_ridge, ForecastSet, ForecastTask, GraphHyper, Model};
use crate::panel::WeeklyPanel;
use crate::proxies::Adjacency;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    Ridge { lambda: f64 },
    Dcrnn(GraphHyper),
}

impl ModelSpec {
    pub fn id(&self) -> &'static str {
        match self {
            ModelSpec::Ridge { .. } => "ridge",
            ModelSpec::Dcrnn(_) => "dcrnn",
        }
    }
}

/// Shared inputs for every configuration in a grid.
#[derive(Clone, Copy)]
pub struct AblationInputs<'a> {
    pub panel: &'a WeeklyPanel,
    pub proxies: Proxies<'a>,
    /// Graph the recurrent model diffuses over.
    pub graph: Option<&'a Adjacency>,
    pub split: &'a SplitSpec,
    pub task: &'a ForecastTask,
    pub segmentation: Option<&'a FrontierSegmentation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub config: String,
    pub horizon: usize,
    pub smape: Option<Aggregate>,
    pub rmse: Option<Aggregate>,
    pub quadrant_smape: Vec<(Quadrant, f64)>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub model: String,
    pub rows: Vec<AblationRow>,
}

/// Forecasts at every test origin of every horizon.
pub fn forecast_test(model: &Model, x: Option<&crate::features::FeatureTensor>, panel: &WeeklyPanel, split: &SplitSpec, horizons: &[usize]) -> Result<ForecastSet> {
    let mut out: Option<ForecastSet> = None;
    for &h in horizons {
        let origins = split.test_origins(h);
        if origins.is_empty() {
            return Err(Error::Data(format!("no test origin leaves room for horizon {h}")));
        }
        let f = model.predict(x, panel, &origins, &[h])?;
        match out.as_mut() {
            Some(o) => o.entries.extend(f.entries),
            None => out = Some(f),
        }
    }
    out.ok_or_else(|| Error::Config("no horizons requested".into()))
}

fn run_one(cfg: &FeatureConfig, spec: &ModelSpec, inp: &AblationInputs<'_>) -> Result<crate::eval::EvalReport> {
    let mut cfg = cfg.clone();
    cfg.train_weeks.get_or_insert(inp.split.train_end());
    let x = build_features(inp.panel, inp.proxies, &cfg)?;
    let model = match spec {
        ModelSpec::Ridge { lambda } => Model::Ridge(fit_ridge(&x, inp.panel, inp.task, *lambda, inp.split.train_end())?),
        ModelSpec::Dcrnn(hp) => {
            let g = inp
                .graph
                .ok_or_else(|| Error::Config("the recurrent graph model needs a graph".into()))?;
            Model::Graph(fit_graph_forecaster(&x, inp.panel, g, inp.task, hp, inp.split.train_end())?)
        }
    };
    let mut f = forecast_test(&model, Some(&x), inp.panel, inp.split, &inp.task.horizons)?;
    f.model_id = cfg.label();
    evaluate(&f, inp.panel, inp.split, inp.segmentation)
}

/// Train and score one model per feature configuration with shared seed and
/// split. A failing configuration becomes an error row. Rows are grouped by
/// horizon and ordered by overall sMAPE.
pub fn run_ablation(grid: &[FeatureConfig], spec: &ModelSpec, inputs: &AblationInputs<'_>) -> AblationTable {
    let mut rows = Vec::new();
    for cfg in grid {
        let label = cfg.label();
        match run_one(cfg, spec, inputs) {
            Ok(report) => {
                for r in report.horizons {
                    rows.push(AblationRow {
                        config: label.clone(),
                        horizon: r.horizon,
                        smape: Some(r.smape),
                        rmse: Some(r.rmse),
                        quadrant_smape: r.quadrants.iter().map(|q| (q.quadrant, q.smape.mean)).collect(),
                        error: None,
                    });
                }
            }
            Err(e) => {
                log::warn!("ablation config {label} failed: {e}");
                for &h in &inputs.task.horizons {
                    rows.push(AblationRow {
                        config: label.clone(),
                        horizon: h,
                        smape: None,
                        rmse: None,
                        quadrant_smape: Vec::new(),
                        error: Some(e.to_string()),
                    });
                }
            }
        }
    }
    rows.sort_by(|a, b| {
        let key = |r: &AblationRow| r.smape.map_or(f64::INFINITY, |s| s.mean);
        a.horizon.cmp(&b.horizon).then(key(a).total_cmp(&key(b)))
    });
    AblationTable {
        model: spec.id().to_string(),
        rows,
    }
}

impl AblationTable {
    pub fn row(&self, config: &str, horizon: usize) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.config == config && r.horizon == horizon)
    }

    /// Best (lowest overall sMAPE) successful row at `horizon`, optionally
    /// skipping one configuration.
    pub fn best(&self, horizon: usize, except: Option<&str>) -> Option<&AblationRow> {
        self.rows
            .iter()
            .filter(|r| r.horizon == horizon && r.smape.is_some() && Some(r.config.as_str()) != except)
            .min_by(|a, b| a.smape.unwrap().mean.total_cmp(&b.smape.unwrap().mean))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let quads: Vec<String> = Quadrant::ALL.iter().map(|q| format!("smape_{}", q.label().replace('/', "_"))).collect();
        writeln!(
            w,
            "model,config,horizon,status,smape_mean,smape_std,rmse_mean,rmse_std,{}",
            quads.join(",")
        )?;
        for r in &self.rows {
            let (status, s, e) = match (&r.error, r.smape, r.rmse) {
                (None, Some(s), Some(e)) => ("ok".to_string(), s, e),
                (err, _, _) => {
                    let msg = err.clone().unwrap_or_default().replace(',', ";");
                    let nan = Aggregate::of(&[]);
                    (format!("failed: {msg}"), nan, nan)
                }
            };
            let q: Vec<String> = Quadrant::ALL
                .iter()
                .map(|q| {
                    r.quadrant_smape
                        .iter()
                        .find(|(x, _)| x == q)
                        .map_or(String::new(), |(_, v)| v.to_string())
                })
                .collect();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                self.model,
                r.config,
                r.horizon,
                status,
                s.mean,
                s.std,
                e.mean,
                e.std,
                q.join(",")
            )?;
        }
        Ok(())
    }
}
