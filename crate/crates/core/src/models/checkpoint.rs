//! Model checkpoints: a little-endian `f32` blob of the learned weights plus
//! a JSON manifest with architecture, hyperparameters, input scaling, the
//! feature config hash and the training range.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dcrnn::{Dims, GraphForecaster, GraphHyper, InputScaling, Params, TrainingLog};
use super::ridge::{RidgeHead, RidgeModel};
use super::{seasonal_naive, ForecastSet};
use crate::error::{Error, Result};
use crate::features::FeatureTensor;
use crate::panel::WeeklyPanel;
use crate::proxies::Adjacency;

pub const MODEL_BLOB: &str = "model.bin";
pub const MODEL_MANIFEST: &str = "model.json";

/// Any trained forecaster.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    SeasonalNaive { period: usize, horizons: Vec<usize> },
    Ridge(RidgeModel),
    Graph(GraphForecaster),
}

impl Model {
    pub fn id(&self) -> &'static str {
        match self {
            Model::SeasonalNaive { .. } => "snaive",
            Model::Ridge(_) => "ridge",
            Model::Graph(_) => "dcrnn",
        }
    }

    pub fn horizons(&self) -> Vec<usize> {
        match self {
            Model::SeasonalNaive { horizons, .. } => horizons.clone(),
            Model::Ridge(m) => m.horizons(),
            Model::Graph(m) => m.horizons.clone(),
        }
    }

    pub fn predict(
        &self,
        x: Option<&FeatureTensor>,
        panel: &WeeklyPanel,
        origins: &[usize],
        horizons: &[usize],
    ) -> Result<ForecastSet> {
        let need = || Error::Config(format!("model {} needs a feature tensor", self.id()));
        let mut set = match self {
            Model::SeasonalNaive { period, .. } => seasonal_naive(panel, origins, horizons, *period)?,
            Model::Ridge(m) => m.predict(x.ok_or_else(need)?, origins, horizons)?,
            Model::Graph(m) => m.predict(x.ok_or_else(need)?, panel, origins, horizons)?,
        };
        set.model_id = self.id().to_string();
        Ok(set)
    }
}

#[derive(Serialize, Deserialize)]
struct RidgeHeadMeta {
    horizon: usize,
    mean: Vec<f64>,
    std: Vec<f64>,
    n_rows: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "architecture", rename_all = "snake_case")]
enum Manifest {
    SeasonalNaive {
        period: usize,
        horizons: Vec<usize>,
    },
    Ridge {
        lambda: f64,
        train_end: usize,
        feature_names: Vec<String>,
        config_hash: String,
        heads: Vec<RidgeHeadMeta>,
        blob_len: usize,
    },
    Dcrnn {
        hyper: GraphHyper,
        horizons: Vec<usize>,
        train_end: usize,
        feature_names: Vec<String>,
        config_hash: String,
        scaling: InputScaling,
        dims: Dims,
        n_params: usize,
        graph: Adjacency,
        training: TrainingLog,
    },
}

fn to_blob(v: impl Iterator<Item = f64>) -> Vec<u8> {
    v.flat_map(|x| (x as f32).to_le_bytes()).collect()
}

pub fn save_model(dir: &Path, model: &Model) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (manifest, blob) = match model {
        Model::SeasonalNaive { period, horizons } => (
            Manifest::SeasonalNaive {
                period: *period,
                horizons: horizons.clone(),
            },
            Vec::new(),
        ),
        Model::Ridge(m) => {
            let values: Vec<f64> = m
                .heads
                .iter()
                .flat_map(|h| h.weights.iter().copied().chain([h.intercept]))
                .collect();
            (
                Manifest::Ridge {
                    lambda: m.lambda,
                    train_end: m.train_end,
                    feature_names: m.feature_names.clone(),
                    config_hash: m.feature_hash.clone(),
                    heads: m
                        .heads
                        .iter()
                        .map(|h| RidgeHeadMeta {
                            horizon: h.horizon,
                            mean: h.mean.clone(),
                            std: h.std.clone(),
                            n_rows: h.n_rows,
                        })
                        .collect(),
                    blob_len: values.len(),
                },
                to_blob(values.into_iter()),
            )
        }
        Model::Graph(m) => (
            Manifest::Dcrnn {
                hyper: m.hyper.clone(),
                horizons: m.horizons.clone(),
                train_end: m.train_end,
                feature_names: m.feature_names.clone(),
                config_hash: m.feature_hash.clone(),
                scaling: m.scaling.clone(),
                dims: m.params.dims,
                n_params: m.params.len(),
                graph: m.graph.clone(),
                training: m.log.clone(),
            },
            to_blob(m.params.data.iter().copied()),
        ),
    };
    let path = dir.join(MODEL_BLOB);
    fs::write(&path, blob).map_err(|e| Error::io(&path, e))?;
    let path = dir.join(MODEL_MANIFEST);
    fs::write(&path, serde_json::to_vec_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
}

pub fn load_model(dir: &Path) -> Result<Model> {
    let path = dir.join(MODEL_MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let path = dir.join(MODEL_BLOB);
    let blob = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    if blob.len() % 4 != 0 {
        return Err(Error::Shape("model blob length is not a multiple of 4".into()));
    }
    let values: Vec<f64> = blob
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    let expect = |n: usize| {
        if values.len() == n {
            Ok(())
        } else {
            Err(Error::Shape(format!("model blob holds {} values, manifest implies {n}", values.len())))
        }
    };
    Ok(match manifest {
        Manifest::SeasonalNaive { period, horizons } => Model::SeasonalNaive { period, horizons },
        Manifest::Ridge {
            lambda,
            train_end,
            feature_names,
            config_hash,
            heads,
            blob_len,
        } => {
            let p = feature_names.len();
            expect(blob_len)?;
            expect(heads.len() * (p + 1))?;
            let heads = heads
                .into_iter()
                .zip(values.chunks_exact(p + 1))
                .map(|(meta, v)| RidgeHead {
                    horizon: meta.horizon,
                    mean: meta.mean,
                    std: meta.std,
                    weights: v[..p].to_vec(),
                    intercept: v[p],
                    n_rows: meta.n_rows,
                })
                .collect();
            Model::Ridge(RidgeModel {
                lambda,
                train_end,
                feature_names,
                feature_hash: config_hash,
                heads,
            })
        }
        Manifest::Dcrnn {
            hyper,
            horizons,
            train_end,
            feature_names,
            config_hash,
            scaling,
            dims,
            n_params,
            graph,
            training,
        } => {
            expect(n_params)?;
            expect(dims.n_params())?;
            Model::Graph(GraphForecaster {
                hyper,
                horizons,
                train_end,
                feature_names,
                feature_hash: config_hash,
                scaling,
                graph,
                params: Params { dims, data: values },
                log: training,
            })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ridge_round_trip_rounds_to_f32() {
        let m = Model::Ridge(RidgeModel {
            lambda: 0.5,
            train_end: 10,
            feature_names: vec!["a".into(), "b".into()],
            feature_hash: "h".into(),
            heads: vec![RidgeHead {
                horizon: 6,
                mean: vec![0.1, 0.2],
                std: vec![1.0, 2.0],
                weights: vec![0.25, -1.5],
                intercept: 3.0,
                n_rows: 4,
            }],
        });
        let dir = tempfile::tempdir().unwrap();
        save_model(dir.path(), &m).unwrap();
        assert_eq!(load_model(dir.path()).unwrap(), m);
        assert_eq!(std::fs::read(dir.path().join(MODEL_BLOB)).unwrap().len(), 3 * 4);
    }

    #[test]
    fn snaive_round_trip_and_truncated_blob() {
        let dir = tempfile::tempdir().unwrap();
        let m = Model::SeasonalNaive {
            period: 52,
            horizons: vec![1, 6],
        };
        save_model(dir.path(), &m).unwrap();
        assert_eq!(load_model(dir.path()).unwrap(), m);
        assert!(load_model(&dir.path().join("missing")).is_err());
    }
}
