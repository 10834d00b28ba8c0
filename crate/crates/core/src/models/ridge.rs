use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_alignment, training_origins, ForecastEntry, ForecastSet, ForecastTask};
use crate::error::{Error, Result};
use crate::features::FeatureTensor;
use crate::panel::WeeklyPanel;

pub const DEFAULT_LAMBDA: f64 = 1.0;

/// Columns whose training standard deviation is below this are treated as
/// constant and get weight 0.
const MIN_STD: f64 = 1e-10;

/// Relative squared Cholesky pivot below which the system counts as
/// singular.
const SINGULAR_PIVOT: f64 = 1e-12;

/// One direct-horizon linear head over standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeHead {
    pub horizon: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub n_rows: usize,
}

impl RidgeHead {
    /// Fit on a row-major design with `p` columns. Standardization uses the
    /// population moments of these rows; the intercept is unpenalized.
    pub fn fit(design: &[f64], p: usize, y: &[f64], lambda: f64, horizon: usize) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Config(format!("ridge penalty must be finite and >= 0, got {lambda}")));
        }
        let n = y.len();
        if n == 0 || design.len() != n * p {
            return Err(Error::Data(format!("ridge at h={horizon} has no usable training rows")));
        }
        let mut mean = vec![0.0; p];
        for row in design.chunks_exact(p) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; p];
        for row in design.chunks_exact(p) {
            for j in 0..p {
                var[j] += (row[j] - mean[j]).powi(2);
            }
        }
        let std: Vec<f64> = var.iter().map(|v| (v / n as f64).sqrt()).collect();
        let active: Vec<usize> = (0..p).filter(|&j| std[j] > MIN_STD * mean[j].abs().max(1.0)).collect();
        let q = active.len();
        let y_mean = y.iter().sum::<f64>() / n as f64;

        let mut weights = vec![0.0; p];
        if q > 0 {
            let z = DMatrix::from_fn(n, q, |i, c| {
                let j = active[c];
                (design[i * p + j] - mean[j]) / std[j]
            });
            let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
            let mut gram = z.tr_mul(&z);
            for d in 0..q {
                gram[(d, d)] += lambda;
            }
            let rhs = z.tr_mul(&yc);
            let singular = || {
                if lambda == 0.0 {
                    Error::Numerical(format!(
                        "ridge normal equations at h={horizon} are singular with lambda = 0; set lambda > 0"
                    ))
                } else {
                    Error::Numerical(format!("ridge normal equations at h={horizon} are not positive definite"))
                }
            };
            let scale = gram.diagonal().max();
            let chol = gram.cholesky().ok_or_else(singular)?;
            // a pivot this small means the system is rank deficient up to rounding
            if chol.l_dirty().diagonal().iter().any(|d| d * d <= SINGULAR_PIVOT * scale) {
                return Err(singular());
            }
            let w = chol.solve(&rhs);
            for (c, &j) in active.iter().enumerate() {
                weights[j] = w[c];
            }
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numerical(format!("ridge weights at h={horizon} are not finite")));
        }
        let std = std.into_iter().map(|s| if s > MIN_STD { s } else { 1.0 }).collect();
        Ok(Self {
            horizon,
            mean,
            std,
            weights,
            intercept: y_mean,
            n_rows: n,
        })
    }

    /// Unclamped prediction for one feature row.
    pub fn raw(&self, row: &[f32]) -> f64 {
        self.raw_with(|j| row[j] as f64)
    }

    /// Unclamped prediction with feature `j` given by `value(j)`.
    pub fn raw_with(&self, value: impl Fn(usize) -> f64) -> f64 {
        let mut s = self.intercept;
        for j in 0..self.weights.len() {
            if self.weights[j] != 0.0 {
                s += self.weights[j] * (value(j) - self.mean[j]) / self.std[j];
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub lambda: f64,
    /// First week excluded from training.
    pub train_end: usize,
    pub feature_names: Vec<String>,
    pub feature_hash: String,
    pub heads: Vec<RidgeHead>,
}

/// Fit one ridge head per horizon on rows pairing features at origin `t`
/// with `cpc(t + h)`, for `t + h < train_end`; imputed targets are skipped.
pub fn fit_ridge(
    x: &FeatureTensor,
    panel: &WeeklyPanel,
    task: &ForecastTask,
    lambda: f64,
    train_end: usize,
) -> Result<RidgeModel> {
    task.validate()?;
    check_alignment(x, panel)?;
    let p = x.n_features();
    let mut heads = Vec::with_capacity(task.horizons.len());
    for &h in &task.horizons {
        let mut design = Vec::new();
        let mut y = Vec::new();
        for t in training_origins(&x.origin_weeks, h, train_end.min(panel.n_weeks())) {
            for k in 0..x.n_keywords() {
                if let Some(v) = panel.target(k, t + h) {
                    design.extend(x.row(k, t).iter().map(|&f| f as f64));
                    y.push(v);
                }
            }
        }
        heads.push(RidgeHead::fit(&design, p, &y, lambda, h)?);
    }
    log::info!(
        "ridge fitted: {} features, lambda {lambda}, rows per horizon {:?}",
        p,
        heads.iter().map(|h| h.n_rows).collect::<Vec<_>>()
    );
    Ok(RidgeModel {
        lambda,
        train_end,
        feature_names: x.catalog.iter().map(|d| d.name.clone()).collect(),
        feature_hash: x.config.hash(),
        heads,
    })
}

impl RidgeModel {
    pub fn horizons(&self) -> Vec<usize> {
        self.heads.iter().map(|h| h.horizon).collect()
    }

    pub fn head(&self, h: usize) -> Result<&RidgeHead> {
        self.heads
            .iter()
            .find(|x| x.horizon == h)
            .ok_or_else(|| Error::Config(format!("horizon {h} was not trained")))
    }

    pub fn predict(&self, x: &FeatureTensor, origins: &[usize], horizons: &[usize]) -> Result<ForecastSet> {
        if x.catalog.iter().map(|d| &d.name).ne(self.feature_names.iter()) {
            return Err(Error::Shape("feature catalog differs from the one the model was fitted on".into()));
        }
        let heads: Vec<&RidgeHead> = horizons.iter().map(|&h| self.head(h)).collect::<Result<_>>()?;
        let mut entries = Vec::with_capacity(origins.len() * x.n_keywords() * heads.len());
        for &t in origins {
            if t >= x.n_weeks {
                return Err(Error::Config(format!("origin {t} outside the feature tensor")));
            }
            for k in 0..x.n_keywords() {
                let row = x.row(k, t);
                for head in &heads {
                    let v = head.raw(row);
                    if !v.is_finite() {
                        return Err(Error::Numerical(format!("non-finite ridge prediction for keyword {k}")));
                    }
                    entries.push(ForecastEntry::new(k, t, head.horizon, v));
                }
            }
        }
        Ok(ForecastSet::new("ridge".into(), self.feature_hash.clone(), entries))
    }
}
