//! Diffusion-convolution gated recurrent forecaster trained with masked MAE
//! by hand-written backpropagation through time.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diffusion::Supports;
use super::{check_alignment, ForecastEntry, ForecastSet, ForecastTask};
use crate::error::{Error, Result};
use crate::features::{FeatureTensor, Family};
use crate::panel::WeeklyPanel;
use crate::proxies::Adjacency;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Adam,
    /// Plain gradient descent with a fixed step.
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphHyper {
    /// Diffusion order.
    pub k: usize,
    pub hidden: usize,
    pub window: usize,
    pub step_size: f64,
    /// Origin windows per minibatch; `usize::MAX` means full batch.
    pub batch: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Trailing share of training origins used for early stopping.
    pub validation_fraction: f64,
    pub optimizer: Optimizer,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip: Option<f64>,
    pub seed: u64,
}

impl Default for GraphHyper {
    fn default() -> Self {
        Self {
            k: 2,
            hidden: 32,
            window: 12,
            step_size: 1e-3,
            batch: 8,
            max_epochs: 100,
            patience: 10,
            validation_fraction: 0.1,
            optimizer: Optimizer::Adam,
            clip: Some(5.0),
            seed: 0,
        }
    }
}

/// Sizes of the parameter blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub features: usize,
    pub hidden: usize,
    pub supports: usize,
    pub horizons: usize,
}

const WGX: usize = 0;
const WGH: usize = 1;
const BG: usize = 2;
const WCX: usize = 3;
const WCH: usize = 4;
const BC: usize = 5;
const WO: usize = 6;
const BO: usize = 7;
const WS: usize = 8;

impl Dims {
    /// `(rows, cols)` of each block: gate weights on diffused inputs and
    /// states, gate bias, candidate weights and bias, output heads on the
    /// final state, and output heads on the final diffused input.
    pub fn blocks(&self) -> [(usize, usize); 9] {
        let (pf, ph, h) = (self.supports * self.features, self.supports * self.hidden, self.hidden);
        [
            (pf, 2 * h),
            (ph, 2 * h),
            (1, 2 * h),
            (pf, h),
            (ph, h),
            (1, h),
            (h, self.horizons),
            (1, self.horizons),
            (pf, self.horizons),
        ]
    }

    pub fn n_params(&self) -> usize {
        self.blocks().iter().map(|(r, c)| r * c).sum()
    }

    fn offset(&self, block: usize) -> usize {
        self.blocks()[..block].iter().map(|(r, c)| r * c).sum()
    }
}

/// Flat parameter vector with block views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub dims: Dims,
    pub data: Vec<f64>,
}

impl Params {
    /// Glorot-uniform weights, update-gate bias 1, output bias 1 (so the
    /// initial forecast is the window's CPC level).
    pub fn init(dims: Dims, seed: u64) -> Self {
        let mut rng = seed::stream(seed, "dcrnn/init");
        let mut data = vec![0.0; dims.n_params()];
        let blocks = dims.blocks();
        for (b, &(r, c)) in blocks.iter().enumerate() {
            let off = dims.offset(b);
            let slot = &mut data[off..off + r * c];
            match b {
                BG => slot[dims.hidden..].fill(1.0),
                BC | WS => {}
                BO => slot.fill(1.0),
                _ => {
                    let fan_in = if b == WGX || b == WCX { dims.features * dims.supports } else { r };
                    let mut limit = (6.0 / (fan_in + c) as f64).sqrt();
                    if b == WO {
                        limit *= 0.1;
                    }
                    slot.iter_mut().for_each(|v| *v = rng.random_range(-limit..limit));
                }
            }
        }
        Self { dims, data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn block(&self, b: usize) -> ArrayView2<'_, f64> {
        let (r, c) = self.dims.blocks()[b];
        let off = self.dims.offset(b);
        ArrayView2::from_shape((r, c), &self.data[off..off + r * c]).expect("block shape")
    }
}

/// Per-feature input normalization. CPC-valued columns are divided by the
/// keyword's mean own CPC over the window and shifted by -1; the rest are
/// standardized with training-range moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaling {
    pub scale_feature: usize,
    pub relative: Vec<bool>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl InputScaling {
    pub fn fit(x: &FeatureTensor, train_end: usize) -> Result<Self> {
        let own: Vec<(usize, usize)> = x
            .catalog
            .iter()
            .enumerate()
            .filter(|(_, d)| d.family == Family::Core && d.name.starts_with("cpc_lag"))
            .map(|(j, d)| (d.lag.unwrap_or(usize::MAX), j))
            .collect();
        let scale_feature = own
            .iter()
            .min()
            .map(|&(_, j)| j)
            .ok_or_else(|| Error::Config("graph forecaster needs an own-CPC lag feature".into()))?;
        let relative: Vec<bool> = x
            .catalog
            .iter()
            .map(|d| {
                matches!(d.family, Family::SemCpc | Family::DtwCpc)
                    || (d.family == Family::Core && d.name.starts_with("cpc_lag"))
            })
            .collect();
        let f = x.n_features();
        let rows = train_end.min(x.n_weeks);
        if rows == 0 {
            return Err(Error::Config("empty training range".into()));
        }
        let count = (rows * x.n_keywords()) as f64;
        let mut mean = vec![0.0; f];
        let mut sq = vec![0.0; f];
        for k in 0..x.n_keywords() {
            for t in 0..rows {
                for (j, &v) in x.row(k, t).iter().enumerate() {
                    mean[j] += v as f64;
                }
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        for k in 0..x.n_keywords() {
            for t in 0..rows {
                for (j, &v) in x.row(k, t).iter().enumerate() {
                    sq[j] += (v as f64 - mean[j]).powi(2);
                }
            }
        }
        let std = sq
            .iter()
            .map(|s| {
                let sd = (s / count).sqrt();
                if sd > 1e-10 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self {
            scale_feature,
            relative,
            mean,
            std,
        })
    }
}

/// One origin: `window` normalized input steps, per-keyword output scale,
/// targets and the 0/1 target mask.
#[derive(Debug, Clone)]
pub struct Window {
    pub origin: usize,
    pub inputs: Vec<Array2<f64>>,
    pub scale: Array1<f64>,
    pub targets: Array2<f64>,
    pub mask: Array2<f64>,
}

impl Window {
    /// Targets at `origin + h` are kept only when that week is before
    /// `target_limit` and not imputed.
    pub fn build(
        x: &FeatureTensor,
        panel: &WeeklyPanel,
        scaling: &InputScaling,
        origin: usize,
        len: usize,
        horizons: &[usize],
        target_limit: usize,
    ) -> Result<Self> {
        if origin + 1 < len || origin >= x.n_weeks {
            return Err(Error::Config(format!(
                "origin {origin} cannot host an input window of {len} weeks"
            )));
        }
        let (n, f) = (x.n_keywords(), x.n_features());
        let first = origin + 1 - len;
        let scale = Array1::from_shape_fn(n, |k| {
            let s: f64 = (first..=origin).map(|t| x.get(k, t, scaling.scale_feature) as f64).sum();
            (s / len as f64).max(1e-6)
        });
        let inputs = (first..=origin)
            .map(|t| {
                Array2::from_shape_fn((n, f), |(k, j)| {
                    let v = x.get(k, t, j) as f64;
                    if scaling.relative[j] {
                        v / scale[k] - 1.0
                    } else {
                        (v - scaling.mean[j]) / scaling.std[j]
                    }
                })
            })
            .collect();
        let nh = horizons.len();
        let mut targets = Array2::zeros((n, nh));
        let mut mask = Array2::zeros((n, nh));
        for (c, &h) in horizons.iter().enumerate() {
            let w = origin + h;
            if w < target_limit.min(panel.n_weeks()) {
                for k in 0..n {
                    if let Some(v) = panel.target(k, w) {
                        targets[(k, c)] = v;
                        mask[(k, c)] = 1.0;
                    }
                }
            }
        }
        Ok(Self {
            origin,
            inputs,
            scale,
            targets,
            mask,
        })
    }
}

struct StepCache {
    xe: Array2<f64>,
    he: Array2<f64>,
    rhe: Array2<f64>,
    h_prev: Array2<f64>,
    r: Array2<f64>,
    u: Array2<f64>,
    c: Array2<f64>,
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Run the recurrence over a window; returns the scaled forecasts
/// (`n × horizons`), and when `keep` is set, the per-step caches and final
/// state for back-propagation.
fn forward(p: &Params, sup: &Supports, w: &Window, keep: bool) -> (Array2<f64>, Vec<StepCache>, Array2<f64>) {
    let hd = p.dims.hidden;
    let n = w.scale.len();
    let (wgx, wgh, bg) = (p.block(WGX), p.block(WGH), p.block(BG));
    let (wcx, wch, bc) = (p.block(WCX), p.block(WCH), p.block(BC));
    let mut h = Array2::<f64>::zeros((n, hd));
    let mut caches = Vec::with_capacity(if keep { w.inputs.len() } else { 0 });
    let mut x_last = Array2::zeros((n, 0));
    for x in &w.inputs {
        let xe = sup.expand(x);
        x_last = xe.clone();
        let he = sup.expand(&h);
        let mut g = xe.dot(&wgx) + he.dot(&wgh) + &bg;
        g.mapv_inplace(sigmoid);
        let r = g.slice(s![.., ..hd]).to_owned();
        let u = g.slice(s![.., hd..]).to_owned();
        let rhe = sup.expand(&(&r * &h));
        let mut c = xe.dot(&wcx) + rhe.dot(&wch) + &bc;
        c.mapv_inplace(f64::tanh);
        let mut next = Array2::zeros((n, hd));
        Zip::from(&mut next)
            .and(&u)
            .and(&h)
            .and(&c)
            .for_each(|o, &u, &h, &c| *o = u * h + (1.0 - u) * c);
        let h_prev = std::mem::replace(&mut h, next);
        if keep {
            caches.push(StepCache {
                xe,
                he,
                rhe,
                h_prev,
                r,
                u,
                c,
            });
        }
    }
    let out = h.dot(&p.block(WO)) + x_last.dot(&p.block(WS)) + &p.block(BO);
    let pred = &out * &w.scale.view().insert_axis(Axis(1));
    (pred, caches, h)
}

/// Sum of masked absolute errors, mask count and the gradient of the sum.
fn window_grad(p: &Params, sup: &Supports, w: &Window) -> (f64, f64, Vec<f64>) {
    let hd = p.dims.hidden;
    let (pred, caches, h_last) = forward(p, sup, w, true);
    let diff = &pred - &w.targets;
    let abs_sum: f64 = (&diff.mapv(f64::abs) * &w.mask).sum();
    let count = w.mask.sum();
    // d|pred - y| / d out = sign * scale
    let mut d_out = diff.mapv(|d| if d > 0.0 { 1.0 } else if d < 0.0 { -1.0 } else { 0.0 }) * &w.mask;
    d_out *= &w.scale.view().insert_axis(Axis(1));

    let blocks = p.dims.blocks();
    let mut grads: Vec<Array2<f64>> = blocks.iter().map(|&(r, c)| Array2::zeros((r, c))).collect();
    grads[WO] = h_last.t().dot(&d_out);
    grads[BO] = d_out.sum_axis(Axis(0)).insert_axis(Axis(0));
    if let Some(last) = caches.last() {
        grads[WS] = last.xe.t().dot(&d_out);
    }
    let mut dh = d_out.dot(&p.block(WO).t());

    let (wgh, wch) = (p.block(WGH), p.block(WCH));
    for cache in caches.iter().rev() {
        let StepCache {
            xe,
            he,
            rhe,
            h_prev,
            r,
            u,
            c,
        } = cache;
        let du = &dh * &(h_prev - c);
        let dc = &dh * &u.mapv(|u| 1.0 - u);
        let mut dh_prev = &dh * u;
        let dcpre = dc * &c.mapv(|c| 1.0 - c * c);
        grads[WCX] += &xe.t().dot(&dcpre);
        grads[WCH] += &rhe.t().dot(&dcpre);
        grads[BC] += &dcpre.sum_axis(Axis(0)).insert_axis(Axis(0));
        let d_rh = sup.expand_adjoint(&dcpre.dot(&wch.t()), hd);
        let dr = &d_rh * h_prev;
        dh_prev += &(&d_rh * r);
        let dgr = dr * &r.mapv(|r| r * (1.0 - r));
        let dgu = du * &u.mapv(|u| u * (1.0 - u));
        let dg = concatenate![Axis(1), dgr, dgu];
        grads[WGX] += &xe.t().dot(&dg);
        grads[WGH] += &he.t().dot(&dg);
        grads[BG] += &dg.sum_axis(Axis(0)).insert_axis(Axis(0));
        dh_prev += &sup.expand_adjoint(&dg.dot(&wgh.t()), hd);
        dh = dh_prev;
    }
    let flat = grads.into_iter().flat_map(|g| g.into_iter()).collect();
    (abs_sum, count, flat)
}

/// Masked MAE over `windows` and its gradient. Windows are processed in
/// parallel and reduced in input order.
pub fn loss_and_gradient(p: &Params, sup: &Supports, windows: &[&Window]) -> (f64, Vec<f64>) {
    let parts: Vec<(f64, f64, Vec<f64>)> = windows.par_iter().map(|w| window_grad(p, sup, w)).collect();
    let mut total = 0.0;
    let mut count = 0.0;
    let mut grad = vec![0.0; p.len()];
    for (a, c, g) in parts {
        total += a;
        count += c;
        grad.iter_mut().zip(&g).for_each(|(x, y)| *x += y);
    }
    if count == 0.0 {
        return (0.0, grad);
    }
    grad.iter_mut().for_each(|g| *g /= count);
    (total / count, grad)
}

/// Masked MAE over `windows` without gradients.
pub fn loss(p: &Params, sup: &Supports, windows: &[&Window]) -> f64 {
    let parts: Vec<(f64, f64)> = windows
        .par_iter()
        .map(|w| {
            let (pred, _, _) = forward(p, sup, w, false);
            let abs = ((&pred - &w.targets).mapv(f64::abs) * &w.mask).sum();
            (abs, w.mask.sum())
        })
        .collect();
    let (a, c) = parts.iter().fold((0.0, 0.0), |(a, c), &(x, y)| (a + x, c + y));
    if c == 0.0 {
        0.0
    } else {
        a / c
    }
}

/// Windows sharing one set of supports.
pub struct WindowBatch {
    pub supports: Supports,
    pub windows: Vec<Window>,
}

impl WindowBatch {
    pub fn refs(&self) -> Vec<&Window> {
        self.windows.iter().collect()
    }

    pub fn loss(&self, p: &Params) -> f64 {
        loss(p, &self.supports, &self.refs())
    }

    pub fn loss_and_gradient(&self, p: &Params) -> (f64, Vec<f64>) {
        loss_and_gradient(p, &self.supports, &self.refs())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    /// `(epoch, mean training loss, validation MAE)`.
    pub epochs: Vec<(usize, f64, f64)>,
    pub best_epoch: usize,
    pub best_validation: f64,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphForecaster {
    pub hyper: GraphHyper,
    pub horizons: Vec<usize>,
    pub train_end: usize,
    pub feature_names: Vec<String>,
    pub feature_hash: String,
    pub scaling: InputScaling,
    pub graph: Adjacency,
    pub params: Params,
    pub log: TrainingLog,
}

/// Train on origin windows whose first horizon lands before `train_end`;
/// the last `validation_fraction` of those origins drive early stopping and
/// the best-validation parameters are kept.
pub fn fit_graph_forecaster(
    x: &FeatureTensor,
    panel: &WeeklyPanel,
    graph: &Adjacency,
    task: &ForecastTask,
    hyper: &GraphHyper,
    train_end: usize,
) -> Result<GraphForecaster> {
    task.validate()?;
    check_alignment(x, panel)?;
    if graph.n() != x.n_keywords() {
        return Err(Error::Shape(format!("graph has {} nodes for {} keywords", graph.n(), x.n_keywords())));
    }
    if hyper.hidden == 0 || hyper.batch == 0 || hyper.window == 0 || !(hyper.step_size > 0.0) {
        return Err(Error::Config("hidden width, batch, window and step size must be positive".into()));
    }
    let supports = Supports::new(graph, hyper.k)?;
    let scaling = InputScaling::fit(x, train_end)?;
    let min_h = task.horizons.iter().copied().min().unwrap_or(1);
    let origins: Vec<usize> = x
        .origin_weeks
        .iter()
        .copied()
        .filter(|&t| t + 1 >= hyper.window && t + min_h < train_end)
        .collect();
    if origins.len() < 2 {
        return Err(Error::Data(format!("only {} training origins; need at least 2", origins.len())));
    }
    let n_val = ((origins.len() as f64 * hyper.validation_fraction).round() as usize).clamp(1, origins.len() - 1);
    let windows: Vec<Window> = origins
        .iter()
        .map(|&t| Window::build(x, panel, &scaling, t, hyper.window, &task.horizons, train_end))
        .collect::<Result<_>>()?;
    let (train, val) = windows.split_at(windows.len() - n_val);
    let val: Vec<&Window> = val.iter().collect();

    let dims = Dims {
        features: x.n_features(),
        hidden: hyper.hidden,
        supports: supports.count(),
        horizons: task.horizons.len(),
    };
    let mut params = Params::init(dims, hyper.seed);
    log::info!(
        "graph forecaster: {} parameters, {} train / {} validation origins",
        params.len(),
        train.len(),
        val.len()
    );
    let mut opt = OptState::new(params.len());
    let mut rng = seed::stream(hyper.seed, "dcrnn/shuffle");
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best = params.clone();
    let mut log = TrainingLog {
        best_validation: loss(&params, &supports, &val),
        ..TrainingLog::default()
    };
    let mut wait = 0;
    for epoch in 1..=hyper.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(hyper.batch.min(order.len())) {
            let batch: Vec<&Window> = chunk.iter().map(|&i| &train[i]).collect();
            let (l, mut g) = loss_and_gradient(&params, &supports, &batch);
            if !l.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("training diverged at epoch {epoch}")));
            }
            if let Some(max) = hyper.clip {
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > max {
                    g.iter_mut().for_each(|v| *v *= max / norm);
                }
            }
            opt.step(hyper, &mut params.data, &g);
            epoch_loss += l;
            batches += 1;
        }
        let val_mae = loss(&params, &supports, &val);
        if !val_mae.is_finite() {
            return Err(Error::Numerical(format!("training diverged at epoch {epoch}")));
        }
        log.epochs.push((epoch, epoch_loss / batches as f64, val_mae));
        log::debug!("epoch {epoch}: train {:.5} val {val_mae:.5}", epoch_loss / batches as f64);
        if val_mae < log.best_validation {
            log.best_validation = val_mae;
            log.best_epoch = epoch;
            best = params.clone();
            wait = 0;
        } else {
            wait += 1;
            if wait >= hyper.patience {
                log.stopped_early = true;
                break;
            }
        }
    }
    log::info!(
        "graph forecaster: best validation MAE {:.5} at epoch {}",
        log.best_validation,
        log.best_epoch
    );
    Ok(GraphForecaster {
        hyper: hyper.clone(),
        horizons: task.horizons.clone(),
        train_end,
        feature_names: x.catalog.iter().map(|d| d.name.clone()).collect(),
        feature_hash: x.config.hash(),
        scaling,
        graph: graph.clone(),
        params: best,
        log,
    })
}

struct OptState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl OptState {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, hyper: &GraphHyper, w: &mut [f64], g: &[f64]) {
        let lr = hyper.step_size;
        match hyper.optimizer {
            Optimizer::Sgd => w.iter_mut().zip(g).for_each(|(w, g)| *w -= lr * g),
            Optimizer::Adam => {
                const B1: f64 = 0.9;
                const B2: f64 = 0.999;
                const EPS: f64 = 1e-8;
                self.t += 1;
                let c1 = 1.0 - B1.powi(self.t);
                let c2 = 1.0 - B2.powi(self.t);
                for i in 0..w.len() {
                    self.m[i] = B1 * self.m[i] + (1.0 - B1) * g[i];
                    self.v[i] = B2 * self.v[i] + (1.0 - B2) * g[i] * g[i];
                    w[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + EPS);
                }
            }
        }
    }
}

impl GraphForecaster {
    pub fn supports(&self) -> Result<Supports> {
        Supports::new(&self.graph, self.hyper.k)
    }

    pub fn predict(
        &self,
        x: &FeatureTensor,
        panel: &WeeklyPanel,
        origins: &[usize],
        horizons: &[usize],
    ) -> Result<ForecastSet> {
        check_alignment(x, panel)?;
        if x.catalog.iter().map(|d| &d.name).ne(self.feature_names.iter()) {
            return Err(Error::Shape("feature catalog differs from the one the model was fitted on".into()));
        }
        let cols: Vec<usize> = horizons
            .iter()
            .map(|h| {
                self.horizons
                    .iter()
                    .position(|x| x == h)
                    .ok_or_else(|| Error::Config(format!("horizon {h} was not trained")))
            })
            .collect::<Result<_>>()?;
        let sup = self.supports()?;
        let preds: Vec<Result<(usize, Array2<f64>)>> = origins
            .par_iter()
            .map(|&t| {
                let w = Window::build(x, panel, &self.scaling, t, self.hyper.window, &self.horizons, 0)?;
                Ok((t, forward(&self.params, &sup, &w, false).0))
            })
            .collect();
        let mut entries = Vec::with_capacity(origins.len() * x.n_keywords() * cols.len());
        for r in preds {
            let (t, pred) = r?;
            for k in 0..x.n_keywords() {
                for (&h, &c) in horizons.iter().zip(&cols) {
                    let v = pred[(k, c)];
                    if !v.is_finite() {
                        return Err(Error::Numerical(format!("non-finite forecast for keyword {k}")));
                    }
                    entries.push(ForecastEntry::new(k, t, h, v));
                }
            }
        }
        Ok(ForecastSet::new("dcrnn".into(), self.feature_hash.clone(), entries))
    }
}

#[cfg(test)]
mod tests;
