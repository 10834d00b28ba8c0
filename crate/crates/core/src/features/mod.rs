//! Leakage-free covariate tensor: own-history lags, neighbor CPC summaries,
//! geographic one-hots, calendar terms, traffic-mix shares and optional
//! pure-noise distractor columns.

mod io;
mod leakage;

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::panel::WeeklyPanel;
use crate::proxies::{DtwNeighborhood, GeoLevel, GeoTag, SemanticGraph, CONTINENTS};

pub use io::{read_features, write_features, FEATURES_BLOB, FEATURES_MANIFEST};
pub use leakage::{verify_leakage_free, LeakageReport};

pub const DEFAULT_OWN_LAGS: [usize; 5] = [1, 2, 4, 8, 12];
pub const DEFAULT_NEIGHBOR_LAGS: [usize; 3] = [1, 2, 4];
pub const IMPUTED_SHARE_WINDOW: usize = 4;
pub const UNKNOWN_GEO: &str = "unknown";

/// Feature families in catalog order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Core,
    Geo,
    SemCpc,
    DtwCpc,
    Calendar,
    Mix,
    /// Seeded random columns unrelated to the market.
    Noise,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Core,
        Family::Geo,
        Family::SemCpc,
        Family::DtwCpc,
        Family::Calendar,
        Family::Mix,
        Family::Noise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Core => "core",
            Family::Geo => "geo",
            Family::SemCpc => "sem_cpc",
            Family::DtwCpc => "dtw_cpc",
            Family::Calendar => "calendar",
            Family::Mix => "mix",
            Family::Noise => "noise",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown feature family {s:?}")))
    }
}

/// Parse a comma-separated family list such as `core,geo,sem_cpc`.
pub fn parse_families(s: &str) -> Result<BTreeSet<Family>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Mean,
    Median,
}

impl std::str::FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mean" => Ok(Aggregate::Mean),
            "median" => Ok(Aggregate::Median),
            other => Err(Error::Parse(format!("unknown neighbor aggregate {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub families: BTreeSet<Family>,
    pub geo_resolution: GeoLevel,
    pub own_lags: Vec<usize>,
    pub neighbor_lags: Vec<usize>,
    pub aggregate: Aggregate,
    /// Weeks in the training range; scales the calendar trend. `None` uses
    /// the whole panel.
    pub train_weeks: Option<usize>,
    /// Columns in the noise family; each is one Gaussian draw per week
    /// shared across keywords.
    pub noise_dim: usize,
    pub noise_seed: u64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            families: BTreeSet::from([Family::Core]),
            geo_resolution: GeoLevel::Continent,
            own_lags: DEFAULT_OWN_LAGS.to_vec(),
            neighbor_lags: DEFAULT_NEIGHBOR_LAGS.to_vec(),
            aggregate: Aggregate::Mean,
            train_weeks: None,
            noise_dim: 64,
            noise_seed: 0,
        }
    }
}

impl FeatureConfig {
    pub fn with_families(families: impl IntoIterator<Item = Family>) -> Self {
        Self {
            families: families.into_iter().collect(),
            ..Self::default()
        }
    }

    pub fn has(&self, f: Family) -> bool {
        self.families.contains(&f)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.has(Family::Core) {
            return Err(Error::Config("the core feature family must be enabled".into()));
        }
        if self.own_lags.is_empty() || self.own_lags.contains(&0) {
            return Err(Error::Config("own lags must be non-empty and >= 1".into()));
        }
        let needs_neighbors = self.has(Family::SemCpc) || self.has(Family::DtwCpc);
        if needs_neighbors && (self.neighbor_lags.is_empty() || self.neighbor_lags.contains(&0)) {
            return Err(Error::Config("neighbor lags must be non-empty and >= 1".into()));
        }
        if self.has(Family::Noise) && self.noise_dim == 0 {
            return Err(Error::Config("noise family needs noise_dim >= 1".into()));
        }
        if self.train_weeks == Some(0) {
            return Err(Error::Config("train_weeks must be positive".into()));
        }
        Ok(())
    }

    /// Short label such as `core+geo+sem_cpc`.
    pub fn label(&self) -> String {
        self.families.iter().map(|f| f.name()).collect::<Vec<_>>().join("+")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    pub fn max_lag(&self) -> usize {
        let own = self.own_lags.iter().copied().max().unwrap_or(1);
        let nb = self.neighbor_lags.iter().copied().max().unwrap_or(1);
        own.max(nb).max(IMPUTED_SHARE_WINDOW)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDesc {
    pub name: String,
    pub family: Family,
    pub lag: Option<usize>,
}

impl FeatureDesc {
    fn new(name: impl Into<String>, family: Family, lag: Option<usize>) -> Self {
        Self {
            name: name.into(),
            family,
            lag,
        }
    }
}

/// Keyword × week × feature block, row-major, stored in single precision to
/// match its on-disk form.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub keywords: Vec<String>,
    pub n_weeks: usize,
    pub catalog: Vec<FeatureDesc>,
    pub values: Vec<f32>,
    /// Weeks whose every lag refers to a real panel week.
    pub origin_weeks: Vec<usize>,
    pub config: FeatureConfig,
}

impl FeatureTensor {
    pub fn n_keywords(&self) -> usize {
        self.keywords.len()
    }

    pub fn n_features(&self) -> usize {
        self.catalog.len()
    }

    pub fn row(&self, k: usize, t: usize) -> &[f32] {
        let f = self.n_features();
        let at = (k * self.n_weeks + t) * f;
        &self.values[at..at + f]
    }

    pub fn get(&self, k: usize, t: usize, j: usize) -> f32 {
        self.row(k, t)[j]
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.catalog.iter().position(|d| d.name == name)
    }

    /// Indices of the features in `family`.
    pub fn family_columns(&self, family: Family) -> Vec<usize> {
        (0..self.n_features()).filter(|&j| self.catalog[j].family == family).collect()
    }

    /// Append a column computed by `f(k, t)`.
    pub fn append_feature(&mut self, desc: FeatureDesc, f: impl Fn(usize, usize) -> f32) {
        let old = self.n_features();
        let mut values = Vec::with_capacity(self.n_keywords() * self.n_weeks * (old + 1));
        for k in 0..self.n_keywords() {
            for t in 0..self.n_weeks {
                values.extend_from_slice(self.row(k, t));
                values.push(f(k, t));
            }
        }
        self.values = values;
        self.catalog.push(desc);
    }

    /// Reorder keywords: row `i` of the result is row `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let block = self.n_weeks * self.n_features();
        let mut values = Vec::with_capacity(self.values.len());
        for &k in order {
            values.extend_from_slice(&self.values[k * block..(k + 1) * block]);
        }
        Self {
            keywords: order.iter().map(|&k| self.keywords[k].clone()).collect(),
            values,
            ..self.clone()
        }
    }
}

/// Inputs besides the panel; each is required only by the family using it.
#[derive(Debug, Clone, Copy, Default)]
pub struct Proxies<'a> {
    pub graph: Option<&'a SemanticGraph>,
    pub dtw: Option<&'a DtwNeighborhood>,
    pub geo: Option<&'a [GeoTag]>,
}

/// Assemble the feature tensor. Every lagged feature at week `t` reads panel
/// week `max(t - lag, 0)`, so row `t` depends on weeks `< t` plus static
/// attributes (week 0 feeds the clamped rows).
pub fn build_features(panel: &WeeklyPanel, proxies: Proxies<'_>, cfg: &FeatureConfig) -> Result<FeatureTensor> {
    cfg.validate()?;
    let n = panel.n_keywords();
    let t_len = panel.n_weeks();
    if n == 0 || t_len == 0 {
        return Err(Error::Data("cannot build features for an empty panel".into()));
    }
    let cpc = dense_cpc(panel)?;
    let plan = Plan::new(panel, proxies, cfg)?;
    let f = plan.catalog.len();

    let blocks: Vec<Vec<f32>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut out = Vec::with_capacity(t_len * f);
            for t in 0..t_len {
                plan.fill_row(panel, &cpc, k, t, &mut out);
            }
            out
        })
        .collect();
    let values: Vec<f32> = blocks.concat();
    debug_assert_eq!(values.len(), n * t_len * f);
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        let j = pos % f;
        return Err(Error::Numerical(format!("feature {} is not finite", plan.catalog[j].name)));
    }
    let first = cfg.max_lag().min(t_len);
    Ok(FeatureTensor {
        keywords: panel.keywords.clone(),
        n_weeks: t_len,
        catalog: plan.catalog,
        values,
        origin_weeks: (first..t_len).collect(),
        config: cfg.clone(),
    })
}

fn dense_cpc(panel: &WeeklyPanel) -> Result<Vec<Vec<f64>>> {
    (0..panel.n_keywords())
        .map(|k| {
            panel.cpc_row(k).map_err(|_| {
                Error::Data(format!(
                    "keyword {:?} has undefined CPC weeks; impute the panel before building features",
                    panel.keywords[k]
                ))
            })
        })
        .collect()
}

struct Plan<'a> {
    cfg: &'a FeatureConfig,
    catalog: Vec<FeatureDesc>,
    sem: Option<Vec<Vec<(usize, f64)>>>,
    dtw: Option<Vec<Vec<(usize, f64)>>>,
    geo_labels: Vec<String>,
    geo_of: Vec<usize>,
    devices: Vec<String>,
    searchtypes: Vec<String>,
    trend_den: f64,
    noise: Vec<Vec<f64>>,
}

impl<'a> Plan<'a> {
    fn new(panel: &WeeklyPanel, proxies: Proxies<'_>, cfg: &'a FeatureConfig) -> Result<Self> {
        let n = panel.n_keywords();
        let mut catalog = Vec::new();
        let mut plan = Plan {
            cfg,
            catalog: Vec::new(),
            sem: None,
            dtw: None,
            geo_labels: Vec::new(),
            geo_of: Vec::new(),
            devices: Vec::new(),
            searchtypes: Vec::new(),
            trend_den: 1.0,
            noise: Vec::new(),
        };
        let suffix = match cfg.aggregate {
            Aggregate::Mean => "mean",
            Aggregate::Median => "median",
        };
        for family in &cfg.families {
            match family {
                Family::Core => {
                    let mut lags = cfg.own_lags.clone();
                    lags.sort_unstable();
                    lags.dedup();
                    for l in lags {
                        catalog.push(FeatureDesc::new(format!("cpc_lag{l}"), Family::Core, Some(l)));
                    }
                    catalog.push(FeatureDesc::new("log1p_clicks_lag1", Family::Core, Some(1)));
                    catalog.push(FeatureDesc::new("log1p_impressions_lag1", Family::Core, Some(1)));
                    catalog.push(FeatureDesc::new(
                        format!("imputed_share_{IMPUTED_SHARE_WINDOW}w"),
                        Family::Core,
                        Some(1),
                    ));
                }
                Family::Geo => {
                    let tags = proxies
                        .geo
                        .ok_or_else(|| Error::Config("geo family needs geographic tags".into()))?;
                    if tags.len() != n {
                        return Err(Error::Shape(format!("{} geo tags for {n} keywords", tags.len())));
                    }
                    let level = cfg.geo_resolution;
                    let mut labels: Vec<String> = match level {
                        GeoLevel::Continent => CONTINENTS.iter().map(|s| s.to_string()).collect(),
                        _ => tags
                            .iter()
                            .filter_map(|t| t.at(level).map(str::to_string))
                            .collect::<BTreeSet<_>>()
                            .into_iter()
                            .collect(),
                    };
                    labels.push(UNKNOWN_GEO.to_string());
                    let unknown = labels.len() - 1;
                    plan.geo_of = tags
                        .iter()
                        .map(|t| {
                            t.at(level)
                                .and_then(|v| labels[..unknown].iter().position(|l| l == v))
                                .unwrap_or(unknown)
                        })
                        .collect();
                    for l in &labels {
                        catalog.push(FeatureDesc::new(format!("geo_{level}_{}", l.replace(' ', "_")), Family::Geo, None));
                    }
                    plan.geo_labels = labels;
                }
                Family::SemCpc => {
                    let g = proxies
                        .graph
                        .ok_or_else(|| Error::Config("sem_cpc family needs a semantic graph".into()))?;
                    if g.n() != n {
                        return Err(Error::Shape(format!("semantic graph has {} nodes for {n} keywords", g.n())));
                    }
                    g.validate()?;
                    plan.sem = Some(g.edges.clone());
                    for &l in &sorted(&cfg.neighbor_lags) {
                        catalog.push(FeatureDesc::new(format!("sem_cpc_{suffix}_lag{l}"), Family::SemCpc, Some(l)));
                    }
                }
                Family::DtwCpc => {
                    let d = proxies
                        .dtw
                        .ok_or_else(|| Error::Config("dtw_cpc family needs DTW neighborhoods".into()))?;
                    if d.neighbors.len() != n {
                        return Err(Error::Shape(format!(
                            "DTW neighborhoods cover {} keywords, panel has {n}",
                            d.neighbors.len()
                        )));
                    }
                    let uniform = d
                        .neighbors
                        .iter()
                        .map(|row| {
                            let w = 1.0 / row.len().max(1) as f64;
                            row.iter().map(|&(j, _)| (j, w)).collect()
                        })
                        .collect();
                    plan.dtw = Some(uniform);
                    for &l in &sorted(&cfg.neighbor_lags) {
                        catalog.push(FeatureDesc::new(format!("dtw_cpc_{suffix}_lag{l}"), Family::DtwCpc, Some(l)));
                    }
                }
                Family::Calendar => {
                    catalog.push(FeatureDesc::new("week_sin", Family::Calendar, None));
                    catalog.push(FeatureDesc::new("week_cos", Family::Calendar, None));
                    catalog.push(FeatureDesc::new("trend", Family::Calendar, None));
                    let span = cfg.train_weeks.unwrap_or(panel.n_weeks());
                    plan.trend_den = (span.max(2) - 1) as f64;
                }
                Family::Mix => {
                    plan.devices = labels_of(panel.device_counts.iter());
                    plan.searchtypes = labels_of(panel.searchtype_counts.iter());
                    for d in &plan.devices {
                        catalog.push(FeatureDesc::new(format!("device_share_{d}_lag1"), Family::Mix, Some(1)));
                    }
                    for s in &plan.searchtypes {
                        catalog.push(FeatureDesc::new(format!("searchtype_share_{s}_lag1"), Family::Mix, Some(1)));
                    }
                }
                Family::Noise => {
                    plan.noise = (0..cfg.noise_dim)
                        .map(|j| weekly_noise(cfg.noise_seed, j, panel.n_weeks()))
                        .collect();
                    for j in 0..cfg.noise_dim {
                        catalog.push(FeatureDesc::new(format!("noise_{j}"), Family::Noise, None));
                    }
                }
            }
        }
        plan.catalog = catalog;
        Ok(plan)
    }

    fn fill_row(&self, panel: &WeeklyPanel, cpc: &[Vec<f64>], k: usize, t: usize, out: &mut Vec<f32>) {
        let cfg = self.cfg;
        let back = |l: usize| t.saturating_sub(l);
        for family in &cfg.families {
            match family {
                Family::Core => {
                    for &l in &sorted(&cfg.own_lags) {
                        out.push(cpc[k][back(l)] as f32);
                    }
                    let p = back(1);
                    out.push((*panel.clicks.get(k, p) as f64).ln_1p() as f32);
                    out.push((*panel.impressions.get(k, p) as f64).ln_1p() as f32);
                    let weeks: Vec<usize> = (1..=IMPUTED_SHARE_WINDOW).map(back).collect();
                    let imputed = weeks.iter().filter(|&&w| *panel.imputed.get(k, w)).count();
                    out.push((imputed as f64 / weeks.len() as f64) as f32);
                }
                Family::Geo => {
                    for g in 0..self.geo_labels.len() {
                        out.push(if self.geo_of[k] == g { 1.0 } else { 0.0 });
                    }
                }
                Family::SemCpc | Family::DtwCpc => {
                    let rows = if *family == Family::SemCpc { &self.sem } else { &self.dtw };
                    let nb = &rows.as_ref().expect("planned")[k];
                    for &l in &sorted(&cfg.neighbor_lags) {
                        let w = back(l);
                        out.push(aggregate(nb, |j| cpc[j][w], cfg.aggregate) as f32);
                    }
                }
                Family::Calendar => {
                    let angle = TAU * (panel.weeks[t].week() as f64 - 1.0) / 52.0;
                    out.push(angle.sin() as f32);
                    out.push(angle.cos() as f32);
                    out.push((t as f64 / self.trend_den) as f32);
                }
                Family::Mix => {
                    let p = back(1);
                    shares(panel.device_counts.get(k, p), &self.devices, out);
                    shares(panel.searchtype_counts.get(k, p), &self.searchtypes, out);
                }
                Family::Noise => out.extend(self.noise.iter().map(|col| col[t] as f32)),
            }
        }
    }
}

fn sorted(lags: &[usize]) -> Vec<usize> {
    let mut v = lags.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn labels_of<'a>(cells: impl Iterator<Item = &'a crate::panel::LabelCounts>) -> Vec<String> {
    let set: BTreeSet<&String> = cells.flat_map(|c| c.keys()).collect();
    set.into_iter().cloned().collect()
}

fn shares(counts: &crate::panel::LabelCounts, labels: &[String], out: &mut Vec<f32>) {
    let total: u64 = counts.values().sum();
    for l in labels {
        let c = counts.get(l).copied().unwrap_or(0);
        out.push(if total == 0 { 0.0 } else { (c as f64 / total as f64) as f32 });
    }
}

/// Weighted mean over `(neighbor, weight)` pairs, or the plain median of
/// the neighbor values.
pub fn aggregate(neighbors: &[(usize, f64)], value: impl Fn(usize) -> f64, how: Aggregate) -> f64 {
    if neighbors.is_empty() {
        return 0.0;
    }
    match how {
        Aggregate::Mean => {
            let wsum: f64 = neighbors.iter().map(|&(_, w)| w).sum();
            neighbors.iter().map(|&(j, w)| w * value(j)).sum::<f64>() / wsum
        }
        Aggregate::Median => {
            let mut v: Vec<f64> = neighbors.iter().map(|&(j, _)| value(j)).collect();
            v.sort_by(f64::total_cmp);
            let m = v.len() / 2;
            if v.len() % 2 == 1 {
                v[m]
            } else {
                0.5 * (v[m - 1] + v[m])
            }
        }
    }
}

/// Standard-normal draws per week, shared by every keyword.
fn weekly_noise(seed: u64, column: usize, len: usize) -> Vec<f64> {
    let mut rng = crate::seed::stream(seed, &format!("features/noise/week/{column}"));
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}
