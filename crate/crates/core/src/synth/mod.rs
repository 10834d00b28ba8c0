//! Seeded synthetic market with known cluster, geographic and seasonal
//! structure: log-CPC = log base + geo season + delayed AR(1) cluster shock +
//! heavy-tailed noise, plus long-tailed traffic volumes.

mod oracle;

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, Pareto, Poisson, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{write_events, RawEvent};
use crate::panel::{write_panel, IsoWeek, WeeklyPanel};
use crate::proxies::{write_embeddings, EmbeddingMatrix, EmbeddingSource, Gazetteer, GeoTag};
use crate::seed;

pub use oracle::{oracle_report, RecoveryReport};

/// Continents in the order geo groups are assigned.
pub const GEO_ORDER: [&str; 7] = [
    "europe",
    "north america",
    "asia",
    "south america",
    "oceania",
    "africa",
    "antarctica",
];

const FILLERS: [&str; 24] = [
    "deals", "cheap", "hire", "prices", "booking", "compare", "best", "online", "discount", "luxury", "suv",
    "van", "weekly", "monthly", "rates", "offers", "economy", "compact", "premium", "convertible", "minivan",
    "automatic", "manual", "express",
];

const DOMAINS: [&str; 5] = ["rentfleet.com", "drivehire.net", "autoroam.co.uk", "wheelsaway.de", "carbook.io"];
const DEVICES: [&str; 2] = ["desktop", "mobile"];
const SEARCH_TYPES: [&str; 3] = ["exact", "phrase", "broad"];

/// A cluster whose CPC level and shock volatility are scaled up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolatileCluster {
    pub cluster: usize,
    pub level: f64,
    pub shock: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeShift {
    pub week: usize,
    pub cluster: usize,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_keywords: usize,
    pub n_weeks: usize,
    pub clusters: usize,
    pub geo_groups: usize,
    pub first_week: IsoWeek,
    /// Median CPC of a cluster level.
    pub base_cpc: f64,
    /// Log-scale spread of cluster levels and of keywords within a cluster.
    pub cluster_spread: f64,
    pub keyword_spread: f64,
    /// Amplitude of the yearly log-CPC cycle.
    pub season_amplitude: f64,
    /// AR(1) persistence and innovation scale of the cluster shock.
    pub shock_persistence: f64,
    pub shock_scale: f64,
    /// Keywords feel their cluster shock after a delay drawn uniformly from
    /// `0..=max_delay` weeks.
    pub max_delay: usize,
    /// Scale and Student-t degrees of freedom of the keyword noise.
    pub noise_scale: f64,
    pub tail_shape: f64,
    pub volatile: Option<VolatileCluster>,
    pub regime_shift: Option<RegimeShift>,
    pub embedding_dim: usize,
    /// Isotropic noise norm added to cluster centroids.
    pub embedding_noise: f64,
    /// Pareto shape of keyword traffic volumes.
    pub volume_shape: f64,
    pub min_clicks: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_keywords: 200,
            n_weeks: 127,
            clusters: 8,
            geo_groups: 6,
            first_week: IsoWeek::new(2021, 1).expect("valid week"),
            base_cpc: 2.0,
            cluster_spread: 0.5,
            keyword_spread: 0.05,
            season_amplitude: 0.15,
            shock_persistence: 0.95,
            shock_scale: 0.08,
            max_delay: 10,
            noise_scale: 0.12,
            tail_shape: 4.0,
            volatile: Some(VolatileCluster {
                cluster: 0,
                level: 2.0,
                shock: 2.0,
            }),
            regime_shift: None,
            embedding_dim: 64,
            embedding_noise: 0.3,
            volume_shape: 1.2,
            min_clicks: 20.0,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.clusters == 0 || self.n_keywords < 2 * self.clusters {
            return bad(format!("need N >= 2C, got N = {} and C = {}", self.n_keywords, self.clusters));
        }
        if self.n_weeks < 30 {
            return bad(format!("need at least 30 weeks, got {}", self.n_weeks));
        }
        if self.geo_groups == 0 || self.geo_groups > GEO_ORDER.len() {
            return bad(format!("geo groups must be in 1..=7, got {}", self.geo_groups));
        }
        if !(0.0..1.0).contains(&self.shock_persistence) {
            return bad("shock persistence must lie in [0, 1)".into());
        }
        let scales = [
            self.base_cpc,
            self.noise_scale,
            self.shock_scale,
            self.tail_shape,
            self.volume_shape,
            self.min_clicks,
            self.embedding_noise,
        ];
        if scales.iter().any(|s| !(*s > 0.0) || !s.is_finite())
            || self.season_amplitude < 0.0
            || self.cluster_spread < 0.0
            || self.keyword_spread < 0.0
        {
            return bad("all scales must be positive and finite".into());
        }
        if self.embedding_dim < 2 {
            return bad("embedding dimension must be at least 2".into());
        }
        if let Some(v) = self.volatile {
            if v.cluster >= self.clusters || !(v.level > 0.0) || !(v.shock > 0.0) {
                return bad("volatile cluster is out of range".into());
            }
        }
        if let Some(r) = self.regime_shift {
            if r.cluster >= self.clusters || r.week >= self.n_weeks || !(r.factor > 0.0) {
                return bad("regime shift is out of range".into());
            }
        }
        Ok(())
    }

    pub fn cluster_of(&self, k: usize) -> usize {
        k % self.clusters
    }

    pub fn geo_of_cluster(&self, c: usize) -> usize {
        c % self.geo_groups
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordTruth {
    pub keyword: String,
    pub cluster: usize,
    pub geo: usize,
    pub continent: String,
    pub base: f64,
    /// Weeks by which the keyword trails its cluster shock.
    pub delay: usize,
    /// Keyword noise term per week (log scale).
    pub noise: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub keywords: Vec<KeywordTruth>,
    /// Per cluster, AR(1) log-scale shock per week, starting `max_delay`
    /// weeks before the panel.
    pub shocks: Vec<Vec<f64>>,
    pub max_delay: usize,
    /// Per geo group, season term per week.
    pub seasons: Vec<Vec<f64>>,
    pub regime_shift: Option<RegimeShift>,
}

impl SynthTruth {
    /// CPC implied by the stored components.
    pub fn cpc(&self, k: usize, t: usize) -> f64 {
        let kt = &self.keywords[k];
        let shock = self.shocks[kt.cluster][t + self.max_delay - kt.delay];
        let mut log = kt.base.ln() + self.seasons[kt.geo][t] + shock + kt.noise[t];
        if let Some(r) = self.regime_shift {
            if r.cluster == kt.cluster && t >= r.week {
                log += r.factor.ln();
            }
        }
        log.exp()
    }

    /// Line-delimited records: keywords, then clusters, then geo groups.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<truth>", e);
        for (i, k) in self.keywords.iter().enumerate() {
            let rec = serde_json::json!({"kind": "keyword", "id": i, "keyword": k.keyword, "cluster": k.cluster,
                "geo": k.geo, "continent": k.continent, "base": k.base, "delay": k.delay, "noise": k.noise});
            writeln!(w, "{rec}").map_err(io)?;
        }
        for (c, s) in self.shocks.iter().enumerate() {
            let rec = serde_json::json!({"kind": "cluster", "id": c, "offset": self.max_delay, "shock": s});
            writeln!(w, "{rec}").map_err(io)?;
        }
        for (g, s) in self.seasons.iter().enumerate() {
            writeln!(w, "{}", serde_json::json!({"kind": "geo", "id": g, "continent": GEO_ORDER[g], "season": s}))
                .map_err(io)?;
        }
        if let Some(r) = self.regime_shift {
            writeln!(w, "{}", serde_json::json!({"kind": "regime_shift", "shift": r})).map_err(io)?;
        }
        Ok(())
    }
}

/// Everything the generator produces.
#[derive(Debug, Clone)]
pub struct SynthMarket {
    pub panel: WeeklyPanel,
    pub embeddings: EmbeddingMatrix,
    pub geo: Vec<GeoTag>,
    pub truth: SynthTruth,
    pub events: Vec<RawEvent>,
}

fn keyword_strings(cfg: &SynthConfig, gaz: &Gazetteer) -> Result<Vec<String>> {
    let mut rng = seed::stream(cfg.seed, "synth/keywords");
    let mut pools: Vec<Vec<(String, &str)>> = Vec::with_capacity(cfg.geo_groups);
    for continent in GEO_ORDER.iter().take(cfg.geo_groups) {
        let mut places: Vec<String> = gaz
            .cities_in(continent)
            .into_iter()
            // multi-word names are fine; names that also tag as something else are not
            .filter(|c| crate::proxies::tag_geography(&format!("car rental {c}"), gaz).city.as_deref() == Some(*c))
            .map(str::to_string)
            .collect();
        if places.is_empty() {
            places.push(continent.to_string());
        }
        let mut combos: Vec<(String, &str)> = places
            .iter()
            .flat_map(|p| FILLERS.iter().map(move |f| (p.clone(), *f)))
            .collect();
        combos.shuffle(&mut rng);
        pools.push(combos);
    }
    let mut used = BTreeSet::new();
    let mut next = vec![0usize; cfg.geo_groups];
    let mut out = Vec::with_capacity(cfg.n_keywords);
    for k in 0..cfg.n_keywords {
        let g = cfg.geo_of_cluster(cfg.cluster_of(k));
        loop {
            let Some((place, filler)) = pools[g].get(next[g]) else {
                return Err(Error::Config(format!(
                    "not enough distinct keyword strings for geo group {}",
                    GEO_ORDER[g]
                )));
            };
            next[g] += 1;
            let kw = format!("car rental {place} {filler}");
            if used.insert(kw.clone()) {
                out.push(kw);
                break;
            }
        }
    }
    Ok(out)
}

fn unit(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Generate a market. Keyword `k` belongs to cluster `k mod C`; cluster `c`
/// sits in geo group `c mod G`.
pub fn generate(cfg: &SynthConfig) -> Result<SynthMarket> {
    cfg.validate()?;
    let (n, t_len, c_len) = (cfg.n_keywords, cfg.n_weeks, cfg.clusters);
    let gaz = Gazetteer::bundled();
    let keywords = keyword_strings(cfg, &gaz)?;
    let weeks: Vec<IsoWeek> = std::iter::successors(Some(cfg.first_week), |w| Some(w.succ())).take(t_len).collect();

    let mut rng = seed::stream(cfg.seed, "synth/levels");
    let level_mult = |c: usize| cfg.volatile.filter(|v| v.cluster == c).map_or(1.0, |v| v.level);
    let shock_mult = |c: usize| cfg.volatile.filter(|v| v.cluster == c).map_or(1.0, |v| v.shock);
    let cluster_base: Vec<f64> = (0..c_len)
        .map(|c| cfg.base_cpc * (cfg.cluster_spread * rng.sample::<f64, _>(StandardNormal)).exp() * level_mult(c))
        .collect();

    let seasons: Vec<Vec<f64>> = (0..cfg.geo_groups)
        .map(|g| {
            let phase = TAU * g as f64 / cfg.geo_groups as f64;
            weeks
                .iter()
                .map(|w| cfg.season_amplitude * (TAU * (w.week() as f64 - 1.0) / 52.0 + phase).sin())
                .collect()
        })
        .collect();

    let mut rng = seed::stream(cfg.seed, "synth/shocks");
    let phi = cfg.shock_persistence;
    let shocks: Vec<Vec<f64>> = (0..c_len)
        .map(|c| {
            let eta = cfg.shock_scale * shock_mult(c);
            let mut s = eta / (1.0 - phi * phi).sqrt() * rng.sample::<f64, _>(StandardNormal);
            (0..t_len + cfg.max_delay)
                .map(|_| {
                    let cur = s;
                    s = phi * s + eta * rng.sample::<f64, _>(StandardNormal);
                    cur
                })
                .collect()
        })
        .collect();

    let mut rng = seed::stream(cfg.seed, "synth/delays");
    let delays: Vec<usize> = (0..n).map(|_| rng.random_range(0..=cfg.max_delay)).collect();

    let mut rng = seed::stream(cfg.seed, "synth/noise");
    let student = StudentT::new(cfg.tail_shape).map_err(|e| Error::Config(format!("tail shape: {e}")))?;
    let within = Normal::new(0.0, cfg.keyword_spread.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;
    let truth_keywords: Vec<KeywordTruth> = (0..n)
        .map(|k| {
            let c = cfg.cluster_of(k);
            let g = cfg.geo_of_cluster(c);
            KeywordTruth {
                keyword: keywords[k].clone(),
                cluster: c,
                geo: g,
                continent: GEO_ORDER[g].to_string(),
                base: cluster_base[c] * within.sample(&mut rng).exp(),
                delay: delays[k],
                noise: (0..t_len).map(|_| cfg.noise_scale * student.sample(&mut rng)).collect(),
            }
        })
        .collect();
    let truth = SynthTruth {
        keywords: truth_keywords,
        shocks,
        max_delay: cfg.max_delay,
        seasons,
        regime_shift: cfg.regime_shift,
    };

    let mut rng = seed::stream(cfg.seed, "synth/volume");
    let pareto = Pareto::new(cfg.min_clicks, cfg.volume_shape).map_err(|e| Error::Config(e.to_string()))?;
    let volume: Vec<f64> = (0..n).map(|_| pareto.sample(&mut rng).min(cfg.min_clicks * 1e4)).collect();
    let ctr: Vec<f64> = (0..n).map(|_| rng.random_range(0.02..0.12)).collect();

    let mut rng = seed::stream(cfg.seed, "synth/events");
    let mut events = Vec::with_capacity(n * t_len * 2);
    let mut cpc = vec![vec![0.0; t_len]; n];
    let mut clicks = vec![vec![0u64; t_len]; n];
    let mut cells = Vec::with_capacity(n * t_len);
    for k in 0..n {
        for t in 0..t_len {
            let value = truth.cpc(k, t);
            let lambda = volume[k] * (1.0 + 0.1 * rng.random_range(-1.0..1.0));
            let total = 1 + Poisson::new(lambda).map_err(|e| Error::Config(e.to_string()))?.sample(&mut rng) as u64;
            let share: f64 = rng.random_range(0.3..0.7);
            let mobile = ((total as f64 * share).round() as u64).min(total);
            let split = [total - mobile, mobile];
            let date = weeks[t].monday() + chrono::Days::new((k % 7) as u64);
            let domain = DOMAINS[k % DOMAINS.len()];
            let mut cell_events = Vec::with_capacity(2);
            for (d, &c) in split.iter().enumerate() {
                let st = SEARCH_TYPES[rng.random_range(0..SEARCH_TYPES.len())];
                cell_events.push(RawEvent {
                    keyword: keywords[k].clone(),
                    query: keywords[k].clone(),
                    url: format!("https://www.{domain}/{}", keywords[k].replace(' ', "-")),
                    device: DEVICES[d].to_string(),
                    search_type: st.to_string(),
                    impressions: ((c as f64 / ctr[k]).round() as u64).max(c),
                    clicks: Some(c),
                    cost: Some(value * c as f64),
                    date,
                });
            }
            cpc[k][t] = value;
            clicks[k][t] = total;
            cells.push(cell_events.clone());
            events.extend(cell_events);
        }
    }

    let mut panel = WeeklyPanel::from_series(keywords.clone(), cfg.first_week, &cpc, &clicks)?;
    for k in 0..n {
        for t in 0..t_len {
            let evs = &cells[k * t_len + t];
            let mut costs: Vec<f64> = evs.iter().filter_map(|e| e.cost).collect();
            costs.sort_by(f64::total_cmp);
            panel.cost.set(k, t, costs.iter().sum());
            panel.impressions.set(k, t, evs.iter().map(|e| e.impressions).sum());
            for e in evs {
                *panel.device_counts.get_mut(k, t).entry(e.device.clone()).or_default() += 1;
                *panel.searchtype_counts.get_mut(k, t).entry(e.search_type.clone()).or_default() += 1;
            }
        }
    }

    let mut rng = seed::stream(cfg.seed, "synth/embeddings");
    let d = cfg.embedding_dim;
    let centroids: Vec<Vec<f64>> = (0..c_len)
        .map(|_| {
            let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            unit(&mut v);
            v
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let c = &centroids[cfg.cluster_of(k)];
            let sd = cfg.embedding_noise / (d as f64).sqrt();
            c.iter().map(|x| x + sd * rng.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect();
    let embeddings = EmbeddingMatrix::from_rows(rows, EmbeddingSource::Synthetic)?;
    let geo = keywords.iter().map(|k| crate::proxies::tag_geography(k, &gaz)).collect();

    Ok(SynthMarket {
        panel,
        embeddings,
        geo,
        truth,
        events,
    })
}

/// File names written by [`write_market`].
pub const EVENTS_FILE: &str = "events.jsonl";
pub const PANEL_DIR: &str = "panel";
pub const EMBEDDINGS_FILE: &str = "embeddings.jsonl";
pub const TRUTH_FILE: &str = "truth.jsonl";
pub const CONFIG_FILE: &str = "synth_config.json";

/// Write events, panel, embeddings, truth and the config under `dir`.
pub fn write_market(dir: &Path, cfg: &SynthConfig, m: &SynthMarket) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let create = |name: &str| -> Result<(PathBuf, BufWriter<File>)> {
        let path = dir.join(name);
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok((path, BufWriter::new(f)))
    };
    let mut out = Vec::new();

    let (path, mut w) = create(EVENTS_FILE)?;
    write_events(&mut w, &m.events).and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))?;
    out.push(path);

    let panel_dir = dir.join(PANEL_DIR);
    write_panel(&panel_dir, &m.panel)?;
    out.push(panel_dir);

    let (path, mut w) = create(EMBEDDINGS_FILE)?;
    write_embeddings(&mut w, &m.panel.keywords, &m.embeddings)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    out.push(path);

    let (path, mut w) = create(TRUTH_FILE)?;
    m.truth.write_jsonl(&mut w)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    out.push(path);

    let path = dir.join(CONFIG_FILE);
    let json = serde_json::to_string_pretty(cfg).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    out.push(path);
    Ok(out)
}

#[cfg(test)]
mod tests;
