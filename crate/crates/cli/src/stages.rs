//! One function per subcommand. Each returns the artifact it produced and
//! the files it read so the caller can write the run manifest.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use cpcc_core::eval::{
    chronological_split, evaluate, forecast_test, frontier_segment, run_ablation, AblationInputs, EvalReport,
    FrontierSegmentation, ModelSpec, SplitSpec,
};
use cpcc_core::features::{self, build_features, parse_families, read_features, write_features, FeatureConfig, FeatureTensor};
use cpcc_core::ingest::{self, parse_events, write_events, write_rejections, IngestConfig};
use cpcc_core::models::{
    fit_graph_forecaster, fit_ridge, load_model, save_model, ForecastSet, ForecastTask, GraphHyper, Model, Optimizer,
};
use cpcc_core::panel::{aggregate_weekly, compute_stats, impute_gaps, read_panel, select_keywords, write_panel, IsoWeek};
use cpcc_core::proxies::{
    build_proxies, fallback_embeddings, load_embeddings, read_proxies, write_proxies, Adjacency, Gazetteer, GeoLevel,
    ProxyParams, SemanticGraph, GRAPH_FILE,
};
use cpcc_core::synth::{generate, write_market, SynthConfig};
use cpcc_core::WeeklyPanel;
use serde::{Deserialize, Serialize};

use crate::args::*;
use crate::config::read_kv;
use crate::error::{CliError, Result};

/// What a stage produced.
#[derive(Debug, Default)]
pub struct Outcome {
    /// File or directory the manifest describes.
    pub artifact: PathBuf,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
}

/// Provenance sidecar linking features and models to their inputs.
pub const SOURCE_FILE: &str = "source.json";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Source {
    pub panel: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub name: Option<String>,
}

impl Source {
    fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(SOURCE_FILE);
        let json = serde_json::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))?;
        fs::write(&path, json).map_err(|e| CliError::io(&path, e))
    }

    fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(SOURCE_FILE);
        if !path.exists() {
            return Ok(Source::default());
        }
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Core(e.into()))
    }
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).map_err(|e| CliError::io(p, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Core(cpcc_core::Error::Config(msg.into()))
}

fn parse_list(s: &str, what: &str) -> Result<Vec<usize>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| config_err(format!("{what}: {p:?} is not a non-negative integer"))))
        .collect()
}

fn split_for(panel: &WeeklyPanel, fraction: f64) -> Result<SplitSpec> {
    Ok(chronological_split(panel.n_weeks(), fraction)?)
}

fn segmentation(panel: &WeeklyPanel, split: &SplitSpec) -> Option<FrontierSegmentation> {
    match compute_stats(panel, split.train.clone()).and_then(|s| frontier_segment(&s)) {
        Ok(seg) => Some(seg),
        Err(e) => {
            log::warn!("frontier segmentation unavailable: {e}");
            None
        }
    }
}

pub fn ingest(a: &IngestArgs) -> Result<Outcome> {
    let parsed = parse_events(open(&a.input)?)?;
    let cfg = IngestConfig {
        max_missing: a.max_missing,
        min_mentions: a.min_mentions,
    };
    let out = ingest::run(parsed, &cfg);
    write_with(&a.output, |w| write_events(w, &out.events))?;

    let rejections = sibling(&a.output, "rejections.jsonl");
    write_with(&rejections, |w| write_rejections(w, &out.rejections))?;
    let domains = sibling(&a.output, "domains.csv");
    write_with(&domains, |w| {
        writeln!(w, "domain,total_mentions,missing_dates,excluded")?;
        for d in &out.domains {
            writeln!(w, "{},{},{},{}", d.domain, d.total_mentions, d.missing_dates, d.excluded)?;
        }
        Ok(())
    })?;

    let r = &out.report;
    println!(
        "ingest: {} parsed, {} rejected lines, {} duplicates, {} empty keywords, {} irrelevant, {} domain-excluded, {} kept",
        r.parsed,
        out.rejections.len(),
        r.duplicates,
        r.empty_keywords,
        r.irrelevant,
        r.domain_excluded,
        r.kept
    );
    Ok(Outcome {
        artifact: a.output.clone(),
        inputs: vec![a.input.clone()],
        outputs: vec![a.output.clone(), rejections, domains],
        seed: None,
    })
}

/// `events.jsonl` -> `events.<suffix>` beside it.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn aggregate(a: &AggregateArgs) -> Result<Outcome> {
    let parsed = parse_events(open(&a.events)?)?;
    if !parsed.rejections.is_empty() {
        log::warn!("{} malformed event lines skipped", parsed.rejections.len());
    }
    let full = aggregate_weekly(&parsed.events);
    let selected = select_keywords(&full, a.min_weeks, a.window)?;
    let imputed = impute_gaps(&selected);
    write_panel(&a.out, &imputed.panel)?;
    println!(
        "aggregate: {} keywords x {} weeks kept of {} keywords ({} dropped as unobserved)",
        imputed.panel.n_keywords(),
        imputed.panel.n_weeks(),
        full.n_keywords(),
        imputed.dropped.len()
    );
    Ok(Outcome {
        artifact: a.out.clone(),
        inputs: vec![a.events.clone()],
        outputs: vec![a.out.clone()],
        seed: None,
    })
}

pub fn build_proxies_stage(a: &ProxyArgs) -> Result<Outcome> {
    let panel = read_panel(&a.panel)?;
    let mut inputs = vec![a.panel.clone()];
    let embeddings = if a.embeddings == "fallback" {
        fallback_embeddings(&panel.keywords, a.embedding_dim)?
    } else {
        let path = PathBuf::from(&a.embeddings);
        inputs.push(path.clone());
        load_embeddings(open(&path)?, &panel.keywords)?
    };
    let gazetteer = match &a.gazetteer {
        Some(dir) => {
            inputs.push(dir.clone());
            Gazetteer::bundled_with_dir(dir)?
        }
        None => Gazetteer::bundled(),
    };
    let train_end = match &a.train_end {
        Some(w) => {
            let week: IsoWeek = w.parse()?;
            let idx = panel
                .week_index(week)
                .ok_or_else(|| config_err(format!("train end {week} lies outside the panel")))?;
            idx + 1
        }
        None => split_for(&panel, a.test_fraction)?.train_end(),
    };
    let params = ProxyParams {
        k: a.k,
        dtw_m: a.dtw_m,
        dtw_band: a.dtw_band,
        train_end,
    };
    let bundle = build_proxies(&panel, &embeddings, &gazetteer, params)?;
    write_proxies(&a.out, &bundle)?;
    println!(
        "build-proxies: {} keywords, semantic k={}, DTW m={} band={} over weeks 0..{}, {:?} embeddings (dim {})",
        bundle.keywords.len(),
        a.k,
        a.dtw_m,
        a.dtw_band,
        train_end,
        bundle.embedding_source,
        bundle.embedding_dim
    );
    Ok(Outcome {
        artifact: a.out.clone(),
        inputs,
        outputs: vec![a.out.clone()],
        seed: None,
    })
}

pub fn featurize(a: &FeaturizeArgs) -> Result<Outcome> {
    let panel = read_panel(&a.panel)?;
    let split = split_for(&panel, a.test_fraction)?;
    let cfg = FeatureConfig {
        families: parse_families(&a.families)?,
        geo_resolution: a.geo_res.parse::<GeoLevel>()?,
        own_lags: parse_list(&a.own_lags, "own lags")?,
        neighbor_lags: parse_list(&a.neighbor_lags, "neighbor lags")?,
        aggregate: a.aggregate.parse::<features::Aggregate>()?,
        train_weeks: Some(split.train_end()),
        noise_dim: a.noise_dim,
        noise_seed: a.seed,
    };
    let mut inputs = vec![a.panel.clone()];
    let bundle = match &a.proxies {
        Some(dir) => {
            inputs.push(dir.clone());
            let b = read_proxies(dir)?;
            if b.keywords != panel.keywords {
                return Err(CliError::Core(cpcc_core::Error::Shape(
                    "proxies were built for a different keyword list".into(),
                )));
            }
            Some(b)
        }
        None => None,
    };
    let proxies = bundle.as_ref().map(|b| b.proxies()).unwrap_or_default();
    let x = build_features(&panel, proxies, &cfg)?;
    write_features(&a.out, &x)?;
    Source {
        panel: Some(absolute(&a.panel)?),
        ..Default::default()
    }
    .write(&a.out)?;
    println!(
        "featurize: {} -> {} features over {} keywords x {} weeks",
        cfg.label(),
        x.n_features(),
        x.n_keywords(),
        x.n_weeks
    );
    Ok(Outcome {
        artifact: a.out.clone(),
        inputs,
        outputs: vec![a.out.clone()],
        seed: Some(a.seed),
    })
}

struct Loaded {
    x: Option<FeatureTensor>,
    panel: WeeklyPanel,
    features_dir: Option<PathBuf>,
    panel_dir: PathBuf,
    inputs: Vec<PathBuf>,
}

/// Features (when given) and the panel they align with.
fn load_inputs(features: Option<&Path>, panel: Option<&Path>, fallback: &Source) -> Result<Loaded> {
    let mut inputs = Vec::new();
    let features = features.map(Path::to_path_buf).or_else(|| fallback.features.clone());
    let (x, from_features) = match &features {
        Some(dir) => {
            inputs.push(dir.clone());
            (Some(read_features(dir)?), Source::read(dir)?.panel)
        }
        None => (None, None),
    };
    let panel_dir = panel
        .map(Path::to_path_buf)
        .or(from_features)
        .or_else(|| fallback.panel.clone())
        .ok_or_else(|| CliError::Usage("no panel: pass --panel or features that record one".into()))?;
    inputs.push(panel_dir.clone());
    Ok(Loaded {
        x,
        panel: read_panel(&panel_dir)?,
        features_dir: features,
        panel_dir,
        inputs,
    })
}

fn load_graph(spec: &str, n: usize, inputs: &mut Vec<PathBuf>) -> Result<Adjacency> {
    if spec == "identity" {
        return Ok(Adjacency::identity(n));
    }
    let path = PathBuf::from(spec);
    let file = if path.is_dir() { path.join(GRAPH_FILE) } else { path };
    inputs.push(file.clone());
    Ok(SemanticGraph::read_csv(open(&file)?, n)?.adjacency())
}

pub fn train(a: &TrainArgs) -> Result<Outcome> {
    let Loaded {
        x,
        panel,
        features_dir,
        panel_dir,
        mut inputs,
    } = load_inputs(a.features.as_deref(), a.panel.as_deref(), &Source::default())?;
    let split = split_for(&panel, a.test_fraction)?;
    let horizons = parse_list(&a.horizons, "horizons")?;
    let task = ForecastTask {
        horizons: horizons.clone(),
        window: a.window,
    };
    task.validate()?;
    let need_x = || CliError::Usage(format!("{:?} needs --features", a.model));
    let model = match a.model {
        ModelKind::Snaive => Model::SeasonalNaive { period: a.period, horizons },
        ModelKind::Ridge => Model::Ridge(fit_ridge(
            x.as_ref().ok_or_else(need_x)?,
            &panel,
            &task,
            a.lambda,
            split.train_end(),
        )?),
        ModelKind::Dcrnn => {
            let x = x.as_ref().ok_or_else(need_x)?;
            let spec = a.graph.as_deref().ok_or_else(|| CliError::Usage("dcrnn needs --graph".into()))?;
            let graph = load_graph(spec, x.n_keywords(), &mut inputs)?;
            let hyper = GraphHyper {
                k: a.diffusion_k,
                hidden: a.hidden,
                window: a.window,
                step_size: a.step_size,
                batch: a.batch,
                max_epochs: a.epochs,
                patience: a.patience,
                validation_fraction: a.validation_fraction,
                optimizer: Optimizer::Adam,
                clip: (a.clip > 0.0).then_some(a.clip),
                seed: a.seed,
            };
            let m = fit_graph_forecaster(x, &panel, &graph, &task, &hyper, split.train_end())?;
            println!(
                "train: best epoch {} of {}, validation MAE {:.4}",
                m.log.best_epoch,
                m.log.epochs.len(),
                m.log.best_validation
            );
            Model::Graph(m)
        }
    };
    save_model(&a.out, &model)?;
    let name = a.name.clone().unwrap_or_else(|| model.id().to_string());
    Source {
        panel: Some(absolute(&panel_dir)?),
        features: features_dir.as_deref().map(absolute).transpose()?,
        name: Some(name.clone()),
    }
    .write(&a.out)?;
    println!("train: {name} ({}) -> {}", model.id(), a.out.display());
    Ok(Outcome {
        artifact: a.out.clone(),
        inputs,
        outputs: vec![a.out.clone()],
        seed: Some(a.seed),
    })
}

pub fn forecast(a: &ForecastArgs) -> Result<Outcome> {
    let src = Source::read(&a.model_dir)?;
    let model = load_model(&a.model_dir)?;
    let Loaded { x, panel, mut inputs, .. } = load_inputs(a.features.as_deref(), a.panel.as_deref(), &src)?;
    inputs.insert(0, a.model_dir.clone());
    let horizons = model.horizons();
    let mut set: ForecastSet = if a.origins == "test" {
        let split = split_for(&panel, a.test_fraction)?;
        forecast_test(&model, x.as_ref(), &panel, &split, &horizons)?
    } else {
        let origins = a
            .origins
            .split(',')
            .map(|w| {
                let week: IsoWeek = w.trim().parse()?;
                panel
                    .week_index(week)
                    .ok_or_else(|| cpcc_core::Error::Config(format!("origin {week} lies outside the panel")))
            })
            .collect::<cpcc_core::Result<Vec<_>>>()?;
        model.predict(x.as_ref(), &panel, &origins, &horizons)?
    };
    if let Some(name) = src.name {
        set.model_id = name;
    }
    if let Some(x) = &x {
        set.config_hash = x.config.hash();
    }
    write_with(&a.out, |w| set.write_csv(w, &panel))?;
    println!("forecast: {} predictions from {} -> {}", set.entries.len(), set.model_id, a.out.display());
    Ok(Outcome {
        artifact: a.out.clone(),
        inputs,
        outputs: vec![a.out.clone()],
        seed: None,
    })
}

pub const KEYWORD_REPORT: &str = "keywords.csv";
pub const SUMMARY_REPORT: &str = "summary.csv";
pub const LONG_REPORT: &str = "long.csv";

pub fn evaluate_stage(a: &EvaluateArgs) -> Result<Outcome> {
    let panel = read_panel(&a.panel)?;
    let split = split_for(&panel, a.test_fraction)?;
    let seg = segmentation(&panel, &split);
    let mut report = EvalReport::default();
    for path in &a.forecasts {
        let set = ForecastSet::read_csv(open(path)?, &panel)?;
        report.merge(evaluate(&set, &panel, &split, seg.as_ref())?);
    }
    fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    write_with(&a.out.join(KEYWORD_REPORT), |w| report.write_keyword_csv(w))?;
    write_with(&a.out.join(SUMMARY_REPORT), |w| report.write_summary_csv(w))?;
    write_with(&a.out.join(LONG_REPORT), |w| report.write_long_csv(w))?;
    print!("{}", report.table());
    let mut inputs = a.forecasts.clone();
    inputs.push(a.panel.clone());
    Ok(Outcome {
        artifact: a.out.clone(),
        inputs,
        outputs: vec![a.out.clone()],
        seed: None,
    })
}

pub fn frontier(a: &FrontierArgs) -> Result<Outcome> {
    let panel = read_panel(&a.panel)?;
    let split = split_for(&panel, a.test_fraction)?;
    let stats = compute_stats(&panel, split.train.clone())?;
    let seg = frontier_segment(&stats)?;
    write_with(&a.out, |w| {
        writeln!(w, "keyword_id,keyword,mean,cv,quadrant")?;
        for (k, s) in stats.keywords.iter().enumerate() {
            let q = seg.quadrants[k].map_or("none", |q| q.label());
            writeln!(w, "{k},{},{},{},{q}", panel.keywords[k], s.mean, s.cv)?;
        }
        Ok(())
    })?;
    let counts: Vec<String> = cpcc_core::eval::Quadrant::ALL
        .iter()
        .map(|&q| format!("{q}={}", seg.count(q)))
        .collect();
    println!(
        "frontier: median mean CPC {:.4}, median CV {:.4}; {}; {} excluded",
        seg.mean_median,
        seg.cv_median,
        counts.join(" "),
        seg.excluded.len()
    );
    Ok(Outcome {
        artifact: a.out.clone(),
        inputs: vec![a.panel.clone()],
        outputs: vec![a.out.clone()],
        seed: None,
    })
}

pub const ABLATION_REPORT: &str = "ablation.csv";

/// Grid file settings; paths resolve against the grid file's directory.
#[derive(Debug)]
struct Grid {
    panel: PathBuf,
    proxies: Option<PathBuf>,
    spec: ModelSpec,
    graph: String,
    task: ForecastTask,
    test_fraction: f64,
    configs: Vec<FeatureConfig>,
    seed: u64,
}

fn read_grid(path: &Path) -> Result<Grid> {
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |v: &str| {
        let p = PathBuf::from(v);
        if p.is_absolute() {
            p
        } else {
            base.join(p)
        }
    };
    let mut panel = None;
    let mut proxies = None;
    let mut model = "ridge".to_string();
    let mut lambda = cpcc_core::models::DEFAULT_LAMBDA;
    let mut hyper = GraphHyper::default();
    let mut graph = "semantic".to_string();
    let mut horizons = cpcc_core::models::DEFAULT_HORIZONS.to_vec();
    let mut test_fraction = cpcc_core::eval::DEFAULT_TEST_FRACTION;
    let mut noise_dim = FeatureConfig::default().noise_dim;
    let mut geo_res = GeoLevel::Continent;
    let mut seed = 0;
    let mut families = Vec::new();
    let num = |k: &str, v: &str| -> Result<f64> { v.parse().map_err(|_| config_err(format!("grid {k}: {v:?} is not a number"))) };
    let int = |k: &str, v: &str| -> Result<usize> { v.parse().map_err(|_| config_err(format!("grid {k}: {v:?} is not an integer"))) };
    for (k, v) in read_kv(path)? {
        match k.as_str() {
            "panel" => panel = Some(resolve(&v)),
            "proxies" => proxies = Some(resolve(&v)),
            "model" => model = v,
            "lambda" => lambda = num(&k, &v)?,
            "graph" => graph = v,
            "horizons" => horizons = parse_list(&v, "horizons")?,
            "test-fraction" => test_fraction = num(&k, &v)?,
            "noise-dim" => noise_dim = int(&k, &v)?,
            "geo-res" => geo_res = v.parse()?,
            "seed" => seed = v.parse().map_err(|_| config_err(format!("grid seed: {v:?}")))?,
            "hidden" => hyper.hidden = int(&k, &v)?,
            "epochs" => hyper.max_epochs = int(&k, &v)?,
            "patience" => hyper.patience = int(&k, &v)?,
            "batch" => hyper.batch = int(&k, &v)?,
            "window" => hyper.window = int(&k, &v)?,
            "diffusion-k" => hyper.k = int(&k, &v)?,
            "step-size" => hyper.step_size = num(&k, &v)?,
            "config" => families.push(parse_families(&v)?),
            other => return Err(config_err(format!("unknown grid key {other:?}"))),
        }
    }
    hyper.seed = seed;
    let spec = match model.as_str() {
        "ridge" => ModelSpec::Ridge { lambda },
        "dcrnn" => ModelSpec::Dcrnn(hyper.clone()),
        other => return Err(config_err(format!("grid model must be ridge or dcrnn, got {other:?}"))),
    };
    if families.is_empty() {
        return Err(config_err("grid has no `config =` lines"));
    }
    let configs = families
        .into_iter()
        .map(|f| FeatureConfig {
            families: f,
            geo_resolution: geo_res,
            noise_dim,
            noise_seed: seed,
            ..FeatureConfig::default()
        })
        .collect();
    Ok(Grid {
        panel: panel.ok_or_else(|| config_err("grid needs `panel =`"))?,
        proxies,
        spec,
        graph,
        task: ForecastTask {
            horizons,
            window: hyper.window,
        },
        test_fraction,
        configs,
        seed,
    })
}

pub fn ablate(a: &AblateArgs) -> Result<Outcome> {
    let grid = read_grid(&a.grid)?;
    let panel = read_panel(&grid.panel)?;
    let split = split_for(&panel, grid.test_fraction)?;
    let seg = segmentation(&panel, &split);
    let mut inputs = vec![a.grid.clone(), grid.panel.clone()];
    let bundle = match &grid.proxies {
        Some(dir) => {
            inputs.push(dir.clone());
            Some(read_proxies(dir)?)
        }
        None => None,
    };
    let adjacency = match (grid.graph.as_str(), &bundle) {
        ("semantic", Some(b)) => Some(b.graph.adjacency()),
        ("semantic", None) => None,
        (other, _) => Some(load_graph(other, panel.n_keywords(), &mut inputs)?),
    };
    let inp = AblationInputs {
        panel: &panel,
        proxies: bundle.as_ref().map(|b| b.proxies()).unwrap_or_default(),
        graph: adjacency.as_ref(),
        split: &split,
        task: &grid.task,
        segmentation: seg.as_ref(),
    };
    let table = run_ablation(&grid.configs, &grid.spec, &inp);
    fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    write_with(&a.out.join(ABLATION_REPORT), |w| table.write_csv(w))?;
    println!("{:<8} {:<48} {:>3} {:>8}", "model", "config", "h", "sMAPE");
    for r in &table.rows {
        let s = r.smape.map_or("failed".to_string(), |s| format!("{:.3}", s.mean));
        println!("{:<8} {:<48} {:>3} {:>8}", table.model, r.config, r.horizon, s);
    }
    Ok(Outcome {
        artifact: a.out.clone(),
        inputs,
        outputs: vec![a.out.clone()],
        seed: Some(grid.seed),
    })
}

/// Apply `name=value` overrides to the default generator config. Values
/// parse as JSON when they can and as strings otherwise; `none` clears an
/// optional field.
pub fn synth_config(overrides: &[String], seed: Option<u64>) -> Result<SynthConfig> {
    let mut v = serde_json::to_value(SynthConfig::default()).map_err(|e| CliError::Internal(e.to_string()))?;
    for o in overrides {
        let (name, raw) = o
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects name=value, got {o:?}")))?;
        let value = match raw.trim() {
            "none" | "null" => serde_json::Value::Null,
            s => serde_json::from_str(s).unwrap_or_else(|_| serde_json::Value::String(s.to_string())),
        };
        let mut slot = &mut v;
        for part in name.trim().split('.') {
            if slot.is_null() {
                *slot = serde_json::Value::Object(Default::default());
            }
            let obj = slot
                .as_object_mut()
                .ok_or_else(|| config_err(format!("synth field {name:?} does not name a nested field")))?;
            if !obj.contains_key(part) && !matches!(part, "cluster" | "level" | "shock" | "week" | "factor") {
                return Err(config_err(format!("unknown synth field {name:?}")));
            }
            slot = obj.entry(part.to_string()).or_insert(serde_json::Value::Null);
        }
        *slot = value;
    }
    let mut cfg: SynthConfig =
        serde_json::from_value(v).map_err(|e| config_err(format!("synth config: {e}")))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn synth(a: &SynthArgs) -> Result<Outcome> {
    let cfg = synth_config(&a.overrides, a.seed)?;
    let market = generate(&cfg)?;
    let files = write_market(&a.out, &cfg, &market)?;
    println!(
        "synth: {} keywords x {} weeks, {} clusters, seed {} -> {}",
        cfg.n_keywords,
        cfg.n_weeks,
        cfg.clusters,
        cfg.seed,
        a.out.display()
    );
    log::debug!("wrote {files:?}");
    Ok(Outcome {
        artifact: a.out.clone(),
        inputs: Vec::new(),
        outputs: vec![a.out.clone()],
        seed: Some(cfg.seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_overrides() {
        let cfg = synth_config(&["n_keywords=40".into(), "volatile=none".into()], Some(3)).unwrap();
        assert_eq!(cfg.n_keywords, 40);
        assert_eq!(cfg.volatile, None);
        assert_eq!(cfg.seed, 3);
        let cfg = synth_config(&["volatile.level=3.5".into()], None).unwrap();
        assert_eq!(cfg.volatile.unwrap().level, 3.5);
        assert!(synth_config(&["no_such_field=1".into()], None).is_err());
        assert!(synth_config(&["n_keywords=0".into()], None).is_err());
        assert!(synth_config(&["novalue".into()], None).is_err());
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(sibling(Path::new("d/events.jsonl"), "domains.csv"), PathBuf::from("d/events.domains.csv"));
    }
}
