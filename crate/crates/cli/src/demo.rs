//! End-to-end run on a synthetic market, expressed as the same stage
//! invocations a user would type.

use std::path::{Path, PathBuf};

use cpcc_core::synth::{EMBEDDINGS_FILE, PANEL_DIR};

use crate::args::DemoArgs;
use crate::error::{CliError, Result};
use crate::stages::{Outcome, SUMMARY_REPORT};

/// Families of the proxy-aware configuration.
pub const PROXY_FAMILIES: &str = "core,geo,sem_cpc,dtw_cpc";

/// Configurations of the ridge ablation grid.
pub const ABLATION_GRID: [&str; 9] = [
    "core",
    "core,geo",
    "core,sem_cpc",
    "core,dtw_cpc",
    "core,calendar",
    "core,mix",
    "core,noise",
    PROXY_FAMILIES,
    "core,geo,sem_cpc,dtw_cpc,calendar,mix,noise",
];

struct Model {
    dir: &'static str,
    name: &'static str,
    kind: &'static str,
    features: Option<&'static str>,
    graph: Option<&'static str>,
}

const MODELS: [Model; 5] = [
    Model { dir: "snaive", name: "snaive", kind: "snaive", features: None, graph: None },
    Model { dir: "ridge-core", name: "ridge:core", kind: "ridge", features: Some("core"), graph: None },
    Model { dir: "ridge-proxy", name: "ridge:proxy", kind: "ridge", features: Some("proxy"), graph: None },
    Model { dir: "dcrnn-core", name: "dcrnn:core", kind: "dcrnn", features: Some("core"), graph: Some("identity") },
    Model { dir: "dcrnn-proxy", name: "dcrnn:proxy", kind: "dcrnn", features: Some("proxy"), graph: Some("semantic") },
];

fn s(p: &Path) -> String {
    p.display().to_string()
}

fn stage(args: &[String]) -> Result<()> {
    let mut argv = vec!["cpcc".to_string()];
    argv.extend(args.iter().cloned());
    log::info!("demo stage: {}", argv.join(" "));
    crate::run(argv)
}

macro_rules! argv {
    ($($x:expr),* $(,)?) => { vec![$($x.to_string()),*] };
}

pub fn run(a: &DemoArgs) -> Result<Outcome> {
    let d = &a.out;
    std::fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
    let seed = a.seed.to_string();
    let market = d.join("market");
    let panel = market.join(PANEL_DIR);
    let proxies = d.join("proxies");

    let mut synth = argv!["synth", "--seed", seed, "--out", s(&market)];
    if let Some(n) = a.keywords {
        synth.extend(argv!["--set", format!("n_keywords={n}")]);
    }
    stage(&synth)?;
    stage(&argv![
        "build-proxies",
        "--panel",
        s(&panel),
        "--embeddings",
        s(&market.join(EMBEDDINGS_FILE)),
        "--out",
        s(&proxies)
    ])?;
    for (dir, families) in [("core", "core"), ("proxy", PROXY_FAMILIES)] {
        let mut v = argv!["featurize", "--panel", s(&panel), "--families", families, "--seed", seed];
        if families != "core" {
            v.extend(argv!["--proxies", s(&proxies)]);
        }
        v.extend(argv!["--out", s(&d.join("features").join(dir))]);
        stage(&v)?;
    }

    let mut forecasts = Vec::new();
    for m in &MODELS {
        let model_dir = d.join("models").join(m.dir);
        let mut v = argv!["train", "--model", m.kind, "--name", m.name, "--seed", seed];
        match m.features {
            Some(f) => v.extend(argv!["--features", s(&d.join("features").join(f))]),
            None => v.extend(argv!["--panel", s(&panel)]),
        }
        match m.graph {
            Some("semantic") => v.extend(argv!["--graph", s(&proxies)]),
            Some(g) => v.extend(argv!["--graph", g]),
            None => {}
        }
        if m.kind == "dcrnn" {
            v.extend(argv!["--epochs", a.epochs]);
        }
        v.extend(argv!["--out", s(&model_dir)]);
        stage(&v)?;

        let out = d.join("forecasts").join(format!("{}.csv", m.dir));
        stage(&argv!["forecast", "--model-dir", s(&model_dir), "--origins", "test", "--out", s(&out)])?;
        forecasts.push(out);
    }

    let eval = d.join("eval");
    let mut v = argv!["evaluate", "--panel", s(&panel), "--out", s(&eval)];
    for f in &forecasts {
        v.extend(argv!["--forecasts", s(f)]);
    }
    stage(&v)?;
    stage(&argv!["frontier", "--panel", s(&panel), "--out", s(&d.join("frontier.csv"))])?;

    if !a.no_ablation {
        let grid = d.join("ablation_grid.txt");
        let mut text = format!(
            "model = ridge\npanel = {}\nproxies = {}\nseed = {}\n",
            s(&panel),
            s(&proxies),
            a.seed
        );
        for c in ABLATION_GRID {
            text.push_str(&format!("config = {c}\n"));
        }
        std::fs::write(&grid, text).map_err(|e| CliError::io(&grid, e))?;
        stage(&argv!["ablate", "--grid", s(&grid), "--out", s(&d.join("ablation"))])?;
    }

    let summary: PathBuf = eval.join(SUMMARY_REPORT);
    println!("demo: summary written to {}", summary.display());
    Ok(Outcome {
        artifact: d.clone(),
        inputs: Vec::new(),
        outputs: vec![summary],
        seed: Some(a.seed),
    })
}
