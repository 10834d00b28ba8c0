use super::*;
use crate::panel::{aggregate_weekly, compute_stats};
use crate::proxies::{build_dtw_neighborhoods, build_semantic_graph, dtw_distance, z_normalize};

fn small() -> SynthConfig {
    SynthConfig {
        n_keywords: 40,
        n_weeks: 60,
        clusters: 4,
        ..SynthConfig::default()
    }
}

#[test]
fn zero_variation_gives_constant_cpc() {
    let cfg = SynthConfig {
        season_amplitude: 0.0,
        shock_persistence: 0.0,
        shock_scale: 1e-300,
        noise_scale: 1e-300,
        ..small()
    };
    let m = generate(&cfg).unwrap();
    for k in 0..cfg.n_keywords {
        let base = m.truth.keywords[k].base;
        for t in 0..cfg.n_weeks {
            assert!((m.panel.cpc_value(k, t).unwrap() - base).abs() < 1e-9 * base);
        }
    }
}

#[test]
fn default_market_is_right_skewed() {
    let m = generate(&SynthConfig::default()).unwrap();
    let stats = compute_stats(&m.panel, 0..m.panel.n_weeks()).unwrap();
    assert!(stats.pooled.skewness > 1.0, "skewness {}", stats.pooled.skewness);
}

#[test]
fn same_seed_same_market() {
    let a = generate(&small()).unwrap();
    let b = generate(&small()).unwrap();
    assert_eq!(a.panel, b.panel);
    assert_eq!(a.truth, b.truth);
    assert_eq!(a.events, b.events);
    let c = generate(&SynthConfig { seed: 8, ..small() }).unwrap();
    assert_ne!(a.truth, c.truth);
}

#[test]
fn cpc_recomputes_from_truth() {
    let cfg = SynthConfig {
        regime_shift: Some(RegimeShift {
            week: 30,
            cluster: 1,
            factor: 1.5,
        }),
        ..small()
    };
    let m = generate(&cfg).unwrap();
    let mut buf = Vec::new();
    m.truth.write_jsonl(&mut buf).unwrap();
    let mut base = vec![0.0; cfg.n_keywords];
    let mut noise = vec![Vec::new(); cfg.n_keywords];
    let mut cluster = vec![0usize; cfg.n_keywords];
    let mut geo = vec![0usize; cfg.n_keywords];
    let mut delay = vec![0usize; cfg.n_keywords];
    let mut offset = 0usize;
    let mut shocks = vec![Vec::new(); cfg.clusters];
    let mut seasons = vec![Vec::new(); cfg.geo_groups];
    let mut shift = None;
    for line in String::from_utf8(buf).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let id = v["id"].as_u64().unwrap_or(0) as usize;
        let series = |key: &str| -> Vec<f64> { v[key].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect() };
        match v["kind"].as_str().unwrap() {
            "keyword" => {
                base[id] = v["base"].as_f64().unwrap();
                noise[id] = series("noise");
                cluster[id] = v["cluster"].as_u64().unwrap() as usize;
                geo[id] = v["geo"].as_u64().unwrap() as usize;
                delay[id] = v["delay"].as_u64().unwrap() as usize;
            }
            "cluster" => {
                shocks[id] = series("shock");
                offset = v["offset"].as_u64().unwrap() as usize;
            }
            "geo" => seasons[id] = series("season"),
            "regime_shift" => shift = Some(v["shift"].clone()),
            other => panic!("unexpected record {other}"),
        }
    }
    let shift = shift.unwrap();
    for k in 0..cfg.n_keywords {
        for t in 0..cfg.n_weeks {
            let mut log = base[k].ln() + seasons[geo[k]][t] + shocks[cluster[k]][t + offset - delay[k]] + noise[k][t];
            if cluster[k] as u64 == shift["cluster"].as_u64().unwrap() && t as u64 >= shift["week"].as_u64().unwrap() {
                log += shift["factor"].as_f64().unwrap().ln();
            }
            let got = m.panel.cpc_value(k, t).unwrap();
            assert!((got - log.exp()).abs() <= 1e-9 * got, "k={k} t={t}");
        }
    }
}

#[test]
fn events_aggregate_to_panel() {
    let m = generate(&small()).unwrap();
    let p = aggregate_weekly(&m.events);
    assert_eq!(p.keywords.len(), m.panel.keywords.len());
    let idx: std::collections::HashMap<&str, usize> =
        p.keywords.iter().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
    assert_eq!(p.weeks, m.panel.weeks);
    for (k, kw) in m.panel.keywords.iter().enumerate() {
        let j = idx[kw.as_str()];
        for t in 0..m.panel.n_weeks() {
            assert_eq!(p.clicks.at(j, t), m.panel.clicks.at(k, t));
            assert_eq!(p.impressions.at(j, t), m.panel.impressions.at(k, t));
            assert!((p.cost.at(j, t) - m.panel.cost.at(k, t)).abs() < 1e-9 * p.cost.at(j, t).max(1.0));
            assert_eq!(p.device_counts.get(j, t), m.panel.device_counts.get(k, t));
            assert_eq!(p.searchtype_counts.get(j, t), m.panel.searchtype_counts.get(k, t));
            let exact = m.panel.cpc_value(k, t).unwrap();
            assert!((p.cpc_value(j, t).unwrap() - exact).abs() < 1e-9 * exact);
        }
    }
}

#[test]
fn panel_invariants_hold() {
    let m = generate(&small()).unwrap();
    let p = &m.panel;
    assert!(p.is_gap_free());
    let unique: BTreeSet<_> = p.keywords.iter().collect();
    assert_eq!(unique.len(), p.keywords.len());
    for k in 0..p.n_keywords() {
        for t in 0..p.n_weeks() {
            let c = p.clicks.at(k, t);
            assert!(c >= 1 && p.impressions.at(k, t) >= c);
            assert!(p.cpc_value(k, t).unwrap() > 0.0);
        }
    }
}

#[test]
fn keywords_tag_to_planted_continent() {
    let m = generate(&SynthConfig::default()).unwrap();
    let r = oracle_report(&m.truth, None, None, &m.geo);
    assert_eq!(r.geo_accuracy, 1.0);
}

#[test]
fn single_cluster_is_always_intra() {
    let cfg = SynthConfig {
        clusters: 1,
        volatile: None,
        ..small()
    };
    let m = generate(&cfg).unwrap();
    let g = build_semantic_graph(&m.embeddings, 5).unwrap();
    let r = oracle_report(&m.truth, Some(&g), None, &m.geo);
    assert_eq!(r.semantic_intra, Some(1.0));
    assert_eq!(r.chance_intra, 1.0);
}

#[test]
fn clustered_embeddings_beat_chance_and_random_ones_do_not() {
    let m = generate(&SynthConfig::default()).unwrap();
    let g = build_semantic_graph(&m.embeddings, 10).unwrap();
    let r = oracle_report(&m.truth, Some(&g), None, &m.geo);
    assert!(r.semantic_intra.unwrap() >= 0.95, "{r:?}");

    let mut rng = seed::stream(3, "test/random");
    let rows = (0..m.panel.n_keywords())
        .map(|_| (0..64).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let random = EmbeddingMatrix::from_rows(rows, EmbeddingSource::Synthetic).unwrap();
    let g = build_semantic_graph(&random, 10).unwrap();
    let r = oracle_report(&m.truth, Some(&g), None, &m.geo);
    assert!((r.semantic_intra.unwrap() - r.chance_intra).abs() <= 0.1, "{r:?}");
}

#[test]
fn cluster_mates_are_closer_under_dtw() {
    let m = generate(&small()).unwrap();
    let rows: Vec<Vec<f64>> = (0..m.panel.n_keywords())
        .map(|k| z_normalize(&m.panel.cpc_row(k).unwrap()))
        .collect();
    let (mut intra, mut inter) = (Vec::new(), Vec::new());
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let d = dtw_distance(&rows[i], &rows[j], 4).unwrap();
            if m.truth.keywords[i].cluster == m.truth.keywords[j].cluster {
                intra.push(d);
            } else {
                inter.push(d);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&intra) < mean(&inter), "{} vs {}", mean(&intra), mean(&inter));
    let nb = build_dtw_neighborhoods(&m.panel, 0..m.panel.n_weeks(), 5, 4).unwrap();
    let r = oracle_report(&m.truth, None, Some(&nb), &m.geo);
    assert!(r.dtw_intra.unwrap() > r.chance_intra);
}

#[test]
fn invalid_configs_are_rejected() {
    for cfg in [
        SynthConfig { clusters: 0, ..small() },
        SynthConfig { n_weeks: 10, ..small() },
        SynthConfig { geo_groups: 8, ..small() },
        SynthConfig { shock_persistence: 1.0, ..small() },
        SynthConfig { noise_scale: 0.0, ..small() },
    ] {
        assert!(matches!(generate(&cfg), Err(Error::Config(_))));
    }
}

#[test]
fn market_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small();
    let m = generate(&cfg).unwrap();
    let paths = write_market(dir.path(), &cfg, &m).unwrap();
    assert!(paths.iter().all(|p| p.exists()));
    let read = crate::panel::read_panel(&dir.path().join(PANEL_DIR)).unwrap();
    assert_eq!(read.keywords, m.panel.keywords);
    let f = std::io::BufReader::new(File::open(dir.path().join(EMBEDDINGS_FILE)).unwrap());
    let e = crate::proxies::load_embeddings(f, &m.panel.keywords).unwrap();
    assert_eq!(e.dim(), cfg.embedding_dim);
}
