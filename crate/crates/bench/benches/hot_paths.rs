//! Throughput of the pipeline's inner loops on the default synthetic market.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use cpcc_core::features::{build_features, parse_families, FeatureConfig, Proxies};
use cpcc_core::models::{diffusion_conv, Supports};
use cpcc_core::proxies::{build_dtw_neighborhoods, build_semantic_graph, dtw_distance, z_normalize};
use cpcc_core::synth::{generate, SynthConfig, SynthMarket};
use ndarray::Array2;

fn market() -> SynthMarket {
    generate(&SynthConfig::default()).expect("default config generates")
}

fn dtw(c: &mut Criterion) {
    let m = market();
    let a = z_normalize(&m.panel.cpc_row(0).unwrap()[..101]);
    let b = z_normalize(&m.panel.cpc_row(1).unwrap()[..101]);
    c.bench_function("dtw_pair_len101_band8", |bch| bch.iter(|| dtw_distance(black_box(&a), black_box(&b), 8)));
    let mut g = c.benchmark_group("dtw_neighborhoods");
    g.sample_size(10);
    g.bench_function("n200_t101_m10_band8", |bch| {
        bch.iter(|| build_dtw_neighborhoods(black_box(&m.panel), 0..101, 10, 8).unwrap())
    });
    g.finish();
}

fn graph(c: &mut Criterion) {
    let m = market();
    c.bench_function("semantic_graph_n200_d64_k10", |bch| {
        bch.iter(|| build_semantic_graph(black_box(&m.embeddings), 10).unwrap())
    });
}

fn diffusion(c: &mut Criterion) {
    let m = market();
    let adj = build_semantic_graph(&m.embeddings, 10).unwrap().adjacency();
    let sup = Supports::new(&adj, 2).unwrap();
    let (d_in, d_out) = (54, 64);
    let hin = Array2::from_shape_fn((200, d_in), |(i, j)| ((i * 31 + j * 7) % 17) as f64 / 17.0);
    let w = Array2::from_shape_fn((sup.count() * d_in, d_out), |(i, j)| ((i + 3 * j) % 11) as f64 / 110.0);
    c.bench_function("diffusion_conv_n200_k2_54x64", |bch| {
        bch.iter(|| diffusion_conv(black_box(&sup), black_box(&hin), black_box(&w)).unwrap())
    });
}

fn features(c: &mut Criterion) {
    let m = market();
    let graph = build_semantic_graph(&m.embeddings, 10).unwrap();
    let dtw = build_dtw_neighborhoods(&m.panel, 0..101, 10, 8).unwrap();
    let proxies = Proxies {
        graph: Some(&graph),
        dtw: Some(&dtw),
        geo: Some(&m.geo),
    };
    let cfg = FeatureConfig::with_families(parse_families("core,geo,sem_cpc,dtw_cpc,calendar,mix,noise").unwrap());
    c.bench_function("features_all_families_n200_t127", |bch| {
        bch.iter(|| build_features(black_box(&m.panel), proxies, black_box(&cfg)).unwrap())
    });
}

criterion_group!(benches, dtw, graph, diffusion, features);
criterion_main!(benches);
